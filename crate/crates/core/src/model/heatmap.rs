use crate::error::{Error, Result};

use super::CameraIntrinsics;

/// Row-major grid of values in `[0, 1]` sampled every `stride` pixels.
///
/// The image is padded on the right and bottom up to the next multiple of
/// the stride, so a `W x H` image maps to `ceil(W/s) x ceil(H/s)` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    stride: u32,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn new(width: usize, height: usize, stride: u32, values: Vec<f64>) -> Result<Self> {
        if stride == 0 {
            return Err(Error::invalid("heatmap stride must be positive"));
        }
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "heatmap {width}x{height} given {} values",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("heatmap cell {bad} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            stride,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, stride: u32, value: f64) -> Result<Self> {
        Self::new(width, height, stride, vec![value; width * height])
    }

    /// Grid shape for an image at the given stride.
    pub fn shape_for(intrinsics: &CameraIntrinsics, stride: u32) -> (usize, usize) {
        let s = stride.max(1);
        (
            intrinsics.width().div_ceil(s) as usize,
            intrinsics.height().div_ceil(s) as usize,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn stride(&self) -> u32 {
        self.stride
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Cell containing image pixel coordinate `(u, v)`, clamped to the grid.
    pub fn cell_of(&self, u: f64, v: f64) -> (usize, usize) {
        let s = self.stride as f64;
        let x = (u / s).floor().clamp(0.0, (self.width.max(1) - 1) as f64) as usize;
        let y = (v / s).floor().clamp(0.0, (self.height.max(1) - 1) as f64) as usize;
        (x, y)
    }

    pub fn same_shape(&self, other: &Heatmap) -> bool {
        self.width == other.width && self.height == other.height
    }
}
