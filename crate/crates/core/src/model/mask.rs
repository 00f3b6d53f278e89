use crate::error::{Error, Result};

use super::CameraIntrinsics;

/// Binary object mask over a bounding window of the image.
///
/// Stored as a canonical row-major run-length code of alternating
/// `(skip, run)` counts: the first skip may be zero, every other count is
/// positive, and the code ends on a run (an empty mask has no counts).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask2D {
    origin: (u32, u32),
    width: u32,
    height: u32,
    rle: Vec<u32>,
}

impl Mask2D {
    pub fn empty(origin: (u32, u32), width: u32, height: u32) -> Self {
        Self {
            origin,
            width,
            height,
            rle: Vec::new(),
        }
    }

    pub fn from_bitmap(origin: (u32, u32), width: u32, height: u32, bits: &[bool]) -> Result<Self> {
        let n = width as usize * height as usize;
        if bits.len() != n {
            return Err(Error::invalid(format!(
                "bitmap has {} cells, expected {width}x{height}",
                bits.len()
            )));
        }
        let mut rle = Vec::new();
        let mut i = 0;
        while i < n {
            let start = i;
            while i < n && !bits[i] {
                i += 1;
            }
            if i == n {
                break;
            }
            rle.push((i - start) as u32);
            let run_start = i;
            while i < n && bits[i] {
                i += 1;
            }
            rle.push((i - run_start) as u32);
        }
        Ok(Self {
            origin,
            width,
            height,
            rle,
        })
    }

    pub fn from_rle(origin: (u32, u32), width: u32, height: u32, rle: Vec<u32>) -> Result<Self> {
        if !rle.len().is_multiple_of(2) {
            return Err(Error::invalid("mask rle must end on a run"));
        }
        if rle.iter().skip(1).any(|&c| c == 0) {
            return Err(Error::invalid("mask rle has a zero-length count"));
        }
        let total: u64 = rle.iter().map(|&c| c as u64).sum();
        if total > width as u64 * height as u64 {
            return Err(Error::invalid(format!(
                "mask rle covers {total} cells but the window is {width}x{height}"
            )));
        }
        Ok(Self {
            origin,
            width,
            height,
            rle,
        })
    }

    pub fn origin(&self) -> (u32, u32) {
        self.origin
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn rle(&self) -> &[u32] {
        &self.rle
    }

    pub fn to_bitmap(&self) -> Vec<bool> {
        let mut bits = vec![false; self.width as usize * self.height as usize];
        let mut pos = 0usize;
        for pair in self.rle.chunks_exact(2) {
            pos += pair[0] as usize;
            let end = pos + pair[1] as usize;
            bits[pos..end].iter_mut().for_each(|b| *b = true);
            pos = end;
        }
        bits
    }

    pub fn pixel_count(&self) -> u64 {
        self.rle.chunks_exact(2).map(|p| p[1] as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rle.is_empty()
    }

    /// Whether the image pixel `(x, y)` is set.
    pub fn contains(&self, x: u32, y: u32) -> bool {
        let (ox, oy) = self.origin;
        if x < ox || y < oy || x >= ox + self.width || y >= oy + self.height {
            return false;
        }
        let idx = ((y - oy) * self.width + (x - ox)) as u64;
        let mut pos = 0u64;
        for pair in self.rle.chunks_exact(2) {
            pos += pair[0] as u64;
            if idx < pos {
                return false;
            }
            pos += pair[1] as u64;
            if idx < pos {
                return true;
            }
        }
        false
    }

    pub fn fits_in(&self, intrinsics: &CameraIntrinsics) -> bool {
        self.origin.0 as u64 + self.width as u64 <= intrinsics.width() as u64
            && self.origin.1 as u64 + self.height as u64 <= intrinsics.height() as u64
    }
}

/// Encodes the mask's bitmap to run-length form and decodes it again.
pub fn mask_roundtrip(m: &Mask2D) -> Result<Mask2D> {
    let bits = m.to_bitmap();
    let encoded = Mask2D::from_bitmap(m.origin, m.width, m.height, &bits)?;
    Mask2D::from_rle(m.origin, m.width, m.height, encoded.rle)
}
