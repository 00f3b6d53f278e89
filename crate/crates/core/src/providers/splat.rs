//! CenterNet-style Gaussian splats of 2D boxes onto a strided grid.

use crate::model::{Box2D, Heatmap};

pub const MIN_OVERLAP: f64 = 0.7;

/// Largest radius (in the units of `h` and `w`) at which a corner-shifted
/// box keeps `min_overlap` IoU with the original, as in CenterNet.
pub fn gaussian_radius(h: f64, w: f64, min_overlap: f64) -> f64 {
    let (a1, b1, c1) = (1.0, h + w, w * h * (1.0 - min_overlap) / (1.0 + min_overlap));
    let r1 = (b1 + (b1 * b1 - 4.0 * a1 * c1).sqrt()) / 2.0;
    let (a2, b2, c2) = (4.0, 2.0 * (h + w), (1.0 - min_overlap) * w * h);
    let r2 = (b2 + (b2 * b2 - 4.0 * a2 * c2).sqrt()) / 2.0;
    let (a3, b3, c3) = (
        4.0 * min_overlap,
        -2.0 * min_overlap * (h + w),
        (min_overlap - 1.0) * w * h,
    );
    let r3 = (b3 + (b3 * b3 - 4.0 * a3 * c3).sqrt()) / 2.0;
    r1.min(r2).min(r3)
}

/// Cell-wise maximum of one Gaussian per box, peak 1 at the cell holding
/// the box center, `sigma = radius / 3` in cells.
pub fn splat_boxes<'a>(
    width: usize,
    height: usize,
    stride: u32,
    boxes: impl IntoIterator<Item = &'a Box2D>,
) -> Heatmap {
    let mut grid = Heatmap::filled(width, height, stride, 0.0).expect("zero grid is valid");
    let mut values = grid.values().to_vec();
    let s = stride as f64;
    for b in boxes {
        let (cx, cy) = grid.cell_of(b.cx, b.cy);
        let radius = gaussian_radius(b.h / s, b.w / s, MIN_OVERLAP).max(0.0).floor() as i64;
        let sigma = radius as f64 / 3.0;
        for dy in -radius..=radius {
            let y = cy as i64 + dy;
            if y < 0 || y >= height as i64 {
                continue;
            }
            for dx in -radius..=radius {
                let x = cx as i64 + dx;
                if x < 0 || x >= width as i64 {
                    continue;
                }
                let v = if dx == 0 && dy == 0 {
                    1.0
                } else {
                    (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp()
                };
                let cell = &mut values[y as usize * width + x as usize];
                *cell = cell.max(v);
            }
        }
    }
    grid = Heatmap::new(width, height, stride, values).expect("splat values lie in [0, 1]");
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_peak_and_max_composition() {
        let a = Box2D::new(40.0, 40.0, 40.0, 30.0).unwrap();
        let hm = splat_boxes(30, 20, 4, [&a]);
        assert_eq!(hm.get(10, 10), 1.0);
        assert_eq!(hm.values().iter().filter(|&&v| v == 1.0).count(), 1);

        let b = Box2D::new(48.0, 40.0, 40.0, 30.0).unwrap();
        let both = splat_boxes(30, 20, 4, [&a, &b]);
        let only_b = splat_boxes(30, 20, 4, [&b]);
        for i in 0..both.values().len() {
            let expect = hm.values()[i].max(only_b.values()[i]);
            assert_eq!(both.values()[i], expect);
            assert!(both.values()[i] <= 1.0);
        }
    }

    #[test]
    fn radius_grows_with_box() {
        assert!(gaussian_radius(10.0, 10.0, 0.7) < gaussian_radius(20.0, 20.0, 0.7));
        assert!(gaussian_radius(10.0, 10.0, 0.7) > 0.0);
    }
}
