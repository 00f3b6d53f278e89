//! Shared domain types. Everything here is an immutable value object once
//! constructed; constructors validate the invariants the rest of the crate
//! relies on.

mod heatmap;
mod mask;

pub use heatmap::Heatmap;
pub use mask::{mask_roundtrip, Mask2D};

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type FrameIndex = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackId(pub u32);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Wraps an angle into `(-pi, pi]`. `-pi` maps to `pi`.
pub fn normalize_yaw(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("yaw must be finite, got {theta}")));
    }
    if theta > -PI && theta <= PI {
        return Ok(theta);
    }
    let wrapped = theta.rem_euclid(TAU);
    Ok(if wrapped > PI { wrapped - TAU } else { wrapped })
}

/// Pinhole intrinsics plus the image size they apply to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let all_finite = [fx, fy, cx, cy].iter().all(|v| v.is_finite());
        if !all_finite || fx <= 0.0 || fy <= 0.0 {
            return Err(Error::invalid(format!(
                "focal lengths must be finite and positive (fx={fx}, fy={fy})"
            )));
        }
        if !(cx > 0.0 && cx < width as f64 && cy > 0.0 && cy < height as f64) {
            return Err(Error::invalid(format!(
                "principal point ({cx}, {cy}) outside image {width}x{height}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// KITTI-like defaults used by the simulator.
    pub fn kitti_default() -> Self {
        Self::new(721.54, 721.54, 609.56, 172.85, 1242, 375).expect("valid defaults")
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
}

/// Axis-aligned image box in center/size form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Box2D {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        if ![cx, cy, w, h].iter().all(|v| v.is_finite()) || w <= 0.0 || h <= 0.0 {
            return Err(Error::invalid(format!(
                "box2d needs finite fields and positive size (cx={cx}, cy={cy}, w={w}, h={h})"
            )));
        }
        Ok(Self { cx, cy, w, h })
    }

    pub fn from_corners(left: f64, top: f64, right: f64, bottom: f64) -> Result<Self> {
        Self::new(
            (left + right) / 2.0,
            (top + bottom) / 2.0,
            right - left,
            bottom - top,
        )
    }

    pub fn left(&self) -> f64 {
        self.cx - self.w / 2.0
    }
    pub fn right(&self) -> f64 {
        self.cx + self.w / 2.0
    }
    pub fn top(&self) -> f64 {
        self.cy - self.h / 2.0
    }
    pub fn bottom(&self) -> f64 {
        self.cy + self.h / 2.0
    }
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn intersection_area(&self, other: &Box2D) -> f64 {
        let iw = self.right().min(other.right()) - self.left().max(other.left());
        let ih = self.bottom().min(other.bottom()) - self.top().max(other.top());
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }
}

pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Towards,
    Away,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Towards => Direction::Away,
            Direction::Away => Direction::Towards,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Towards => "towards",
            Direction::Away => "away",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "towards" => Some(Direction::Towards),
            "away" => Some(Direction::Away),
            _ => None,
        }
    }
}

/// Box extent in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dims {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Dims {
    pub fn new(length: f64, width: f64, height: f64) -> Result<Self> {
        let ok = [length, width, height]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !ok {
            return Err(Error::invalid(format!(
                "dims must be finite and positive ({length}, {width}, {height})"
            )));
        }
        Ok(Self {
            length,
            width,
            height,
        })
    }
}

/// Oriented 3D box in the camera frame (x right, y down, z forward). `yaw`
/// rotates about the camera y-axis; yaw 0 heads along +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    center: Vec3,
    dims: Dims,
    yaw: f64,
    direction: Direction,
}

impl Box3D {
    pub fn new(center: Vec3, dims: Dims, yaw: f64, direction: Direction) -> Result<Self> {
        if !center.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("box3d center must be finite"));
        }
        let dims = Dims::new(dims.length, dims.width, dims.height)?;
        Ok(Self {
            center,
            dims,
            yaw: normalize_yaw(yaw)?,
            direction,
        })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }
    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn yaw(&self) -> f64 {
        self.yaw
    }
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Unit heading in the camera frame.
    pub fn heading(&self) -> Vec3 {
        Vec3::new(self.yaw.cos(), 0.0, -self.yaw.sin())
    }

    /// The 8 corners, bottom face first.
    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.heading();
        let side = Vec3::new(-h.z, 0.0, h.x);
        let (l, w, ht) = (
            self.dims.length / 2.0,
            self.dims.width / 2.0,
            self.dims.height / 2.0,
        );
        let mut out = [Vec3::zeros(); 8];
        let mut k = 0;
        for dy in [ht, -ht] {
            for (sl, sw) in [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)] {
                out[k] = self.center + h * (sl * l) + side * (sw * w) + Vec3::new(0.0, dy, 0.0);
                k += 1;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoints3D {
    pub front: Vec3,
    pub center: Vec3,
    pub back: Vec3,
}

/// Rigid world-to-camera transform: `p_cam = rotation * p_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn transform(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Row-major rotation followed by translation.
    pub fn to_array(&self) -> [f64; 12] {
        let r = &self.rotation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            self.translation.x,
            self.translation.y,
            self.translation.z,
        ]
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        Self {
            rotation: Matrix3::new(a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]),
            translation: Vec3::new(a[9], a[10], a[11]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub frame_index: FrameIndex,
    pub track_id: TrackId,
    pub box2d: Box2D,
    pub mask: Option<Mask2D>,
    pub box3d: Box3D,
    /// KITTI convention: 0 visible, 1 partly, 2 largely occluded, 3 unknown.
    pub occlusion_level: u8,
    /// nuScenes convention, 1 (least visible) to 4.
    pub visibility: Option<u8>,
}

impl Annotation {
    pub fn validate(&self) -> Result<()> {
        if self.occlusion_level > 3 {
            return Err(Error::invalid(format!(
                "occlusion level {} outside 0..=3",
                self.occlusion_level
            )));
        }
        if let Some(v) = self.visibility {
            if !(1..=4).contains(&v) {
                return Err(Error::invalid(format!("visibility {v} outside 1..=4")));
            }
        }
        Ok(())
    }

    /// Not heavily occluded: KITTI level 0/1 and, when present, nuScenes
    /// visibility 2..=4. Level 3 (unknown) is never eligible.
    pub fn is_sampling_eligible(&self) -> bool {
        self.occlusion_level <= 1 && self.visibility.is_none_or(|v| v >= 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: FrameIndex,
    pub pose: Pose,
    pub annotations: Vec<Annotation>,
}

impl Frame {
    pub fn annotation(&self, track: TrackId) -> Option<&Annotation> {
        self.annotations.iter().find(|a| a.track_id == track)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub id: String,
    pub intrinsics: CameraIntrinsics,
    pub frame_rate: f64,
    pub frames: Vec<Frame>,
}

impl Sequence {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!(
                "sequence id {:?} must be non-empty without whitespace",
                self.id
            )));
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(Error::invalid(format!(
                "frame rate must be positive, got {}",
                self.frame_rate
            )));
        }
        for pair in self.frames.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(Error::Integrity(format!(
                    "frame indices not strictly increasing ({} then {})",
                    pair[0].index, pair[1].index
                )));
            }
        }
        for frame in &self.frames {
            let mut seen = std::collections::BTreeSet::new();
            for ann in &frame.annotations {
                ann.validate()?;
                if ann.frame_index != frame.index {
                    return Err(Error::Integrity(format!(
                        "annotation for track {} claims frame {} inside frame {}",
                        ann.track_id, ann.frame_index, frame.index
                    )));
                }
                if !seen.insert(ann.track_id) {
                    return Err(Error::Integrity(format!(
                        "duplicate track {} in frame {}",
                        ann.track_id, frame.index
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn frame(&self, index: FrameIndex) -> Option<&Frame> {
        self.frames
            .binary_search_by_key(&index, |f| f.index)
            .ok()
            .map(|i| &self.frames[i])
    }

    pub fn frame_position(&self, index: FrameIndex) -> Option<usize> {
        self.frames.binary_search_by_key(&index, |f| f.index).ok()
    }

    pub fn annotation(&self, frame: FrameIndex, track: TrackId) -> Option<&Annotation> {
        self.frame(frame).and_then(|f| f.annotation(track))
    }

    pub fn track_ids(&self) -> Vec<TrackId> {
        let set: std::collections::BTreeSet<_> = self
            .frames
            .iter()
            .flat_map(|f| f.annotations.iter().map(|a| a.track_id))
            .collect();
        set.into_iter().collect()
    }

    /// All annotations of one track in frame order.
    pub fn track(&self, track: TrackId) -> Vec<&Annotation> {
        self.frames
            .iter()
            .filter_map(|f| f.annotation(track))
            .collect()
    }

    pub fn annotation_count(&self) -> usize {
        self.frames.iter().map(|f| f.annotations.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationDirection {
    Forward,
    Backward,
}

impl PropagationDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            PropagationDirection::Forward => "forward",
            PropagationDirection::Backward => "backward",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "forward" => Some(Self::Forward),
            "backward" => Some(Self::Backward),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub direction: PropagationDirection,
    pub source_frame: FrameIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pseudolabel {
    pub frame_index: FrameIndex,
    pub track_id: TrackId,
    pub box2d: Box2D,
    pub mask: Option<Mask2D>,
    pub box3d: Box3D,
    pub confidence: f64,
    pub provenance: Provenance,
}

impl Pseudolabel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::invalid(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        Ok(())
    }

    /// A sparse label re-emitted as its own pseudolabel.
    pub fn is_seed(&self) -> bool {
        self.provenance.source_frame == self.frame_index && self.confidence == 1.0
    }

    pub fn from_annotation(ann: &Annotation, direction: PropagationDirection) -> Self {
        Self {
            frame_index: ann.frame_index,
            track_id: ann.track_id,
            box2d: ann.box2d,
            mask: ann.mask.clone(),
            box3d: ann.box3d,
            confidence: 1.0,
            provenance: Provenance {
                direction,
                source_frame: ann.frame_index,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_yaw_examples() {
        assert_eq!(normalize_yaw(0.0).unwrap(), 0.0);
        assert!((normalize_yaw(3.0 * PI).unwrap() - PI).abs() < 1e-12);
        let m = normalize_yaw(-PI).unwrap();
        assert_eq!(m, PI);
        assert!(m > -PI && m <= PI);
        assert!(((-PI).sin() - m.sin()).abs() < 1e-12);
        assert!(((-PI).cos() - m.cos()).abs() < 1e-12);
        assert!(normalize_yaw(f64::NAN).is_err());
        assert!(normalize_yaw(f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn normalize_yaw_is_idempotent_and_preserves_trig(theta in -1e3f64..1e3) {
            let once = normalize_yaw(theta).unwrap();
            prop_assert!(once > -PI && once <= PI);
            prop_assert_eq!(normalize_yaw(once).unwrap(), once);
            prop_assert!((once.cos() - theta.cos()).abs() < 1e-12);
            prop_assert!((once.sin() - theta.sin()).abs() < 1e-12);
        }

        #[test]
        fn iou_is_symmetric(
            a in (-50.0f64..50.0, -50.0f64..50.0, 0.1f64..30.0, 0.1f64..30.0),
            b in (-50.0f64..50.0, -50.0f64..50.0, 0.1f64..30.0, 0.1f64..30.0),
        ) {
            let a = Box2D::new(a.0, a.1, a.2, a.3).unwrap();
            let b = Box2D::new(b.0, b.1, b.2, b.3).unwrap();
            prop_assert_eq!(iou_2d(&a, &b), iou_2d(&b, &a));
            prop_assert_eq!(iou_2d(&a, &a), 1.0);
            let v = iou_2d(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn iou_examples() {
        let a = Box2D::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let b = Box2D::new(2.0, 1.0, 2.0, 2.0).unwrap();
        let far = Box2D::new(10.0, 10.0, 2.0, 2.0).unwrap();
        assert_eq!(iou_2d(&a, &a), 1.0);
        assert_eq!(iou_2d(&a, &far), 0.0);
        assert!((iou_2d(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn box3d_rejects_bad_fields() {
        let dims = Dims {
            length: 4.0,
            width: 1.8,
            height: 1.5,
        };
        let c = Vec3::new(0.0, 0.0, 10.0);
        assert!(Box3D::new(c, dims, 0.0, Direction::Towards).is_ok());
        let zero = Dims { length: 0.0, ..dims };
        assert!(Box3D::new(c, zero, 0.0, Direction::Towards).is_err());
        let neg = Dims { width: -1.0, ..dims };
        assert!(Box3D::new(c, neg, 0.0, Direction::Towards).is_err());
        assert!(Box3D::new(Vec3::new(f64::NAN, 0.0, 1.0), dims, 0.0, Direction::Away).is_err());
        assert!(Box3D::new(c, dims, f64::INFINITY, Direction::Away).is_err());
        let b = Box3D::new(c, dims, 3.0 * PI, Direction::Away).unwrap();
        assert!((b.yaw() - PI).abs() < 1e-12);
    }

    #[test]
    fn intrinsics_invariants() {
        assert!(CameraIntrinsics::new(700.0, 700.0, 620.0, 187.0, 1242, 375).is_ok());
        assert!(CameraIntrinsics::new(0.0, 700.0, 620.0, 187.0, 1242, 375).is_err());
        assert!(CameraIntrinsics::new(700.0, 700.0, 1300.0, 187.0, 1242, 375).is_err());
        assert!(CameraIntrinsics::new(700.0, 700.0, 620.0, 0.0, 1242, 375).is_err());
    }

    #[test]
    fn eligibility_rules() {
        let dims = Dims::new(4.0, 1.8, 1.5).unwrap();
        let mut ann = Annotation {
            frame_index: 0,
            track_id: TrackId(1),
            box2d: Box2D::new(10.0, 10.0, 4.0, 4.0).unwrap(),
            mask: None,
            box3d: Box3D::new(Vec3::new(0.0, 0.0, 10.0), dims, 0.0, Direction::Towards).unwrap(),
            occlusion_level: 0,
            visibility: None,
        };
        assert!(ann.is_sampling_eligible());
        ann.occlusion_level = 1;
        assert!(ann.is_sampling_eligible());
        ann.occlusion_level = 2;
        assert!(!ann.is_sampling_eligible());
        ann.occlusion_level = 3;
        assert!(!ann.is_sampling_eligible());
        ann.occlusion_level = 0;
        ann.visibility = Some(1);
        assert!(!ann.is_sampling_eligible());
        ann.visibility = Some(2);
        assert!(ann.is_sampling_eligible());
        ann.visibility = Some(5);
        assert!(ann.validate().is_err());
    }
}
