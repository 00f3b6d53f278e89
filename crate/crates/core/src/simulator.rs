//! Deterministic synthetic driving scenes with full ground truth.
//!
//! The world frame shares the camera axes at `t = 0` (x right, y down,
//! z forward) with the ground plane at `y = camera_height`. Ego and object
//! motion are integrated exactly per frame (constant velocity or constant
//! turn rate and velocity). Occlusion is the fraction of an object's 2D box
//! covered by the boxes of strictly nearer objects.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{direction_of, project};
use crate::model::{
    Annotation, Box2D, Box3D, CameraIntrinsics, Dims, Direction, Frame, Mask2D, Pose, Sequence,
    TrackId, Vec3,
};

/// Objects closer than this (camera z, meters) are not annotated.
pub const MIN_VISIBLE_DEPTH: f64 = 0.5;
/// Every box corner must be at least this far in front of the camera to be
/// projected.
const MIN_CORNER_DEPTH: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionModel {
    ConstantVelocity,
    Ctrv,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsConfig {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for IntrinsicsConfig {
    fn default() -> Self {
        let k = CameraIntrinsics::kitti_default();
        Self {
            fx: k.fx(),
            fy: k.fy(),
            cx: k.cx(),
            cy: k.cy(),
            width: k.width(),
            height: k.height(),
        }
    }
}

impl IntrinsicsConfig {
    pub fn build(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)
    }
}

/// A hand-placed object, in world coordinates at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub x: f64,
    pub z: f64,
    /// Heading angle, same convention as box yaw.
    pub heading: f64,
    pub speed: f64,
    #[serde(default)]
    pub turn_rate: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub sequence_id: String,
    /// Number of frames.
    pub duration: u32,
    pub frame_rate: f64,
    pub ego_speed: f64,
    /// Turning radius of the ego path; absent means straight.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ego_arc_radius: Option<f64>,
    pub object_count: usize,
    pub motion: MotionModel,
    /// Upper bound on |turn rate| for CTRV objects, rad/s.
    pub max_turn_rate: f64,
    pub speed_range: [f64; 2],
    pub length_range: [f64; 2],
    pub width_range: [f64; 2],
    pub height_range: [f64; 2],
    /// Lateral spawn offset from the ego start, meters.
    pub spawn_lateral: [f64; 2],
    /// Forward spawn distance from the ego start, meters.
    pub spawn_ahead: [f64; 2],
    pub oncoming_fraction: f64,
    /// Standard deviation of heading around the lane direction, radians.
    pub heading_jitter: f64,
    /// Random spawns are redrawn up to this many times until the object is
    /// in view at frame 0 with a 2D box disjoint from earlier spawns.
    pub spawn_attempts: u32,
    pub camera_height: f64,
    pub masks: bool,
    pub intrinsics: IntrinsicsConfig,
    /// Explicit objects; when non-empty they replace random spawning.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<ObjectSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sequence_id: "sim".into(),
            duration: 200,
            frame_rate: 10.0,
            ego_speed: 10.0,
            ego_arc_radius: None,
            object_count: 8,
            motion: MotionModel::Mixed,
            max_turn_rate: 0.05,
            speed_range: [8.0, 12.0],
            length_range: [3.5, 5.5],
            width_range: [1.6, 2.0],
            height_range: [1.4, 1.8],
            spawn_lateral: [-12.0, 12.0],
            spawn_ahead: [10.0, 50.0],
            oncoming_fraction: 0.0,
            heading_jitter: 0.02,
            spawn_attempts: 256,
            camera_height: 1.65,
            masks: true,
            intrinsics: IntrinsicsConfig::default(),
            objects: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.duration < 2 {
            return bad(format!("sim.duration must be >= 2, got {}", self.duration));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return bad(format!("sim.frame_rate must be positive, got {}", self.frame_rate));
        }
        if self.ego_speed < 0.0 || !self.ego_speed.is_finite() {
            return bad(format!("sim.ego_speed must be >= 0, got {}", self.ego_speed));
        }
        if let Some(r) = self.ego_arc_radius {
            if !(r.abs() > 0.0 && r.is_finite()) {
                return bad(format!("sim.ego_arc_radius must be non-zero, got {r}"));
            }
        }
        for (name, [lo, hi]) in [
            ("speed_range", self.speed_range),
            ("length_range", self.length_range),
            ("width_range", self.width_range),
            ("height_range", self.height_range),
            ("spawn_lateral", self.spawn_lateral),
            ("spawn_ahead", self.spawn_ahead),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("sim.{name} must be a finite [lo, hi] range"));
            }
        }
        if self.speed_range[0] < 0.0 {
            return bad("sim.speed_range must be non-negative".into());
        }
        if self.length_range[0] <= 0.0 || self.width_range[0] <= 0.0 || self.height_range[0] <= 0.0
        {
            return bad("sim dims ranges must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.oncoming_fraction) {
            return bad("sim.oncoming_fraction must be in [0, 1]".into());
        }
        if self.heading_jitter < 0.0 || self.max_turn_rate < 0.0 {
            return bad("sim.heading_jitter and sim.max_turn_rate must be >= 0".into());
        }
        for o in &self.objects {
            if o.speed < 0.0 || Dims::new(o.length, o.width, o.height).is_err() {
                return bad(format!("invalid object spec {o:?}"));
            }
        }
        self.intrinsics
            .build()
            .map_err(|e| Error::Config(format!("sim.intrinsics: {e}")))?;
        Ok(())
    }
}

/// Planar state on the ground: position `(x, z)`, heading, speed, turn rate.
#[derive(Debug, Clone, Copy)]
struct Mover {
    x: f64,
    z: f64,
    heading: f64,
    speed: f64,
    turn_rate: f64,
}

impl Mover {
    fn heading_vector(&self) -> (f64, f64) {
        (self.heading.cos(), -self.heading.sin())
    }

    /// Exact constant-turn-rate step.
    fn advance(&mut self, dt: f64) {
        let h0 = self.heading;
        if self.turn_rate.abs() < 1e-12 {
            let (hx, hz) = self.heading_vector();
            self.x += self.speed * hx * dt;
            self.z += self.speed * hz * dt;
            return;
        }
        let h1 = h0 + self.turn_rate * dt;
        self.x += self.speed * (h1.sin() - h0.sin()) / self.turn_rate;
        self.z += self.speed * (h1.cos() - h0.cos()) / self.turn_rate;
        self.heading = h1;
    }
}

struct SimObject {
    track: TrackId,
    mover: Mover,
    dims: Dims,
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

fn spawn_objects(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Vec<SimObject>> {
    if !cfg.objects.is_empty() {
        return cfg
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| {
                Ok(SimObject {
                    track: TrackId(i as u32),
                    mover: Mover {
                        x: o.x,
                        z: o.z,
                        heading: o.heading,
                        speed: o.speed,
                        turn_rate: o.turn_rate,
                    },
                    dims: Dims::new(o.length, o.width, o.height)?,
                })
            })
            .collect();
    }
    let jitter = rand_distr::Normal::new(0.0, cfg.heading_jitter.max(0.0))
        .map_err(|e| Error::Config(e.to_string()))?;
    let intrinsics = cfg.intrinsics.build()?;
    let start = camera_pose(&ego_start(cfg));
    let mut objects = Vec::with_capacity(cfg.object_count);
    let mut taken: Vec<Box2D> = Vec::new();
    for i in 0..cfg.object_count {
        let mut attempt = 0;
        let obj = loop {
            attempt += 1;
            let obj = random_object(cfg, TrackId(i as u32), &jitter, rng)?;
            let footprint = annotate(&obj, &start, &intrinsics, 0, cfg)?.map(|a| a.box2d);
            let clear = footprint.is_some_and(|b| taken.iter().all(|t| b.intersection_area(t) == 0.0));
            if clear || attempt >= cfg.spawn_attempts.max(1) {
                taken.extend(footprint);
                break obj;
            }
        };
        objects.push(obj);
    }
    Ok(objects)
}

fn random_object(
    cfg: &SimConfig,
    track: TrackId,
    jitter: &rand_distr::Normal<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<SimObject> {
    let x = uniform(rng, cfg.spawn_lateral);
    let z = uniform(rng, cfg.spawn_ahead);
    let oncoming = rng.gen_bool(cfg.oncoming_fraction);
    let lane = if oncoming { FRAC_PI_2 } else { -FRAC_PI_2 };
    let heading = lane + rng.sample(jitter);
    let speed = uniform(rng, cfg.speed_range);
    let ctrv = match cfg.motion {
        MotionModel::ConstantVelocity => false,
        MotionModel::Ctrv => true,
        MotionModel::Mixed => rng.gen_bool(0.5),
    };
    let turn_rate = if ctrv {
        uniform(rng, [-cfg.max_turn_rate, cfg.max_turn_rate])
    } else {
        0.0
    };
    let dims = Dims::new(
        uniform(rng, cfg.length_range),
        uniform(rng, cfg.width_range),
        uniform(rng, cfg.height_range),
    )?;
    Ok(SimObject {
        track,
        mover: Mover {
            x,
            z,
            heading,
            speed,
            turn_rate,
        },
        dims,
    })
}

fn ego_start(cfg: &SimConfig) -> Mover {
    Mover {
        x: 0.0,
        z: 0.0,
        heading: -FRAC_PI_2,
        speed: cfg.ego_speed,
        turn_rate: cfg.ego_arc_radius.map_or(0.0, |r| cfg.ego_speed / r),
    }
}

/// World-to-camera pose for a camera at ground position `(x, z)` looking
/// along `heading`.
fn camera_pose(ego: &Mover) -> Pose {
    let (hx, hz) = ego.heading_vector();
    let rotation = Matrix3::new(hz, 0.0, -hx, 0.0, 1.0, 0.0, hx, 0.0, hz);
    let translation = -(rotation * Vec3::new(ego.x, 0.0, ego.z));
    Pose {
        rotation,
        translation,
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<Sequence> {
    cfg.validate()?;
    let intrinsics = cfg.intrinsics.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut objects = spawn_objects(cfg, &mut rng)?;
    let mut ego = ego_start(cfg);
    let dt = 1.0 / cfg.frame_rate;
    let mut frames = Vec::with_capacity(cfg.duration as usize);
    for index in 0..cfg.duration {
        let pose = camera_pose(&ego);
        let mut annotations = Vec::new();
        for obj in &objects {
            if let Some(ann) = annotate(obj, &pose, &intrinsics, index, cfg)? {
                annotations.push(ann);
            }
        }
        assign_occlusion(&mut annotations);
        frames.push(Frame {
            index,
            pose,
            annotations,
        });
        ego.advance(dt);
        for obj in &mut objects {
            obj.mover.advance(dt);
        }
    }
    let seq = Sequence {
        id: cfg.sequence_id.clone(),
        intrinsics,
        frame_rate: cfg.frame_rate,
        frames,
    };
    seq.validate()?;
    Ok(seq)
}

fn annotate(
    obj: &SimObject,
    pose: &Pose,
    k: &CameraIntrinsics,
    frame: u32,
    cfg: &SimConfig,
) -> Result<Option<Annotation>> {
    let world_center = Vec3::new(
        obj.mover.x,
        cfg.camera_height - obj.dims.height / 2.0,
        obj.mover.z,
    );
    let center = pose.transform(&world_center);
    if center.z <= MIN_VISIBLE_DEPTH {
        return Ok(None);
    }
    let (hx, hz) = obj.mover.heading_vector();
    let heading_cam = pose.rotation * Vec3::new(hx, 0.0, hz);
    let yaw = (-heading_cam.z).atan2(heading_cam.x);
    let provisional = Box3D::new(center, obj.dims, yaw, Direction::Towards)?;
    let box3d = Box3D::new(center, obj.dims, provisional.yaw(), direction_of(&provisional))?;

    let corners = box3d.corners();
    if corners.iter().any(|c| c.z < MIN_CORNER_DEPTH) {
        return Ok(None);
    }
    let pixels: Vec<(f64, f64)> = corners
        .iter()
        .map(|c| project(c, k))
        .collect::<Result<_>>()?;
    let (w, h) = (k.width() as f64, k.height() as f64);
    let left = pixels.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).max(0.0);
    let right = pixels.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).min(w);
    let top = pixels.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).max(0.0);
    let bottom = pixels.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).min(h);
    if right <= left || bottom <= top {
        return Ok(None);
    }
    let box2d = Box2D::from_corners(left, top, right, bottom)?;
    let mask = if cfg.masks {
        Some(hull_mask(&pixels, &box2d)?)
    } else {
        None
    };
    Ok(Some(Annotation {
        frame_index: frame,
        track_id: obj.track,
        box2d,
        mask,
        box3d,
        occlusion_level: 0,
        visibility: Some(4),
    }))
}

fn assign_occlusion(annotations: &mut [Annotation]) {
    let fractions: Vec<f64> = (0..annotations.len())
        .map(|i| occlusion_among(annotations, i))
        .collect();
    for (ann, f) in annotations.iter_mut().zip(fractions) {
        ann.occlusion_level = occlusion_level(f);
        ann.visibility = Some(visibility_bucket(f));
    }
}

/// Fraction of the track's box covered by boxes of strictly nearer objects
/// in the same frame.
pub fn occlusion_fraction(frame: &Frame, track: TrackId) -> Option<f64> {
    let idx = frame.annotations.iter().position(|a| a.track_id == track)?;
    Some(occlusion_among(&frame.annotations, idx))
}

fn occlusion_among(annotations: &[Annotation], idx: usize) -> f64 {
    let target = &annotations[idx];
    let depth = target.box3d.center().z;
    let blockers: Vec<Box2D> = annotations
        .iter()
        .filter(|a| a.box3d.center().z < depth)
        .map(|a| a.box2d)
        .collect();
    covered_fraction(&target.box2d, &blockers)
}

/// Area of `target` covered by the union of `others`, as a fraction of the
/// target area. Exact, by coordinate compression.
pub fn covered_fraction(target: &Box2D, others: &[Box2D]) -> f64 {
    let clipped: Vec<[f64; 4]> = others
        .iter()
        .map(|o| {
            [
                o.left().max(target.left()),
                o.top().max(target.top()),
                o.right().min(target.right()),
                o.bottom().min(target.bottom()),
            ]
        })
        .filter(|r| r[2] > r[0] && r[3] > r[1])
        .collect();
    if clipped.is_empty() {
        return 0.0;
    }
    let mut xs: Vec<f64> = clipped.iter().flat_map(|r| [r[0], r[2]]).collect();
    let mut ys: Vec<f64> = clipped.iter().flat_map(|r| [r[1], r[3]]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut area = 0.0;
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let (mx, my) = ((xw[0] + xw[1]) / 2.0, (yw[0] + yw[1]) / 2.0);
            if clipped
                .iter()
                .any(|r| r[0] <= mx && mx <= r[2] && r[1] <= my && my <= r[3])
            {
                area += (xw[1] - xw[0]) * (yw[1] - yw[0]);
            }
        }
    }
    (area / target.area()).clamp(0.0, 1.0)
}

/// KITTI-style level: 0 below 10% covered, 1 below 50%, otherwise 2.
pub fn occlusion_level(fraction: f64) -> u8 {
    if fraction < 0.1 {
        0
    } else if fraction < 0.5 {
        1
    } else {
        2
    }
}

/// nuScenes-style visibility bucket (4 = most visible).
pub fn visibility_bucket(fraction: f64) -> u8 {
    if fraction < 0.2 {
        4
    } else if fraction < 0.4 {
        3
    } else if fraction < 0.6 {
        2
    } else {
        1
    }
}

fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Pixels whose centers fall inside the convex hull of the projected
/// corners, restricted to the clipped 2D box.
fn hull_mask(pixels: &[(f64, f64)], bounds: &Box2D) -> Result<Mask2D> {
    let hull = convex_hull(pixels);
    let x0 = bounds.left().floor() as u32;
    let y0 = bounds.top().floor() as u32;
    let x1 = bounds.right().ceil() as u32;
    let y1 = bounds.bottom().ceil() as u32;
    let (w, h) = (x1 - x0, y1 - y0);
    let mut bits = vec![false; (w * h) as usize];
    for row in 0..h {
        let yc = (y0 + row) as f64 + 0.5;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..hull.len() {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            if (a.1 <= yc && yc <= b.1) || (b.1 <= yc && yc <= a.1) {
                let x = if a.1 == b.1 {
                    lo = lo.min(a.0.min(b.0));
                    a.0.max(b.0)
                } else {
                    a.0 + (yc - a.1) * (b.0 - a.0) / (b.1 - a.1)
                };
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        if lo > hi {
            continue;
        }
        for col in 0..w {
            let xc = (x0 + col) as f64 + 0.5;
            if xc >= lo && xc <= hi {
                bits[(row * w + col) as usize] = true;
            }
        }
    }
    Mask2D::from_bitmap((x0, y0), w, h, &bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{box_keypoints, yaw_from_keypoints};
    use crate::model::normalize_yaw;

    fn static_scene() -> SimConfig {
        SimConfig {
            duration: 5,
            ego_speed: 0.0,
            objects: vec![ObjectSpec {
                x: 0.0,
                z: 15.0,
                heading: 0.3,
                speed: 0.0,
                turn_rate: 0.0,
                length: 4.0,
                width: 1.8,
                height: 1.5,
            }],
            ..Default::default()
        }
    }

    #[test]
    fn static_object_is_identical_every_frame() {
        let seq = simulate(&static_scene()).unwrap();
        let first = seq.frames[0].annotations[0].clone();
        for f in &seq.frames {
            assert_eq!(f.annotations.len(), 1);
            let a = &f.annotations[0];
            assert_eq!(a.box3d, first.box3d);
            assert_eq!(a.box2d, first.box2d);
            assert_eq!(a.mask, first.mask);
        }
        assert!((first.box3d.center().z - 15.0).abs() < 1e-12);
        assert!((first.box3d.yaw() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn constant_velocity_relative_motion() {
        let cfg = SimConfig {
            duration: 10,
            ego_speed: 10.0,
            objects: vec![ObjectSpec {
                x: 3.0,
                z: 20.0,
                heading: -FRAC_PI_2 + 0.1,
                speed: 12.0,
                turn_rate: 0.0,
                length: 4.0,
                width: 1.8,
                height: 1.5,
            }],
            ..Default::default()
        };
        let seq = simulate(&cfg).unwrap();
        let dt = 0.1;
        let v_obj = Vec3::new(
            12.0 * (-FRAC_PI_2 + 0.1f64).cos(),
            0.0,
            -12.0 * (-FRAC_PI_2 + 0.1f64).sin(),
        );
        let v_ego = Vec3::new(0.0, 0.0, 10.0);
        for pair in seq.frames.windows(2) {
            let a = pair[0].annotations[0].box3d.center();
            let b = pair[1].annotations[0].box3d.center();
            assert!(((b - a) - (v_obj - v_ego) * dt).norm() < 1e-9);
        }
    }

    #[test]
    fn ctrv_heading_advances_by_turn_rate() {
        let omega = 0.2;
        let cfg = SimConfig {
            duration: 20,
            ego_speed: 0.0,
            objects: vec![ObjectSpec {
                x: 0.0,
                z: 30.0,
                heading: 0.0,
                speed: 5.0,
                turn_rate: omega,
                length: 4.0,
                width: 1.8,
                height: 1.5,
            }],
            ..Default::default()
        };
        let seq = simulate(&cfg).unwrap();
        for pair in seq.frames.windows(2) {
            let a = pair[0].annotations[0].box3d.yaw();
            let b = pair[1].annotations[0].box3d.yaw();
            assert!(normalize_yaw(b - a - omega * 0.1).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn random_scene_invariants() {
        let cfg = SimConfig {
            duration: 60,
            object_count: 10,
            oncoming_fraction: 0.3,
            ego_arc_radius: Some(80.0),
            ..Default::default()
        };
        let seq = simulate(&cfg).unwrap();
        assert!(seq.annotation_count() > 0);
        for f in &seq.frames {
            for a in &f.annotations {
                assert!(a.box3d.center().z > MIN_VISIBLE_DEPTH);
                assert!(a.box2d.w > 0.0 && a.box2d.h > 0.0);
                let yaw = yaw_from_keypoints(&box_keypoints(&a.box3d), direction_of(&a.box3d)).unwrap();
                assert!(normalize_yaw(yaw - a.box3d.yaw()).unwrap().abs() < 1e-9);
                let frac = occlusion_fraction(f, a.track_id).unwrap();
                assert_eq!(a.occlusion_level, occlusion_level(frac));
                let m = a.mask.as_ref().unwrap();
                assert!(m.fits_in(&seq.intrinsics));
            }
        }
        assert_eq!(simulate(&cfg).unwrap(), seq);
    }

    #[test]
    fn default_spawns_start_visible_and_apart() {
        for seed in 0..40 {
            let seq = simulate(&SimConfig { seed, duration: 2, ..Default::default() }).unwrap();
            let first = &seq.frames[0].annotations;
            assert_eq!(first.len(), 8, "seed {seed}");
            for (i, a) in first.iter().enumerate() {
                assert_eq!(a.occlusion_level, 0, "seed {seed}");
                for b in &first[i + 1..] {
                    assert_eq!(a.box2d.intersection_area(&b.box2d), 0.0);
                }
            }
        }
    }

    /// Inclusion-exclusion over every subset of the clipped boxes.
    fn union_by_inclusion_exclusion(target: &Box2D, others: &[Box2D]) -> f64 {
        let n = others.len();
        let mut total = 0.0;
        for mask in 1u32..(1 << n) {
            let mut r = [target.left(), target.top(), target.right(), target.bottom()];
            for (i, o) in others.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    r = [r[0].max(o.left()), r[1].max(o.top()), r[2].min(o.right()), r[3].min(o.bottom())];
                }
            }
            let area = (r[2] - r[0]).max(0.0) * (r[3] - r[1]).max(0.0);
            let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * area;
        }
        total / target.area()
    }

    #[test]
    fn covered_fraction_examples() {
        let t = Box2D::from_corners(0.0, 0.0, 10.0, 10.0).unwrap();
        assert_eq!(covered_fraction(&t, &[]), 0.0);
        let full = Box2D::from_corners(-1.0, -1.0, 11.0, 11.0).unwrap();
        assert_eq!(covered_fraction(&t, &[full]), 1.0);
        let half = Box2D::from_corners(5.0, -3.0, 20.0, 20.0).unwrap();
        assert!((covered_fraction(&t, &[half]) - 0.5).abs() < 1e-9);

        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let boxes: Vec<Box2D> = (0..4)
                .map(|_| {
                    let (x, y) = (next() * 14.0 - 2.0, next() * 14.0 - 2.0);
                    Box2D::from_corners(x, y, x + 0.5 + next() * 6.0, y + 0.5 + next() * 6.0).unwrap()
                })
                .collect();
            let a = covered_fraction(&t, &boxes);
            let b = union_by_inclusion_exclusion(&t, &boxes);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn levels_and_buckets() {
        assert_eq!(occlusion_level(0.0), 0);
        assert_eq!(occlusion_level(0.3), 1);
        assert_eq!(occlusion_level(0.9), 2);
        assert_eq!(visibility_bucket(0.1), 4);
        assert_eq!(visibility_bucket(0.3), 3);
        assert_eq!(visibility_bucket(0.5), 2);
        assert_eq!(visibility_bucket(0.7), 1);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SimConfig {
            duration: 1,
            ..Default::default()
        };
        assert!(matches!(simulate(&cfg), Err(Error::Config(_))));
        let cfg = SimConfig {
            speed_range: [5.0, 1.0],
            ..Default::default()
        };
        assert!(simulate(&cfg).is_err());
    }
}
