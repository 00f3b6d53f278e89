//! Pinhole projection, box keypoints and yaw recovery from front/center/back
//! keypoints.
//!
//! Keypoints sit at `center +- (L/2) * (cos yaw, 0, -sin yaw)`. With that
//! placement the keypoint yaw formula is an exact inverse of
//! [`box_keypoints`]: the `towards` branch reads the front point, the `away`
//! branch the back point, and on exact keypoints both agree.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{normalize_yaw, Box3D, CameraIntrinsics, Direction, Keypoints3D, Vec3};

/// Minimum horizontal separation between a keypoint and the center.
pub const DEGENERACY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelKeypoints {
    pub front: (f64, f64),
    pub center: (f64, f64),
    pub back: (f64, f64),
    /// Depths of front, center, back in meters.
    pub depths: [f64; 3],
    pub direction: Direction,
}

pub fn project(p: &Vec3, k: &CameraIntrinsics) -> Result<(f64, f64)> {
    if !(p.z > 0.0) {
        return Err(Error::BehindCamera { z: p.z });
    }
    Ok((k.fx() * p.x / p.z + k.cx(), k.fy() * p.y / p.z + k.cy()))
}

pub fn backproject(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Result<Vec3> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::BehindCamera { z: depth });
    }
    Ok(Vec3::new(
        (u - k.cx()) * depth / k.fx(),
        (v - k.cy()) * depth / k.fy(),
        depth,
    ))
}

pub fn box_keypoints(b: &Box3D) -> Keypoints3D {
    let c = b.center();
    let offset = b.heading() * (b.dims().length / 2.0);
    Keypoints3D {
        front: c + offset,
        center: c,
        back: c - offset,
    }
}

pub fn yaw_from_keypoints(k: &Keypoints3D, d: Direction) -> Result<f64> {
    let (tip, angle_offset) = match d {
        Direction::Towards => (k.front, 0.0),
        Direction::Away => (k.back, PI),
    };
    let dx = tip.x - k.center.x;
    let dz = tip.z - k.center.z;
    if dx.abs().max(dz.abs()) <= DEGENERACY_EPS {
        return Err(Error::DegenerateKeypoints {
            eps: DEGENERACY_EPS,
        });
    }
    let theta = match d {
        Direction::Towards => -dz.atan2(dx),
        Direction::Away => angle_offset - dz.atan2(dx),
    };
    normalize_yaw(theta)
}

/// Whether the box heading points back at the camera. Perpendicular
/// headings count as `towards`.
pub fn direction_of(b: &Box3D) -> Direction {
    if b.heading().dot(&(-b.center())) >= 0.0 {
        Direction::Towards
    } else {
        Direction::Away
    }
}

pub fn lift_keypoints(pk: &PixelKeypoints, k: &CameraIntrinsics) -> Result<Keypoints3D> {
    let [zf, zc, zb] = pk.depths;
    Ok(Keypoints3D {
        front: backproject(pk.front.0, pk.front.1, zf, k)?,
        center: backproject(pk.center.0, pk.center.1, zc, k)?,
        back: backproject(pk.back.0, pk.back.1, zb, k)?,
    })
}

/// Projects 3D keypoints to pixels and records their exact depths.
pub fn project_keypoints(
    kp: &Keypoints3D,
    k: &CameraIntrinsics,
    direction: Direction,
) -> Result<PixelKeypoints> {
    Ok(PixelKeypoints {
        front: project(&kp.front, k)?,
        center: project(&kp.center, k)?,
        back: project(&kp.back, k)?,
        depths: [kp.front.z, kp.center.z, kp.back.z],
        direction,
    })
}
