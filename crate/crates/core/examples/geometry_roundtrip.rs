//! Box -> keypoints -> pixels and depths -> lifted keypoints -> yaw.

use sparse_autolabel::geometry::{box_keypoints, direction_of, lift_keypoints, project_keypoints, yaw_from_keypoints};
use sparse_autolabel::model::{Box3D, CameraIntrinsics, Dims, Direction, Vec3};

fn main() -> sparse_autolabel::Result<()> {
    let k = CameraIntrinsics::kitti_default();
    for yaw in [-3.0, -1.2, 0.0, 0.4, 2.5] {
        let provisional = Box3D::new(Vec3::new(2.0, 1.0, 20.0), Dims::new(4.2, 1.8, 1.5)?, yaw, Direction::Towards)?;
        let dir = direction_of(&provisional);
        let b = Box3D::new(provisional.center(), provisional.dims(), yaw, dir)?;
        let pixels = project_keypoints(&box_keypoints(&b), &k, dir)?;
        let lifted = lift_keypoints(&pixels, &k)?;
        let recovered = yaw_from_keypoints(&lifted, dir)?;
        println!(
            "yaw {yaw:+.3} {:<7} front px ({:7.2}, {:6.2}) recovered {recovered:+.12} error {:.1e}",
            dir.as_str(),
            pixels.front.0,
            pixels.front.1,
            (recovered - b.yaw()).abs()
        );
    }
    Ok(())
}
