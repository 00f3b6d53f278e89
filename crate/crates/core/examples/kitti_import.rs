//! Reads the bundled KITTI tracking labels and calibration and converts
//! them into a sequence document.

use sparse_autolabel::formats::{kitti_rows_to_sequence, parse_kitti_calib, parse_kitti_labels, serialize_sequence, KittiConversion};

fn main() -> sparse_autolabel::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/kitti");
    let rows = parse_kitti_labels(&std::fs::read_to_string(dir.join("0000_labels.txt"))?)?;
    let calib = parse_kitti_calib(&std::fs::read_to_string(dir.join("0000_calib.txt"))?, 1242, 375)?;
    let (seq, stats) = kitti_rows_to_sequence(&rows, calib.intrinsics, &KittiConversion::default())?;
    println!("{stats:?}");
    for frame in &seq.frames {
        for a in &frame.annotations {
            let c = a.box3d.center();
            println!(
                "frame {} track {}: center ({:.3}, {:.3}, {:.3}) yaw {:+.4} {}",
                frame.index,
                a.track_id,
                c.x,
                c.y,
                c.z,
                a.box3d.yaw(),
                a.box3d.direction().as_str()
            );
        }
    }
    print!("{}", serialize_sequence(&seq)?);
    Ok(())
}
