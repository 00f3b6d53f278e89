//! CLEAR-MOT, IDF1 and AMOTA on ground truth versus a corrupted copy:
//! shifted boxes, dropped frames and an identity swap.

use sparse_autolabel::metrics::{evaluate, MetricConfig};
use sparse_autolabel::model::{Box3D, PropagationDirection, Pseudolabel, TrackId, Vec3};
use sparse_autolabel::simulator::{simulate, SimConfig};

fn main() -> sparse_autolabel::Result<()> {
    let seq = simulate(&SimConfig { duration: 60, ..SimConfig::default() })?;
    let mut preds = Vec::new();
    for frame in &seq.frames {
        for a in &frame.annotations {
            if a.track_id == TrackId(1) && frame.index % 4 == 0 {
                continue;
            }
            let mut p = Pseudolabel::from_annotation(a, PropagationDirection::Forward);
            let c = a.box3d.center();
            p.box3d = Box3D::new(Vec3::new(c.x + 0.3, c.y, c.z), a.box3d.dims(), a.box3d.yaw(), a.box3d.direction())?;
            p.confidence = 1.0 - 0.05 * f64::from(a.track_id.0);
            if frame.index >= 30 && a.track_id.0 < 2 {
                p.track_id = TrackId(1 - a.track_id.0);
            }
            preds.push(p);
        }
    }
    let r = evaluate(&seq, &preds, &MetricConfig::default())?;
    let c = &r.counts;
    println!("MOTA {:.4}  MOTP {:.4} m  IDF1 {:.4}  AMOTA {:.4}  AMOTP {:.4}", r.mota, r.motp, r.idf1, r.amota, r.amotp);
    println!("tp {} fp {} fn {} idsw {} of {} GT", c.tp, c.fp, c.fn_, c.idsw, c.gt_total);
    for row in r.recall_rows.iter().step_by(4) {
        println!(
            "recall {:.2}: threshold {:?} achieved {:.3} MOTAR {:.3}",
            row.recall, row.threshold, row.achieved_recall, row.motar
        );
    }
    Ok(())
}
