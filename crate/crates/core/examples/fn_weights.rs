//! False-negative compensation: objects the pseudolabels miss get low
//! loss weight around their centers.

use sparse_autolabel::pipeline::{covered_frames, emit_fncomp_weights, PipelineConfig};
use sparse_autolabel::providers::{NoiseConfig, OracleProviders};
use sparse_autolabel::runner::pseudolabel_sequence;
use sparse_autolabel::sampling::sample_sparse;
use sparse_autolabel::simulator::{simulate, SimConfig};

fn main() -> sparse_autolabel::Result<()> {
    let seq = simulate(&SimConfig::default())?;
    let sparse = sample_sparse(&seq, 2, 0)?;
    let noise = NoiseConfig::profile("dropout")?;
    let cfg = PipelineConfig::default();
    let (_, _, merged) = pseudolabel_sequence(&seq, &sparse, &noise, &cfg)?;
    let oracle = OracleProviders::new(&seq, noise, cfg.heatmap_stride)?;
    let maps = emit_fncomp_weights(&seq, &merged, &oracle, &cfg)?;
    let covered = covered_frames(&merged);
    let (mut hit, mut miss) = (Vec::new(), Vec::new());
    for (frame, map) in seq.frames.iter().zip(&maps) {
        for a in &frame.annotations {
            let (x, y) = map.weights.cell_of(a.box2d.cx, a.box2d.cy);
            let w = map.weights.get(x, y);
            let is_covered = covered.get(&a.track_id).is_some_and(|s| s.contains(&frame.index));
            if is_covered {
                hit.push(w)
            } else {
                miss.push(w)
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    println!("covered GT centers:   {:5} mean weight {:.4}", hit.len(), mean(&hit));
    println!("uncovered GT centers: {:5} mean weight {:.4}", miss.len(), mean(&miss));
    Ok(())
}
