//! Forward and backward propagation from sparse labels under a noisy
//! oracle, the per-frame merge and the resulting coverage.

use sparse_autolabel::pipeline::{collect_pseudolabels, covered_frames, PipelineConfig};
use sparse_autolabel::providers::NoiseConfig;
use sparse_autolabel::runner::pseudolabel_sequence;
use sparse_autolabel::sampling::sample_sparse;
use sparse_autolabel::simulator::{simulate, SimConfig};

fn main() -> sparse_autolabel::Result<()> {
    let seq = simulate(&SimConfig { seed: 2, ..SimConfig::default() })?;
    let sparse = sample_sparse(&seq, 4, 2)?;
    let noise = NoiseConfig::profile("heavy")?.with_seed(2);
    let (fwd, bwd, merged) = pseudolabel_sequence(&seq, &sparse, &noise, &PipelineConfig::default())?;
    let (f, b, m) = (
        covered_frames(&collect_pseudolabels(&fwd)),
        covered_frames(&collect_pseudolabels(&bwd)),
        covered_frames(&merged),
    );
    println!("track  gt  forward  backward  merged");
    for track in seq.track_ids() {
        let n = |c: &std::collections::BTreeMap<_, std::collections::BTreeSet<u32>>| c.get(&track).map_or(0, |s| s.len());
        println!("{track:>5} {:>3} {:>8} {:>9} {:>7}", seq.track(track).len(), n(&f), n(&b), n(&m));
    }
    let terminated = fwd.iter().chain(&bwd).filter(|h| h.is_terminated()).count();
    println!("{} merged pseudolabels, {terminated} segments terminated early", merged.len());
    Ok(())
}
