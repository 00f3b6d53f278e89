//! Generates the default synthetic scene and summarizes its ground truth.

use sparse_autolabel::simulator::{occlusion_fraction, simulate, SimConfig};

fn main() -> sparse_autolabel::Result<()> {
    let seq = simulate(&SimConfig { seed: 7, ..SimConfig::default() })?;
    println!(
        "sequence {}: {} frames, {} tracks, {} annotations",
        seq.id,
        seq.frames.len(),
        seq.track_ids().len(),
        seq.annotation_count()
    );
    for track in seq.track_ids() {
        let anns = seq.track(track);
        let eligible = anns.iter().filter(|a| a.is_sampling_eligible()).count();
        let first = anns.first().map_or(0, |a| a.frame_index);
        let last = anns.last().map_or(0, |a| a.frame_index);
        let max_occ = anns
            .iter()
            .filter_map(|a| occlusion_fraction(seq.frame(a.frame_index)?, track))
            .fold(0.0, f64::max);
        println!(
            "track {track}: frames {first}..={last}, {} annotated, {eligible} eligible, max occlusion {max_occ:.2}",
            anns.len()
        );
    }
    Ok(())
}
