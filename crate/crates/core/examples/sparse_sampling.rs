//! Selects sparse labels and enumerates the four kinds of mining pairs.

use std::collections::BTreeMap;

use sparse_autolabel::sampling::{mine_pairs, sample_sparse};
use sparse_autolabel::simulator::{simulate, SimConfig};

fn main() -> sparse_autolabel::Result<()> {
    let seq = simulate(&SimConfig::default())?;
    let sparse = sample_sparse(&seq, 4, 0)?;
    println!(
        "{} sparse labels, {:.1}% of annotations removed, omitted tracks {:?}",
        sparse.selected_count(),
        100.0 * sparse.reduction_ratio,
        sparse.omitted
    );
    for (track, frames) in &sparse.tracks {
        println!("track {track}: labeled frames {frames:?}");
    }
    let pairs = mine_pairs(&seq, &sparse, 8);
    let mut by_strategy = BTreeMap::new();
    for p in &pairs {
        *by_strategy.entry(p.strategy.as_str()).or_insert(0usize) += 1;
    }
    println!("{} mining pairs with window 8: {by_strategy:?}", pairs.len());
    Ok(())
}
