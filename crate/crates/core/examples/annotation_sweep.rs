//! End-to-end runs over annotation budgets, noiseless and noisy, as CSV.

use sparse_autolabel::runner::{run_e2e, sweep_csv, sweep_max_per_track, RunConfig};

fn main() -> sparse_autolabel::Result<()> {
    let noiseless = RunConfig::noiseless();
    let out = run_e2e(&noiseless)?;
    let r = &out.run.report;
    println!("noiseless e2e: MOTA {} IDF1 {} MOTP {:.1e}", r.mota, r.idf1, r.motp);
    println!("artifacts: {:?}", out.artifacts.keys().collect::<Vec<_>>());
    for (name, cfg) in [("noiseless", noiseless), ("default noise", RunConfig::default())] {
        println!("\n{name}");
        print!("{}", sweep_csv(&sweep_max_per_track(&cfg, &[2, 4, 8, 16])?)?);
    }
    Ok(())
}
