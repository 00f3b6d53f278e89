//! Loss values on small inputs and the finite-difference gradient check.

use sparse_autolabel::losses::{bce_loss, info_nce, l1_loss, run_gradient_checks, FeatureVector, DEFAULT_TEMPERATURE};

fn main() -> sparse_autolabel::Result<()> {
    let q = FeatureVector::new(vec![1.0, 0.0])?;
    let pos = FeatureVector::new(vec![1.0, 0.1])?;
    let neg = vec![FeatureVector::new(vec![0.0, 1.0])?, FeatureVector::new(vec![-1.0, 0.2])?];
    println!("infoNCE  {:.6}", info_nce(&q, &pos, &neg, DEFAULT_TEMPERATURE)?.value);
    println!("L1       {:.6}", l1_loss(&[0.5, 2.0], &[1.0, 1.0])?.value);
    println!("BCE      {:.6}", bce_loss(&[0.9, 0.2], &[1.0, 0.0], None)?.value);
    for row in run_gradient_checks(100, 0)? {
        println!("{:<16} max relative error {:.2e} {}", row.loss, row.max_relative_error, if row.passed { "ok" } else { "FAIL" });
    }
    Ok(())
}
