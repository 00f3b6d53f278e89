//! Central finite-difference checks of the analytic loss gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    bce_loss, focal_center_loss, geom_loss_total, info_nce, l1_loss, match_loss_total,
    total_loss, FeatureVector, GeomLossParts, LossValue, MatchLossParts, DEFAULT_TEMPERATURE,
    FOCAL_ALPHA, FOCAL_BETA,
};
use crate::error::Result;
use crate::model::Heatmap;

pub const STEP: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-4;

pub fn central_difference(f: impl Fn(&[f64]) -> Result<f64>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// `|a - n| / max(|a|, |n|)` over whole gradient vectors (Euclidean norms).
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied()).max(norm(&mut numeric.iter().copied()));
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckRow {
    pub loss: &'static str,
    pub points: usize,
    pub max_relative_error: f64,
    pub passed: bool,
}

const DIM: usize = 8;

struct Fixture {
    positive: FeatureVector,
    negatives: Vec<FeatureVector>,
    heat_target: Vec<f64>,
    heat_weight: Vec<f64>,
    reg_targets: [Vec<f64>; 4],
    binary: Vec<f64>,
    bce_weight: Vec<f64>,
}

fn prob(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0.05..0.95)
}

fn features(rng: &mut ChaCha8Rng) -> FeatureVector {
    FeatureVector::new((0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite")
}

impl Fixture {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let peak = rng.gen_range(0..DIM);
        let heat_target = (0..DIM)
            .map(|i| if i == peak { 1.0 } else { rng.gen_range(0.0..0.9) })
            .collect();
        Self {
            positive: features(rng),
            negatives: (0..5).map(|_| features(rng)).collect(),
            heat_target,
            heat_weight: (0..DIM).map(|_| rng.gen_range(0.0..1.0)).collect(),
            reg_targets: std::array::from_fn(|_| (0..DIM).map(|_| rng.gen_range(-1.0..2.0)).collect()),
            binary: (0..DIM).map(|_| f64::from(rng.gen_bool(0.5) as u8)).collect(),
            bce_weight: (0..DIM).map(|_| rng.gen_range(0.0..1.0)).collect(),
        }
    }

    fn info_nce(&self, x: &[f64]) -> Result<LossValue> {
        info_nce(
            &FeatureVector::new(x.to_vec())?,
            &self.positive,
            &self.negatives,
            DEFAULT_TEMPERATURE,
        )
    }

    fn focal(&self, x: &[f64], weighted: bool) -> Result<LossValue> {
        let pred = Heatmap::new(DIM, 1, 1, x.to_vec())?;
        let target = Heatmap::new(DIM, 1, 1, self.heat_target.clone())?;
        let weight = Heatmap::new(DIM, 1, 1, self.heat_weight.clone())?;
        focal_center_loss(
            &pred,
            &target,
            FOCAL_ALPHA,
            FOCAL_BETA,
            weighted.then_some(&weight),
        )
    }

    fn l1(&self, x: &[f64], which: usize) -> Result<LossValue> {
        l1_loss(x, &self.reg_targets[which])
    }

    fn bce(&self, x: &[f64], weighted: bool) -> Result<LossValue> {
        bce_loss(x, &self.binary, weighted.then_some(self.bce_weight.as_slice()))
    }

    fn matching(&self, x: &[f64]) -> Result<LossValue> {
        match_loss_total(&MatchLossParts {
            similarity: Some(self.info_nce(x)?),
            center: Some(self.focal(x, true)?),
            dims: Some(self.l1(x, 0)?),
            offset: Some(self.l1(x, 1)?),
            mask: Some(self.bce(x, false)?),
        })
    }

    fn geometry(&self, x: &[f64]) -> Result<LossValue> {
        geom_loss_total(&GeomLossParts {
            keypoint: Some(self.l1(x, 2)?),
            depth: Some(self.l1(x, 3)?),
            dims: Some(self.l1(x, 0)?),
            direction: Some(self.bce(x, true)?),
        })
    }

    fn total(&self, x: &[f64]) -> Result<LossValue> {
        total_loss(&self.matching(x)?, &self.geometry(x)?)
    }

    /// L1 is only differentiable away from ties.
    fn smooth_for_l1(&self, x: &[f64]) -> bool {
        self.reg_targets
            .iter()
            .all(|t| t.iter().zip(x).all(|(t, x)| (t - x).abs() > 1e-3))
    }
}

type LossFn = fn(&Fixture, &[f64]) -> Result<LossValue>;

const CHECKS: [(&str, LossFn); 10] = [
    ("info_nce", |f, x| f.info_nce(x)),
    ("focal", |f, x| f.focal(x, false)),
    ("focal_weighted", |f, x| f.focal(x, true)),
    ("l1", |f, x| f.l1(x, 0)),
    ("bce", |f, x| f.bce(x, false)),
    ("bce_weighted", |f, x| f.bce(x, true)),
    ("match_total", |f, x| f.matching(x)),
    ("geom_total", |f, x| f.geometry(x)),
    ("total", |f, x| f.total(x)),
    ("l1_offset", |f, x| f.l1(x, 1)),
];

/// Compares analytic and finite-difference gradients for every loss at
/// `points` random smooth-region inputs.
pub fn run_gradient_checks(points: usize, seed: u64) -> Result<Vec<GradCheckRow>> {
    let mut rows = Vec::new();
    for (idx, (name, loss)) in CHECKS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < points {
            let fixture = Fixture::draw(&mut rng);
            let x: Vec<f64> = (0..DIM).map(|_| prob(&mut rng)).collect();
            if !fixture.smooth_for_l1(&x) {
                continue;
            }
            let analytic = loss(&fixture, &x)?.gradient;
            let numeric = central_difference(|p| Ok(loss(&fixture, p)?.value), &x, STEP)?;
            worst = worst.max(relative_error(&analytic, &numeric));
            done += 1;
        }
        rows.push(GradCheckRow {
            loss: name,
            points,
            max_relative_error: worst,
            passed: worst < TOLERANCE,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_loss_passes_gradient_check() {
        let rows = run_gradient_checks(100, 7).unwrap();
        assert_eq!(rows.len(), CHECKS.len());
        for row in rows {
            assert!(row.passed, "{} max rel error {}", row.loss, row.max_relative_error);
        }
    }

    #[test]
    fn l1_gradient_matches_difference_quotient() {
        let g = l1_loss(&[1.0, 2.0], &[0.0, 0.0]).unwrap().gradient;
        let n = central_difference(|x| Ok(l1_loss(x, &[0.0, 0.0])?.value), &[1.0, 2.0], STEP)
            .unwrap();
        assert!(relative_error(&g, &n) < 1e-8);
    }
}
