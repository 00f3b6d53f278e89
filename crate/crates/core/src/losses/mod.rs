//! Loss functions with analytic gradients with respect to the prediction.
//!
//! Every loss returns a [`LossValue`]; the aggregates add values and
//! gradients component-wise without weights.

mod gradcheck;

pub use gradcheck::{central_difference, relative_error, run_gradient_checks, GradCheckRow};

use crate::error::{Error, Result};
use crate::model::Heatmap;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-7;
pub const DEFAULT_TEMPERATURE: f64 = 0.07;
pub const FOCAL_ALPHA: f64 = 2.0;
pub const FOCAL_BETA: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    norm: f64,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature vector has non-finite entries"));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Self { values, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn norm(&self) -> f64 {
        self.norm
    }
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    fn cosine(&self, other: &FeatureVector) -> f64 {
        let dot: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        dot / (self.norm * other.norm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Vec<f64>,
}

fn clamp_prob(p: f64) -> (f64, bool) {
    let c = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    (c, c != p)
}

/// Cross-entropy over cosine similarities with one positive and explicit
/// negatives. The gradient is taken with respect to the query entries.
pub fn info_nce(
    query: &FeatureVector,
    positive: &FeatureVector,
    negatives: &[FeatureVector],
    temperature: f64,
) -> Result<LossValue> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let candidates: Vec<&FeatureVector> = std::iter::once(positive).chain(negatives).collect();
    for c in std::iter::once(query).chain(candidates.iter().copied()) {
        if c.dim() != query.dim() {
            return Err(Error::ShapeMismatch(format!(
                "feature dims {} vs {}",
                c.dim(),
                query.dim()
            )));
        }
        if c.norm() == 0.0 {
            return Err(Error::invalid("zero-norm feature vector"));
        }
    }
    let sims: Vec<f64> = candidates.iter().map(|c| query.cosine(c)).collect();
    let logits: Vec<f64> = sims.iter().map(|s| s / temperature).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let log_z = max + sum_exp.ln();
    let value = (log_z - logits[0]).max(0.0);

    let qn = query.norm();
    let mut gradient = vec![0.0; query.dim()];
    for (i, (c, s)) in candidates.iter().zip(&sims).enumerate() {
        let softmax = (logits[i] - log_z).exp();
        let coeff = (softmax - if i == 0 { 1.0 } else { 0.0 }) / temperature;
        if coeff == 0.0 {
            continue;
        }
        for (g, (qv, cv)) in gradient.iter_mut().zip(query.values().iter().zip(c.values())) {
            *g += coeff * (cv / (qn * c.norm()) - s * qv / (qn * qn));
        }
    }
    Ok(LossValue { value, gradient })
}

/// Penalty-reduced focal loss over a center heatmap, normalized by the
/// number of positive (`target == 1`) cells. `weight` scales the negative
/// term per cell.
pub fn focal_center_loss(
    pred: &Heatmap,
    target: &Heatmap,
    alpha: f64,
    beta: f64,
    weight: Option<&Heatmap>,
) -> Result<LossValue> {
    if !pred.same_shape(target) || weight.is_some_and(|w| !w.same_shape(pred)) {
        return Err(Error::ShapeMismatch(format!(
            "focal loss heatmaps differ in shape (pred {}x{})",
            pred.width(),
            pred.height()
        )));
    }
    let positives = target.values().iter().filter(|&&t| t == 1.0).count();
    let norm = positives.max(1) as f64;
    let mut value = 0.0;
    let mut gradient = vec![0.0; pred.values().len()];
    for (i, (&raw, &t)) in pred.values().iter().zip(target.values()).enumerate() {
        let (p, clamped) = clamp_prob(raw);
        let (v, dp) = if t == 1.0 {
            let one_minus = 1.0 - p;
            (
                -one_minus.powf(alpha) * p.ln(),
                alpha * one_minus.powf(alpha - 1.0) * p.ln() - one_minus.powf(alpha) / p,
            )
        } else {
            let w = weight.map_or(1.0, |w| w.values()[i]);
            let scale = (1.0 - t).powf(beta) * w;
            (
                -scale * p.powf(alpha) * (1.0 - p).ln(),
                -scale * (alpha * p.powf(alpha - 1.0) * (1.0 - p).ln() - p.powf(alpha) / (1.0 - p)),
            )
        };
        value += v;
        gradient[i] = if clamped { 0.0 } else { dp / norm };
    }
    Ok(LossValue {
        value: value / norm,
        gradient,
    })
}

/// Mean absolute error. The subgradient is 0 where prediction equals target.
pub fn l1_loss(pred: &[f64], target: &[f64]) -> Result<LossValue> {
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "l1 lengths {} vs {}",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len().max(1) as f64;
    let value = pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
    let gradient = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            if p > t {
                1.0 / n
            } else if p < t {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    Ok(LossValue { value, gradient })
}

/// Mean binary cross-entropy; `weight` scales the negative term per entry.
pub fn bce_loss(pred: &[f64], target: &[f64], weight: Option<&[f64]>) -> Result<LossValue> {
    if pred.len() != target.len() || weight.is_some_and(|w| w.len() != pred.len()) {
        return Err(Error::ShapeMismatch(format!(
            "bce lengths differ (pred {}, target {})",
            pred.len(),
            target.len()
        )));
    }
    if let Some(t) = target.iter().find(|&&t| t != 0.0 && t != 1.0) {
        return Err(Error::invalid(format!("bce target {t} is not 0 or 1")));
    }
    let n = pred.len().max(1) as f64;
    let mut value = 0.0;
    let mut gradient = Vec::with_capacity(pred.len());
    for (i, (&raw, &t)) in pred.iter().zip(target).enumerate() {
        let (p, clamped) = clamp_prob(raw);
        let w = weight.map_or(1.0, |w| w[i]);
        value += -(t * p.ln() + w * (1.0 - t) * (1.0 - p).ln());
        let dp = -t / p + w * (1.0 - t) / (1.0 - p);
        gradient.push(if clamped { 0.0 } else { dp / n });
    }
    Ok(LossValue {
        value: value / n,
        gradient,
    })
}

#[derive(Debug, Clone, Default)]
pub struct MatchLossParts {
    pub similarity: Option<LossValue>,
    pub center: Option<LossValue>,
    pub dims: Option<LossValue>,
    pub offset: Option<LossValue>,
    pub mask: Option<LossValue>,
}

#[derive(Debug, Clone, Default)]
pub struct GeomLossParts {
    pub keypoint: Option<LossValue>,
    pub depth: Option<LossValue>,
    pub dims: Option<LossValue>,
    pub direction: Option<LossValue>,
}

fn sum_parts(parts: &[(&'static str, Option<&LossValue>)]) -> Result<LossValue> {
    let mut total: Option<LossValue> = None;
    for (name, part) in parts {
        let part = part.ok_or(Error::MissingComponent(name))?;
        match &mut total {
            None => total = Some(part.clone()),
            Some(acc) => {
                if acc.gradient.len() != part.gradient.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "component `{name}` gradient has {} entries, expected {}",
                        part.gradient.len(),
                        acc.gradient.len()
                    )));
                }
                acc.value += part.value;
                acc.gradient
                    .iter_mut()
                    .zip(&part.gradient)
                    .for_each(|(a, b)| *a += b);
            }
        }
    }
    total.ok_or(Error::MissingComponent("all"))
}

pub fn match_loss_total(parts: &MatchLossParts) -> Result<LossValue> {
    sum_parts(&[
        ("similarity", parts.similarity.as_ref()),
        ("center", parts.center.as_ref()),
        ("dims", parts.dims.as_ref()),
        ("offset", parts.offset.as_ref()),
        ("mask", parts.mask.as_ref()),
    ])
}

pub fn geom_loss_total(parts: &GeomLossParts) -> Result<LossValue> {
    sum_parts(&[
        ("keypoint", parts.keypoint.as_ref()),
        ("depth", parts.depth.as_ref()),
        ("dims", parts.dims.as_ref()),
        ("direction", parts.direction.as_ref()),
    ])
}

pub fn total_loss(matching: &LossValue, geometry: &LossValue) -> Result<LossValue> {
    sum_parts(&[("match", Some(matching)), ("geom", Some(geometry))])
}
