//! Interfaces standing in for the learned matcher, geometry estimator, depth
//! network and false-negative predictor, plus ground-truth oracles with
//! configurable noise.

mod oracle;
pub mod rng;
pub mod splat;
mod scripted;

pub use scripted::{Scripted, ScriptedMatcher};

pub use oracle::{OracleProviders, BACKGROUND_DEPTH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PixelKeypoints;
use crate::model::{Box2D, Dims, FrameIndex, Heatmap, Mask2D, TrackId};

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub box2d: Box2D,
    pub mask: Option<Mask2D>,
    pub confidence: f64,
    pub similarity: Option<Heatmap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomResult {
    pub keypoints_px: PixelKeypoints,
    pub dims: Dims,
}

/// Locates a query object from a source frame inside a target frame.
/// `Ok(None)` means the object was not found (confidence 0).
pub trait Matcher: Sync {
    fn match_target(
        &self,
        source_frame: FrameIndex,
        track: TrackId,
        target_frame: FrameIndex,
    ) -> Result<Option<MatchResult>>;
}

/// Estimates keypoints, depths, dimensions and facing direction of a
/// matched object.
pub trait GeometryProvider: Sync {
    fn estimate(&self, frame: FrameIndex, track: TrackId, box2d: &Box2D) -> Result<GeomResult>;
}

pub trait DepthProvider: Sync {
    fn depth_at(&self, frame: FrameIndex, u: f64, v: f64) -> Result<f64>;
}

/// Per-frame probability that a region holds a valid object.
pub trait ObjectnessProvider: Sync {
    fn objectness(&self, frame: FrameIndex) -> Result<Heatmap>;
}

/// Oracle noise model. Confidence is `c0 * exp(-z / d0) * (1 - k_occ * occ)`
/// clamped to `[0, 1]`; match dropout fires with probability
/// `base + gain * occ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    pub match_dropout_base: f64,
    pub dropout_occlusion_gain: f64,
    pub center_px_sigma: f64,
    pub depth_rel_sigma: f64,
    pub dims_rel_sigma: f64,
    pub direction_flip_prob: f64,
    pub confidence_scale: f64,
    pub confidence_distance: f64,
    pub occlusion_penalty: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            match_dropout_base: 0.05,
            dropout_occlusion_gain: 0.3,
            center_px_sigma: 1.0,
            depth_rel_sigma: 0.05,
            dims_rel_sigma: 0.05,
            direction_flip_prob: 0.02,
            confidence_scale: 0.98,
            confidence_distance: 120.0,
            occlusion_penalty: 0.6,
        }
    }
}

impl NoiseConfig {
    /// Every oracle returns exact ground truth with confidence 1.
    pub fn noiseless() -> Self {
        Self {
            seed: 0,
            match_dropout_base: 0.0,
            dropout_occlusion_gain: 0.0,
            center_px_sigma: 0.0,
            depth_rel_sigma: 0.0,
            dims_rel_sigma: 0.0,
            direction_flip_prob: 0.0,
            confidence_scale: 1.0,
            confidence_distance: f64::INFINITY,
            occlusion_penalty: 0.0,
        }
    }

    /// Frequent misses but exact 2D boxes.
    pub fn dropout() -> Self {
        Self {
            match_dropout_base: 0.35,
            dropout_occlusion_gain: 0.6,
            center_px_sigma: 0.0,
            confidence_distance: 60.0,
            ..Self::default()
        }
    }

    /// More misses, pixel, size and direction noise than the default, with
    /// the default depth noise. Past roughly 7% relative depth noise most
    /// boxes beyond 30 m fall outside a 2 m match gate.
    pub fn heavy() -> Self {
        Self {
            match_dropout_base: 0.15,
            dropout_occlusion_gain: 0.5,
            center_px_sigma: 3.0,
            dims_rel_sigma: 0.1,
            direction_flip_prob: 0.05,
            confidence_distance: 80.0,
            ..Self::default()
        }
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "noiseless" => Ok(Self::noiseless()),
            "default" => Ok(Self::default()),
            "dropout" => Ok(Self::dropout()),
            "heavy" => Ok(Self::heavy()),
            other => Err(Error::Config(format!(
                "unknown noise profile {other:?} (expected noiseless, default, dropout or heavy)"
            ))),
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("match_dropout_base", self.match_dropout_base),
            ("dropout_occlusion_gain", self.dropout_occlusion_gain),
            ("direction_flip_prob", self.direction_flip_prob),
            ("occlusion_penalty", self.occlusion_penalty),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("noise.{name} must be in [0, 1], got {p}")));
            }
        }
        for (name, s) in [
            ("center_px_sigma", self.center_px_sigma),
            ("depth_rel_sigma", self.depth_rel_sigma),
            ("dims_rel_sigma", self.dims_rel_sigma),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("noise.{name} must be >= 0, got {s}")));
            }
        }
        if !(self.confidence_scale >= 0.0 && self.confidence_scale.is_finite()) {
            return Err(Error::Config("noise.confidence_scale must be >= 0".into()));
        }
        if !(self.confidence_distance > 0.0) {
            return Err(Error::Config("noise.confidence_distance must be > 0".into()));
        }
        Ok(())
    }

    pub fn confidence(&self, depth: f64, occlusion: f64) -> f64 {
        let c = self.confidence_scale
            * (-depth / self.confidence_distance).exp()
            * (1.0 - self.occlusion_penalty * occlusion);
        c.clamp(0.0, 1.0)
    }

    pub fn dropout_probability(&self, occlusion: f64) -> f64 {
        (self.match_dropout_base + self.dropout_occlusion_gain * occlusion).clamp(0.0, 1.0)
    }
}
