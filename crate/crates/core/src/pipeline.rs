//! Seed-bounded bidirectional propagation of sparse labels into dense
//! pseudolabels, confidence merge, and false-negative weight maps.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lift_keypoints, yaw_from_keypoints};
use crate::model::{
    Box3D, FrameIndex, Heatmap, PropagationDirection, Provenance, Pseudolabel, Sequence, TrackId,
};
use crate::providers::splat::splat_boxes;
use crate::providers::{GeometryProvider, Matcher, ObjectnessProvider};
use crate::sampling::SparseLabelSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Matches strictly below this confidence are discarded.
    pub discard_threshold: f64,
    /// Accepted matches at or above this confidence become the new source.
    pub source_update_threshold: f64,
    pub max_consecutive_misses: u32,
    pub merge_tie_break: PropagationDirection,
    pub fncomp_floor: f64,
    pub heatmap_stride: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            discard_threshold: 0.5,
            source_update_threshold: 0.75,
            max_consecutive_misses: 3,
            merge_tie_break: PropagationDirection::Forward,
            fncomp_floor: 0.0,
            heatmap_stride: 4,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let (d, s) = (self.discard_threshold, self.source_update_threshold);
        if !(0.0 <= d && d <= s && s <= 1.0) {
            return Err(Error::Config(format!(
                "pipeline thresholds need 0 <= discard ({d}) <= source_update ({s}) <= 1"
            )));
        }
        if self.max_consecutive_misses == 0 {
            return Err(Error::Config("pipeline.max_consecutive_misses must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.fncomp_floor) {
            return Err(Error::Config(format!(
                "pipeline.fncomp_floor must be in [0, 1], got {}",
                self.fncomp_floor
            )));
        }
        if self.heatmap_stride == 0 {
            return Err(Error::Config("pipeline.heatmap_stride must be positive".into()));
        }
        Ok(())
    }
}

/// Why a propagation segment stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentEnd {
    /// The next frame holds another sparse label of the same track.
    NextSeed(FrameIndex),
    SequenceEnd,
    /// The miss budget ran out at this frame.
    Terminated(FrameIndex),
}

impl SegmentEnd {
    pub fn label(&self) -> &'static str {
        match self {
            SegmentEnd::NextSeed(_) => "next_seed",
            SegmentEnd::SequenceEnd => "sequence_end",
            SegmentEnd::Terminated(_) => "terminated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MissReason {
    NotFound,
    LowConfidence(f64),
    ProviderError(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Miss {
    pub frame: FrameIndex,
    pub reason: MissReason,
}

/// One seed propagated in one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackHypothesis {
    pub track_id: TrackId,
    pub direction: PropagationDirection,
    pub seed_frame: FrameIndex,
    /// Ordered in the propagation direction; the seed comes first.
    pub pseudolabels: Vec<Pseudolabel>,
    pub source_frame: FrameIndex,
    pub consecutive_misses: u32,
    pub end: SegmentEnd,
    pub misses: Vec<Miss>,
}

impl TrackHypothesis {
    pub fn is_terminated(&self) -> bool {
        matches!(self.end, SegmentEnd::Terminated(_))
    }
}

/// Propagates every sparse label of `sparse` through `seq` in `direction`.
/// Output is ordered by (track, seed frame) whatever the thread count.
pub fn propagate(
    seq: &Sequence,
    sparse: &SparseLabelSet,
    matcher: &dyn Matcher,
    geometry: &dyn GeometryProvider,
    cfg: &PipelineConfig,
    direction: PropagationDirection,
) -> Result<Vec<TrackHypothesis>> {
    cfg.validate()?;
    let mut units = Vec::new();
    for (&track, frames) in &sparse.tracks {
        for &seed in frames {
            let pos = seq.frame_position(seed).ok_or_else(|| {
                Error::Integrity(format!("sparse label frame {seed} of track {track} not in sequence"))
            })?;
            if seq.frames[pos].annotation(track).is_none() {
                return Err(Error::Integrity(format!(
                    "sparse label ({track}, frame {seed}) has no annotation"
                )));
            }
            units.push((track, pos, frames.as_slice()));
        }
    }
    Ok(units
        .par_iter()
        .map(|&(track, pos, seeds)| propagate_segment(seq, track, pos, seeds, matcher, geometry, cfg, direction))
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn propagate_segment(
    seq: &Sequence,
    track: TrackId,
    seed_pos: usize,
    seeds: &[FrameIndex],
    matcher: &dyn Matcher,
    geometry: &dyn GeometryProvider,
    cfg: &PipelineConfig,
    direction: PropagationDirection,
) -> TrackHypothesis {
    let seed_frame = seq.frames[seed_pos].index;
    let seed_ann = seq.frames[seed_pos]
        .annotation(track)
        .expect("seed annotation checked by caller");
    let mut hyp = TrackHypothesis {
        track_id: track,
        direction,
        seed_frame,
        pseudolabels: vec![Pseudolabel::from_annotation(seed_ann, direction)],
        source_frame: seed_frame,
        consecutive_misses: 0,
        end: SegmentEnd::SequenceEnd,
        misses: Vec::new(),
    };
    let positions: Box<dyn Iterator<Item = usize>> = match direction {
        PropagationDirection::Forward => Box::new(seed_pos + 1..seq.frames.len()),
        PropagationDirection::Backward => Box::new((0..seed_pos).rev()),
    };
    for pos in positions {
        let target = seq.frames[pos].index;
        if seeds.binary_search(&target).is_ok() {
            hyp.end = SegmentEnd::NextSeed(target);
            break;
        }
        match step(seq, track, hyp.source_frame, target, matcher, geometry, cfg, direction) {
            Ok(label) => {
                if label.confidence >= cfg.source_update_threshold {
                    hyp.source_frame = target;
                }
                hyp.consecutive_misses = 0;
                hyp.pseudolabels.push(label);
            }
            Err(reason) => {
                debug!("track {track} {} miss at frame {target}: {reason:?}", direction.as_str());
                hyp.misses.push(Miss { frame: target, reason });
                hyp.consecutive_misses += 1;
                if hyp.consecutive_misses >= cfg.max_consecutive_misses {
                    hyp.end = SegmentEnd::Terminated(target);
                    break;
                }
            }
        }
    }
    hyp
}

#[allow(clippy::too_many_arguments)]
fn step(
    seq: &Sequence,
    track: TrackId,
    source: FrameIndex,
    target: FrameIndex,
    matcher: &dyn Matcher,
    geometry: &dyn GeometryProvider,
    cfg: &PipelineConfig,
    direction: PropagationDirection,
) -> std::result::Result<Pseudolabel, MissReason> {
    let provider_err = |e: Error| MissReason::ProviderError(e.to_string());
    let m = matcher
        .match_target(source, track, target)
        .map_err(provider_err)?
        .ok_or(MissReason::NotFound)?;
    if !(m.confidence >= cfg.discard_threshold) {
        return Err(MissReason::LowConfidence(m.confidence));
    }
    let g = geometry.estimate(target, track, &m.box2d).map_err(provider_err)?;
    let kp = lift_keypoints(&g.keypoints_px, &seq.intrinsics).map_err(provider_err)?;
    let yaw = yaw_from_keypoints(&kp, g.keypoints_px.direction).map_err(provider_err)?;
    let box3d = Box3D::new(kp.center, g.dims, yaw, g.keypoints_px.direction).map_err(provider_err)?;
    Ok(Pseudolabel {
        frame_index: target,
        track_id: track,
        box2d: m.box2d,
        mask: m.mask,
        box3d,
        confidence: m.confidence.clamp(0.0, 1.0),
        provenance: Provenance {
            direction,
            source_frame: source,
        },
    })
}

/// All pseudolabels of a set of hypotheses, sorted by (track, frame).
pub fn collect_pseudolabels(hyps: &[TrackHypothesis]) -> Vec<Pseudolabel> {
    let mut out: Vec<Pseudolabel> = hyps.iter().flat_map(|h| h.pseudolabels.iter().cloned()).collect();
    out.sort_by_key(|p| (p.track_id, p.frame_index));
    out
}

/// Per-frame confidence argmax of the two directions. Sparse labels always
/// win; exact ties go to `cfg.merge_tie_break`.
pub fn merge_bidirectional(
    fwd: &[TrackHypothesis],
    bwd: &[TrackHypothesis],
    cfg: &PipelineConfig,
) -> Result<Vec<Pseudolabel>> {
    let tracks = |hs: &[TrackHypothesis]| hs.iter().map(|h| h.track_id).collect::<BTreeSet<_>>();
    let (tf, tb) = (tracks(fwd), tracks(bwd));
    if tf != tb {
        let only: Vec<String> = tf.symmetric_difference(&tb).map(|t| t.to_string()).collect();
        return Err(Error::Integrity(format!(
            "forward and backward hypotheses cover different tracks: {}",
            only.join(", ")
        )));
    }
    let rank = |p: &Pseudolabel| {
        let preferred = p.provenance.direction == cfg.merge_tie_break;
        (p.is_seed(), p.confidence, preferred)
    };
    let mut best: BTreeMap<(TrackId, FrameIndex), &Pseudolabel> = BTreeMap::new();
    for p in fwd.iter().chain(bwd).flat_map(|h| &h.pseudolabels) {
        let key = (p.track_id, p.frame_index);
        match best.get(&key) {
            Some(cur) if rank(cur) >= rank(p) => {}
            _ => {
                best.insert(key, p);
            }
        }
    }
    Ok(best.into_values().cloned().collect())
}

/// Loss weights for one frame: `clamp(1 - max(0, objectness - coverage), w_min, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    pub frame_index: FrameIndex,
    pub weights: Heatmap,
}

pub fn emit_fncomp_weights(
    seq: &Sequence,
    pseudolabels: &[Pseudolabel],
    objectness: &dyn ObjectnessProvider,
    cfg: &PipelineConfig,
) -> Result<Vec<WeightMap>> {
    cfg.validate()?;
    let mut by_frame: BTreeMap<FrameIndex, Vec<&Pseudolabel>> = BTreeMap::new();
    for p in pseudolabels {
        by_frame.entry(p.frame_index).or_default().push(p);
    }
    let (w, h) = Heatmap::shape_for(&seq.intrinsics, cfg.heatmap_stride);
    seq.frames
        .par_iter()
        .map(|f| {
            let obj = objectness.objectness(f.index)?;
            let labels = by_frame.get(&f.index).map(Vec::as_slice).unwrap_or(&[]);
            let cov = splat_boxes(w, h, cfg.heatmap_stride, labels.iter().map(|p| &p.box2d));
            if !obj.same_shape(&cov) {
                return Err(Error::ShapeMismatch(format!(
                    "objectness grid {}x{} stride {} vs coverage {}x{} stride {}",
                    obj.width(),
                    obj.height(),
                    obj.stride(),
                    w,
                    h,
                    cfg.heatmap_stride
                )));
            }
            let values = obj
                .values()
                .iter()
                .zip(cov.values())
                .map(|(o, c)| (1.0 - (o - c).max(0.0)).clamp(cfg.fncomp_floor, 1.0))
                .collect();
            Ok(WeightMap {
                frame_index: f.index,
                weights: Heatmap::new(w, h, cfg.heatmap_stride, values)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackCoverage {
    pub track_id: TrackId,
    pub gt_frames: usize,
    pub covered_frames: usize,
    /// Covered ground-truth frames over all ground-truth frames.
    pub fraction: f64,
    pub mean_confidence: Option<f64>,
    /// (direction, seed frame, end) for every segment of the track.
    pub segments: Vec<(PropagationDirection, FrameIndex, SegmentEnd)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub sequence_id: String,
    pub tracks: Vec<TrackCoverage>,
}

impl CoverageReport {
    pub fn track(&self, id: TrackId) -> Option<&TrackCoverage> {
        self.tracks.iter().find(|t| t.track_id == id)
    }
}

pub fn covered_frames(pseudolabels: &[Pseudolabel]) -> BTreeMap<TrackId, BTreeSet<FrameIndex>> {
    let mut out: BTreeMap<TrackId, BTreeSet<FrameIndex>> = BTreeMap::new();
    for p in pseudolabels {
        out.entry(p.track_id).or_default().insert(p.frame_index);
    }
    out
}

/// Per ground-truth track coverage; `hypotheses` only feed segment ends.
pub fn coverage_report(
    seq: &Sequence,
    pseudolabels: &[Pseudolabel],
    hypotheses: &[TrackHypothesis],
) -> CoverageReport {
    let covered = covered_frames(pseudolabels);
    let tracks = seq
        .track_ids()
        .into_iter()
        .map(|tid| {
            let gt: BTreeSet<FrameIndex> = seq.track(tid).iter().map(|a| a.frame_index).collect();
            let hit = covered
                .get(&tid)
                .map_or(0, |c| c.intersection(&gt).count());
            let confs: Vec<f64> = pseudolabels
                .iter()
                .filter(|p| p.track_id == tid)
                .map(|p| p.confidence)
                .collect();
            let mut segments: Vec<_> = hypotheses
                .iter()
                .filter(|h| h.track_id == tid)
                .map(|h| (h.direction, h.seed_frame, h.end))
                .collect();
            segments.sort_by_key(|s| (s.0, s.1));
            TrackCoverage {
                track_id: tid,
                gt_frames: gt.len(),
                covered_frames: hit,
                fraction: if gt.is_empty() { 0.0 } else { hit as f64 / gt.len() as f64 },
                mean_confidence: (!confs.is_empty())
                    .then(|| confs.iter().sum::<f64>() / confs.len() as f64),
                segments,
            }
        })
        .collect();
    CoverageReport {
        sequence_id: seq.id.clone(),
        tracks,
    }
}
