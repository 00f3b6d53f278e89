//! Tracking evaluation against dense ground truth: Hungarian assignment,
//! CLEAR-MOT, IDF1 and recall-averaged AMOTA/AMOTP.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{iou_2d, Annotation, Box2D, FrameIndex, Pseudolabel, Sequence, TrackId, Vec3};

/// Minimum-cost assignment over a rectangular matrix. `f64::INFINITY`
/// marks a forbidden pair. Among assignments using the most allowed pairs,
/// returns one of minimum total cost as `row -> Some(col)`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return vec![None; n];
    }
    assert!(cost.iter().all(|r| r.len() == m), "cost matrix rows differ in length");
    let k = n.max(m);
    let max_abs = cost
        .iter()
        .flatten()
        .filter(|c| c.is_finite())
        .fold(0.0f64, |a, c| a.max(c.abs()));
    // Worse than any mix of allowed pairs, so forbidden pairs are used last.
    let big = (2.0 * max_abs + 1.0) * (k as f64 + 1.0);
    let at = |i: usize, j: usize| -> f64 {
        if i < n && j < m {
            let c = cost[i][j];
            if c.is_finite() { c } else { big }
        } else {
            0.0
        }
    };

    // Potentials formulation over a k x k matrix, 1-based with a sentinel column 0.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; n];
    for j in 1..=k {
        let i = p[j];
        if i >= 1 && i <= n && j <= m && cost[i - 1][j - 1].is_finite() {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

/// Total cost of an assignment, summed in row order.
pub fn assignment_cost(cost: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| cost[i][j]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Association {
    /// Euclidean distance between 3D box centers, gated by `dist_threshold`.
    #[serde(rename = "center_3d")]
    Center3d,
    /// `1 - IoU` of 2D boxes, gated by `min_iou`.
    #[serde(rename = "iou_2d")]
    Iou2d,
}

impl Association {
    pub fn as_str(self) -> &'static str {
        match self {
            Association::Center3d => "center_3d",
            Association::Iou2d => "iou_2d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "center_3d" => Some(Self::Center3d),
            "iou_2d" => Some(Self::Iou2d),
            _ => None,
        }
    }
}

pub fn default_recall_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub dist_threshold: f64,
    pub association: Association,
    pub min_iou: f64,
    pub recall_grid: Vec<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            dist_threshold: 2.0,
            association: Association::Center3d,
            min_iou: 0.5,
            recall_grid: default_recall_grid(),
        }
    }
}

impl MetricConfig {
    pub fn with_threshold(dist_threshold: f64) -> Self {
        Self {
            dist_threshold,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dist_threshold >= 0.0 && self.dist_threshold.is_finite()) {
            return Err(Error::Config(format!(
                "metrics.dist_threshold must be finite and >= 0, got {}",
                self.dist_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.min_iou) {
            return Err(Error::Config(format!("metrics.min_iou must be in [0, 1], got {}", self.min_iou)));
        }
        if self.recall_grid.is_empty() || !self.recall_grid.iter().all(|r| *r > 0.0 && *r <= 1.0) {
            return Err(Error::Config("metrics.recall_grid needs values in (0, 1]".into()));
        }
        Ok(())
    }

    /// Association cost if the pair is allowed.
    fn cost(&self, g: &Obj, p: &Obj) -> Option<f64> {
        match self.association {
            Association::Center3d => {
                let d = (g.center - p.center).norm();
                (d <= self.dist_threshold).then_some(d)
            }
            Association::Iou2d => {
                let iou = iou_2d(&g.box2d, &p.box2d);
                (iou >= self.min_iou && iou > 0.0).then_some(1.0 - iou)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub idsw: usize,
    pub gt_total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearMot {
    pub mota: f64,
    /// Mean association cost of matched pairs; 0 when nothing matched.
    pub motp: f64,
    pub counts: Counts,
}

#[derive(Debug, Clone, Copy)]
struct Obj {
    track: TrackId,
    center: Vec3,
    box2d: Box2D,
}

impl Obj {
    fn gt(a: &Annotation) -> Self {
        Self {
            track: a.track_id,
            center: a.box3d.center(),
            box2d: a.box2d,
        }
    }

    fn pred(p: &Pseudolabel) -> Self {
        Self {
            track: p.track_id,
            center: p.box3d.center(),
            box2d: p.box2d,
        }
    }
}

type FrameTable = BTreeMap<FrameIndex, (Vec<Obj>, Vec<Obj>)>;

fn frame_table(gt: &Sequence, pred: &[&Pseudolabel]) -> Result<FrameTable> {
    let mut table: FrameTable = BTreeMap::new();
    for f in &gt.frames {
        table.entry(f.index).or_default().0 = f.annotations.iter().map(Obj::gt).collect();
    }
    let mut seen = BTreeSet::new();
    for p in pred {
        if !seen.insert((p.track_id, p.frame_index)) {
            return Err(Error::Integrity(format!(
                "duplicate prediction for track {} in frame {}",
                p.track_id, p.frame_index
            )));
        }
        table.entry(p.frame_index).or_default().1.push(Obj::pred(p));
    }
    for (_, preds) in table.values_mut() {
        preds.sort_by_key(|o| o.track);
    }
    Ok(table)
}

fn clear_mot_table(table: &FrameTable, cfg: &MetricConfig) -> Result<ClearMot> {
    let mut counts = Counts::default();
    let mut cost_sum = 0.0;
    let mut previous: HashMap<TrackId, TrackId> = HashMap::new();
    let mut last_match: HashMap<TrackId, TrackId> = HashMap::new();
    for (gts, preds) in table.values() {
        counts.gt_total += gts.len();
        let pred_pos: HashMap<TrackId, usize> =
            preds.iter().enumerate().map(|(j, p)| (p.track, j)).collect();
        let mut g_done = vec![false; gts.len()];
        let mut p_done = vec![false; preds.len()];
        let mut matches: Vec<(usize, usize, f64)> = Vec::new();

        for (i, g) in gts.iter().enumerate() {
            if let Some(&j) = previous.get(&g.track).and_then(|t| pred_pos.get(t)) {
                if !p_done[j] {
                    if let Some(c) = cfg.cost(g, &preds[j]) {
                        g_done[i] = true;
                        p_done[j] = true;
                        matches.push((i, j, c));
                    }
                }
            }
        }
        let rows: Vec<usize> = (0..gts.len()).filter(|&i| !g_done[i]).collect();
        let cols: Vec<usize> = (0..preds.len()).filter(|&j| !p_done[j]).collect();
        if !rows.is_empty() && !cols.is_empty() {
            let cost: Vec<Vec<f64>> = rows
                .iter()
                .map(|&i| {
                    cols.iter()
                        .map(|&j| cfg.cost(&gts[i], &preds[j]).unwrap_or(f64::INFINITY))
                        .collect()
                })
                .collect();
            for (r, c) in hungarian(&cost).into_iter().enumerate() {
                if let Some(c) = c {
                    matches.push((rows[r], cols[c], cost[r][c]));
                }
            }
        }

        previous.clear();
        for &(i, j, c) in &matches {
            let (g, p) = (gts[i].track, preds[j].track);
            if last_match.get(&g).is_some_and(|&q| q != p) {
                counts.idsw += 1;
            }
            last_match.insert(g, p);
            previous.insert(g, p);
            cost_sum += c;
        }
        counts.tp += matches.len();
        counts.fp += preds.len() - matches.len();
        counts.fn_ += gts.len() - matches.len();
    }
    if counts.gt_total == 0 {
        return Err(Error::invalid("ground truth has no annotations"));
    }
    let errors = (counts.fp + counts.fn_ + counts.idsw) as f64;
    Ok(ClearMot {
        mota: 1.0 - errors / counts.gt_total as f64,
        motp: if counts.tp == 0 { 0.0 } else { cost_sum / counts.tp as f64 },
        counts,
    })
}

/// CLEAR-MOT with match carry-over between consecutive frames.
pub fn clear_mot(gt: &Sequence, pred: &[Pseudolabel], cfg: &MetricConfig) -> Result<ClearMot> {
    cfg.validate()?;
    let refs: Vec<&Pseudolabel> = pred.iter().collect();
    clear_mot_table(&frame_table(gt, &refs)?, cfg)
}

/// Identity F1 under the one-to-one trajectory matching that maximizes
/// identity true positives.
pub fn idf1(gt: &Sequence, pred: &[Pseudolabel], cfg: &MetricConfig) -> Result<f64> {
    cfg.validate()?;
    let refs: Vec<&Pseudolabel> = pred.iter().collect();
    let table = frame_table(gt, &refs)?;
    let gt_ids: Vec<TrackId> = gt.track_ids();
    let pred_ids: Vec<TrackId> = pred.iter().map(|p| p.track_id).collect::<BTreeSet<_>>().into_iter().collect();
    let gi: HashMap<TrackId, usize> = gt_ids.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let pj: HashMap<TrackId, usize> = pred_ids.iter().enumerate().map(|(j, t)| (*t, j)).collect();
    let mut hits = vec![vec![0usize; pred_ids.len()]; gt_ids.len()];
    let (mut n_gt, mut n_pred) = (0usize, 0usize);
    for (gts, preds) in table.values() {
        n_gt += gts.len();
        n_pred += preds.len();
        for g in gts {
            for p in preds {
                if cfg.cost(g, p).is_some() {
                    hits[gi[&g.track]][pj[&p.track]] += 1;
                }
            }
        }
    }
    if n_gt + n_pred == 0 {
        return Ok(1.0);
    }
    let cost: Vec<Vec<f64>> = hits
        .iter()
        .map(|row| row.iter().map(|&h| -(h as f64)).collect())
        .collect();
    let idtp: usize = hungarian(&cost)
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| hits[i][j]))
        .sum();
    Ok(2.0 * idtp as f64 / (n_gt + n_pred) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallRow {
    pub recall: f64,
    /// Confidence threshold used, if the recall is reachable.
    pub threshold: Option<f64>,
    pub achieved_recall: f64,
    pub motar: f64,
    pub motp: f64,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amota {
    pub amota: f64,
    pub amotp: f64,
    pub rows: Vec<RecallRow>,
}

/// Sweeps confidence thresholds. For each grid recall `r` the highest
/// threshold reaching recall `>= r` is used, and
/// `MOTAR = 1 - (IDSW + FP + FN - (1 - R) P) / (R P)` with the achieved
/// recall `R`, clamped to `[0, 1]`. Unreachable points score MOTAR 0 and a
/// MOTP equal to the association gate.
pub fn amota_amotp(gt: &Sequence, pred: &[Pseudolabel], cfg: &MetricConfig) -> Result<Amota> {
    cfg.validate()?;
    for p in pred {
        if !(0.0..=1.0).contains(&p.confidence) {
            return Err(Error::invalid(format!(
                "prediction ({}, frame {}) has confidence {} outside [0, 1]",
                p.track_id, p.frame_index, p.confidence
            )));
        }
    }
    let mut thresholds: Vec<f64> = pred.iter().map(|p| p.confidence).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let sweep: Vec<(f64, ClearMot)> = thresholds
        .par_iter()
        .map(|&t| {
            let kept: Vec<&Pseudolabel> = pred.iter().filter(|p| p.confidence >= t).collect();
            Ok((t, clear_mot_table(&frame_table(gt, &kept)?, cfg)?))
        })
        .collect::<Result<_>>()?;
    let gt_total = gt.annotation_count();
    if gt_total == 0 {
        return Err(Error::invalid("ground truth has no annotations"));
    }
    let p_total = gt_total as f64;
    let unreachable_motp = match cfg.association {
        Association::Center3d => cfg.dist_threshold,
        Association::Iou2d => 1.0 - cfg.min_iou,
    };
    let rows: Vec<RecallRow> = cfg
        .recall_grid
        .iter()
        .map(|&r| {
            let hit = sweep
                .iter()
                .find(|(_, m)| m.counts.tp as f64 / p_total >= r - 1e-12);
            match hit {
                Some(&(t, m)) => {
                    let c = m.counts;
                    let big_r = c.tp as f64 / p_total;
                    let errors = (c.idsw + c.fp + c.fn_) as f64;
                    let motar = 1.0 - (errors - (1.0 - big_r) * p_total) / (big_r * p_total);
                    RecallRow {
                        recall: r,
                        threshold: Some(t),
                        achieved_recall: big_r,
                        motar: motar.clamp(0.0, 1.0),
                        motp: m.motp,
                        counts: c,
                    }
                }
                None => RecallRow {
                    recall: r,
                    threshold: None,
                    achieved_recall: 0.0,
                    motar: 0.0,
                    motp: unreachable_motp,
                    counts: Counts {
                        gt_total,
                        ..Counts::default()
                    },
                },
            }
        })
        .collect();
    let n = rows.len() as f64;
    Ok(Amota {
        amota: rows.iter().map(|r| r.motar).sum::<f64>() / n,
        amotp: rows.iter().map(|r| r.motp).sum::<f64>() / n,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub sequence_id: String,
    pub mota: f64,
    pub motp: f64,
    pub idf1: f64,
    pub amota: f64,
    pub amotp: f64,
    pub counts: Counts,
    pub predictions: usize,
    pub recall_rows: Vec<RecallRow>,
    pub config: MetricConfig,
}

pub fn evaluate(gt: &Sequence, pred: &[Pseudolabel], cfg: &MetricConfig) -> Result<MetricReport> {
    let mot = clear_mot(gt, pred, cfg)?;
    let id = idf1(gt, pred, cfg)?;
    let am = amota_amotp(gt, pred, cfg)?;
    Ok(MetricReport {
        sequence_id: gt.id.clone(),
        mota: mot.mota,
        motp: mot.motp,
        idf1: id,
        amota: am.amota,
        amotp: am.amotp,
        counts: mot.counts,
        predictions: pred.len(),
        recall_rows: am.rows,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Box3D, CameraIntrinsics, Dims, Direction, Frame, Pose, PropagationDirection, Provenance,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Minimum cost over all assignments of size `min(n, m)`.
    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn go(cost: &[Vec<f64>], i: usize, used: &mut Vec<bool>, left: usize, acc: f64, best: &mut f64) {
            if left == 0 {
                *best = best.min(acc);
                return;
            }
            if cost.len() - i < left {
                return;
            }
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    go(cost, i + 1, used, left - 1, acc + cost[i][j], best);
                    used[j] = false;
                }
            }
            go(cost, i + 1, used, left, acc, best);
        }
        let mut best = f64::INFINITY;
        let m = cost.first().map_or(0, Vec::len);
        go(cost, 0, &mut vec![false; m], cost.len().min(m), 0.0, &mut best);
        best
    }

    #[test]
    fn hungarian_examples() {
        let a = hungarian(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(a, vec![Some(0), Some(1)]);
        let z = hungarian(&vec![vec![0.0; 3]; 3]);
        let cols: BTreeSet<_> = z.iter().flatten().collect();
        assert_eq!(cols.len(), 3);
        assert!(hungarian(&[]).is_empty());
        let inf = f64::INFINITY;
        assert_eq!(hungarian(&[vec![inf, 5.0], vec![inf, 1.0]]), vec![None, Some(1)]);
        assert_eq!(hungarian(&[vec![1.0, inf], vec![0.0, 100.0]]), vec![Some(0), Some(1)]);
        assert_eq!(hungarian(&[vec![3.0, 1.0, 2.0]]), vec![Some(1)]);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..400 {
            let n = rng.gen_range(1..=7);
            let m = rng.gen_range(1..=7);
            let integer = trial % 2 == 0;
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..m)
                        .map(|_| if integer { rng.gen_range(0..10) as f64 } else { rng.gen_range(-5.0..5.0) })
                        .collect()
                })
                .collect();
            let a = hungarian(&cost);
            assert_eq!(a.iter().flatten().count(), n.min(m));
            assert_eq!(assignment_cost(&cost, &a), brute_force(&cost), "{cost:?}");
        }
    }

    proptest! {
        #[test]
        fn hungarian_prop(cost in (1usize..=6, 1usize..=6).prop_flat_map(|(n, m)|
            prop::collection::vec(prop::collection::vec(0u8..20, m), n))) {
            let cost: Vec<Vec<f64>> = cost.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
            let a = hungarian(&cost);
            prop_assert_eq!(assignment_cost(&cost, &a), brute_force(&cost));
        }
    }

    fn seq_with(tracks: &[(u32, &[(FrameIndex, f64)])], frames: FrameIndex) -> Sequence {
        let mut s = Sequence {
            id: "fixture".into(),
            intrinsics: CameraIntrinsics::kitti_default(),
            frame_rate: 10.0,
            frames: (0..frames)
                .map(|i| Frame {
                    index: i,
                    pose: Pose::identity(),
                    annotations: vec![],
                })
                .collect(),
        };
        for &(t, dets) in tracks {
            for &(f, x) in dets {
                s.frames[f as usize].annotations.push(ann(t, f, x));
            }
        }
        s
    }

    fn ann(track: u32, frame: FrameIndex, x: f64) -> Annotation {
        Annotation {
            frame_index: frame,
            track_id: TrackId(track),
            box2d: Box2D::new(600.0 + 10.0 * x, 180.0, 50.0, 40.0).unwrap(),
            mask: None,
            box3d: Box3D::new(
                Vec3::new(x, 1.0, 30.0),
                Dims::new(4.0, 1.8, 1.5).unwrap(),
                0.0,
                Direction::Towards,
            )
            .unwrap(),
            occlusion_level: 0,
            visibility: None,
        }
    }

    fn pred(track: u32, frame: FrameIndex, x: f64, confidence: f64) -> Pseudolabel {
        Pseudolabel {
            confidence,
            provenance: Provenance {
                direction: PropagationDirection::Forward,
                source_frame: frame,
            },
            ..Pseudolabel::from_annotation(&ann(track, frame, x), PropagationDirection::Forward)
        }
    }

    fn as_preds(seq: &Sequence) -> Vec<Pseudolabel> {
        seq.frames
            .iter()
            .flat_map(|f| &f.annotations)
            .map(|a| Pseudolabel::from_annotation(a, PropagationDirection::Forward))
            .collect()
    }

    #[test]
    fn perfect_predictions() {
        let gt = seq_with(&[(0, &[(0, 0.0), (1, 0.5), (2, 1.0)]), (1, &[(0, 10.0), (1, 10.0)])], 3);
        let cfg = MetricConfig::default();
        let r = evaluate(&gt, &as_preds(&gt), &cfg).unwrap();
        assert_eq!((r.mota, r.motp, r.idf1, r.amota), (1.0, 0.0, 1.0, 1.0));
        assert_eq!(r.counts, Counts { tp: 5, fp: 0, fn_: 0, idsw: 0, gt_total: 5 });
    }

    #[test]
    fn mota_fixture() {
        // Two GT tracks over five frames; x positions are far apart.
        let gt = seq_with(
            &[
                (0, &[(0, 0.0), (1, 0.0), (2, 0.0), (3, 0.0), (4, 0.0)]),
                (1, &[(0, 20.0), (1, 20.0), (2, 20.0), (3, 20.0), (4, 20.0)]),
            ],
            5,
        );
        let preds = vec![
            pred(10, 0, 0.0, 1.0),
            pred(10, 1, 0.0, 1.0),
            pred(11, 2, 0.0, 1.0), // identity switch
            pred(11, 3, 0.0, 1.0),
            pred(11, 4, 0.0, 1.0),
            pred(20, 0, 20.0, 1.0),
            pred(20, 1, 20.0, 1.0),
            pred(20, 2, 20.0, 1.0),
            // frames 3 and 4 of track 1 missed
            pred(30, 2, 50.0, 1.0), // false positive
        ];
        let m = clear_mot(&gt, &preds, &MetricConfig::default()).unwrap();
        assert_eq!(m.counts, Counts { tp: 8, fp: 1, fn_: 2, idsw: 1, gt_total: 10 });
        assert!((m.mota - 0.6).abs() < 1e-12);
    }

    #[test]
    fn uniform_offset_motp() {
        let gt = seq_with(&[(0, &[(0, 0.0), (1, 1.0), (2, 2.0)]), (1, &[(0, 9.0), (2, 9.0)])], 3);
        let preds: Vec<Pseudolabel> = gt
            .frames
            .iter()
            .flat_map(|f| &f.annotations)
            .map(|a| pred(a.track_id.0 + 5, a.frame_index, a.box3d.center().x + 1.0, 1.0))
            .collect();
        let m = clear_mot(&gt, &preds, &MetricConfig::default()).unwrap();
        assert_eq!(m.mota, 1.0);
        assert!((m.motp - 1.0).abs() < 1e-12);
        let strict = clear_mot(&gt, &preds, &MetricConfig::with_threshold(0.5)).unwrap();
        assert_eq!(strict.counts.tp, 0);
        assert_eq!(strict.motp, 0.0);
    }

    #[test]
    fn carry_over_keeps_identity() {
        // Two predictions both within the gate; the previous match is kept
        // even though the other one is closer.
        let gt = seq_with(&[(0, &[(0, 0.0), (1, 0.0)])], 2);
        let preds = vec![pred(1, 0, 0.0, 1.0), pred(1, 1, 1.5, 1.0), pred(2, 1, 0.1, 1.0)];
        let m = clear_mot(&gt, &preds, &MetricConfig::default()).unwrap();
        assert_eq!(m.counts.idsw, 0);
        assert_eq!(m.counts.fp, 1);
    }

    #[test]
    fn duplicate_prediction_is_rejected() {
        let gt = seq_with(&[(0, &[(0, 0.0)])], 1);
        let preds = vec![pred(1, 0, 0.0, 1.0), pred(1, 0, 0.2, 1.0)];
        assert!(matches!(clear_mot(&gt, &preds, &MetricConfig::default()), Err(Error::Integrity(_))));
    }

    #[test]
    fn idf1_half_coverage() {
        let dets: Vec<(FrameIndex, f64)> = (0..10).map(|f| (f, 0.0)).collect();
        let gt = seq_with(&[(0, &dets)], 10);
        let preds: Vec<Pseudolabel> = (0..5).map(|f| pred(3, f, 0.0, 1.0)).collect();
        let v = idf1(&gt, &preds, &MetricConfig::default()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_swap_hurts_idf1_more() {
        let a: Vec<(FrameIndex, f64)> = (0..10).map(|f| (f, 0.0)).collect();
        let b: Vec<(FrameIndex, f64)> = (0..10).map(|f| (f, 20.0)).collect();
        let gt = seq_with(&[(0, &a), (1, &b)], 10);
        let mut preds = Vec::new();
        for f in 0..10 {
            let (p, q) = if f < 5 { (7, 8) } else { (8, 7) };
            preds.push(pred(p, f, 0.0, 1.0));
            preds.push(pred(q, f, 20.0, 1.0));
        }
        let cfg = MetricConfig::default();
        let mota = clear_mot(&gt, &preds, &cfg).unwrap().mota;
        let id = idf1(&gt, &preds, &cfg).unwrap();
        assert!((mota - 0.9).abs() < 1e-12);
        assert!((id - 0.5).abs() < 1e-12);
        assert!(id < mota);
    }

    #[test]
    fn amota_half_recall() {
        let dets: Vec<(FrameIndex, f64)> = (0..10).map(|f| (f, 0.0)).collect();
        let gt = seq_with(&[(0, &dets)], 10);
        let preds: Vec<Pseudolabel> = (0..5).map(|f| pred(3, f, 0.0, 1.0)).collect();
        let a = amota_amotp(&gt, &preds, &MetricConfig::default()).unwrap();
        let ones = a.rows.iter().filter(|r| r.recall <= 0.5 && r.motar == 1.0).count();
        assert_eq!(ones, 10);
        assert!(a.rows.iter().filter(|r| r.recall > 0.5).all(|r| r.threshold.is_none() && r.motar == 0.0));
        assert!((a.amota - ones as f64 / 20.0).abs() < 1e-12);
        assert!((a.amotp - 0.5 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn high_confidence_false_positive_lowers_motar() {
        let dets: Vec<(FrameIndex, f64)> = (0..10).map(|f| (f, 0.0)).collect();
        let gt = seq_with(&[(0, &dets)], 10);
        let clean: Vec<Pseudolabel> = (0..10).map(|f| pred(3, f, 0.0, 0.9 - f as f64 * 0.01)).collect();
        let mut noisy = clean.clone();
        noisy.push(pred(4, 0, 40.0, 1.0));
        let cfg = MetricConfig::default();
        let a = amota_amotp(&gt, &clean, &cfg).unwrap();
        let b = amota_amotp(&gt, &noisy, &cfg).unwrap();
        assert_eq!(a.amota, 1.0);
        assert!(b.rows[0].motar < a.rows[0].motar);
        assert!(b.amota < a.amota);
    }

    #[test]
    fn single_point_amota_equals_mota() {
        let gt = seq_with(&[(0, &[(0, 0.0), (1, 0.0)]), (1, &[(1, 30.0)])], 2);
        let cfg = MetricConfig {
            recall_grid: vec![1.0],
            ..MetricConfig::default()
        };
        let a = amota_amotp(&gt, &as_preds(&gt), &cfg).unwrap();
        assert_eq!(a.amota, clear_mot(&gt, &as_preds(&gt), &cfg).unwrap().mota);
        assert_eq!(a.amota, 1.0);
    }

    #[test]
    fn iou_association() {
        let gt = seq_with(&[(0, &[(0, 0.0), (1, 0.0)])], 2);
        let cfg = MetricConfig {
            association: Association::Iou2d,
            ..MetricConfig::default()
        };
        let m = clear_mot(&gt, &as_preds(&gt), &cfg).unwrap();
        assert_eq!((m.mota, m.motp), (1.0, 0.0));
        // a 30 px shift on a 50 px wide box drops IoU to 0.25
        let shifted = vec![pred(0, 0, 3.0, 1.0), pred(0, 1, 3.0, 1.0)];
        assert_eq!(clear_mot(&gt, &shifted, &cfg).unwrap().counts.tp, 0);
    }

    proptest! {
        #[test]
        fn relabeling_and_threshold(
            xs in prop::collection::vec((0u32..4, 0u32..6, -3.0f64..3.0, any::<bool>()), 1..30),
            perm_seed in any::<u64>(),
        ) {
            let tracks: Vec<(u32, Vec<(FrameIndex, f64)>)> = (0..4)
                .map(|t| (t, (0..6).map(|f| (f, 10.0 * t as f64)).collect()))
                .collect();
            let refs: Vec<(u32, &[(FrameIndex, f64)])> = tracks.iter().map(|(t, d)| (*t, d.as_slice())).collect();
            let gt = seq_with(&refs, 6);
            let mut seen = BTreeSet::new();
            let preds: Vec<Pseudolabel> = xs
                .iter()
                .filter(|(t, f, _, _)| seen.insert((*t, *f)))
                .map(|&(t, f, dx, own)| pred(t, f, 10.0 * if own { t } else { (t + 1) % 4 } as f64 + dx, 1.0))
                .collect();
            let cfg = MetricConfig::default();
            let base = clear_mot(&gt, &preds, &cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
            let mut ids: Vec<u32> = (0..4).collect();
            for i in (1..4).rev() {
                ids.swap(i, rng.gen_range(0..=i));
            }
            let relabeled: Vec<Pseudolabel> = preds
                .iter()
                .map(|p| Pseudolabel { track_id: TrackId(100 + ids[p.track_id.0 as usize]), ..p.clone() })
                .collect();
            prop_assert_eq!(clear_mot(&gt, &relabeled, &cfg).unwrap().mota, base.mota);
            let v = idf1(&gt, &preds, &cfg).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
