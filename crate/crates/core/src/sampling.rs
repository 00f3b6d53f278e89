//! Sparse label selection and training-pair mining.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{FrameIndex, Sequence, TrackId};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseLabelSet {
    pub sequence_id: String,
    pub max_per_track: usize,
    pub seed: u64,
    /// Selected frames per track, strictly increasing.
    pub tracks: BTreeMap<TrackId, Vec<FrameIndex>>,
    pub reduction_ratio: f64,
    /// Tracks left out because none of their annotations were eligible.
    pub omitted: Vec<TrackId>,
}

impl SparseLabelSet {
    pub fn labeled(&self, track: TrackId) -> &[FrameIndex] {
        self.tracks.get(&track).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn selected_count(&self) -> usize {
        self.tracks.values().map(Vec::len).sum()
    }
}

/// Index positions `round(i*(n-1)/(k-1))` with halves rounded down, so
/// endpoints are always included and gaps differ by at most one.
pub fn uniform_positions(n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n);
    match k {
        0 => Vec::new(),
        1 => vec![(n - 1) / 2],
        _ => {
            let q = k - 1;
            (0..k)
                .map(|i| {
                    let p = i * (n - 1);
                    (2 * p + q - 1) / (2 * q)
                })
                .collect()
        }
    }
}

/// Picks up to `max_per_track` eligible annotations per track at uniform
/// temporal spacing. Selection is fully determined by the sequence; `seed`
/// is carried for provenance.
pub fn sample_sparse(seq: &Sequence, max_per_track: usize, seed: u64) -> Result<SparseLabelSet> {
    if max_per_track == 0 {
        return Err(Error::invalid("max_per_track must be at least 1"));
    }
    let mut tracks = BTreeMap::new();
    let mut omitted = Vec::new();
    for track in seq.track_ids() {
        let eligible: Vec<FrameIndex> = seq
            .track(track)
            .into_iter()
            .filter(|a| a.is_sampling_eligible())
            .map(|a| a.frame_index)
            .collect();
        if eligible.is_empty() {
            log::debug!("track {track} has no eligible annotation; omitted");
            omitted.push(track);
            continue;
        }
        let picked = uniform_positions(eligible.len(), max_per_track)
            .into_iter()
            .map(|i| eligible[i])
            .collect();
        tracks.insert(track, picked);
    }
    let total = seq.annotation_count();
    let selected: usize = tracks.values().map(Vec::len).sum();
    let reduction_ratio = if total == 0 {
        0.0
    } else {
        1.0 - selected as f64 / total as f64
    };
    Ok(SparseLabelSet {
        sequence_id: seq.id.clone(),
        max_per_track,
        seed,
        tracks,
        reduction_ratio,
        omitted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    SelfMatch,
    Support,
    Cycle,
    StepSupport,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::SelfMatch => "self",
            Strategy::Support => "support",
            Strategy::Cycle => "cycle",
            Strategy::StepSupport => "step_support",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "self" => Some(Strategy::SelfMatch),
            "support" => Some(Strategy::Support),
            "cycle" => Some(Strategy::Cycle),
            "step_support" => Some(Strategy::StepSupport),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MiningPair {
    pub track_id: TrackId,
    pub strategy: Strategy,
    pub source_frame: FrameIndex,
    pub waypoint_frame: Option<FrameIndex>,
    pub target_frame: FrameIndex,
}

impl MiningPair {
    /// Checks the structural rule of the pair's strategy against the
    /// labeled frame set of its track.
    pub fn is_well_formed(&self, labeled: &[FrameIndex]) -> bool {
        let is_labeled = |f: FrameIndex| labeled.contains(&f);
        let (s, t) = (self.source_frame, self.target_frame);
        if !is_labeled(s) {
            return false;
        }
        match (self.strategy, self.waypoint_frame) {
            (Strategy::SelfMatch, None) => s == t,
            (Strategy::Support, None) => s != t && is_labeled(t),
            (Strategy::Cycle, Some(w)) => !is_labeled(w) && t == s,
            (Strategy::StepSupport, Some(w)) => !is_labeled(w) && is_labeled(t) && t != s,
            _ => false,
        }
    }
}

/// Enumerates self, support, cycle and step-support pairs. Waypoints are
/// unlabeled eligible frames within `window` frames of the source.
pub fn mine_pairs(seq: &Sequence, sparse: &SparseLabelSet, window: u32) -> Vec<MiningPair> {
    let mut pairs = Vec::new();
    for (&track, labeled) in &sparse.tracks {
        let labeled_set: BTreeSet<FrameIndex> = labeled.iter().copied().collect();
        let unlabeled: Vec<FrameIndex> = seq
            .track(track)
            .into_iter()
            .filter(|a| a.is_sampling_eligible() && !labeled_set.contains(&a.frame_index))
            .map(|a| a.frame_index)
            .collect();
        pairs.extend(mine_track_pairs(track, labeled, &unlabeled, window));
    }
    pairs.sort();
    pairs
}

fn mine_track_pairs(
    track: TrackId,
    labeled: &[FrameIndex],
    unlabeled: &[FrameIndex],
    window: u32,
) -> Vec<MiningPair> {
    let pair = |strategy, source, waypoint, target| MiningPair {
        track_id: track,
        strategy,
        source_frame: source,
        waypoint_frame: waypoint,
        target_frame: target,
    };
    let mut out = Vec::new();
    for &l in labeled {
        out.push(pair(Strategy::SelfMatch, l, None, l));
        for &other in labeled.iter().filter(|&&o| o != l) {
            out.push(pair(Strategy::Support, l, None, other));
        }
        for &u in unlabeled.iter().filter(|&&u| u.abs_diff(l) <= window) {
            out.push(pair(Strategy::Cycle, l, Some(u), l));
            for &other in labeled.iter().filter(|&&o| o != l) {
                out.push(pair(Strategy::StepSupport, l, Some(u), other));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Smallest achievable maximum gap when picking `k` of `0..n` with both
    /// endpoints included, by exhaustive enumeration.
    fn best_max_gap(n: usize, k: usize) -> usize {
        fn rec(n: usize, last: usize, left: usize, worst: usize, best: &mut usize) {
            if left == 1 {
                let w = worst.max(n - 1 - last);
                *best = (*best).min(w);
                return;
            }
            for next in last + 1..n - 1 {
                rec(n, next, left - 1, worst.max(next - last), best);
            }
        }
        let mut best = usize::MAX;
        if k == 2 {
            return n - 1;
        }
        rec(n, 0, k - 1, 0, &mut best);
        best
    }

    #[test]
    fn uniform_positions_examples() {
        assert_eq!(uniform_positions(6, 4), vec![0, 2, 3, 5]);
        assert_eq!(uniform_positions(3, 4), vec![0, 1, 2]);
        assert_eq!(uniform_positions(1, 4), vec![0]);
        assert_eq!(uniform_positions(0, 4), Vec::<usize>::new());
        assert_eq!(uniform_positions(5, 1), vec![2]);
    }

    #[test]
    fn uniform_positions_minimize_max_gap() {
        for n in 2..14 {
            for k in 2..=n.min(6) {
                let pos = uniform_positions(n, k);
                assert_eq!(pos.len(), k);
                assert!(pos.windows(2).all(|w| w[0] < w[1]));
                assert_eq!((pos[0], pos[k - 1]), (0, n - 1));
                let gap = pos.windows(2).map(|w| w[1] - w[0]).max().unwrap();
                assert_eq!(gap, best_max_gap(n, k), "n={n} k={k}");
            }
        }
    }

    fn brute_counts(l: &[u32], u: &[u32], w: u32) -> [usize; 4] {
        let mut counts = [0; 4];
        for &a in l {
            for &b in l {
                if a == b {
                    counts[0] += 1;
                } else {
                    counts[1] += 1;
                }
            }
            for &x in u {
                if x.abs_diff(a) <= w {
                    counts[2] += 1;
                    counts[3] += l.iter().filter(|&&b| b != a).count();
                }
            }
        }
        counts
    }

    fn counts_of(pairs: &[MiningPair]) -> [usize; 4] {
        let mut c = [0; 4];
        for p in pairs {
            c[p.strategy as usize] += 1;
        }
        c
    }

    #[test]
    fn mining_examples() {
        let t = TrackId(1);
        let p = mine_track_pairs(t, &[0, 10], &[], 2);
        assert_eq!(counts_of(&p), [2, 2, 0, 0]);
        let p = mine_track_pairs(t, &[0, 10], &[1, 2, 9, 11], 2);
        assert_eq!(counts_of(&p), [2, 2, 4, 4]);
        assert!(p.iter().all(|x| x.is_well_formed(&[0, 10])));
        let p = mine_track_pairs(t, &[5], &[3, 4, 6, 7], 8);
        let c = counts_of(&p);
        assert_eq!((c[0], c[1], c[3]), (1, 0, 0));
    }

    proptest! {
        #[test]
        fn mining_counts_match_enumeration(
            frames in proptest::collection::btree_set(0u32..40, 0..14),
            label_mask in any::<u32>(),
            window in 0u32..6,
        ) {
            let frames: Vec<u32> = frames.into_iter().collect();
            let mut l = Vec::new();
            let mut u = Vec::new();
            for (i, f) in frames.iter().enumerate() {
                if label_mask >> i & 1 == 1 { l.push(*f) } else { u.push(*f) }
            }
            let pairs = mine_track_pairs(TrackId(0), &l, &u, window);
            prop_assert_eq!(counts_of(&pairs), brute_counts(&l, &u, window));
            let n = l.len();
            prop_assert_eq!(counts_of(&pairs)[0], n);
            prop_assert_eq!(counts_of(&pairs)[1], n * n.saturating_sub(1));
            for p in &pairs {
                prop_assert!(p.is_well_formed(&l));
            }
        }
    }
}
