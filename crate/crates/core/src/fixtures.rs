//! Seeded random instances of every serializable type, for round-trip
//! testing and demos. Values are valid but otherwise arbitrary.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formats::MiningPairSet;
use crate::metrics::{Association, Counts, MetricConfig, MetricReport, RecallRow};
use crate::model::{
    Annotation, Box2D, Box3D, CameraIntrinsics, Dims, Direction, Frame, Heatmap, Mask2D, Pose,
    PropagationDirection, Provenance, Pseudolabel, Sequence, TrackId, Vec3,
};
use crate::pipeline::{CoverageReport, SegmentEnd, TrackCoverage, WeightMap};
use crate::sampling::{MiningPair, SparseLabelSet, Strategy};

fn any_f64(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    // Mix ordinary values with awkward ones to exercise float formatting.
    match rng.gen_range(0..8) {
        0 => lo + (hi - lo) * rng.gen::<f64>().powi(7),
        1 => ((rng.gen_range(lo..hi) * 8.0).round() / 8.0).clamp(lo, hi),
        _ => rng.gen_range(lo..hi),
    }
}

fn positive(rng: &mut impl Rng, hi: f64) -> f64 {
    any_f64(rng, 1e-3, hi).max(1e-3)
}

fn id_token(rng: &mut impl Rng) -> String {
    let alphabet = b"abcdefghijklmnopqrstuvwxyz0123456789-_.";
    let n = rng.gen_range(1..12);
    (0..n).map(|_| *alphabet.choose(rng).unwrap() as char).collect()
}

pub fn random_mask(rng: &mut impl Rng) -> Mask2D {
    let (w, h) = (rng.gen_range(0..9), rng.gen_range(0..9));
    let density: f64 = rng.gen();
    let bits: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(density)).collect();
    Mask2D::from_bitmap((rng.gen_range(0..1000), rng.gen_range(0..300)), w, h, &bits)
        .expect("bitmap matches its size")
}

fn random_boxes(rng: &mut impl Rng) -> (Box2D, Box3D, Option<Mask2D>) {
    let b2 = Box2D::new(
        any_f64(rng, -50.0, 1300.0),
        any_f64(rng, -50.0, 400.0),
        positive(rng, 600.0),
        positive(rng, 300.0),
    )
    .expect("positive size");
    let b3 = Box3D::new(
        Vec3::new(any_f64(rng, -40.0, 40.0), any_f64(rng, -3.0, 3.0), any_f64(rng, 0.5, 90.0)),
        Dims::new(positive(rng, 12.0), positive(rng, 3.0), positive(rng, 4.0)).expect("positive dims"),
        any_f64(rng, -10.0, 10.0),
        if rng.gen() { Direction::Towards } else { Direction::Away },
    )
    .expect("finite box");
    let mask = rng.gen_bool(0.4).then(|| random_mask(rng));
    (b2, b3, mask)
}

pub fn random_sequence(rng: &mut impl Rng) -> Sequence {
    let (width, height) = (rng.gen_range(1..2000u32), rng.gen_range(1..800u32));
    let intrinsics = CameraIntrinsics::new(
        positive(rng, 2000.0),
        positive(rng, 2000.0),
        any_f64(rng, 0.0, width as f64),
        any_f64(rng, 0.0, height as f64),
        width,
        height,
    )
    .expect("valid intrinsics");
    let n_frames = rng.gen_range(0..6);
    let mut index = rng.gen_range(0..5);
    let mut frames = Vec::new();
    for _ in 0..n_frames {
        let mut pose = [0.0; 12];
        pose.iter_mut().for_each(|v| *v = any_f64(rng, -100.0, 100.0));
        let mut tracks: Vec<u32> = (0..12).collect();
        tracks.shuffle(rng);
        tracks.truncate(rng.gen_range(0..4));
        let annotations = tracks
            .into_iter()
            .map(|t| {
                let (box2d, box3d, mask) = random_boxes(rng);
                Annotation {
                    frame_index: index,
                    track_id: TrackId(t),
                    box2d,
                    mask,
                    box3d,
                    occlusion_level: rng.gen_range(0..4),
                    visibility: rng.gen_bool(0.5).then(|| rng.gen_range(1..5)),
                }
            })
            .collect();
        frames.push(Frame {
            index,
            pose: Pose::from_array(&pose),
            annotations,
        });
        index += rng.gen_range(1..4);
    }
    Sequence {
        id: id_token(rng),
        intrinsics,
        frame_rate: positive(rng, 60.0),
        frames,
    }
}

pub fn random_pseudolabels(rng: &mut impl Rng) -> Vec<Pseudolabel> {
    (0..rng.gen_range(0..8))
        .map(|_| {
            let (box2d, box3d, mask) = random_boxes(rng);
            Pseudolabel {
                frame_index: rng.gen_range(0..500),
                track_id: TrackId(rng.gen_range(0..50)),
                box2d,
                mask,
                box3d,
                confidence: if rng.gen_bool(0.2) { 1.0 } else { rng.gen() },
                provenance: Provenance {
                    direction: if rng.gen() { PropagationDirection::Forward } else { PropagationDirection::Backward },
                    source_frame: rng.gen_range(0..500),
                },
            }
        })
        .collect()
}

pub fn random_sparse_labels(rng: &mut impl Rng) -> SparseLabelSet {
    let mut tracks = BTreeMap::new();
    let mut omitted = Vec::new();
    for t in 0..rng.gen_range(0..6u32) {
        if rng.gen_bool(0.2) {
            omitted.push(TrackId(t));
            continue;
        }
        let mut frames: Vec<u32> = (0..rng.gen_range(1..6)).map(|_| rng.gen_range(0..300)).collect();
        frames.sort_unstable();
        frames.dedup();
        tracks.insert(TrackId(t), frames);
    }
    SparseLabelSet {
        sequence_id: id_token(rng),
        max_per_track: rng.gen_range(1..20),
        seed: rng.gen(),
        tracks,
        reduction_ratio: rng.gen(),
        omitted,
    }
}

pub fn random_mining_pairs(rng: &mut impl Rng) -> MiningPairSet {
    let strategies = [Strategy::SelfMatch, Strategy::Support, Strategy::Cycle, Strategy::StepSupport];
    MiningPairSet {
        sequence_id: id_token(rng),
        window: rng.gen_range(1..32),
        pairs: (0..rng.gen_range(0..10))
            .map(|_| MiningPair {
                track_id: TrackId(rng.gen_range(0..20)),
                strategy: *strategies.choose(rng).unwrap(),
                source_frame: rng.gen_range(0..300),
                waypoint_frame: rng.gen_bool(0.5).then(|| rng.gen_range(0..300)),
                target_frame: rng.gen_range(0..300),
            })
            .collect(),
    }
}

fn random_counts(rng: &mut impl Rng) -> Counts {
    Counts {
        tp: rng.gen_range(0..1000),
        fp: rng.gen_range(0..1000),
        fn_: rng.gen_range(0..1000),
        idsw: rng.gen_range(0..100),
        gt_total: rng.gen_range(0..2000),
    }
}

pub fn random_metric_report(rng: &mut impl Rng) -> MetricReport {
    let grid: Vec<f64> = (0..rng.gen_range(1..21)).map(|_| positive(rng, 1.0)).collect();
    let rows = grid
        .iter()
        .map(|&r| RecallRow {
            recall: r,
            threshold: rng.gen_bool(0.7).then(|| rng.gen()),
            achieved_recall: rng.gen(),
            motar: rng.gen(),
            motp: any_f64(rng, 0.0, 2.0),
            counts: random_counts(rng),
        })
        .collect();
    MetricReport {
        sequence_id: id_token(rng),
        mota: any_f64(rng, -3.0, 1.0),
        motp: any_f64(rng, 0.0, 2.0),
        idf1: rng.gen(),
        amota: rng.gen(),
        amotp: any_f64(rng, 0.0, 2.0),
        counts: random_counts(rng),
        predictions: rng.gen_range(0..5000),
        recall_rows: rows,
        config: MetricConfig {
            dist_threshold: any_f64(rng, 0.0, 5.0),
            association: if rng.gen() { Association::Center3d } else { Association::Iou2d },
            min_iou: rng.gen(),
            recall_grid: grid,
        },
    }
}

pub fn random_coverage(rng: &mut impl Rng) -> CoverageReport {
    let tracks = (0..rng.gen_range(0..6u32))
        .map(|t| {
            let gt = rng.gen_range(0..200);
            let covered = rng.gen_range(0..=gt);
            TrackCoverage {
                track_id: TrackId(t),
                gt_frames: gt,
                covered_frames: covered,
                fraction: if gt == 0 { 0.0 } else { covered as f64 / gt as f64 },
                mean_confidence: rng.gen_bool(0.8).then(|| rng.gen()),
                segments: (0..rng.gen_range(0..4))
                    .map(|_| {
                        let dir = if rng.gen() { PropagationDirection::Forward } else { PropagationDirection::Backward };
                        let end = match rng.gen_range(0..3) {
                            0 => SegmentEnd::NextSeed(rng.gen_range(0..200)),
                            1 => SegmentEnd::SequenceEnd,
                            _ => SegmentEnd::Terminated(rng.gen_range(0..200)),
                        };
                        (dir, rng.gen_range(0..200), end)
                    })
                    .collect(),
            }
        })
        .collect();
    CoverageReport {
        sequence_id: id_token(rng),
        tracks,
    }
}

pub fn random_weight_maps(rng: &mut impl Rng) -> (String, Vec<WeightMap>) {
    let (w, h, s) = (rng.gen_range(1..12), rng.gen_range(1..8), rng.gen_range(1..9));
    let maps = (0..rng.gen_range(0..4u32))
        .map(|i| {
            let values = (0..w * h)
                .map(|_| if rng.gen_bool(0.6) { 1.0 } else { rng.gen() })
                .collect();
            WeightMap {
                frame_index: i * 2,
                weights: Heatmap::new(w, h, s, values).expect("values in [0, 1]"),
            }
        })
        .collect();
    (id_token(rng), maps)
}
