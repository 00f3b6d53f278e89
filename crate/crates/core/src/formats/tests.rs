use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::fixtures::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #[test]
    fn sequence_round_trip(seed in any::<u64>()) {
        let seq = random_sequence(&mut rng(seed));
        let text = serialize_sequence(&seq).unwrap();
        prop_assert_eq!(parse_sequence(&text).unwrap(), seq);
    }

    #[test]
    fn pseudolabel_round_trip(seed in any::<u64>()) {
        let labels = random_pseudolabels(&mut rng(seed));
        let text = serialize_pseudolabels("seq-1", &labels).unwrap();
        let back = parse_pseudolabels(&text).unwrap();
        prop_assert_eq!(back.sequence_id, "seq-1");
        prop_assert_eq!(back.labels, labels);
    }

    #[test]
    fn sparse_and_mining_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sparse = random_sparse_labels(&mut r);
        prop_assert_eq!(parse_sparse_labels(&serialize_sparse_labels(&sparse).unwrap()).unwrap(), sparse);
        let pairs = random_mining_pairs(&mut r);
        prop_assert_eq!(parse_mining_pairs(&serialize_mining_pairs(&pairs).unwrap()).unwrap(), pairs);
    }

    #[test]
    fn report_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let report = random_metric_report(&mut r);
        prop_assert_eq!(parse_metric_report(&serialize_metric_report(&report).unwrap()).unwrap(), report);
        let cov = random_coverage(&mut r);
        prop_assert_eq!(parse_coverage(&serialize_coverage(&cov).unwrap()).unwrap(), cov);
        let (id, maps) = random_weight_maps(&mut r);
        let back = parse_weight_maps(&serialize_weight_maps(&id, &maps).unwrap()).unwrap();
        prop_assert_eq!(back.sequence_id, id);
        prop_assert_eq!(back.maps, maps);
    }
}

#[test]
fn serialization_is_canonical() {
    let seq = random_sequence(&mut rng(7));
    let once = serialize_sequence(&seq).unwrap();
    let twice = serialize_sequence(&parse_sequence(&once).unwrap()).unwrap();
    assert_eq!(once, twice);
}

#[test]
fn version_mismatch_names_supported_version() {
    let text = serialize_sparse_labels(&random_sparse_labels(&mut rng(1))).unwrap();
    let bumped = text.replacen(" v1", " v2", 1);
    match parse_sparse_labels(&bumped) {
        Err(e @ Error::Version { .. }) => {
            let msg = e.to_string();
            assert!(msg.contains("v2") && msg.contains("v1"), "{msg}");
        }
        other => panic!("expected version error, got {other:?}"),
    }
    assert!(matches!(parse_sequence(&text), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn malformed_records_report_lines() {
    let seq = random_sequence(&mut rng(3));
    let text = serialize_sequence(&seq).unwrap();
    let broken = format!("{text}bogus a=1\n");
    match parse_sequence(&broken) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, text.lines().count() + 1),
        other => panic!("expected parse error, got {other:?}"),
    }
    let label = serialize_pseudolabels("s", &random_pseudolabels(&mut rng(9))).unwrap();
    let bad_conf = label.replace("confidence=", "confidence=x");
    if bad_conf != label {
        assert!(matches!(parse_pseudolabels(&bad_conf), Err(Error::Parse { .. })));
    }
}

#[test]
fn empty_collections() {
    let text = serialize_pseudolabels("s", &[]).unwrap();
    assert_eq!(text, "sparse-autolabel/pseudolabels v1\npseudolabels sequence=s count=0\n");
    assert!(parse_pseudolabels(&text).unwrap().labels.is_empty());
    let wm = serialize_weight_maps("s", &[]).unwrap();
    assert!(parse_weight_maps(&wm).unwrap().maps.is_empty());
}
