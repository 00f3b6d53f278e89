//! Golden files: KITTI conversion, the default run configuration and the
//! examples in docs/formats.md.

use std::path::PathBuf;

use sparse_autolabel::formats::{
    kitti_rows_to_sequence, parse_coverage, parse_kitti_calib, parse_kitti_labels,
    parse_metric_report, parse_mining_pairs, parse_pseudolabels, parse_sequence,
    parse_sparse_labels, parse_weight_maps, serialize_coverage, serialize_metric_report,
    serialize_mining_pairs, serialize_pseudolabels, serialize_sequence, serialize_sparse_labels,
    serialize_weight_maps, KittiConversion,
};
use sparse_autolabel::model::TrackId;
use sparse_autolabel::runner::RunConfig;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap()
}

fn kitti_sequence() -> String {
    let rows = parse_kitti_labels(&read("kitti/0000_labels.txt")).unwrap();
    let calib = parse_kitti_calib(&read("kitti/0000_calib.txt"), 1242, 375).unwrap();
    assert!(calib.translation_ignored);
    let opts = KittiConversion {
        sequence_id: "kitti-0000".into(),
        categories: vec!["Car".into()],
        ..KittiConversion::default()
    };
    let (seq, stats) = kitti_rows_to_sequence(&rows, calib.intrinsics, &opts).unwrap();
    assert_eq!((stats.input_rows, stats.kept, stats.dropped_dont_care, stats.dropped_category), (10, 7, 2, 1));
    serialize_sequence(&seq).unwrap()
}

#[test]
fn kitti_conversion_matches_golden() {
    assert_eq!(kitti_sequence(), read("kitti/0000_sequence.golden.txt"));
}

#[test]
#[allow(clippy::approx_constant)]
fn kitti_centers_move_up_by_half_height() {
    let seq = parse_sequence(&read("kitti/0000_sequence.golden.txt")).unwrap();
    // (frame, track, bottom-center y, height) straight from the label file.
    let rows = [(0, 0, 1.858523, 2.0), (0, 2, 1.75, 1.5), (1, 0, 1.766774, 2.0), (4, 2, 1.75, 1.5)];
    for (frame, track, bottom_y, h) in rows {
        let ann = seq.annotation(frame, TrackId(track)).unwrap();
        assert!((ann.box3d.center().y - (bottom_y - h / 2.0)).abs() < 1e-12);
    }
    let wrapped = seq.annotation(2, TrackId(2)).unwrap().box3d.yaw();
    assert!((wrapped - (3.141593 - 2.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert!(seq.frames[3].annotations.is_empty());
}

#[test]
fn cli_parse_kitti_matches_golden() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let labels = data("kitti/0000_labels.txt");
    let calib = data("kitti/0000_calib.txt");
    let code = sparse_autolabel::cli::main_with(
        [
            "autolabel".as_ref(),
            "parse-kitti".as_ref(),
            "--labels".as_ref(),
            labels.as_os_str(),
            "--calib".as_ref(),
            calib.as_os_str(),
            "--sequence-id".as_ref(),
            "kitti-0000".as_ref(),
            "--categories".as_ref(),
            "Car".as_ref(),
        ],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    assert_eq!(String::from_utf8(out).unwrap(), read("kitti/0000_sequence.golden.txt"));
}

#[test]
fn default_config_matches_golden() {
    let golden = read("default_config.toml");
    assert_eq!(RunConfig::default().to_toml(), golden);
    assert_eq!(RunConfig::from_toml(&golden).unwrap(), RunConfig::default());
}

fn reserialize(doc: &str) -> String {
    let kind = doc.lines().next().unwrap().split_whitespace().next().unwrap();
    match kind.trim_start_matches("sparse-autolabel/") {
        "sequence" => serialize_sequence(&parse_sequence(doc).unwrap()).unwrap(),
        "sparse-labels" => serialize_sparse_labels(&parse_sparse_labels(doc).unwrap()).unwrap(),
        "mining-pairs" => serialize_mining_pairs(&parse_mining_pairs(doc).unwrap()).unwrap(),
        "pseudolabels" => {
            let set = parse_pseudolabels(doc).unwrap();
            serialize_pseudolabels(&set.sequence_id, &set.labels).unwrap()
        }
        "weight-maps" => {
            let set = parse_weight_maps(doc).unwrap();
            serialize_weight_maps(&set.sequence_id, &set.maps).unwrap()
        }
        "coverage" => serialize_coverage(&parse_coverage(doc).unwrap()).unwrap(),
        "metric-report" => serialize_metric_report(&parse_metric_report(doc).unwrap()).unwrap(),
        other => panic!("no reader for {other}"),
    }
}

#[test]
fn documented_examples_are_canonical() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/formats.md");
    let text = std::fs::read_to_string(path).unwrap();
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        match (&mut current, line) {
            (None, "```text") => current = Some(String::new()),
            (Some(_), "```") => blocks.push(current.take().unwrap()),
            (Some(buf), l) => {
                buf.push_str(l);
                buf.push('\n');
            }
            (None, _) => {}
        }
    }
    assert_eq!(blocks.len(), 7);
    for doc in &blocks {
        assert_eq!(&reserialize(doc), doc);
    }
}
