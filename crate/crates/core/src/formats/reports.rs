//! Metric-report, coverage and weight-map documents, plus CSV tables.

use crate::error::{Error, Result};
use crate::metrics::{Association, Counts, MetricConfig, MetricReport, RecallRow};
use crate::model::{FrameIndex, Heatmap, PropagationDirection, TrackId};
use crate::pipeline::{CoverageReport, SegmentEnd, TrackCoverage, WeightMap};

use super::sequence::check_token;
use super::text::{fmt_f64, read_document, DocWriter, Record, RecordWriter};

pub const REPORT_KIND: &str = "sparse-autolabel/metric-report";
pub const COVERAGE_KIND: &str = "sparse-autolabel/coverage";
pub const WEIGHTS_KIND: &str = "sparse-autolabel/weight-maps";
pub const VERSION: &str = "v1";

fn count_fields<'a>(w: RecordWriter<'a>, c: &Counts) -> RecordWriter<'a> {
    w.field("tp", c.tp)
        .field("fp", c.fp)
        .field("fn", c.fn_)
        .field("idsw", c.idsw)
        .field("gt_total", c.gt_total)
}

fn read_counts(rec: &Record) -> Result<Counts> {
    Ok(Counts {
        tp: rec.get("tp")?,
        fp: rec.get("fp")?,
        fn_: rec.get("fn")?,
        idsw: rec.get("idsw")?,
        gt_total: rec.get("gt_total")?,
    })
}

pub fn serialize_metric_report(r: &MetricReport) -> Result<String> {
    check_token("sequence id", &r.sequence_id)?;
    let mut doc = DocWriter::new(REPORT_KIND, VERSION);
    doc.record("report")
        .field("sequence", &r.sequence_id)
        .float("mota", r.mota)
        .float("motp", r.motp)
        .float("idf1", r.idf1)
        .float("amota", r.amota)
        .float("amotp", r.amotp)
        .field("predictions", r.predictions)
        .end();
    count_fields(doc.record("counts"), &r.counts).end();
    doc.record("config")
        .float("dist_threshold", r.config.dist_threshold)
        .field("association", r.config.association.as_str())
        .float("min_iou", r.config.min_iou)
        .floats("recall_grid", &r.config.recall_grid)
        .end();
    for row in &r.recall_rows {
        let w = doc
            .record("recall")
            .float("r", row.recall)
            .opt("threshold", row.threshold.map(fmt_f64))
            .float("achieved", row.achieved_recall)
            .float("motar", row.motar)
            .float("motp", row.motp);
        count_fields(w, &row.counts).end();
    }
    Ok(doc.finish())
}

pub fn parse_metric_report(text: &str) -> Result<MetricReport> {
    let records = read_document(text, REPORT_KIND, VERSION)?;
    let find = |tag: &str| {
        records
            .iter()
            .find(|r| r.tag == tag)
            .ok_or_else(|| Error::parse(1, format!("metric report lacks a `{tag}` record")))
    };
    let head = find("report")?;
    let cfg = find("config")?;
    let assoc = cfg.str("association")?;
    let config = MetricConfig {
        dist_threshold: cfg.get("dist_threshold")?,
        association: Association::parse(assoc)
            .ok_or_else(|| cfg.error(format!("unknown association {assoc:?}")))?,
        min_iou: cfg.get("min_iou")?,
        recall_grid: cfg.list("recall_grid")?,
    };
    let mut recall_rows = Vec::new();
    for rec in &records {
        match rec.tag {
            "report" | "counts" | "config" => {}
            "recall" => recall_rows.push(RecallRow {
                recall: rec.get("r")?,
                threshold: rec.opt("threshold")?,
                achieved_recall: rec.get("achieved")?,
                motar: rec.get("motar")?,
                motp: rec.get("motp")?,
                counts: read_counts(rec)?,
            }),
            other => return Err(rec.error(format!("unexpected `{other}` record in metric report"))),
        }
    }
    Ok(MetricReport {
        sequence_id: head.str("sequence")?.to_string(),
        mota: head.get("mota")?,
        motp: head.get("motp")?,
        idf1: head.get("idf1")?,
        amota: head.get("amota")?,
        amotp: head.get("amotp")?,
        counts: read_counts(find("counts")?)?,
        predictions: head.get("predictions")?,
        recall_rows,
        config,
    })
}

/// Per-recall AMOTA table as CSV.
pub fn recall_table_csv(r: &MetricReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["recall", "threshold", "achieved_recall", "motar", "motp", "tp", "fp", "fn", "idsw"])
        .map_err(io)?;
    for row in &r.recall_rows {
        let c = row.counts;
        w.write_record([
            row.recall.to_string(),
            row.threshold.map_or(String::new(), |t| t.to_string()),
            row.achieved_recall.to_string(),
            row.motar.to_string(),
            row.motp.to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            c.idsw.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn encode_end(e: &SegmentEnd) -> String {
    match e {
        SegmentEnd::NextSeed(f) => format!("next_seed:{f}"),
        SegmentEnd::SequenceEnd => "sequence_end".into(),
        SegmentEnd::Terminated(f) => format!("terminated:{f}"),
    }
}

fn decode_segment(rec: &Record, raw: &str) -> Result<(PropagationDirection, FrameIndex, SegmentEnd)> {
    let bad = || rec.error(format!("malformed segment {raw:?}"));
    let mut parts = raw.split(':');
    let dir = parts.next().and_then(PropagationDirection::parse).ok_or_else(bad)?;
    let seed = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let kind = parts.next().ok_or_else(bad)?;
    let frame = parts.next().map(|s| s.parse::<FrameIndex>().map_err(|_| bad())).transpose()?;
    let end = match (kind, frame) {
        ("next_seed", Some(f)) => SegmentEnd::NextSeed(f),
        ("sequence_end", None) => SegmentEnd::SequenceEnd,
        ("terminated", Some(f)) => SegmentEnd::Terminated(f),
        _ => return Err(bad()),
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((dir, seed, end))
}

pub fn serialize_coverage(report: &CoverageReport) -> Result<String> {
    check_token("sequence id", &report.sequence_id)?;
    let mut doc = DocWriter::new(COVERAGE_KIND, VERSION);
    doc.record("coverage")
        .field("sequence", &report.sequence_id)
        .field("tracks", report.tracks.len())
        .end();
    for t in &report.tracks {
        let segments: Vec<String> = t
            .segments
            .iter()
            .map(|(d, s, e)| format!("{}:{s}:{}", d.as_str(), encode_end(e)))
            .collect();
        doc.record("track")
            .field("id", t.track_id.0)
            .field("gt_frames", t.gt_frames)
            .field("covered", t.covered_frames)
            .float("fraction", t.fraction)
            .opt("mean_confidence", t.mean_confidence.map(fmt_f64))
            .list("segments", &segments)
            .end();
    }
    Ok(doc.finish())
}

pub fn parse_coverage(text: &str) -> Result<CoverageReport> {
    let records = read_document(text, COVERAGE_KIND, VERSION)?;
    let mut it = records.iter();
    let head = it
        .next()
        .filter(|r| r.tag == "coverage")
        .ok_or_else(|| Error::parse(1, "coverage document must start with a `coverage` record"))?;
    let mut tracks = Vec::new();
    for rec in it {
        if rec.tag != "track" {
            return Err(rec.error(format!("unexpected `{}` record in coverage document", rec.tag)));
        }
        let segments = match rec.opt_str("segments")? {
            None => Vec::new(),
            Some(raw) => raw.split(',').map(|s| decode_segment(rec, s)).collect::<Result<_>>()?,
        };
        tracks.push(TrackCoverage {
            track_id: TrackId(rec.get("id")?),
            gt_frames: rec.get("gt_frames")?,
            covered_frames: rec.get("covered")?,
            fraction: rec.get("fraction")?,
            mean_confidence: rec.opt("mean_confidence")?,
            segments,
        });
    }
    let count: usize = head.get("tracks")?;
    if count != tracks.len() {
        return Err(head.error(format!("header announces {count} tracks, document holds {}", tracks.len())));
    }
    Ok(CoverageReport {
        sequence_id: head.str("sequence")?.to_string(),
        tracks,
    })
}

/// Weight maps are stored sparsely: only cells whose weight differs from 1.
pub fn serialize_weight_maps(sequence_id: &str, maps: &[WeightMap]) -> Result<String> {
    check_token("sequence id", sequence_id)?;
    let (w, h, s) = maps
        .first()
        .map_or((0, 0, 1), |m| (m.weights.width(), m.weights.height(), m.weights.stride()));
    let mut doc = DocWriter::new(WEIGHTS_KIND, VERSION);
    doc.record("weights")
        .field("sequence", sequence_id)
        .field("width", w)
        .field("height", h)
        .field("stride", s)
        .field("frames", maps.len())
        .end();
    for m in maps {
        let g = &m.weights;
        if (g.width(), g.height(), g.stride()) != (w, h, s) {
            return Err(Error::ShapeMismatch(format!(
                "weight map of frame {} is {}x{} stride {}, expected {w}x{h} stride {s}",
                m.frame_index,
                g.width(),
                g.height(),
                g.stride()
            )));
        }
        let cells: Vec<String> = g
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 1.0)
            .map(|(i, v)| format!("{}:{}:{}", i % w, i / w, fmt_f64(*v)))
            .collect();
        doc.record("frame")
            .field("index", m.frame_index)
            .list("cells", &cells)
            .end();
    }
    Ok(doc.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMapSet {
    pub sequence_id: String,
    pub maps: Vec<WeightMap>,
}

pub fn parse_weight_maps(text: &str) -> Result<WeightMapSet> {
    let records = read_document(text, WEIGHTS_KIND, VERSION)?;
    let mut it = records.iter();
    let head = it
        .next()
        .filter(|r| r.tag == "weights")
        .ok_or_else(|| Error::parse(1, "weight-map document must start with a `weights` record"))?;
    let (w, h, s): (usize, usize, u32) = (head.get("width")?, head.get("height")?, head.get("stride")?);
    let mut maps = Vec::new();
    for rec in it {
        if rec.tag != "frame" {
            return Err(rec.error(format!("unexpected `{}` record in weight-map document", rec.tag)));
        }
        let mut values = vec![1.0; w * h];
        if let Some(raw) = rec.opt_str("cells")? {
            for cell in raw.split(',') {
                let bad = || rec.error(format!("malformed cell {cell:?}"));
                let mut parts = cell.split(':');
                let x: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
                let y: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
                let v: f64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
                if parts.next().is_some() || x >= w || y >= h {
                    return Err(bad());
                }
                values[y * w + x] = v;
            }
        }
        maps.push(WeightMap {
            frame_index: rec.get("index")?,
            weights: Heatmap::new(w, h, s, values).map_err(|e| rec.error(e.to_string()))?,
        });
    }
    let count: usize = head.get("frames")?;
    if count != maps.len() {
        return Err(head.error(format!("header announces {count} frames, document holds {}", maps.len())));
    }
    Ok(WeightMapSet {
        sequence_id: head.str("sequence")?.to_string(),
        maps,
    })
}
