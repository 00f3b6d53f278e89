//! Sparse-label and mining-pair documents.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::TrackId;
use crate::sampling::{MiningPair, SparseLabelSet, Strategy};

use super::sequence::check_token;
use super::text::{read_document, DocWriter};

pub const SPARSE_KIND: &str = "sparse-autolabel/sparse-labels";
pub const MINING_KIND: &str = "sparse-autolabel/mining-pairs";
pub const VERSION: &str = "v1";

pub fn serialize_sparse_labels(set: &SparseLabelSet) -> Result<String> {
    check_token("sequence id", &set.sequence_id)?;
    let mut doc = DocWriter::new(SPARSE_KIND, VERSION);
    let omitted: Vec<u32> = set.omitted.iter().map(|t| t.0).collect();
    doc.record("sparse")
        .field("sequence", &set.sequence_id)
        .field("max_per_track", set.max_per_track)
        .field("seed", set.seed)
        .float("reduction_ratio", set.reduction_ratio)
        .list("omitted", &omitted)
        .end();
    for (track, frames) in &set.tracks {
        doc.record("track").field("id", track.0).list("frames", frames).end();
    }
    Ok(doc.finish())
}

pub fn parse_sparse_labels(text: &str) -> Result<SparseLabelSet> {
    let records = read_document(text, SPARSE_KIND, VERSION)?;
    let mut it = records.iter();
    let head = it
        .next()
        .filter(|r| r.tag == "sparse")
        .ok_or_else(|| Error::parse(1, "sparse-label document must start with a `sparse` record"))?;
    let mut tracks = BTreeMap::new();
    for rec in it {
        if rec.tag != "track" {
            return Err(rec.error(format!("unexpected `{}` record in sparse-label document", rec.tag)));
        }
        let id = TrackId(rec.get("id")?);
        let frames: Vec<u32> = rec.list("frames")?;
        if frames.windows(2).any(|w| w[0] >= w[1]) {
            return Err(rec.error(format!("frames of track {id} must be strictly increasing")));
        }
        if tracks.insert(id, frames).is_some() {
            return Err(rec.error(format!("track {id} listed twice")));
        }
    }
    Ok(SparseLabelSet {
        sequence_id: head.str("sequence")?.to_string(),
        max_per_track: head.get("max_per_track")?,
        seed: head.get("seed")?,
        tracks,
        reduction_ratio: head.get("reduction_ratio")?,
        omitted: head.list::<u32>("omitted")?.into_iter().map(TrackId).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningPairSet {
    pub sequence_id: String,
    pub window: u32,
    pub pairs: Vec<MiningPair>,
}

pub fn serialize_mining_pairs(set: &MiningPairSet) -> Result<String> {
    check_token("sequence id", &set.sequence_id)?;
    let mut doc = DocWriter::new(MINING_KIND, VERSION);
    doc.record("mining")
        .field("sequence", &set.sequence_id)
        .field("window", set.window)
        .field("count", set.pairs.len())
        .end();
    for p in &set.pairs {
        doc.record("pair")
            .field("track", p.track_id.0)
            .field("strategy", p.strategy.as_str())
            .field("source", p.source_frame)
            .opt("waypoint", p.waypoint_frame)
            .field("target", p.target_frame)
            .end();
    }
    Ok(doc.finish())
}

pub fn parse_mining_pairs(text: &str) -> Result<MiningPairSet> {
    let records = read_document(text, MINING_KIND, VERSION)?;
    let mut it = records.iter();
    let head = it
        .next()
        .filter(|r| r.tag == "mining")
        .ok_or_else(|| Error::parse(1, "mining-pair document must start with a `mining` record"))?;
    let mut pairs = Vec::new();
    for rec in it {
        if rec.tag != "pair" {
            return Err(rec.error(format!("unexpected `{}` record in mining-pair document", rec.tag)));
        }
        let raw = rec.str("strategy")?;
        pairs.push(MiningPair {
            track_id: TrackId(rec.get("track")?),
            strategy: Strategy::parse(raw)
                .ok_or_else(|| rec.error(format!("unknown mining strategy {raw:?}")))?,
            source_frame: rec.get("source")?,
            waypoint_frame: rec.opt("waypoint")?,
            target_frame: rec.get("target")?,
        });
    }
    let count: usize = head.get("count")?;
    if count != pairs.len() {
        return Err(head.error(format!("header announces {count} pairs, document holds {}", pairs.len())));
    }
    Ok(MiningPairSet {
        sequence_id: head.str("sequence")?.to_string(),
        window: head.get("window")?,
        pairs,
    })
}
