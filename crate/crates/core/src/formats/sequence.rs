//! Sequence and pseudolabel documents.

use crate::error::{Error, Result};
use crate::model::{
    Annotation, Box2D, Box3D, CameraIntrinsics, Dims, Direction, Frame, Mask2D, Pose,
    PropagationDirection, Provenance, Pseudolabel, Sequence, TrackId, Vec3,
};

use super::text::{fmt_f64_list, read_document, DocWriter, Record, RecordWriter, ABSENT};

pub const SEQUENCE_KIND: &str = "sparse-autolabel/sequence";
pub const PSEUDOLABELS_KIND: &str = "sparse-autolabel/pseudolabels";
pub const VERSION: &str = "v1";

fn box_fields<'a>(w: RecordWriter<'a>, b2: &Box2D, b3: &Box3D, mask: Option<&Mask2D>) -> RecordWriter<'a> {
    let c = b3.center();
    let d = b3.dims();
    w.floats("box2d", &[b2.cx, b2.cy, b2.w, b2.h])
        .floats("center", &[c.x, c.y, c.z])
        .floats("dims", &[d.length, d.width, d.height])
        .float("yaw", b3.yaw())
        .field("dir", b3.direction().as_str())
        .field("mask", mask.map_or_else(|| ABSENT.to_string(), encode_mask))
}

/// Identifiers are written as bare tokens.
pub(crate) fn check_token(what: &str, value: &str) -> Result<()> {
    if value.is_empty() || value.chars().any(char::is_whitespace) {
        return Err(Error::invalid(format!(
            "{what} {value:?} must be non-empty without whitespace"
        )));
    }
    Ok(())
}

fn encode_mask(m: &Mask2D) -> String {
    let (ox, oy) = m.origin();
    let rle: Vec<String> = m.rle().iter().map(u32::to_string).collect();
    format!("{ox},{oy},{},{}/{}", m.width(), m.height(), rle.join(","))
}

fn decode_mask(rec: &Record, raw: &str) -> Result<Mask2D> {
    let (head, runs) = raw
        .split_once('/')
        .ok_or_else(|| rec.error(format!("mask {raw:?} lacks `/` between frame and runs")))?;
    let nums = |s: &str| -> Result<Vec<u32>> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',')
            .map(|t| t.parse().map_err(|_| rec.error(format!("mask value {t:?} is not an integer"))))
            .collect()
    };
    let head = nums(head)?;
    let [ox, oy, w, h] = head[..] else {
        return Err(rec.error("mask needs origin x,y and width,height before `/`"));
    };
    Mask2D::from_rle((ox, oy), w, h, nums(runs)?).map_err(|e| rec.error(e.to_string()))
}

struct BoxFields {
    box2d: Box2D,
    box3d: Box3D,
    mask: Option<Mask2D>,
}

fn read_box_fields(rec: &Record) -> Result<BoxFields> {
    let wrap = |e: Error| rec.error(e.to_string());
    let [cx, cy, w, h] = rec.array::<4>("box2d")?;
    let [x, y, z] = rec.array::<3>("center")?;
    let [l, wd, ht] = rec.array::<3>("dims")?;
    let dir_raw = rec.str("dir")?;
    let dir = Direction::parse(dir_raw)
        .ok_or_else(|| rec.error(format!("direction {dir_raw:?} is not towards/away")))?;
    let box3d = Box3D::new(
        Vec3::new(x, y, z),
        Dims::new(l, wd, ht).map_err(wrap)?,
        rec.get("yaw")?,
        dir,
    )
    .map_err(wrap)?;
    let mask = match rec.opt_str("mask")? {
        None => None,
        Some(raw) => Some(decode_mask(rec, raw)?),
    };
    Ok(BoxFields {
        box2d: Box2D::new(cx, cy, w, h).map_err(wrap)?,
        box3d,
        mask,
    })
}

pub fn serialize_sequence(seq: &Sequence) -> Result<String> {
    seq.validate()?;
    let k = &seq.intrinsics;
    let mut doc = DocWriter::new(SEQUENCE_KIND, VERSION);
    doc.record("sequence")
        .field("id", &seq.id)
        .float("frame_rate", seq.frame_rate)
        .floats("intrinsics", &[k.fx(), k.fy(), k.cx(), k.cy()])
        .field("width", k.width())
        .field("height", k.height())
        .field("frames", seq.frames.len())
        .end();
    for f in &seq.frames {
        doc.record("frame")
            .field("index", f.index)
            .field("pose", fmt_f64_list(&f.pose.to_array()))
            .end();
        for a in &f.annotations {
            let w = doc.record("ann").field("track", a.track_id.0);
            box_fields(w, &a.box2d, &a.box3d, a.mask.as_ref())
                .field("occ", a.occlusion_level)
                .opt("vis", a.visibility)
                .end();
        }
    }
    Ok(doc.finish())
}

pub fn parse_sequence(text: &str) -> Result<Sequence> {
    let records = read_document(text, SEQUENCE_KIND, VERSION)?;
    let mut it = records.iter();
    let head = it
        .next()
        .filter(|r| r.tag == "sequence")
        .ok_or_else(|| Error::parse(1, "sequence document must start with a `sequence` record"))?;
    let [fx, fy, cx, cy] = head.array::<4>("intrinsics")?;
    let intrinsics = CameraIntrinsics::new(fx, fy, cx, cy, head.get("width")?, head.get("height")?)
        .map_err(|e| head.error(e.to_string()))?;
    let expected_frames: usize = head.get("frames")?;
    let mut frames: Vec<Frame> = Vec::with_capacity(expected_frames);
    for rec in it {
        match rec.tag {
            "frame" => frames.push(Frame {
                index: rec.get("index")?,
                pose: Pose::from_array(&rec.array::<12>("pose")?),
                annotations: Vec::new(),
            }),
            "ann" => {
                let frame = frames
                    .last_mut()
                    .ok_or_else(|| rec.error("`ann` record before any `frame` record"))?;
                let b = read_box_fields(rec)?;
                frame.annotations.push(Annotation {
                    frame_index: frame.index,
                    track_id: TrackId(rec.get("track")?),
                    box2d: b.box2d,
                    mask: b.mask,
                    box3d: b.box3d,
                    occlusion_level: rec.get("occ")?,
                    visibility: rec.opt("vis")?,
                });
            }
            other => return Err(rec.error(format!("unexpected `{other}` record in sequence document"))),
        }
    }
    if frames.len() != expected_frames {
        return Err(head.error(format!(
            "header announces {expected_frames} frames, document holds {}",
            frames.len()
        )));
    }
    let seq = Sequence {
        id: head.str("id")?.to_string(),
        intrinsics,
        frame_rate: head.get("frame_rate")?,
        frames,
    };
    seq.validate()?;
    Ok(seq)
}

pub fn serialize_pseudolabels(sequence_id: &str, labels: &[Pseudolabel]) -> Result<String> {
    check_token("sequence id", sequence_id)?;
    let mut doc = DocWriter::new(PSEUDOLABELS_KIND, VERSION);
    doc.record("pseudolabels")
        .field("sequence", sequence_id)
        .field("count", labels.len())
        .end();
    for p in labels {
        p.validate()?;
        let w = doc
            .record("label")
            .field("track", p.track_id.0)
            .field("frame", p.frame_index);
        box_fields(w, &p.box2d, &p.box3d, p.mask.as_ref())
            .float("confidence", p.confidence)
            .field("direction", p.provenance.direction.as_str())
            .field("source", p.provenance.source_frame)
            .end();
    }
    Ok(doc.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudolabelSet {
    pub sequence_id: String,
    pub labels: Vec<Pseudolabel>,
}

pub fn parse_pseudolabels(text: &str) -> Result<PseudolabelSet> {
    let records = read_document(text, PSEUDOLABELS_KIND, VERSION)?;
    let mut it = records.iter();
    let head = it
        .next()
        .filter(|r| r.tag == "pseudolabels")
        .ok_or_else(|| Error::parse(1, "pseudolabel document must start with a `pseudolabels` record"))?;
    let mut labels = Vec::new();
    for rec in it {
        if rec.tag != "label" {
            return Err(rec.error(format!("unexpected `{}` record in pseudolabel document", rec.tag)));
        }
        let b = read_box_fields(rec)?;
        let dir_raw = rec.str("direction")?;
        let label = Pseudolabel {
            frame_index: rec.get("frame")?,
            track_id: TrackId(rec.get("track")?),
            box2d: b.box2d,
            mask: b.mask,
            box3d: b.box3d,
            confidence: rec.get("confidence")?,
            provenance: Provenance {
                direction: PropagationDirection::parse(dir_raw).ok_or_else(|| {
                    rec.error(format!("propagation direction {dir_raw:?} is not forward/backward"))
                })?,
                source_frame: rec.get("source")?,
            },
        };
        label.validate().map_err(|e| rec.error(e.to_string()))?;
        labels.push(label);
    }
    let count: usize = head.get("count")?;
    if count != labels.len() {
        return Err(head.error(format!("header announces {count} labels, document holds {}", labels.len())));
    }
    Ok(PseudolabelSet {
        sequence_id: head.str("sequence")?.to_string(),
        labels,
    })
}
