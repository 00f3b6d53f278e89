//! KITTI tracking label and calibration files.
//!
//! Label rows have 17 whitespace-separated tokens (18 with a detection
//! score): `frame track_id type truncated occluded alpha left top right
//! bottom h w l x y z rotation_y [score]`. Locations are box bottom centers
//! in the rectified camera frame.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::direction_of;
use crate::model::{
    Annotation, Box2D, Box3D, CameraIntrinsics, Dims, Direction, Frame, FrameIndex, Pose,
    Sequence, TrackId, Vec3,
};

pub const DONT_CARE: &str = "DontCare";

#[derive(Debug, Clone, PartialEq)]
pub struct KittiLabelRow {
    pub frame: u32,
    /// `-1` marks don't-care regions.
    pub track_id: i64,
    pub category: String,
    pub truncated: f64,
    pub occluded: i64,
    pub alpha: f64,
    /// `(left, top, right, bottom)` in pixels.
    pub bbox: [f64; 4],
    /// `(h, w, l)` in meters.
    pub dims: [f64; 3],
    pub location: [f64; 3],
    pub rotation_y: f64,
    pub score: Option<f64>,
}

const FIELD_NAMES: [&str; 18] = [
    "frame",
    "track_id",
    "type",
    "truncated",
    "occluded",
    "alpha",
    "bbox_left",
    "bbox_top",
    "bbox_right",
    "bbox_bottom",
    "height",
    "width",
    "length",
    "x",
    "y",
    "z",
    "rotation_y",
    "score",
];

pub fn parse_kitti_labels(text: &str) -> Result<Vec<KittiLabelRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 17 && tokens.len() != 18 {
            return Err(Error::parse(
                line_no,
                format!("expected 17 or 18 tokens, found {}", tokens.len()),
            ));
        }
        let num = |idx: usize| -> Result<f64> {
            tokens[idx]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::parse(
                        line_no,
                        format!("field `{}` is not a number: {:?}", FIELD_NAMES[idx], tokens[idx]),
                    )
                })
        };
        let int = |idx: usize| -> Result<i64> {
            tokens[idx].parse::<i64>().map_err(|_| {
                Error::parse(
                    line_no,
                    format!("field `{}` is not an integer: {:?}", FIELD_NAMES[idx], tokens[idx]),
                )
            })
        };
        let frame = u32::try_from(int(0)?)
            .map_err(|_| Error::parse(line_no, "field `frame` must be non-negative"))?;
        let row = KittiLabelRow {
            frame,
            track_id: int(1)?,
            category: tokens[2].to_string(),
            truncated: num(3)?,
            occluded: int(4)?,
            alpha: num(5)?,
            bbox: [num(6)?, num(7)?, num(8)?, num(9)?],
            dims: [num(10)?, num(11)?, num(12)?],
            location: [num(13)?, num(14)?, num(15)?],
            rotation_y: num(16)?,
            score: if tokens.len() == 18 { Some(num(17)?) } else { None },
        };
        if row.category != DONT_CARE {
            let [l, t, r, b] = row.bbox;
            if r <= l || b <= t {
                return Err(Error::parse(
                    line_no,
                    format!("degenerate bbox ({l}, {t}, {r}, {b})"),
                ));
            }
            if !(0..=3).contains(&row.occluded) {
                return Err(Error::parse(
                    line_no,
                    format!("field `occluded` must be 0..=3, found {}", row.occluded),
                ));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Canonical label-file text: shortest round-trip float formatting, one row
/// per line.
pub fn serialize_kitti_labels(rows: &[KittiLabelRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = write!(
            out,
            "{} {} {} {} {} {}",
            r.frame, r.track_id, r.category, r.truncated, r.occluded, r.alpha
        );
        for v in r.bbox.iter().chain(&r.dims).chain(&r.location) {
            let _ = write!(out, " {v}");
        }
        let _ = write!(out, " {}", r.rotation_y);
        if let Some(s) = r.score {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KittiCalib {
    pub intrinsics: CameraIntrinsics,
    /// Set when the `P2` fourth column was non-zero and got dropped.
    pub translation_ignored: bool,
}

/// Reads the left color camera projection `P2` from a calibration file.
/// Calibration files carry no image size, so the caller supplies it.
pub fn parse_kitti_calib(text: &str, width: u32, height: u32) -> Result<KittiCalib> {
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        let Some(rest) = line.strip_prefix("P2:") else {
            continue;
        };
        let values: Vec<f64> = rest
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(i + 1, "P2 contains a non-numeric value"))?;
        if values.len() != 12 {
            return Err(Error::parse(
                i + 1,
                format!("P2 needs 12 values, found {}", values.len()),
            ));
        }
        let intrinsics =
            CameraIntrinsics::new(values[0], values[5], values[2], values[6], width, height)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let translation_ignored = [values[3], values[7], values[11]].iter().any(|v| *v != 0.0);
        return Ok(KittiCalib {
            intrinsics,
            translation_ignored,
        });
    }
    Err(Error::parse(0, "calibration file has no `P2:` line"))
}

#[derive(Debug, Clone)]
pub struct KittiConversion {
    pub sequence_id: String,
    pub frame_rate: f64,
    /// Categories kept as vehicles.
    pub categories: Vec<String>,
}

impl Default for KittiConversion {
    fn default() -> Self {
        Self {
            sequence_id: "kitti".into(),
            frame_rate: 10.0,
            categories: vec!["Car".into(), "Van".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConversionStats {
    pub input_rows: usize,
    pub kept: usize,
    pub dropped_dont_care: usize,
    pub dropped_category: usize,
}

/// Builds a sequence from label rows. Boxes are moved from KITTI's bottom
/// center to the geometric center; frames run from 0 to the largest frame
/// index seen, with identity ego poses.
pub fn kitti_rows_to_sequence(
    rows: &[KittiLabelRow],
    intrinsics: CameraIntrinsics,
    opts: &KittiConversion,
) -> Result<(Sequence, ConversionStats)> {
    let mut stats = ConversionStats {
        input_rows: rows.len(),
        ..Default::default()
    };
    let max_frame = rows.iter().map(|r| r.frame).max();
    let mut frames: Vec<Frame> = match max_frame {
        Some(m) => (0..=m)
            .map(|index| Frame {
                index,
                pose: Pose::identity(),
                annotations: Vec::new(),
            })
            .collect(),
        None => Vec::new(),
    };
    let mut seen = BTreeSet::new();
    for row in rows {
        if row.category == DONT_CARE {
            stats.dropped_dont_care += 1;
            continue;
        }
        if !opts.categories.contains(&row.category) {
            stats.dropped_category += 1;
            continue;
        }
        let track = u32::try_from(row.track_id).map_err(|_| {
            Error::Integrity(format!(
                "{} row in frame {} has invalid track id {}",
                row.category, row.frame, row.track_id
            ))
        })?;
        if !seen.insert((row.frame, track)) {
            return Err(Error::Integrity(format!(
                "duplicate (frame {}, track {track})",
                row.frame
            )));
        }
        let ann = row_to_annotation(row, row.frame, TrackId(track))?;
        frames[row.frame as usize].annotations.push(ann);
        stats.kept += 1;
    }
    for f in &mut frames {
        f.annotations.sort_by_key(|a| a.track_id);
    }
    let seq = Sequence {
        id: opts.sequence_id.clone(),
        intrinsics,
        frame_rate: opts.frame_rate,
        frames,
    };
    seq.validate()?;
    Ok((seq, stats))
}

fn row_to_annotation(row: &KittiLabelRow, frame: FrameIndex, track: TrackId) -> Result<Annotation> {
    let [left, top, right, bottom] = row.bbox;
    let [h, w, l] = row.dims;
    let [x, y, z] = row.location;
    let center = Vec3::new(x, y - h / 2.0, z);
    let provisional = Box3D::new(center, Dims::new(l, w, h)?, row.rotation_y, Direction::Towards)?;
    let box3d = Box3D::new(
        center,
        provisional.dims(),
        provisional.yaw(),
        direction_of(&provisional),
    )?;
    Ok(Annotation {
        frame_index: frame,
        track_id: track,
        box2d: Box2D::from_corners(left, top, right, bottom)?,
        mask: None,
        box3d,
        occlusion_level: row.occluded as u8,
        visibility: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROW: &str = "0 2 Car 0 0 -1.57 100 120 200 180 1.5 1.7 4.2 2.0 1.6 15.0 -1.6";

    #[test]
    fn parses_single_row() {
        let rows = parse_kitti_labels(ROW).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!((r.frame, r.track_id), (0, 2));
        assert_eq!(r.category, "Car");
        assert_eq!(r.location, [2.0, 1.6, 15.0]);
        assert_eq!(r.score, None);
        let again = parse_kitti_labels(&serialize_kitti_labels(&rows)).unwrap();
        assert_eq!(again, rows);
    }

    #[test]
    fn empty_and_malformed() {
        assert!(parse_kitti_labels("").unwrap().is_empty());
        assert!(parse_kitti_labels("\n  \n").unwrap().is_empty());
        let short = "0 2 Car 0 0 -1.57 100 120 200 180 1.5 1.7 4.2 2.0 1.6 15.0";
        let text = format!("{ROW}\n{short}\n");
        match parse_kitti_labels(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("16"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad = ROW.replace("15.0", "abc");
        match parse_kitti_labels(&bad) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("`z`")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn calib_extraction() {
        let text = "P0: 1 0 0 0 0 1 0 0 0 0 1 0\nP2: 700 0 620 0 0 700 187 0 0 0 1 0\n";
        let c = parse_kitti_calib(text, 1242, 375).unwrap();
        assert_eq!(
            (c.intrinsics.fx(), c.intrinsics.fy(), c.intrinsics.cx(), c.intrinsics.cy()),
            (700.0, 700.0, 620.0, 187.0)
        );
        assert!(!c.translation_ignored);

        let text = "P2: 700 0 620 45.5 0 700 187 -0.3 0 0 1 0.004\n";
        let t = parse_kitti_calib(text, 1242, 375).unwrap();
        assert_eq!(t.intrinsics, c.intrinsics);
        assert!(t.translation_ignored);

        assert!(parse_kitti_calib("P0: 1 0 0 0 0 1 0 0 0 0 1 0\n", 1242, 375).is_err());
    }

    #[test]
    fn conversion_moves_center_and_drops_rows() {
        let text = format!(
            "{ROW}\n0 -1 DontCare -1 -1 -10 300 100 350 150 -1 -1 -1 -1000 -1000 -1000 -10\n\
             1 5 Pedestrian 0 0 0 400 100 420 160 1.8 0.6 0.8 -3 1.6 12 0\n"
        );
        let rows = parse_kitti_labels(&text).unwrap();
        let k = CameraIntrinsics::new(700.0, 700.0, 620.0, 187.0, 1242, 375).unwrap();
        let (seq, stats) = kitti_rows_to_sequence(&rows, k, &KittiConversion::default()).unwrap();
        assert_eq!(stats.kept, 1);
        assert_eq!(stats.dropped_dont_care, 1);
        assert_eq!(stats.dropped_category, 1);
        assert_eq!(stats.kept + stats.dropped_dont_care + stats.dropped_category, stats.input_rows);
        assert_eq!(seq.frames.len(), 2);
        let ann = seq.annotation(0, TrackId(2)).unwrap();
        assert_eq!(ann.box2d, Box2D::new(150.0, 150.0, 100.0, 60.0).unwrap());
        assert!((ann.box3d.center() - Vec3::new(2.0, 0.85, 15.0)).norm() < 1e-12);
        // the bottom face sits on the labeled location
        let bottom_y = ann.box3d.center().y + ann.box3d.dims().height / 2.0;
        assert!((bottom_y - 1.6).abs() < 1e-12);
        assert_eq!(ann.box3d.dims().length, 4.2);
    }

    #[test]
    fn duplicate_rows_are_integrity_errors() {
        let rows = parse_kitti_labels(&format!("{ROW}\n{ROW}\n")).unwrap();
        let k = CameraIntrinsics::kitti_default();
        assert!(matches!(
            kitti_rows_to_sequence(&rows, k, &KittiConversion::default()),
            Err(Error::Integrity(_))
        ));
    }
}
