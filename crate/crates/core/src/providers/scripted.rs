use std::collections::BTreeMap;

use super::{MatchResult, Matcher};
use crate::error::{Error, Result};
use crate::model::{FrameIndex, Sequence, TrackId};

/// What a [`ScriptedMatcher`] answers for one target frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scripted {
    Confidence(f64),
    NotFound,
    Fail,
}

/// Returns the ground-truth box with a scripted confidence per target
/// frame. Used to pin gate behavior without any noise model.
pub struct ScriptedMatcher<'a> {
    seq: &'a Sequence,
    default: Scripted,
    script: BTreeMap<(TrackId, FrameIndex), Scripted>,
}

impl<'a> ScriptedMatcher<'a> {
    pub fn new(seq: &'a Sequence, default: Scripted) -> Self {
        Self {
            seq,
            default,
            script: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, track: TrackId, frame: FrameIndex, answer: Scripted) -> &mut Self {
        self.script.insert((track, frame), answer);
        self
    }
}

impl Matcher for ScriptedMatcher<'_> {
    fn match_target(
        &self,
        _source_frame: FrameIndex,
        track: TrackId,
        target_frame: FrameIndex,
    ) -> Result<Option<MatchResult>> {
        let answer = self
            .script
            .get(&(track, target_frame))
            .copied()
            .unwrap_or(self.default);
        let confidence = match answer {
            Scripted::Confidence(c) => c,
            Scripted::NotFound => return Ok(None),
            Scripted::Fail => return Err(Error::Lookup(format!("scripted failure at frame {target_frame}"))),
        };
        let Some(gt) = self.seq.annotation(target_frame, track) else {
            return Ok(None);
        };
        Ok(Some(MatchResult {
            box2d: gt.box2d,
            mask: gt.mask.clone(),
            confidence,
            similarity: None,
        }))
    }
}
