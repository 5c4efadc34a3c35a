//! Episode JSONL: one metadata line, then one line per frame.
//!
//! Frame lines have the fixed shape
//! `{"t":0,"actor":{"row":3,"col":12,"heading":0},"apples":[[r,c],..],"pears":[[r,c],..],"action":"Forward","visible":true}`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EpisodeFrame, EpisodeMeta, EpisodeRecord};
use crate::world::{step, Action, Cell, Heading, Pose, WorldState};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed episode file, line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("tampered record: frame {frame}: {message}")]
    DynamicsViolation { frame: usize, message: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActorLine {
    row: usize,
    col: usize,
    heading: Heading,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameLine {
    t: usize,
    actor: ActorLine,
    apples: Vec<Cell>,
    pears: Vec<Cell>,
    action: Action,
    visible: bool,
}

impl EpisodeRecord {
    /// Serialize to JSONL text. Output is byte-stable for equal records.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.meta).expect("meta serializes");
        out.push('\n');
        for (t, f) in self.frames.iter().enumerate() {
            let line = FrameLine {
                t,
                actor: ActorLine {
                    row: f.state.actor.cell.row,
                    col: f.state.actor.cell.col,
                    heading: f.state.actor.heading,
                },
                apples: f.state.apples.clone(),
                pears: f.state.pears.clone(),
                action: f.action,
                visible: f.visible,
            };
            out.push_str(&serde_json::to_string(&line).expect("frame serializes"));
            out.push('\n');
        }
        out
    }

    /// Parse JSONL text and re-validate the dynamics frame by frame.
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, RecordError> {
        let mut lines = reader.lines().enumerate();
        let malformed = |line: usize, message: String| RecordError::Malformed { line, message };
        let (_, first) = lines
            .next()
            .ok_or_else(|| malformed(1, "empty file".into()))?;
        let first = first.map_err(|e| malformed(1, e.to_string()))?;
        let meta: EpisodeMeta =
            serde_json::from_str(&first).map_err(|e| malformed(1, e.to_string()))?;
        let mut frames = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| malformed(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let f: FrameLine =
                serde_json::from_str(&line).map_err(|e| malformed(i + 1, e.to_string()))?;
            if f.t != frames.len() {
                return Err(malformed(i + 1, format!("expected t = {}, found {}", frames.len(), f.t)));
            }
            let pose = Pose::new(f.actor.row, f.actor.col, f.actor.heading);
            frames.push(EpisodeFrame {
                state: WorldState::new(pose, f.apples, f.pears),
                action: f.action,
                visible: f.visible,
            });
        }
        let rec = EpisodeRecord { meta, frames };
        rec.validate()?;
        Ok(rec)
    }

    /// Check that the frames obey the step dynamics and agree with the meta.
    pub fn validate(&self) -> Result<(), RecordError> {
        let m = &self.meta;
        let bad = |frame: usize, message: String| RecordError::DynamicsViolation { frame, message };
        if self.frames.is_empty() {
            return Err(bad(0, "episode has no frames".into()));
        }
        if self.frames.len() > m.max_frames {
            return Err(bad(self.frames.len(), format!("more than max_frames = {}", m.max_frames)));
        }
        for (t, f) in self.frames.iter().enumerate() {
            f.state
                .validate(m.grid, m.fruits)
                .map_err(|e| bad(t, e.to_string()))?;
            if f.visible != m.region.contains(f.state.actor.cell) {
                return Err(bad(t, "visibility flag disagrees with observer region".into()));
            }
            if t > 0 && f.state.content(f.state.actor.cell).fruit().is_some() {
                return Err(bad(t, "actor stands on a fruit mid-episode".into()));
            }
            if let Some(s) = m.script.get(t) {
                if *s != f.action {
                    return Err(bad(t, format!("action {} differs from script {}", f.action, s)));
                }
            }
            let (next, touch) = step(&f.state, f.action, m.grid);
            match self.frames.get(t + 1) {
                Some(n) => {
                    if touch.is_some() {
                        return Err(bad(t, "episode continues after a touch".into()));
                    }
                    if n.state != next {
                        return Err(bad(t + 1, "state does not follow from the previous action".into()));
                    }
                }
                None => {
                    if touch != m.outcome {
                        return Err(bad(t, format!("outcome {:?} but final step touches {:?}", m.outcome, touch)));
                    }
                    if touch.is_none() && self.frames.len() != m.max_frames {
                        return Err(bad(t, "episode ends without a touch before max_frames".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn write_episode(record: &EpisodeRecord, path: &Path) -> Result<(), RecordError> {
    let io = |source| RecordError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io)?;
    file.write_all(record.to_jsonl().as_bytes()).map_err(io)?;
    file.sync_all().map_err(io)
}

pub fn read_episode(path: &Path) -> Result<EpisodeRecord, RecordError> {
    let file = fs::File::open(path).map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })?;
    EpisodeRecord::from_jsonl(BufReader::new(file))
}
