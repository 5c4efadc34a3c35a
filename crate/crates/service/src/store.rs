//! Session state and its append-only JSONL log.
//!
//! Every change to a session is an event. The live path appends the event,
//! syncs the file, then applies it; startup replays the same events through
//! the same `apply`, so a replayed session equals the live one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Created {
        session_id: String,
        participant: String,
        seed: u64,
        order: Vec<String>,
        created_at: u64,
    },
    Served {
        episode_id: String,
        t: usize,
    },
    Judgment {
        episode_id: String,
        t: usize,
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionData {
    pub session_id: String,
    pub participant: String,
    pub seed: u64,
    pub episode_order: Vec<String>,
    pub created_at: u64,
    #[serde(skip)]
    pub served: BTreeSet<(String, usize)>,
    /// Slider values (0..=100) per episode, in frame order.
    pub judgments: BTreeMap<String, Vec<f64>>,
}

impl SessionData {
    fn from_created(ev: &LogEvent) -> Option<Self> {
        match ev {
            LogEvent::Created {
                session_id,
                participant,
                seed,
                order,
                created_at,
            } => Some(Self {
                session_id: session_id.clone(),
                participant: participant.clone(),
                seed: *seed,
                episode_order: order.clone(),
                created_at: *created_at,
                served: BTreeSet::new(),
                judgments: order.iter().map(|e| (e.clone(), Vec::new())).collect(),
            }),
            _ => None,
        }
    }

    pub fn apply(&mut self, ev: &LogEvent) {
        match ev {
            LogEvent::Created { .. } => {}
            LogEvent::Served { episode_id, t } => {
                self.served.insert((episode_id.clone(), *t));
            }
            LogEvent::Judgment { episode_id, value, .. } => {
                self.judgments.entry(episode_id.clone()).or_default().push(*value);
            }
        }
    }

    pub fn judged(&self, episode_id: &str) -> usize {
        self.judgments.get(episode_id).map_or(0, Vec::len)
    }
}

/// A session plus its open log file. Guarded by one mutex per session, so
/// there is a single writer per log.
#[derive(Debug)]
pub struct Session {
    pub data: SessionData,
    log: File,
}

fn io_err(path: &Path, e: std::io::Error) -> ServiceError {
    ServiceError::Storage(format!("{}: {e}", path.display()))
}

impl Session {
    pub fn create(dir: &Path, created: LogEvent) -> Result<Self, ServiceError> {
        let data = SessionData::from_created(&created).expect("a created event");
        let path = log_path(dir, &data.session_id);
        let log = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        let mut s = Self { data, log };
        s.write(&created)?;
        Ok(s)
    }

    /// Append, sync, then apply. The caller acks only after this returns.
    pub fn record(&mut self, ev: LogEvent) -> Result<(), ServiceError> {
        self.write(&ev)?;
        self.data.apply(&ev);
        Ok(())
    }

    fn write(&mut self, ev: &LogEvent) -> Result<(), ServiceError> {
        let mut line = serde_json::to_string(ev).expect("event serializes");
        line.push('\n');
        self.log
            .write_all(line.as_bytes())
            .and_then(|_| self.log.sync_data())
            .map_err(|e| ServiceError::Storage(format!("session {}: {e}", self.data.session_id)))
    }

    /// Rebuild a session from its log. A torn final line (crash mid-write,
    /// never acked) is cut off so later appends start on a fresh line.
    pub fn replay(path: &Path) -> Result<Self, ServiceError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut events = Vec::new();
        let mut good_len = 0;
        for (i, line) in text.split_inclusive('\n').enumerate() {
            match serde_json::from_str::<LogEvent>(line) {
                Ok(ev) if line.ends_with('\n') => {
                    events.push(ev);
                    good_len += line.len();
                }
                _ if good_len + line.len() == text.len() => {
                    tracing::warn!(path = %path.display(), "dropping torn final log line");
                }
                Ok(_) => unreachable!("only the last piece lacks a newline"),
                Err(e) => {
                    return Err(ServiceError::Storage(format!("{} line {}: {e}", path.display(), i + 1)));
                }
            }
        }
        let mut iter = events.iter();
        let mut data = iter
            .next()
            .and_then(SessionData::from_created)
            .ok_or_else(|| ServiceError::Storage(format!("{}: missing created event", path.display())))?;
        for ev in iter {
            data.apply(ev);
        }
        let log = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        if good_len < text.len() {
            log.set_len(good_len as u64).map_err(|e| io_err(path, e))?;
        }
        Ok(Self { data, log })
    }
}

pub fn log_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(format!("{session_id}.jsonl"))
}

pub fn replay_all(dir: &Path) -> Result<Vec<Session>, ServiceError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Session::replay(p)).collect()
}
