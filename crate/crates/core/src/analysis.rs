//! Comparing model and human judgment traces.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::ModelTrace;
use crate::policy::Intention;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("undefined correlation: zero variance")]
    UndefinedCorrelation,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
    #[error("no traces given")]
    Empty,
    #[error("traces disagree: {0}")]
    Inconsistent(String),
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "session_id")]
pub enum TraceSource {
    Model,
    Human(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentTrace {
    pub episode_id: String,
    pub source: TraceSource,
    pub values: Vec<f64>,
}

impl JudgmentTrace {
    pub fn new(episode_id: impl Into<String>, source: TraceSource, values: Vec<f64>) -> Result<Self, AnalysisError> {
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(AnalysisError::OutOfRange(v));
        }
        Ok(Self {
            episode_id: episode_id.into(),
            source,
            values,
        })
    }

    /// Human slider readings in 0..=100.
    pub fn from_slider(
        episode_id: impl Into<String>,
        session_id: impl Into<String>,
        slider: &[f64],
    ) -> Result<Self, AnalysisError> {
        Self::new(
            episode_id,
            TraceSource::Human(session_id.into()),
            slider.iter().map(|v| v / 100.0).collect(),
        )
    }

    /// Model trace as the probability of `intention` per frame.
    pub fn from_model(trace: &ModelTrace, intention: Intention) -> Self {
        Self {
            episode_id: trace.episode_id.clone(),
            source: TraceSource::Model,
            values: trace.prob(intention),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.values.iter().enumerate() {
            writeln!(out, "{t},{v}").unwrap();
        }
        out
    }

    pub fn from_csv(episode_id: &str, source: TraceSource, text: &str) -> Result<Self, AnalysisError> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| AnalysisError::Csv { line: i + 1, message };
            let (t, v) = line.split_once(',').ok_or_else(|| err("expected t,value".into()))?;
            let t: usize = t.trim().parse().map_err(|e| err(format!("{e}")))?;
            if t != values.len() {
                return Err(err(format!("expected t = {}, found {t}", values.len())));
            }
            values.push(v.trim().parse::<f64>().map_err(|e| err(format!("{e}")))?);
        }
        Self::new(episode_id, source, values)
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(AnalysisError::TooShort(n));
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / n as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(AnalysisError::UndefinedCorrelation);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
    /// Set when n < 2 and `sd` is a placeholder 0.
    pub sd_undefined: bool,
}

/// Per-frame mean and sample SD across traces of one episode.
pub fn aggregate_frames(traces: &[JudgmentTrace]) -> Result<Vec<FrameStats>, AnalysisError> {
    let first = traces.first().ok_or(AnalysisError::Empty)?;
    let len = first.values.len();
    for t in traces {
        if t.episode_id != first.episode_id {
            return Err(AnalysisError::Inconsistent(format!(
                "episodes {} and {}",
                first.episode_id, t.episode_id
            )));
        }
        if t.values.len() != len {
            return Err(AnalysisError::LengthMismatch(len, t.values.len()));
        }
    }
    let n = traces.len();
    Ok((0..len)
        .map(|f| {
            let mean = traces.iter().map(|t| t.values[f]).sum::<f64>() / n as f64;
            let sd = if n >= 2 {
                let ss: f64 = traces.iter().map(|t| (t.values[f] - mean).powi(2)).sum();
                (ss / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            FrameStats {
                mean,
                sd,
                n,
                sd_undefined: n < 2,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub model_p: f64,
    pub human_p: f64,
    pub episode_id: String,
    pub session_id: String,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantR {
    pub session_id: String,
    /// None when that participant's pairs have zero variance.
    pub r: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    pub points: Vec<ScatterPoint>,
    pub r: f64,
    pub per_participant: Vec<ParticipantR>,
}

impl Scatter {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model_p,human_p,episode_id,session_id,t\n");
        for p in &self.points {
            writeln!(out, "{},{},{},{},{}", p.model_p, p.human_p, p.episode_id, p.session_id, p.t).unwrap();
        }
        out
    }
}

/// Pair every human answer with the model value for the same frame.
/// `include` picks which episodes count.
pub fn pooled_scatter(
    model: &[JudgmentTrace],
    human: &[JudgmentTrace],
    include: impl Fn(&str) -> bool,
) -> Result<Scatter, AnalysisError> {
    let mut points = Vec::new();
    for h in human.iter().filter(|h| include(&h.episode_id)) {
        let session = match &h.source {
            TraceSource::Human(s) => s.clone(),
            TraceSource::Model => return Err(AnalysisError::Inconsistent("model trace among human traces".into())),
        };
        let m = model
            .iter()
            .find(|m| m.episode_id == h.episode_id)
            .ok_or_else(|| AnalysisError::Inconsistent(format!("no model trace for {}", h.episode_id)))?;
        if m.values.len() != h.values.len() {
            return Err(AnalysisError::LengthMismatch(m.values.len(), h.values.len()));
        }
        for (t, (&mp, &hp)) in m.values.iter().zip(&h.values).enumerate() {
            points.push(ScatterPoint {
                model_p: mp,
                human_p: hp,
                episode_id: h.episode_id.clone(),
                session_id: session.clone(),
                t,
            });
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.model_p).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.human_p).collect();
    let r = pearson(&xs, &ys)?;

    let mut sessions: Vec<String> = points.iter().map(|p| p.session_id.clone()).collect();
    sessions.sort();
    sessions.dedup();
    let per_participant = sessions
        .into_iter()
        .map(|s| {
            let (x, y): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| p.session_id == s)
                .map(|p| (p.model_p, p.human_p))
                .unzip();
            ParticipantR {
                r: pearson(&x, &y).ok(),
                n: x.len(),
                session_id: s,
            }
        })
        .collect();
    Ok(Scatter {
        points,
        r,
        per_participant,
    })
}
