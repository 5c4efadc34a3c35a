//! HTTP service for frame-by-frame judgment collection.
//!
//! Endpoints (all JSON):
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | GET | `/episodes` | | `[{episode_id, frame_count}]` |
//! | GET | `/episodes/{id}/frames/{t}` | | `FramePayload` |
//! | POST | `/sessions` | `{participant, seed?}` | `SessionView` |
//! | GET | `/sessions/{id}` | | `SessionView` |
//! | GET | `/sessions/{id}/next` | | `NextFrame` |
//! | POST | `/sessions/{id}/judgments` | `{episode_id, t, value}` | `JudgmentAck` |
//! | GET | `/episodes/{id}/traces` | | `{episode_id, model, humans}` |
//! | GET | `/analysis/correlation` | `?archetype=simple&mode=pooled` | `CorrelationReport` |
//! | GET | `/instructions` | | `Instructions` |
//!
//! Errors come back as `{"error": <code>, "message": <text>}` with a 4xx/5xx
//! status. `value` is the slider reading in 0..=100, 100 meaning "surely
//! apple"; traces report the same quantity as a probability in 0..=1.
//!
//! Participant-facing responses (episodes, frames, sessions, next,
//! instructions) never include the archetype, the true intention, or any
//! cell outside the observer region.

pub mod payload;
pub mod store;

use std::collections::HashMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use publicself_core::{
    canonical_suite, pooled_scatter, read_episode, run_trace, write_episode, AnalysisError, Archetype,
    EpisodeRecord, Intention, JudgmentTrace, ModelConfig, ParticipantR,
};

pub use payload::{EpisodeSummary, FramePayload, Instructions};
use store::{LogEvent, Session, SessionData};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown episode {0}")]
    UnknownEpisode(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("frame {t} out of range for {episode_id} ({frame_count} frames)")]
    FrameOutOfRange {
        episode_id: String,
        t: usize,
        frame_count: usize,
    },
    #[error("judgment value {0} outside 0..=100")]
    ValueOutOfRange(f64),
    #[error("frame {t} of {episode_id} already judged")]
    Duplicate { episode_id: String, t: usize },
    #[error("frame {t} of {episode_id} has not been served to this session")]
    Unserved { episode_id: String, t: usize },
    #[error("unknown archetype {0}")]
    BadQuery(String),
    #[error("no completed sessions for this selection")]
    NoCompleteSessions,
    #[error("undefined correlation: the selected model or human values do not vary (blind episodes stay at 0.5 throughout)")]
    UndefinedCorrelation,
    #[error("analysis: {0}")]
    Analysis(AnalysisError),
    #[error("episode suite: {0}")]
    Suite(String),
    #[error("storage: {0}")]
    Storage(String),
}

impl ServiceError {
    fn status(&self) -> (StatusCode, &'static str) {
        use ServiceError::*;
        match self {
            UnknownEpisode(_) => (StatusCode::NOT_FOUND, "unknown_episode"),
            UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            FrameOutOfRange { .. } => (StatusCode::NOT_FOUND, "frame_out_of_range"),
            ValueOutOfRange(_) => (StatusCode::UNPROCESSABLE_ENTITY, "value_out_of_range"),
            Duplicate { .. } => (StatusCode::CONFLICT, "duplicate_judgment"),
            Unserved { .. } => (StatusCode::CONFLICT, "unserved_frame"),
            BadQuery(_) => (StatusCode::BAD_REQUEST, "bad_query"),
            NoCompleteSessions => (StatusCode::CONFLICT, "no_complete_sessions"),
            UndefinedCorrelation => (StatusCode::UNPROCESSABLE_ENTITY, "undefined_correlation"),
            Analysis(_) => (StatusCode::UNPROCESSABLE_ENTITY, "analysis_error"),
            Suite(_) | Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, code) = self.status();
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        let body = ErrorBody {
            error: code.into(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

pub struct StudyState {
    cfg: ModelConfig,
    sessions_dir: PathBuf,
    episodes: Vec<EpisodeRecord>,
    model: HashMap<String, JudgmentTrace>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl std::fmt::Debug for StudyState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StudyState")
            .field("sessions_dir", &self.sessions_dir)
            .field("episodes", &self.episodes.len())
            .finish_non_exhaustive()
    }
}

fn load_or_create_suite(dir: &Path, cfg: &ModelConfig) -> Result<Vec<EpisodeRecord>, ServiceError> {
    let suite_err = |e: String| ServiceError::Suite(e);
    fs::create_dir_all(dir).map_err(|e| suite_err(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| suite_err(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        let suite = canonical_suite(cfg).map_err(|e| suite_err(e.to_string()))?;
        for rec in &suite {
            let path = dir.join(format!("{}.jsonl", rec.meta.episode_id));
            write_episode(rec, &path).map_err(|e| suite_err(e.to_string()))?;
        }
        tracing::info!(count = suite.len(), dir = %dir.display(), "wrote canonical suite");
        return Ok(suite);
    }
    paths
        .iter()
        .map(|p| read_episode(p).map_err(|e| suite_err(e.to_string())))
        .collect()
}

impl StudyState {
    /// Open (or initialize) a data directory: `episodes/` holds the suite,
    /// `sessions/` one log per session. Existing logs are replayed.
    pub fn open(data_dir: &Path, cfg: ModelConfig) -> Result<Arc<Self>, ServiceError> {
        let episodes = load_or_create_suite(&data_dir.join("episodes"), &cfg)?;
        if episodes.is_empty() {
            return Err(ServiceError::Suite("no episodes".into()));
        }
        let mut model = HashMap::new();
        for rec in &episodes {
            let trace = run_trace(rec, &cfg).map_err(|e| ServiceError::Suite(e.to_string()))?;
            model.insert(
                rec.meta.episode_id.clone(),
                JudgmentTrace::from_model(&trace, Intention::GetApple),
            );
        }
        let sessions_dir = data_dir.join("sessions");
        let sessions = store::replay_all(&sessions_dir)?
            .into_iter()
            .map(|s| (s.data.session_id.clone(), Arc::new(Mutex::new(s))))
            .collect::<HashMap<_, _>>();
        tracing::info!(sessions = sessions.len(), "replayed session logs");
        Ok(Arc::new(Self {
            cfg,
            sessions_dir,
            episodes,
            model,
            sessions: RwLock::new(sessions),
        }))
    }

    pub fn episodes(&self) -> &[EpisodeRecord] {
        &self.episodes
    }

    fn episode(&self, id: &str) -> Result<&EpisodeRecord, ServiceError> {
        self.episodes
            .iter()
            .find(|e| e.meta.episode_id == id)
            .ok_or_else(|| ServiceError::UnknownEpisode(id.to_string()))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn snapshot(&self) -> Vec<SessionData> {
        let map = self.sessions.read().expect("session map poisoned");
        let mut out: Vec<SessionData> = map
            .values()
            .map(|s| s.lock().expect("session poisoned").data.clone())
            .collect();
        out.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        out
    }

    pub fn create_session(&self, participant: String, seed: Option<u64>) -> Result<SessionView, ServiceError> {
        let seed = seed.unwrap_or_else(rand::random);
        let mut order: Vec<String> = self.episodes.iter().map(|e| e.meta.episode_id.clone()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let session_id = uuid::Uuid::new_v4().to_string();
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let session = Session::create(
            &self.sessions_dir,
            LogEvent::Created {
                session_id: session_id.clone(),
                participant,
                seed,
                order,
                created_at,
            },
        )?;
        let view = self.view(&session.data);
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(session_id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    fn next_unjudged(&self, data: &SessionData) -> Option<(usize, &EpisodeRecord, usize)> {
        data.episode_order.iter().enumerate().find_map(|(i, id)| {
            let rec = self.episode(id).ok()?;
            let judged = data.judged(id);
            (judged < rec.frame_count()).then_some((i, rec, judged))
        })
    }

    fn view(&self, data: &SessionData) -> SessionView {
        let progress = data
            .episode_order
            .iter()
            .map(|id| EpisodeProgress {
                episode_id: id.clone(),
                judged: data.judged(id),
                frame_count: self.episode(id).map_or(0, |e| e.frame_count()),
            })
            .collect();
        SessionView {
            session_id: data.session_id.clone(),
            participant: data.participant.clone(),
            seed: data.seed,
            episode_order: data.episode_order.clone(),
            created_at: data.created_at,
            progress,
            complete: self.next_unjudged(data).is_none(),
        }
    }

    /// Serve the first unjudged frame. Re-serving an unjudged frame (after a
    /// page reload, say) does not log a second event.
    pub fn next_frame(&self, session_id: &str) -> Result<NextFrame, ServiceError> {
        let handle = self.session(session_id)?;
        let mut session = handle.lock().expect("session poisoned");
        let Some((index, rec, t)) = self.next_unjudged(&session.data) else {
            return Ok(NextFrame {
                done: true,
                episode_index: None,
                episode_count: session.data.episode_order.len(),
                frame: None,
            });
        };
        let id = rec.meta.episode_id.clone();
        if !session.data.served.contains(&(id.clone(), t)) {
            session.record(LogEvent::Served { episode_id: id, t })?;
        }
        Ok(NextFrame {
            done: false,
            episode_index: Some(index),
            episode_count: session.data.episode_order.len(),
            frame: Some(FramePayload::build(rec, t)),
        })
    }

    pub fn post_judgment(&self, session_id: &str, j: JudgmentIn) -> Result<JudgmentAck, ServiceError> {
        let rec = self.episode(&j.episode_id)?;
        if j.t >= rec.frame_count() {
            return Err(ServiceError::FrameOutOfRange {
                episode_id: j.episode_id,
                t: j.t,
                frame_count: rec.frame_count(),
            });
        }
        if !(0.0..=100.0).contains(&j.value) {
            return Err(ServiceError::ValueOutOfRange(j.value));
        }
        let handle = self.session(session_id)?;
        let mut session = handle.lock().expect("session poisoned");
        let judged = session.data.judged(&j.episode_id);
        if j.t < judged {
            return Err(ServiceError::Duplicate {
                episode_id: j.episode_id,
                t: j.t,
            });
        }
        if j.t > judged || !session.data.served.contains(&(j.episode_id.clone(), j.t)) {
            return Err(ServiceError::Unserved {
                episode_id: j.episode_id,
                t: j.t,
            });
        }
        session.record(LogEvent::Judgment {
            episode_id: j.episode_id.clone(),
            t: j.t,
            value: j.value,
        })?;
        Ok(JudgmentAck {
            session_id: session_id.to_string(),
            episode_id: j.episode_id,
            t: j.t,
            stored: true,
        })
    }

    fn human_traces(&self, sessions: &[SessionData], rec: &EpisodeRecord) -> Vec<JudgmentTrace> {
        let id = &rec.meta.episode_id;
        sessions
            .iter()
            .filter(|s| s.judged(id) == rec.frame_count())
            .filter_map(|s| JudgmentTrace::from_slider(id.clone(), s.session_id.clone(), &s.judgments[id]).ok())
            .collect()
    }

    pub fn traces(&self, episode_id: &str) -> Result<TracesView, ServiceError> {
        let rec = self.episode(episode_id)?;
        Ok(TracesView {
            episode_id: episode_id.to_string(),
            model: self.model[episode_id].clone(),
            humans: self.human_traces(&self.snapshot(), rec),
        })
    }

    pub fn correlation(&self, q: CorrelationQuery) -> Result<CorrelationReport, ServiceError> {
        let archetype = match q.archetype.as_deref() {
            None | Some("all") => None,
            Some(s) => Some(Archetype::parse(s).ok_or_else(|| ServiceError::BadQuery(s.to_string()))?),
        };
        let mode = q.mode.unwrap_or(CorrelationMode::Both);
        let selected: Vec<&EpisodeRecord> = self
            .episodes
            .iter()
            .filter(|e| archetype.is_none_or(|a| e.meta.archetype == a))
            .collect();
        let sessions = self.snapshot();
        let humans: Vec<JudgmentTrace> = selected
            .iter()
            .flat_map(|rec| self.human_traces(&sessions, rec))
            .collect();
        if humans.is_empty() {
            return Err(ServiceError::NoCompleteSessions);
        }
        let model: Vec<JudgmentTrace> = selected
            .iter()
            .map(|rec| self.model[&rec.meta.episode_id].clone())
            .collect();
        let scatter = pooled_scatter(&model, &humans, |_| true).map_err(|e| match e {
            AnalysisError::UndefinedCorrelation => ServiceError::UndefinedCorrelation,
            other => ServiceError::Analysis(other),
        })?;
        let mut sessions_used: Vec<&str> = humans
            .iter()
            .filter_map(|h| match &h.source {
                publicself_core::TraceSource::Human(s) => Some(s.as_str()),
                publicself_core::TraceSource::Model => None,
            })
            .collect();
        sessions_used.sort();
        sessions_used.dedup();
        Ok(CorrelationReport {
            archetype: q.archetype.unwrap_or_else(|| "all".into()),
            episodes: selected.iter().map(|e| e.meta.episode_id.clone()).collect(),
            sessions: sessions_used.len(),
            n_points: scatter.points.len(),
            pooled_r: (mode != CorrelationMode::PerParticipant).then_some(scatter.r),
            per_participant: (mode != CorrelationMode::Pooled).then_some(scatter.per_participant),
        })
    }

    pub fn instructions(&self) -> Instructions {
        Instructions::for_counts(self.cfg.fruits.apples, self.cfg.fruits.pears)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeProgress {
    pub episode_id: String,
    pub judged: usize,
    pub frame_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub participant: String,
    pub seed: u64,
    pub episode_order: Vec<String>,
    pub created_at: u64,
    pub progress: Vec<EpisodeProgress>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextFrame {
    pub done: bool,
    pub episode_index: Option<usize>,
    pub episode_count: usize,
    pub frame: Option<FramePayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewSession {
    pub participant: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentIn {
    pub episode_id: String,
    pub t: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentAck {
    pub session_id: String,
    pub episode_id: String,
    pub t: usize,
    pub stored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracesView {
    pub episode_id: String,
    pub model: JudgmentTrace,
    pub humans: Vec<JudgmentTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    Pooled,
    PerParticipant,
    Both,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct CorrelationQuery {
    pub archetype: Option<String>,
    pub mode: Option<CorrelationMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub archetype: String,
    pub episodes: Vec<String>,
    pub sessions: usize,
    pub n_points: usize,
    pub pooled_r: Option<f64>,
    pub per_participant: Option<Vec<ParticipantR>>,
}

type AppState = State<Arc<StudyState>>;

async fn list_episodes(State(s): AppState) -> Json<Vec<EpisodeSummary>> {
    Json(s.episodes.iter().map(EpisodeSummary::of).collect())
}

async fn get_frame(
    State(s): AppState,
    UrlPath((id, t)): UrlPath<(String, usize)>,
) -> Result<Json<FramePayload>, ServiceError> {
    let rec = s.episode(&id)?;
    if t >= rec.frame_count() {
        return Err(ServiceError::FrameOutOfRange {
            episode_id: id,
            t,
            frame_count: rec.frame_count(),
        });
    }
    Ok(Json(FramePayload::build(rec, t)))
}

async fn create_session(
    State(s): AppState,
    Json(body): Json<NewSession>,
) -> Result<(StatusCode, Json<SessionView>), ServiceError> {
    let view = s.create_session(body.participant, body.seed)?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(s): AppState, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ServiceError> {
    let handle = s.session(&id)?;
    let data = handle.lock().expect("session poisoned").data.clone();
    Ok(Json(s.view(&data)))
}

async fn next_frame(State(s): AppState, UrlPath(id): UrlPath<String>) -> Result<Json<NextFrame>, ServiceError> {
    s.next_frame(&id).map(Json)
}

async fn post_judgment(
    State(s): AppState,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<JudgmentIn>,
) -> Result<Json<JudgmentAck>, ServiceError> {
    s.post_judgment(&id, body).map(Json)
}

async fn get_traces(State(s): AppState, UrlPath(id): UrlPath<String>) -> Result<Json<TracesView>, ServiceError> {
    s.traces(&id).map(Json)
}

async fn get_correlation(
    State(s): AppState,
    Query(q): Query<CorrelationQuery>,
) -> Result<Json<CorrelationReport>, ServiceError> {
    s.correlation(q).map(Json)
}

async fn get_instructions(State(s): AppState) -> Json<Instructions> {
    Json(s.instructions())
}

pub fn router(state: Arc<StudyState>) -> Router {
    Router::new()
        .route("/episodes", get(list_episodes))
        .route("/episodes/{id}/frames/{t}", get(get_frame))
        .route("/episodes/{id}/traces", get(get_traces))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next_frame))
        .route("/sessions/{id}/judgments", post(post_judgment))
        .route("/analysis/correlation", get(get_correlation))
        .route("/instructions", get(get_instructions))
        .with_state(state)
}

/// Serve until ctrl-c. `on_bound` sees the actual address (useful with port 0).
pub async fn serve(
    state: Arc<StudyState>,
    addr: SocketAddr,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
