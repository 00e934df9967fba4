use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use resonant_sr::pipeline::serialize;
use resonant_sr::search::TraceRow;
use resonant_sr::{BlockAverageImage, PipelineSpec, RasterImage};
use serde::Serialize;

use crate::error::{ApiError, ApiResult};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_TTL: Duration = Duration::from_secs(3600);
pub const DEFAULT_MAX_UPLOAD: usize = 1 << 20;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub port: u16,
    /// Idle time after which sessions and finished runs are dropped.
    pub ttl: Duration,
    /// Request body limit in bytes.
    pub max_upload: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: DEFAULT_PORT,
            ttl: DEFAULT_TTL,
            max_upload: DEFAULT_MAX_UPLOAD,
        }
    }
}

/// Immutable snapshot; edits build a new one and swap it in.
#[derive(Clone, Debug)]
pub struct Session {
    pub source: BlockAverageImage,
    pub reference: Option<RasterImage>,
    pub pipeline: PipelineSpec,
    /// Text as last stored, returned verbatim by GET.
    pub pipeline_text: String,
    /// Bumped on every pipeline edit.
    pub revision: u64,
    pub created: Instant,
}

impl Session {
    pub fn new(source: BlockAverageImage, reference: Option<RasterImage>) -> Self {
        Self {
            source,
            reference,
            pipeline: PipelineSpec::default(),
            pipeline_text: String::new(),
            revision: 0,
            created: Instant::now(),
        }
    }

    pub fn with_pipeline(&self, pipeline: PipelineSpec, text: Option<String>) -> Self {
        let pipeline_text = text.unwrap_or_else(|| serialize(&pipeline));
        Self {
            pipeline,
            pipeline_text,
            revision: self.revision + 1,
            ..self.clone()
        }
    }
}

struct Entry {
    session: Arc<Session>,
    touched: Instant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub fidelity: f64,
    #[serde(rename = "R")]
    pub regularizer: f64,
    pub total: f64,
}

impl From<&TraceRow> for TracePoint {
    fn from(r: &TraceRow) -> Self {
        Self {
            iteration: r.iteration,
            fidelity: r.fidelity,
            regularizer: r.regularizer,
            total: r.total,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunState {
    pub status: RunStatus,
    pub trace: Vec<TracePoint>,
    pub spec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub finished: Option<Instant>,
}

impl RunState {
    pub fn running() -> Self {
        Self {
            status: RunStatus::Running,
            trace: Vec::new(),
            spec: String::new(),
            error: None,
            finished: None,
        }
    }
}

pub type SharedRun = Arc<Mutex<RunState>>;

#[derive(Clone)]
pub struct AppState {
    pub config: ServiceConfig,
    sessions: Arc<RwLock<HashMap<String, Entry>>>,
    runs: Arc<RwLock<HashMap<String, SharedRun>>>,
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config,
            sessions: Arc::default(),
            runs: Arc::default(),
        }
    }

    pub fn insert_session(&self, session: Session) -> String {
        let id = new_id();
        let entry = Entry {
            session: Arc::new(session),
            touched: Instant::now(),
        };
        self.sessions.write().unwrap().insert(id.clone(), entry);
        id
    }

    /// Snapshot of a live session; refreshes its idle timer.
    pub fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        let mut map = self.sessions.write().unwrap();
        match map.get_mut(id) {
            Some(e) if e.touched.elapsed() <= self.config.ttl => {
                e.touched = Instant::now();
                Ok(e.session.clone())
            }
            Some(_) => {
                map.remove(id);
                Err(ApiError::not_found("session", id))
            }
            None => Err(ApiError::not_found("session", id)),
        }
    }

    /// Replaces the session atomically with `edit(current)`.
    pub fn update_session(&self, id: &str, edit: impl FnOnce(&Session) -> ApiResult<Session>) -> ApiResult<Arc<Session>> {
        let mut map = self.sessions.write().unwrap();
        let entry = match map.get_mut(id) {
            Some(e) if e.touched.elapsed() <= self.config.ttl => e,
            _ => {
                map.remove(id);
                return Err(ApiError::not_found("session", id));
            }
        };
        let next = Arc::new(edit(&entry.session)?);
        entry.session = next.clone();
        entry.touched = Instant::now();
        Ok(next)
    }

    pub fn insert_run(&self) -> (String, SharedRun) {
        let id = new_id();
        let run = Arc::new(Mutex::new(RunState::running()));
        self.runs.write().unwrap().insert(id.clone(), run.clone());
        (id, run)
    }

    pub fn run(&self, id: &str) -> ApiResult<RunState> {
        let runs = self.runs.read().unwrap();
        let run = runs.get(id).ok_or_else(|| ApiError::not_found("run", id))?;
        let state = run.lock().unwrap().clone();
        Ok(state)
    }

    /// Drops idle sessions and runs finished more than one TTL ago.
    pub fn purge_expired(&self) {
        let ttl = self.config.ttl;
        self.sessions.write().unwrap().retain(|_, e| e.touched.elapsed() <= ttl);
        self.runs
            .write()
            .unwrap()
            .retain(|_, r| r.lock().unwrap().finished.is_none_or(|t| t.elapsed() <= ttl));
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }
}
