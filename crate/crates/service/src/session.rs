//! Live sessions: one traced environment per id, guarded by its own lock.

use std::collections::HashMap;
use std::fs::File;
use std::io;
use std::path::Path;
use std::sync::{Arc, Mutex as StdMutex, RwLock};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use tokio::sync::Mutex;

use arcle_core::state::{EnvState, Observation};
use arcle_core::trace::{JsonlSink, TraceRecord, TraceSink};
use arcle_core::{
    Action, ArcEnv, BBoxAction, EnvAction, EnvConfig, EnvError, Environment, ResetOptions, StepResult, Task,
    TraceRecorder, TraceSelection,
};

/// A step request's action: a rectangle or an explicit mask.
#[derive(Debug, Clone)]
pub enum WireAction {
    BBox(BBoxAction),
    Mask(Action),
}

impl EnvAction for WireAction {
    fn operation_id(&self) -> usize {
        match self {
            WireAction::BBox(a) => a.operation,
            WireAction::Mask(a) => a.operation,
        }
    }

    fn trace_selection(&self) -> TraceSelection {
        match self {
            WireAction::BBox(a) => a.trace_selection(),
            WireAction::Mask(a) => a.trace_selection(),
        }
    }
}

/// Base environment accepting [`WireAction`]s.
#[derive(Debug)]
pub struct WireEnv(pub ArcEnv);

impl Environment for WireEnv {
    type Action = WireAction;

    fn reset(&mut self, task: &Task, options: &ResetOptions) -> Result<Observation<'_>, EnvError> {
        self.0.reset(task, options)
    }

    fn step(&mut self, action: WireAction) -> Result<StepResult<'_>, EnvError> {
        match action {
            WireAction::BBox(a) => {
                let op = self.0.config().operation(a.operation).ok_or(EnvError::IllegalOp(a.operation))?;
                let state = self.0.state().ok_or(EnvError::NotReset)?;
                let selection = a.materialize(state, op);
                self.0.step(Action::new(a.operation, selection))
            }
            WireAction::Mask(a) => self.0.step(a),
        }
    }

    fn state(&self) -> Option<&EnvState> {
        self.0.state()
    }

    fn config(&self) -> &EnvConfig {
        self.0.config()
    }

    fn task_id(&self) -> Option<&str> {
        self.0.task_id()
    }

    fn truncated(&self) -> bool {
        self.0.truncated()
    }
}

/// Keeps every record in memory and, when a trace directory is configured,
/// appends it to the session's JSONL file before the response is sent.
#[derive(Debug, Default)]
pub struct SessionSink {
    pub records: Vec<TraceRecord>,
    file: Option<JsonlSink<File>>,
}

impl SessionSink {
    pub fn open(trace_dir: Option<&Path>, session_id: &str) -> io::Result<Self> {
        let file = match trace_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                Some(JsonlSink(File::create(dir.join(format!("{session_id}.jsonl")))?))
            }
            None => None,
        };
        Ok(SessionSink {
            records: Vec::new(),
            file,
        })
    }
}

impl TraceSink for SessionSink {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()> {
        self.records.push(rec.clone());
        match &mut self.file {
            Some(f) => f.record(rec),
            None => Ok(()),
        }
    }
}

pub type SessionEnv = TraceRecorder<WireEnv, SessionSink>;

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub env: SessionEnv,
    pub task: Arc<Task>,
    pub options: ResetOptions,
    pub created_at: DateTime<Utc>,
}

impl Session {
    pub fn records(&self) -> &[TraceRecord] {
        &self.env.sink().records
    }

    /// Which demo pair (if any) the current episode was drawn from.
    pub fn active_demo(&self) -> Option<usize> {
        match self.env.inner().0.current_pair() {
            Some((true, i)) => Some(i),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub struct SessionSlot {
    pub session: Mutex<Session>,
    last_active: StdMutex<Instant>,
}

impl SessionSlot {
    fn touch(&self) {
        *self.last_active.lock().expect("clock lock") = Instant::now();
    }

    fn idle_for(&self) -> Duration {
        self.last_active.lock().expect("clock lock").elapsed()
    }
}

/// Session table with idle expiry.
#[derive(Debug)]
pub struct SessionStore {
    slots: RwLock<HashMap<String, Arc<SessionSlot>>>,
    ttl: Duration,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        SessionStore {
            slots: RwLock::new(HashMap::new()),
            ttl,
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn insert(&self, session: Session) -> Arc<SessionSlot> {
        let id = session.id.clone();
        let slot = Arc::new(SessionSlot {
            session: Mutex::new(session),
            last_active: StdMutex::new(Instant::now()),
        });
        self.slots.write().expect("session table").insert(id, slot.clone());
        slot
    }

    /// Looks a session up and marks it active. Expired sessions are dropped
    /// on sight.
    pub fn get(&self, id: &str) -> Option<Arc<SessionSlot>> {
        let slot = self.slots.read().expect("session table").get(id).cloned()?;
        if slot.idle_for() > self.ttl {
            self.slots.write().expect("session table").remove(id);
            return None;
        }
        slot.touch();
        Some(slot)
    }

    /// Removes every session idle for longer than the TTL; returns how many.
    pub fn sweep(&self) -> usize {
        let mut slots = self.slots.write().expect("session table");
        let before = slots.len();
        slots.retain(|_, s| s.idle_for() <= self.ttl);
        before - slots.len()
    }

    pub fn len(&self) -> usize {
        self.slots.read().expect("session table").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
