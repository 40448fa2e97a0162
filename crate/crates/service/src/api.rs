use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tracing::warn;
use uuid::Uuid;

use arcle_core::grid::Selection;
use arcle_core::{
    Action, ArcEnv, BBoxAction, EnvConfig, Environment, Operation, PresetName, ResetOptions, RewardMode,
    TraceRecorder, TraceSelection,
};

use crate::catalog::TaskSummary;
use crate::error::ApiError;
use crate::session::{Session, SessionSink, WireAction, WireEnv};
use crate::AppState;

type Shared = State<Arc<AppState>>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::unprocessable("bad_request", e.to_string()))
}

fn default_dataset() -> String {
    "arc".into()
}

fn default_preset() -> String {
    "o2arc".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default = "default_dataset")]
    dataset: String,
    split: Option<String>,
    task_id: Option<String>,
    #[serde(default = "default_preset")]
    preset: String,
    /// Operation names; only with the `custom` preset.
    ops: Option<Vec<String>>,
    #[serde(default)]
    adaptation: bool,
    pair_index: Option<usize>,
    seed: Option<u64>,
    #[serde(default)]
    expose_answer: bool,
    reward_mode: Option<String>,
    max_steps: Option<u32>,
}

impl CreateSession {
    fn config(&self) -> Result<EnvConfig, ApiError> {
        let bad = |m: String| ApiError::unprocessable("bad_options", m);
        let name: PresetName = self.preset.parse().map_err(|_| bad(format!("unknown preset {:?}", self.preset)))?;
        let mut cfg = match (name, &self.ops) {
            (PresetName::Custom, Some(names)) => {
                let ops = names
                    .iter()
                    .map(|n| n.parse::<Operation>().map_err(|_| bad(format!("unknown operation {n:?}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if ops.is_empty() {
                    return Err(bad("custom preset needs at least one operation".into()));
                }
                EnvConfig::custom(ops)
            }
            (PresetName::Custom, None) => return Err(bad("custom preset needs `ops`".into())),
            (_, Some(_)) => return Err(bad("`ops` is only accepted with the custom preset".into())),
            (name, None) => EnvConfig::preset(name).expect("named preset"),
        };
        if let Some(mode) = &self.reward_mode {
            let mode: RewardMode = mode.parse().map_err(|_| bad(format!("unknown reward mode {mode:?}")))?;
            cfg = cfg.reward_mode(mode);
        }
        if let Some(n) = self.max_steps {
            if n == 0 {
                return Err(bad("max_steps must be positive".into()));
            }
            cfg = cfg.max_steps(n);
        }
        Ok(cfg.expose_answer(self.expose_answer))
    }
}

/// Observation plus the task's demonstration pairs. In adaptation mode the
/// pair being solved is left out so its output stays hidden.
fn observation_doc(session: &Session) -> Value {
    let env = &session.env;
    let state = env.state().expect("sessions are always reset");
    let mut doc = serde_json::to_value(state.view(env.config().expose_answer)).expect("observation serializes");
    let active = session.active_demo();
    let demos: Vec<Value> = session
        .task
        .demo_pairs
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != active)
        .map(|(_, p)| json!(p))
        .collect();
    doc["demo_pairs"] = Value::Array(demos);
    doc
}

fn session_doc(session: &Session) -> Value {
    let cfg = session.env.config();
    json!({
        "session_id": session.id,
        "task_id": session.task.id,
        "preset": cfg.preset.to_string(),
        "operations": cfg.ops.iter().map(|op| op.to_string()).collect::<Vec<_>>(),
        "max_steps": cfg.max_steps,
        "reward_mode": cfg.reward_mode,
        "observation": observation_doc(session),
    })
}

pub async fn create_session(State(app): Shared, body: Bytes) -> Result<(StatusCode, Json<Value>), ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let config = req.config()?;
    let uuid = Uuid::new_v4();
    let id = uuid.simple().to_string();
    let fallback_seed = uuid.as_u64_pair().0;
    let task = app.catalog.resolve(
        &req.dataset,
        req.split.as_deref(),
        req.task_id.as_deref(),
        req.seed.unwrap_or(fallback_seed),
    )?;
    let options = ResetOptions {
        adaptation: req.adaptation,
        pair_index: req.pair_index,
        seed: req.seed,
    };
    let sink = SessionSink::open(app.trace_dir.as_deref(), &id)
        .map_err(|e| ApiError::unprocessable("trace_unavailable", e.to_string()))?;
    let env = WireEnv(ArcEnv::with_seed(config, fallback_seed));
    let mut env = TraceRecorder::new(env, sink, id.clone());
    env.reset(&task, &options)?;
    let session = Session {
        id,
        env,
        task,
        options,
        created_at: chrono::Utc::now(),
    };
    let doc = session_doc(&session);
    app.sessions.insert(session);
    Ok((StatusCode::CREATED, Json(doc)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepRequest {
    operation: usize,
    #[serde(default)]
    selection: Option<TraceSelection>,
}

pub async fn step(State(app): Shared, Path(id): Path<String>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let slot = app.sessions.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let req: StepRequest = parse_body(&body)?;
    let mut session = slot.session.lock().await;
    let action = match req.selection {
        Some(TraceSelection::Bbox([r0, c0, r1, c1])) => WireAction::BBox(BBoxAction::new(r0, c0, r1, c1, req.operation)),
        Some(TraceSelection::Mask(rle)) => {
            let sel = rle.decode().map_err(|e| ApiError::unprocessable("bad_selection", e.to_string()))?;
            WireAction::Mask(Action::new(req.operation, sel))
        }
        None => {
            let env = &session.env;
            let op = env
                .config()
                .operation(req.operation)
                .ok_or(arcle_core::EnvError::IllegalOp(req.operation))?;
            let frame = op.selection_frame(env.state().expect("sessions are always reset"));
            WireAction::Mask(Action::new(req.operation, Selection::empty(frame)))
        }
    };
    let errors_before = session.env.recording_errors();
    let res = session.env.step(action)?;
    let (reward, terminated, truncated) = (res.reward, res.terminated, res.truncated);
    let info = serde_json::to_value(res.info).expect("step info serializes");
    if session.env.recording_errors() > errors_before {
        warn!(
            session = %session.id,
            "trace write failed: {}",
            session.env.last_recording_error().unwrap_or_default()
        );
    }
    Ok(Json(json!({
        "observation": observation_doc(&session),
        "reward": reward,
        "terminated": terminated,
        "truncated": truncated,
        "info": info,
    })))
}

pub async fn reset(State(app): Shared, Path(id): Path<String>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let slot = app.sessions.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let mut session = slot.session.lock().await;
    let options: ResetOptions = if body.iter().all(u8::is_ascii_whitespace) {
        session.options.clone()
    } else {
        parse_body(&body)?
    };
    let task = session.task.clone();
    session.env.reset(&task, &options)?;
    session.options = options;
    Ok(Json(session_doc(&session)))
}

pub async fn state(State(app): Shared, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let slot = app.sessions.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let session = slot.session.lock().await;
    Ok(Json(observation_doc(&session)))
}

pub async fn trace(State(app): Shared, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let slot = app.sessions.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let session = slot.session.lock().await;
    Ok(Json(serde_json::to_value(session.records()).expect("records serialize")))
}

#[derive(Debug, Deserialize)]
pub struct TaskQuery {
    #[serde(default = "default_dataset")]
    dataset: String,
    split: Option<String>,
    max_dim: Option<usize>,
}

pub async fn tasks(State(app): Shared, Query(q): Query<TaskQuery>) -> Result<Json<Vec<TaskSummary>>, ApiError> {
    Ok(Json(app.catalog.list(&q.dataset, q.split.as_deref(), q.max_dim)?))
}
