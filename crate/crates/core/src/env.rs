//! Episode loop: presets, reset/step semantics and rewards.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{compare_exact, mismatch_ratio, Color, Selection};
use crate::ops::{apply_in_place, Effect, NoOpReason, OpError, Operation};
use crate::state::{EnvState, Observation};
use crate::task::Task;
use crate::trace::{RleMask, TraceSelection};

/// Truncation horizon when none is configured.
pub const DEFAULT_MAX_STEPS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    O2arc,
    Arc,
    Raw,
    Custom,
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresetName::O2arc => "o2arc",
            PresetName::Arc => "arc",
            PresetName::Raw => "raw",
            PresetName::Custom => "custom",
        })
    }
}

impl FromStr for PresetName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "o2arc" => Ok(PresetName::O2arc),
            "arc" => Ok(PresetName::Arc),
            "raw" => Ok(PresetName::Raw),
            "custom" => Ok(PresetName::Custom),
            other => Err(format!("unknown preset {other:?} (expected o2arc, arc, raw or custom)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    /// 1 on a correct submit, 0 otherwise.
    #[default]
    Sparse,
    /// Sparse on submit; minus the mismatch ratio after every other step.
    Dense,
}

impl FromStr for RewardMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sparse" => Ok(RewardMode::Sparse),
            "dense" => Ok(RewardMode::Dense),
            other => Err(format!("unknown reward mode {other:?}")),
        }
    }
}

/// Environment configuration. Action operation ids index into `ops`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub preset: PresetName,
    pub ops: Vec<Operation>,
    pub max_steps: u32,
    pub reward_mode: RewardMode,
    pub expose_answer: bool,
}

impl EnvConfig {
    fn with_ops(preset: PresetName, ops: Vec<Operation>) -> Self {
        EnvConfig {
            preset,
            ops,
            max_steps: DEFAULT_MAX_STEPS,
            reward_mode: RewardMode::Sparse,
            expose_answer: false,
        }
    }

    /// The 35 operations of the O2ARC interface, ids 0..=34.
    pub fn o2arc() -> Self {
        Self::with_ops(PresetName::O2arc, Operation::catalogue()[..35].to_vec())
    }

    /// Coloring, flood fill and the critical operations.
    pub fn arc() -> Self {
        let mut ops: Vec<Operation> = Color::all().map(Operation::Color).collect();
        ops.extend(Color::all().map(Operation::FloodFill));
        ops.extend([
            Operation::CopyInput,
            Operation::ResetGrid,
            Operation::ResizeGrid,
            Operation::CropGrid,
            Operation::Submit,
        ]);
        Self::with_ops(PresetName::Arc, ops)
    }

    /// Coloring plus `ResizeGrid` and `Submit`.
    pub fn raw() -> Self {
        let mut ops: Vec<Operation> = Color::all().map(Operation::Color).collect();
        ops.extend([Operation::ResizeGrid, Operation::Submit]);
        Self::with_ops(PresetName::Raw, ops)
    }

    pub fn custom(ops: Vec<Operation>) -> Self {
        Self::with_ops(PresetName::Custom, ops)
    }

    pub fn preset(name: PresetName) -> Option<Self> {
        match name {
            PresetName::O2arc => Some(Self::o2arc()),
            PresetName::Arc => Some(Self::arc()),
            PresetName::Raw => Some(Self::raw()),
            PresetName::Custom => None,
        }
    }

    pub fn reward_mode(mut self, mode: RewardMode) -> Self {
        self.reward_mode = mode;
        self
    }

    pub fn max_steps(mut self, n: u32) -> Self {
        self.max_steps = n;
        self
    }

    pub fn expose_answer(mut self, expose: bool) -> Self {
        self.expose_answer = expose;
        self
    }

    pub fn operation(&self, id: usize) -> Option<Operation> {
        self.ops.get(id).copied()
    }

    /// Id of `op` in this configuration.
    pub fn op_id(&self, op: Operation) -> Option<usize> {
        self.ops.iter().position(|&o| o == op)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetOptions {
    /// Start from a demonstration pair instead of the test pair.
    #[serde(default)]
    pub adaptation: bool,
    #[serde(default)]
    pub pair_index: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Raw action: an operation id plus a selection mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub operation: usize,
    pub selection: Selection,
}

impl Action {
    pub fn new(operation: usize, selection: Selection) -> Self {
        Action { operation, selection }
    }
}

/// Anything that names an operation id and can describe its selection for
/// a trace.
pub trait EnvAction {
    fn operation_id(&self) -> usize;
    fn trace_selection(&self) -> TraceSelection;
}

impl EnvAction for Action {
    fn operation_id(&self) -> usize {
        self.operation
    }

    fn trace_selection(&self) -> TraceSelection {
        TraceSelection::Mask(RleMask::encode(&self.selection))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepInfo {
    pub operation: Operation,
    /// `None` when the operation changed nothing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_op: Option<NoOpReason>,
    /// Set on submit only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_match: Option<bool>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepResult<'a> {
    pub observation: Observation<'a>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("task {0:?} has no pair to start from")]
    EmptyTask(String),
    #[error("pair index {index} out of range ({available} available)")]
    PairIndex { index: usize, available: usize },
    #[error("episode is over; call reset")]
    EpisodeOver,
    #[error("environment has not been reset")]
    NotReset,
    #[error("operation id {0} is not allowed")]
    IllegalOp(usize),
    #[error(transparent)]
    Selection(#[from] OpError),
}

/// Common reset/step surface shared by the base environment and wrappers.
pub trait Environment {
    type Action;

    fn reset(&mut self, task: &Task, options: &ResetOptions) -> Result<Observation<'_>, EnvError>;
    fn step(&mut self, action: Self::Action) -> Result<StepResult<'_>, EnvError>;
    fn state(&self) -> Option<&EnvState>;
    fn config(&self) -> &EnvConfig;
    fn task_id(&self) -> Option<&str>;
    /// Whether the last step hit the step limit.
    fn truncated(&self) -> bool;
}

/// The base environment.
#[derive(Debug, Clone)]
pub struct ArcEnv {
    config: EnvConfig,
    rng: ChaCha8Rng,
    task_id: Option<String>,
    state: Option<EnvState>,
    pair: Option<(bool, usize)>,
    truncated: bool,
}

impl ArcEnv {
    pub fn new(config: EnvConfig) -> Self {
        Self::with_seed(config, 0)
    }

    /// `seed` drives demonstration-pair sampling when a reset gives neither
    /// a pair index nor a seed.
    pub fn with_seed(config: EnvConfig, seed: u64) -> Self {
        ArcEnv {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            task_id: None,
            state: None,
            pair: None,
            truncated: false,
        }
    }

    /// Which pair the current episode started from: `(is_demo, index)`.
    pub fn current_pair(&self) -> Option<(bool, usize)> {
        self.pair
    }
}

fn reward(mode: RewardMode, st: &EnvState, op: Operation) -> (f64, Option<bool>) {
    if op == Operation::Submit {
        let exact = compare_exact(&st.grid, st.answer());
        return (if exact { 1.0 } else { 0.0 }, Some(exact));
    }
    match mode {
        RewardMode::Sparse => (0.0, None),
        RewardMode::Dense => {
            let ratio = mismatch_ratio(&st.grid, st.answer());
            (if ratio == 0.0 { 0.0 } else { -ratio }, None)
        }
    }
}

impl Environment for ArcEnv {
    type Action = Action;

    fn reset(&mut self, task: &Task, options: &ResetOptions) -> Result<Observation<'_>, EnvError> {
        let pairs = if options.adaptation {
            &task.demo_pairs
        } else {
            &task.test_pairs
        };
        if pairs.is_empty() {
            return Err(EnvError::EmptyTask(task.id.clone()));
        }
        let index = match (options.pair_index, options.seed) {
            (Some(i), _) if i >= pairs.len() => {
                return Err(EnvError::PairIndex {
                    index: i,
                    available: pairs.len(),
                })
            }
            (Some(i), _) => i,
            (None, _) if !options.adaptation => 0,
            (None, Some(seed)) => ChaCha8Rng::seed_from_u64(seed).random_range(0..pairs.len()),
            (None, None) => self.rng.random_range(0..pairs.len()),
        };
        let pair = &pairs[index];
        self.pair = Some((options.adaptation, index));
        self.task_id = Some(task.id.clone());
        self.truncated = false;
        let state = self.state.insert(EnvState::new(pair.input.clone(), pair.output.clone()));
        Ok(state.view(self.config.expose_answer))
    }

    fn step(&mut self, action: Action) -> Result<StepResult<'_>, EnvError> {
        let op = self
            .config
            .operation(action.operation)
            .ok_or(EnvError::IllegalOp(action.operation))?;
        let state = self.state.as_mut().ok_or(EnvError::NotReset)?;
        if state.terminated || self.truncated {
            return Err(EnvError::EpisodeOver);
        }
        // validates the selection before touching the state
        let effect = apply_in_place(state, op, &action.selection)?;
        state.step_count += 1;
        let (reward, exact_match) = reward(self.config.reward_mode, state, op);
        let terminated = state.terminated;
        let truncated = state.step_count >= self.config.max_steps;
        self.truncated = truncated;
        Ok(StepResult {
            observation: state.view(self.config.expose_answer),
            reward,
            terminated,
            truncated,
            info: StepInfo {
                operation: op,
                no_op: match effect {
                    Effect::Applied => None,
                    Effect::NoOp(r) => Some(r),
                },
                exact_match,
            },
        })
    }

    fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    fn config(&self) -> &EnvConfig {
        &self.config
    }

    fn task_id(&self) -> Option<&str> {
        self.task_id.as_deref()
    }

    fn truncated(&self) -> bool {
        self.truncated
    }
}
