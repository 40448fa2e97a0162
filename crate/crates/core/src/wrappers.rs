//! Action-space wrappers.

use crate::env::{Action, EnvAction, EnvConfig, EnvError, Environment, ResetOptions, StepResult};
use crate::grid::Selection;
use crate::ops::Operation;
use crate::state::{EnvState, Observation};
use crate::task::Task;
use crate::trace::TraceSelection;

/// Rectangle-selection action `(r0, c0, r1, c1, op)`. Corners may come in
/// any order and are clipped to the operation's selection frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBoxAction {
    pub r0: i64,
    pub c0: i64,
    pub r1: i64,
    pub c1: i64,
    pub operation: usize,
}

impl BBoxAction {
    pub fn new(r0: i64, c0: i64, r1: i64, c1: i64, operation: usize) -> Self {
        BBoxAction { r0, c0, r1, c1, operation }
    }

    /// The mask this action selects for `op` in `state`.
    pub fn materialize(&self, state: &EnvState, op: Operation) -> Selection {
        Selection::rect(op.selection_frame(state), self.r0, self.c0, self.r1, self.c1)
    }
}

impl EnvAction for BBoxAction {
    fn operation_id(&self) -> usize {
        self.operation
    }

    fn trace_selection(&self) -> TraceSelection {
        TraceSelection::Bbox([self.r0, self.c0, self.r1, self.c1])
    }
}

/// Turns an environment taking mask actions into one taking rectangles.
#[derive(Debug, Clone)]
pub struct BBoxWrapper<E> {
    inner: E,
}

impl<E> BBoxWrapper<E> {
    pub fn new(inner: E) -> Self {
        BBoxWrapper { inner }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E: Environment<Action = Action>> Environment for BBoxWrapper<E> {
    type Action = BBoxAction;

    fn reset(&mut self, task: &Task, options: &ResetOptions) -> Result<Observation<'_>, EnvError> {
        self.inner.reset(task, options)
    }

    fn step(&mut self, action: BBoxAction) -> Result<StepResult<'_>, EnvError> {
        let op = self
            .inner
            .config()
            .operation(action.operation)
            .ok_or(EnvError::IllegalOp(action.operation))?;
        let state = self.inner.state().ok_or(EnvError::NotReset)?;
        let selection = action.materialize(state, op);
        self.inner.step(Action::new(action.operation, selection))
    }

    fn state(&self) -> Option<&EnvState> {
        self.inner.state()
    }

    fn config(&self) -> &EnvConfig {
        self.inner.config()
    }

    fn task_id(&self) -> Option<&str> {
        self.inner.task_id()
    }

    fn truncated(&self) -> bool {
        self.inner.truncated()
    }
}

/// Rejects every operation outside an allowed list with `IllegalOp`.
#[derive(Debug, Clone)]
pub struct OpSubset<E> {
    inner: E,
    allowed: Vec<Operation>,
}

impl<E: Environment> OpSubset<E> {
    pub fn new(inner: E, allowed: impl IntoIterator<Item = Operation>) -> Self {
        OpSubset {
            inner,
            allowed: allowed.into_iter().collect(),
        }
    }

    pub fn allowed(&self) -> &[Operation] {
        &self.allowed
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    /// Ids (in the wrapped configuration) of the allowed operations.
    pub fn allowed_ids(&self) -> Vec<usize> {
        let cfg = self.inner.config();
        self.allowed.iter().filter_map(|&op| cfg.op_id(op)).collect()
    }
}

impl<E> Environment for OpSubset<E>
where
    E: Environment,
    E::Action: EnvAction,
{
    type Action = E::Action;

    fn reset(&mut self, task: &Task, options: &ResetOptions) -> Result<Observation<'_>, EnvError> {
        self.inner.reset(task, options)
    }

    fn step(&mut self, action: E::Action) -> Result<StepResult<'_>, EnvError> {
        let id = action.operation_id();
        match self.inner.config().operation(id) {
            Some(op) if self.allowed.contains(&op) => self.inner.step(action),
            _ => Err(EnvError::IllegalOp(id)),
        }
    }

    fn state(&self) -> Option<&EnvState> {
        self.inner.state()
    }

    fn config(&self) -> &EnvConfig {
        self.inner.config()
    }

    fn task_id(&self) -> Option<&str> {
        self.inner.task_id()
    }

    fn truncated(&self) -> bool {
        self.inner.truncated()
    }
}
