//! Re-executes a recorded trace through a fresh environment and checks that
//! every record reproduces.

use thiserror::Error;

use crate::env::{Action, ArcEnv, EnvConfig, EnvError, Environment, ResetOptions};
use crate::grid::Selection;
use crate::task::Task;
use crate::trace::{RecordKind, TraceRecord, TraceSelection};
use crate::wrappers::BBoxAction;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub resets: usize,
    pub steps: usize,
    pub final_digest: Option<u64>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("record {index}: {field} diverged (recorded {expected}, replayed {actual})")]
    Divergence {
        index: u64,
        field: &'static str,
        expected: String,
        actual: String,
    },
    #[error("record {index}: {source}")]
    Env {
        index: u64,
        #[source]
        source: EnvError,
    },
    #[error("record {index}: {reason}")]
    BadRecord { index: u64, reason: String },
}

fn check<T: PartialEq + std::fmt::Display>(index: u64, field: &'static str, expected: T, actual: T) -> Result<(), ReplayError> {
    if expected == actual {
        Ok(())
    } else {
        Err(ReplayError::Divergence {
            index,
            field,
            expected: expected.to_string(),
            actual: actual.to_string(),
        })
    }
}

fn hex(d: u64) -> String {
    format!("{d:016x}")
}

/// Replays `records` for `task` under `config`, resetting with `options` at
/// every reset record. Stops at the first divergence.
pub fn replay(
    records: &[TraceRecord],
    task: &Task,
    config: &EnvConfig,
    options: &ResetOptions,
) -> Result<ReplayReport, ReplayError> {
    let mut env = ArcEnv::new(config.clone());
    let mut report = ReplayReport {
        resets: 0,
        steps: 0,
        final_digest: None,
    };
    let mut started = false;
    for rec in records {
        let index = rec.index;
        let env_err = |source| ReplayError::Env { index, source };
        let digest = match rec.kind {
            RecordKind::Reset => {
                let obs = env.reset(task, options).map_err(env_err)?;
                started = true;
                report.resets += 1;
                obs.grid().digest()
            }
            RecordKind::Step => {
                if !started {
                    return Err(ReplayError::BadRecord {
                        index,
                        reason: "step before any reset".into(),
                    });
                }
                let op_id = rec.operation.ok_or_else(|| ReplayError::BadRecord {
                    index,
                    reason: "step without operation".into(),
                })?;
                let state = env.state().expect("reset");
                let op = config.operation(op_id).ok_or(ReplayError::Env {
                    index,
                    source: EnvError::IllegalOp(op_id),
                })?;
                let selection = match &rec.selection {
                    Some(TraceSelection::Bbox([r0, c0, r1, c1])) => {
                        BBoxAction::new(*r0, *c0, *r1, *c1, op_id).materialize(state, op)
                    }
                    Some(TraceSelection::Mask(rle)) => rle.decode().map_err(|e| ReplayError::BadRecord {
                        index,
                        reason: e.to_string(),
                    })?,
                    None => Selection::empty(op.selection_frame(state)),
                };
                let res = env.step(Action::new(op_id, selection)).map_err(env_err)?;
                check(index, "reward", rec.reward.to_bits(), res.reward.to_bits()).map_err(|_| {
                    ReplayError::Divergence {
                        index,
                        field: "reward",
                        expected: rec.reward.to_string(),
                        actual: res.reward.to_string(),
                    }
                })?;
                check(index, "terminated", rec.terminated, res.terminated)?;
                check(index, "truncated", rec.truncated, res.truncated)?;
                report.steps += 1;
                res.observation.grid().digest()
            }
        };
        check(index, "grid_digest", hex(rec.grid_digest), hex(digest))?;
        report.final_digest = Some(digest);
    }
    Ok(report)
}
