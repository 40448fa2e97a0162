//! Solving traces: one JSON record per reset or step, stored as JSONL.

use std::io::{self, BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::env::{EnvAction, EnvConfig, EnvError, Environment, ResetOptions, StepResult};
use crate::grid::{Dims, GridError, Selection};
use crate::state::{EnvState, Observation};
use crate::task::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Reset,
    Step,
}

/// Run-length encoded binary mask.
///
/// `runs` alternate between unset and set cells in row-major order,
/// starting with unset (a leading zero-length run when the first cell is
/// set). The runs sum to `height * width`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub height: usize,
    pub width: usize,
    pub runs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RleError {
    #[error(transparent)]
    Dims(#[from] GridError),
    #[error("runs cover {covered} cells, mask has {expected}")]
    Length { covered: u64, expected: usize },
}

impl RleMask {
    pub fn encode(sel: &Selection) -> Self {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u32;
        for &bit in sel.bits() {
            if bit != current {
                runs.push(len);
                current = bit;
                len = 0;
            }
            len += 1;
        }
        runs.push(len);
        RleMask {
            height: sel.dims().height(),
            width: sel.dims().width(),
            runs,
        }
    }

    pub fn decode(&self) -> Result<Selection, RleError> {
        let dims = Dims::new(self.height, self.width)?;
        let covered: u64 = self.runs.iter().map(|&r| r as u64).sum();
        if covered != dims.area() as u64 {
            return Err(RleError::Length {
                covered,
                expected: dims.area(),
            });
        }
        let mut bits = Vec::with_capacity(dims.area());
        for (i, &run) in self.runs.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, run as usize));
        }
        Ok(Selection::from_bits(dims, bits).expect("length checked"))
    }
}

/// Selection as recorded: a rectangle when the action came through the
/// bounding-box wrapper, a run-length mask otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceSelection {
    Bbox([i64; 4]),
    Mask(RleMask),
}

/// One reset or step of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub session_id: String,
    pub task_id: String,
    pub kind: RecordKind,
    pub index: u64,
    pub operation: Option<usize>,
    pub selection: Option<TraceSelection>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    #[serde(serialize_with = "ser_digest", deserialize_with = "de_digest")]
    pub grid_digest: u64,
    #[serde(rename = "ts")]
    pub timestamp: DateTime<Utc>,
}

// 16 hex digits; a JSON number would lose precision in JavaScript clients.
pub(crate) fn ser_digest<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:016x}"))
}

fn de_digest<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    let text = String::deserialize(d)?;
    if text.len() != 16 {
        return Err(serde::de::Error::custom("grid_digest must be 16 hex digits"));
    }
    u64::from_str_radix(&text, 16).map_err(serde::de::Error::custom)
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes one JSON document per line.
pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> io::Result<()> {
    for rec in records {
        write_record(&mut out, rec)?;
    }
    out.flush()
}

fn write_record<W: Write>(out: &mut W, rec: &TraceRecord) -> io::Result<()> {
    serde_json::to_writer(&mut *out, rec)?;
    out.write_all(b"\n")
}

/// Reads records written by [`write_trace`]. Blank lines are skipped;
/// line numbers in errors are 1-based. Indices must strictly increase within
/// a session.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records: Vec<TraceRecord> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).map_err(|e| TraceError::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?;
        let prev = records.iter().rev().find(|r| r.session_id == rec.session_id);
        if let Some(prev) = prev {
            if rec.index <= prev.index {
                return Err(TraceError::MalformedRecord {
                    line: i + 1,
                    reason: format!("index {} does not follow {}", rec.index, prev.index),
                });
            }
        }
        records.push(rec);
    }
    Ok(records)
}

/// Destination for trace records.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()>;
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()> {
        self.push(rec.clone());
        Ok(())
    }
}

/// Writes each record as a line and flushes immediately.
#[derive(Debug)]
pub struct JsonlSink<W: Write>(pub W);

impl<W: Write> TraceSink for JsonlSink<W> {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()> {
        write_record(&mut self.0, rec)?;
        self.0.flush()
    }
}

impl<S: TraceSink + ?Sized> TraceSink for Box<S> {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()> {
        (**self).record(rec)
    }
}

/// Wrapper that appends a record to `sink` for every successful reset and
/// step. Sink failures are counted, never propagated.
#[derive(Debug)]
pub struct TraceRecorder<E, S> {
    inner: E,
    sink: S,
    session_id: String,
    next_index: u64,
    errors: u64,
    last_error: Option<String>,
}

impl<E: Environment, S: TraceSink> TraceRecorder<E, S> {
    pub fn new(inner: E, sink: S, session_id: impl Into<String>) -> Self {
        TraceRecorder {
            inner,
            sink,
            session_id: session_id.into(),
            next_index: 0,
            errors: 0,
            last_error: None,
        }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn into_parts(self) -> (E, S) {
        (self.inner, self.sink)
    }

    /// Number of records the sink failed to store.
    pub fn recording_errors(&self) -> u64 {
        self.errors
    }

    pub fn last_recording_error(&self) -> Option<&str> {
        self.last_error.as_deref()
    }

    fn emit(&mut self, kind: RecordKind, op: Option<usize>, sel: Option<TraceSelection>, step: Option<(f64, bool, bool)>) {
        let Some(state) = self.inner.state() else { return };
        let (reward, terminated, truncated) = step.unwrap_or((0.0, false, false));
        let rec = TraceRecord {
            session_id: self.session_id.clone(),
            task_id: self.inner.task_id().unwrap_or_default().to_string(),
            kind,
            index: self.next_index,
            operation: op,
            selection: sel,
            reward,
            terminated,
            truncated,
            grid_digest: state.grid.digest(),
            timestamp: Utc::now(),
        };
        self.next_index += 1;
        if let Err(e) = self.sink.record(&rec) {
            self.errors += 1;
            self.last_error = Some(e.to_string());
        }
    }
}

impl<E, S> Environment for TraceRecorder<E, S>
where
    E: Environment,
    E::Action: EnvAction,
    S: TraceSink,
{
    type Action = E::Action;

    fn reset(&mut self, task: &Task, options: &ResetOptions) -> Result<Observation<'_>, EnvError> {
        self.inner.reset(task, options)?;
        self.emit(RecordKind::Reset, None, None, None);
        let expose = self.inner.config().expose_answer;
        Ok(self.inner.state().expect("reset").view(expose))
    }

    fn step(&mut self, action: Self::Action) -> Result<StepResult<'_>, EnvError> {
        let op = action.operation_id();
        let sel = action.trace_selection();
        let res = self.inner.step(action)?;
        let (reward, terminated, truncated, info) = (res.reward, res.terminated, res.truncated, res.info);
        self.emit(RecordKind::Step, Some(op), Some(sel), Some((reward, terminated, truncated)));
        let expose = self.inner.config().expose_answer;
        Ok(StepResult {
            observation: self.inner.state().expect("stepped").view(expose),
            reward,
            terminated,
            truncated,
            info,
        })
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
