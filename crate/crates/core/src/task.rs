//! ARC task model and dataset ingestion.
//!
//! Task files follow the public ARC layout: a JSON object with `train` and
//! `test` arrays of `{"input": [[..]], "output": [[..]]}` pairs. Unknown
//! fields are ignored, which covers Mini-ARC files carrying extra metadata.

use std::borrow::Borrow;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::grid::{Grid, GridError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskSource {
    ArcTrain,
    ArcEval,
    MiniArc,
    Generated,
}

impl TaskSource {
    /// Whether tasks from this source must carry demonstration pairs.
    fn requires_demos(self) -> bool {
        self != TaskSource::Generated
    }
}

impl fmt::Display for TaskSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskSource::ArcTrain => "arc-train",
            TaskSource::ArcEval => "arc-eval",
            TaskSource::MiniArc => "mini-arc",
            TaskSource::Generated => "generated",
        })
    }
}

/// Dataset split directories under a data root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Training,
    Evaluation,
}

impl Split {
    pub const ALL: [Split; 2] = [Split::Training, Split::Evaluation];

    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Training => "training",
            Split::Evaluation => "evaluation",
        }
    }

    pub fn source(self) -> TaskSource {
        match self {
            Split::Training => TaskSource::ArcTrain,
            Split::Evaluation => TaskSource::ArcEval,
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "training" | "train" => Ok(Split::Training),
            "evaluation" | "eval" => Ok(Split::Evaluation),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub input: Grid,
    pub output: Grid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: String,
    pub source: TaskSource,
    pub demo_pairs: Vec<Pair>,
    pub test_pairs: Vec<Pair>,
}

impl Task {
    pub fn grids(&self) -> impl Iterator<Item = &Grid> {
        self.demo_pairs
            .iter()
            .chain(&self.test_pairs)
            .flat_map(|p| [&p.input, &p.output])
    }

    /// True when every grid of the task fits inside `max_height x max_width`.
    pub fn fits(&self, max_height: usize, max_width: usize) -> bool {
        self.grids()
            .all(|g| g.height() <= max_height && g.width() <= max_width)
    }

    /// Canonical task file document.
    pub fn to_json(&self) -> Value {
        serde_json::json!({ "train": self.demo_pairs, "test": self.test_pairs })
    }
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("{file}: {path}: {reason}")]
    Malformed {
        file: PathBuf,
        path: String,
        reason: String,
    },
    #[error("{file}: {source}")]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no task matches the filter")]
    NoMatchingTask,
}

impl TaskError {
    fn malformed(file: &Path, path: impl Into<String>, reason: impl fmt::Display) -> Self {
        TaskError::Malformed {
            file: file.to_path_buf(),
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}

fn parse_grid(file: &Path, path: &str, value: Option<&Value>) -> Result<Grid, TaskError> {
    let value = value.ok_or_else(|| TaskError::malformed(file, path, "missing"))?;
    let rows = value
        .as_array()
        .ok_or_else(|| TaskError::malformed(file, path, "expected an array of rows"))?;
    let mut parsed: Vec<Vec<i64>> = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .ok_or_else(|| TaskError::malformed(file, format!("{path}[{r}]"), "expected an array of cells"))?;
        let mut out = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let v = cell.as_i64().ok_or_else(|| {
                TaskError::malformed(file, format!("{path}[{r}][{c}]"), format!("expected an integer, got {cell}"))
            })?;
            out.push(v);
        }
        parsed.push(out);
    }
    Grid::from_rows(&parsed).map_err(|e| {
        let path = match e {
            GridError::RaggedRow { row, .. } => format!("{path}[{row}]"),
            _ => path.to_string(),
        };
        TaskError::malformed(file, path, e)
    })
}

fn parse_pairs(file: &Path, key: &str, value: Option<&Value>) -> Result<Vec<Pair>, TaskError> {
    let items: Vec<&Value> = match value {
        None => return Err(TaskError::malformed(file, key, "missing")),
        Some(Value::Array(items)) => items.iter().collect(),
        // tolerated for Mini-ARC style files holding a single test pair
        Some(obj @ Value::Object(_)) => vec![obj],
        Some(_) => return Err(TaskError::malformed(file, key, "expected an array of pairs")),
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let path = format!("{key}[{i}]");
            let obj = item
                .as_object()
                .ok_or_else(|| TaskError::malformed(file, &path, "expected an object"))?;
            Ok(Pair {
                input: parse_grid(file, &format!("{path}.input"), obj.get("input"))?,
                output: parse_grid(file, &format!("{path}.output"), obj.get("output"))?,
            })
        })
        .collect()
}

/// Parses one task document. `file` is used for error context only.
pub fn parse_task(text: &str, id: &str, source: TaskSource, file: &Path) -> Result<Task, TaskError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| TaskError::malformed(file, "$", e))?;
    if !doc.is_object() {
        return Err(TaskError::malformed(file, "$", "expected a JSON object"));
    }
    let demo_pairs = parse_pairs(file, "train", doc.get("train"))?;
    let test_pairs = parse_pairs(file, "test", doc.get("test"))?;
    if source.requires_demos() && demo_pairs.is_empty() {
        return Err(TaskError::malformed(file, "train", "no demonstration pairs"));
    }
    if test_pairs.is_empty() {
        return Err(TaskError::malformed(file, "test", "no test pairs"));
    }
    Ok(Task {
        id: id.to_string(),
        source,
        demo_pairs,
        test_pairs,
    })
}

pub fn load_task_file(path: &Path, source: TaskSource) -> Result<Task, TaskError> {
    let text = fs::read_to_string(path).map_err(|source| TaskError::Io {
        file: path.to_path_buf(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_task(&text, &id, source, path)
}

/// Loads every `*.json` file in `dir`, sorted by file name. Each task id is
/// the file stem.
pub fn load_task_dir(dir: &Path, source: TaskSource) -> Result<Vec<Task>, TaskError> {
    let io_err = |source| TaskError::Io {
        file: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err)?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json") && p.is_file());
    files.sort();
    files.iter().map(|p| load_task_file(p, source)).collect()
}

/// Like [`load_task_dir`] but collects every failure instead of stopping at
/// the first one.
pub fn load_task_dir_lenient(dir: &Path, source: TaskSource) -> Result<(Vec<Task>, Vec<TaskError>), TaskError> {
    let io_err = |source| TaskError::Io {
        file: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json") && p.is_file())
        .collect();
    files.sort();
    let (mut ok, mut bad) = (Vec::new(), Vec::new());
    for p in &files {
        match load_task_file(p, source) {
            Ok(t) => ok.push(t),
            Err(e) => bad.push(e),
        }
    }
    Ok((ok, bad))
}

/// Loads `<root>/training` or `<root>/evaluation`.
pub fn load_split(root: &Path, split: Split) -> Result<Vec<Task>, TaskError> {
    load_task_dir(&root.join(split.dir_name()), split.source())
}

/// Picks a task uniformly (under `seed`) among those whose every grid fits
/// `max_dims`, when given.
pub fn sample_task<T: Borrow<Task>>(tasks: &[T], seed: u64, max_dims: Option<(usize, usize)>) -> Result<&T, TaskError> {
    let eligible: Vec<&T> = tasks
        .iter()
        .filter(|t| max_dims.is_none_or(|(h, w)| (*t).borrow().fits(h, w)))
        .collect();
    if eligible.is_empty() {
        return Err(TaskError::NoMatchingTask);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(eligible[rng.random_range(0..eligible.len())])
}
