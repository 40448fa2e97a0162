//! Read-only task datasets served by the API.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use tracing::warn;

use arcle_core::task::{load_task_dir_lenient, sample_task, Split, Task, TaskSource};
use arcle_core::{gen_random_task, GeneratorSpec};

use crate::error::ApiError;

#[derive(Debug, Default)]
pub struct Catalog {
    training: Vec<Arc<Task>>,
    evaluation: Vec<Arc<Task>>,
    miniarc: Vec<Arc<Task>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskSummary {
    pub id: String,
    pub source: TaskSource,
    pub demo_pairs: usize,
    pub test_pairs: usize,
    /// Largest height and width over every grid of the task.
    pub max_dim: [usize; 2],
}

impl TaskSummary {
    fn of(task: &Task) -> Self {
        let (h, w) = task
            .grids()
            .fold((0, 0), |(h, w), g| (h.max(g.height()), w.max(g.width())));
        TaskSummary {
            id: task.id.clone(),
            source: task.source,
            demo_pairs: task.demo_pairs.len(),
            test_pairs: task.test_pairs.len(),
            max_dim: [h, w],
        }
    }
}

fn load_dir(dir: &Path, source: TaskSource) -> Vec<Arc<Task>> {
    match load_task_dir_lenient(dir, source) {
        Ok((tasks, bad)) => {
            for e in bad {
                warn!("skipping task: {e}");
            }
            tasks.into_iter().map(Arc::new).collect()
        }
        Err(e) => {
            warn!("dataset unavailable: {e}");
            Vec::new()
        }
    }
}

impl Catalog {
    /// Loads `root/{training,evaluation,miniarc}`; missing directories yield
    /// empty datasets.
    pub fn load(root: &Path) -> Self {
        Catalog {
            training: load_dir(&root.join(Split::Training.dir_name()), TaskSource::ArcTrain),
            evaluation: load_dir(&root.join(Split::Evaluation.dir_name()), TaskSource::ArcEval),
            miniarc: load_dir(&root.join("miniarc"), TaskSource::MiniArc),
        }
    }

    pub fn from_tasks(training: Vec<Task>, evaluation: Vec<Task>, miniarc: Vec<Task>) -> Self {
        let wrap = |v: Vec<Task>| v.into_iter().map(Arc::new).collect();
        Catalog {
            training: wrap(training),
            evaluation: wrap(evaluation),
            miniarc: wrap(miniarc),
        }
    }

    fn dataset(&self, dataset: &str, split: Option<&str>) -> Result<&[Arc<Task>], ApiError> {
        match dataset {
            "arc" => {
                let split: Split = split
                    .unwrap_or("training")
                    .parse()
                    .map_err(|_| ApiError::unprocessable("bad_split", "split must be training or evaluation"))?;
                Ok(match split {
                    Split::Training => &self.training,
                    Split::Evaluation => &self.evaluation,
                })
            }
            "miniarc" => Ok(&self.miniarc),
            other => Err(ApiError::unprocessable("bad_dataset", format!("unknown dataset {other:?}"))),
        }
    }

    /// Resolves a task. Without an id, one is sampled with `seed`. The
    /// `random` dataset builds tasks from generator ids such as
    /// `random-5x5-c4-s7`.
    pub fn resolve(&self, dataset: &str, split: Option<&str>, task_id: Option<&str>, seed: u64) -> Result<Arc<Task>, ApiError> {
        if dataset == "random" {
            let spec = match task_id {
                Some(id) => GeneratorSpec::from_task_id(id)
                    .ok_or_else(|| ApiError::not_found("unknown_task", format!("no generated task {id:?}")))?,
                None => GeneratorSpec::default().with_seed(seed),
            };
            let task = gen_random_task(&spec).map_err(|e| ApiError::unprocessable("bad_generator", e.to_string()))?;
            return Ok(Arc::new(task));
        }
        let tasks = self.dataset(dataset, split)?;
        match task_id {
            Some(id) => tasks
                .iter()
                .find(|t| t.id == id)
                .cloned()
                .ok_or_else(|| ApiError::not_found("unknown_task", format!("no task {id:?} in {dataset}"))),
            None => sample_task(tasks, seed, None)
                .cloned()
                .map_err(|e| ApiError::not_found("unknown_task", e.to_string())),
        }
    }

    /// Summaries of a dataset, keeping tasks whose every grid fits
    /// `max_dim` × `max_dim`.
    pub fn list(&self, dataset: &str, split: Option<&str>, max_dim: Option<usize>) -> Result<Vec<TaskSummary>, ApiError> {
        if dataset == "random" {
            return Ok(Vec::new());
        }
        Ok(self
            .dataset(dataset, split)?
            .iter()
            .filter(|t| max_dim.is_none_or(|m| t.fits(m, m)))
            .map(|t| TaskSummary::of(t))
            .collect())
    }
}
