//! Flags and helpers shared by `rollout` and `replay`.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;

use arcle_core::task::{load_task_file, Split, Task, TaskSource};
use arcle_core::{gen_random_task, EnvConfig, GeneratorSpec, Operation, PresetName, ResetOptions, RewardMode, DEFAULT_MAX_STEPS};

/// Bad invocation; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn parse_preset(s: &str) -> Result<PresetName, String> {
    s.parse().map_err(|_| format!("unknown preset {s:?} (o2arc, arc, raw, custom)"))
}

#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    /// Operation preset: o2arc, arc, raw or custom.
    #[arg(long, default_value = "o2arc", value_parser = parse_preset)]
    pub preset: PresetName,
    /// Comma-separated operation names for the custom preset.
    #[arg(long, value_delimiter = ',')]
    pub ops: Vec<String>,
    /// Dense reward (negative mismatch ratio every step).
    #[arg(long)]
    pub dense: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u32,
    /// Start episodes from a demonstration pair.
    #[arg(long)]
    pub adaptation: bool,
    #[arg(long)]
    pub pair_index: Option<usize>,
    /// Seed for picking the demonstration pair.
    #[arg(long)]
    pub pair_seed: Option<u64>,
}

impl EnvArgs {
    pub fn config(&self) -> Result<EnvConfig> {
        let cfg = match (self.preset, self.ops.is_empty()) {
            (PresetName::Custom, true) => return Err(usage("--preset custom needs --ops")),
            (PresetName::Custom, false) => {
                let ops = self
                    .ops
                    .iter()
                    .map(|n| n.parse::<Operation>().map_err(|_| usage(format!("unknown operation {n:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                EnvConfig::custom(ops)
            }
            (_, false) => return Err(usage("--ops is only valid with --preset custom")),
            (name, true) => EnvConfig::preset(name).expect("named preset"),
        };
        if self.max_steps == 0 {
            return Err(usage("--max-steps must be positive"));
        }
        let mode = if self.dense { RewardMode::Dense } else { RewardMode::Sparse };
        Ok(cfg.reward_mode(mode).max_steps(self.max_steps))
    }

    pub fn reset_options(&self) -> ResetOptions {
        ResetOptions {
            adaptation: self.adaptation,
            pair_index: self.pair_index,
            seed: self.pair_seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TaskArgs {
    /// Task file, or a task id looked up under --data-root.
    #[arg(long, conflicts_with = "random_spec")]
    pub task: Option<String>,
    /// Generated task id such as random-5x5-c10-s0 (the `random-` prefix is optional).
    #[arg(long)]
    pub random_spec: Option<String>,
    #[arg(long, env = "ARCLE_DATA_ROOT")]
    pub data_root: Option<PathBuf>,
}

pub fn random_task(spec: &str) -> Result<Task> {
    let id = if spec.starts_with("random-") { spec.to_string() } else { format!("random-{spec}") };
    let spec = GeneratorSpec::from_task_id(&id).ok_or_else(|| usage(format!("bad random spec {spec:?} (expected e.g. random-5x5-c10-s0)")))?;
    gen_random_task(&spec).map_err(|e| usage(e.to_string()))
}

fn guess_source(path: &Path) -> TaskSource {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let parent = path.parent().and_then(|p| p.file_name()).and_then(|s| s.to_str());
    if stem.starts_with("random-") {
        TaskSource::Generated
    } else if parent == Some(Split::Evaluation.dir_name()) {
        TaskSource::ArcEval
    } else if parent == Some("miniarc") {
        TaskSource::MiniArc
    } else {
        TaskSource::ArcTrain
    }
}

/// Finds a task by id in the splits of a data root.
pub fn find_task(root: &Path, id: &str) -> Result<Option<Task>> {
    for split in Split::ALL {
        let path = root.join(split.dir_name()).join(format!("{id}.json"));
        if path.is_file() {
            return Ok(Some(load_task_file(&path, split.source())?));
        }
    }
    Ok(None)
}

impl TaskArgs {
    /// Resolves the task from the flags; `fallback_id` (a trace's task id)
    /// is used when neither --task nor --random-spec is given.
    pub fn resolve(&self, fallback_id: Option<&str>) -> Result<Task> {
        if let Some(spec) = &self.random_spec {
            return random_task(spec);
        }
        let id = match (&self.task, fallback_id) {
            (Some(t), _) => {
                let path = Path::new(t);
                if path.is_file() {
                    return Ok(load_task_file(path, guess_source(path))?);
                }
                t.as_str()
            }
            (None, Some(id)) => id,
            (None, None) => return Err(usage("give --task or --random-spec")),
        };
        if GeneratorSpec::from_task_id(id).is_some() {
            return random_task(id);
        }
        let root = self
            .data_root
            .as_deref()
            .ok_or_else(|| usage(format!("task {id:?} is not a file; pass --data-root to look it up")))?;
        find_task(root, id)?.ok_or_else(|| usage(format!("no task {id:?} under {}", root.display())))
    }
}

pub fn hex(d: u64) -> String {
    format!("{d:016x}")
}
