use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;

use arcle_core::generate::{default_schedule, splitmix64};
use arcle_core::{gen_curriculum, gen_random_task, GeneratorSpec, Phase, Task};

use crate::common::usage;

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    height: usize,
    #[arg(long, default_value_t = 5)]
    width: usize,
    /// Colors per task when not generating a curriculum.
    #[arg(long, default_value_t = 10, conflicts_with = "phases")]
    colors: u8,
    /// Number of tasks when not generating a curriculum.
    #[arg(long, default_value_t = 1, conflicts_with = "phases")]
    count: usize,
    /// Curriculum phases as color counts, optionally `colors:episodes`
    /// (e.g. `2,4,6,8,10` or `2:50,4:50`). `default` is 2,4,6,8,10.
    #[arg(long, value_delimiter = ',')]
    phases: Vec<String>,
    /// Episodes for phases given without an explicit count.
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_phases(items: &[String], episodes: usize) -> Result<Vec<Phase>> {
    if items.len() == 1 && items[0] == "default" {
        return Ok(default_schedule(episodes));
    }
    items
        .iter()
        .map(|item| {
            let (k, n) = match item.split_once(':') {
                Some((k, n)) => (k, n.parse().map_err(|_| usage(format!("bad phase {item:?}")))?),
                None => (item.as_str(), episodes),
            };
            let num_colors = k.parse().map_err(|_| usage(format!("bad phase {item:?}")))?;
            Ok(Phase { num_colors, episodes: n })
        })
        .collect()
}

fn write_task(dir: &Path, task: &Task) -> Result<String> {
    let name = format!("{}.json", task.id);
    let path = dir.join(&name);
    fs::write(&path, task.to_json().to_string()).with_context(|| format!("writing {}", path.display()))?;
    Ok(name)
}

pub fn run(args: GenArgs, json: bool) -> Result<ExitCode> {
    let base = GeneratorSpec {
        height: args.height,
        width: args.width,
        num_colors: args.colors,
        phase_schedule: None,
        seed: args.seed,
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    if args.phases.is_empty() {
        let mut files = Vec::new();
        for i in 0..args.count {
            // task i == 0 keeps the base seed so `--count 1 --seed S` yields random-..-sS
            let seed = if i == 0 { args.seed } else { splitmix64(args.seed ^ splitmix64(i as u64)) };
            let task = gen_random_task(&base.with_seed(seed)).map_err(|e| usage(e.to_string()))?;
            files.push(write_task(&args.out, &task)?);
        }
        if json {
            println!("{}", json!({ "out": args.out, "tasks": files }));
        } else {
            println!("wrote {} tasks to {}", files.len(), args.out.display());
        }
        return Ok(ExitCode::SUCCESS);
    }

    let spec = GeneratorSpec {
        phase_schedule: Some(parse_phases(&args.phases, args.episodes)?),
        ..base
    };
    let curriculum = gen_curriculum(&spec).map_err(|e| usage(e.to_string()))?;
    let boundaries = curriculum.boundaries();
    let schedule = curriculum.schedule().to_vec();
    let mut episodes = Vec::new();
    for ep in curriculum {
        let file = write_task(&args.out, &ep.task)?;
        episodes.push(json!({
            "index": ep.index,
            "phase": ep.phase,
            "num_colors": ep.num_colors,
            "task_id": ep.task.id,
            "file": file,
        }));
    }
    let manifest = json!({ "schedule": schedule, "boundaries": boundaries, "episodes": episodes });
    let manifest_path = args.out.join("curriculum.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    if json {
        println!("{}", json!({ "out": args.out, "boundaries": boundaries, "episodes": episodes.len() }));
    } else {
        let b: Vec<String> = boundaries.iter().map(usize::to_string).collect();
        println!(
            "wrote {} curriculum tasks to {} (phase starts {})",
            episodes.len(),
            args.out.display(),
            b.join(",")
        );
    }
    Ok(ExitCode::SUCCESS)
}
