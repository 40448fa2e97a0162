use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;

use arcle_core::rollout::{bench_rollout, run_rollout, RolloutSummary, StepLine};
use arcle_core::trace::JsonlSink;
use arcle_core::{ArcEnv, BBoxAction, BBoxWrapper, Environment, ResetOptions, Task, TraceRecorder};

use crate::common::{hex, EnvArgs, TaskArgs};

#[derive(Debug, Args)]
pub struct RolloutArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Policy seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a JSONL trace of every reset and step.
    #[arg(long, conflicts_with = "bench")]
    trace: Option<PathBuf>,
    /// Time the rollout instead of printing steps.
    #[arg(long)]
    bench: bool,
    /// Print only the summary.
    #[arg(long, short)]
    quiet: bool,
}

fn print_step(out: &mut impl Write, line: &StepLine, json: bool) -> io::Result<()> {
    if json {
        serde_json::to_writer(&mut *out, line)?;
        writeln!(out)
    } else {
        let [r0, c0, r1, c1] = line.bbox;
        writeln!(
            out,
            "step {} episode {} op {} bbox {r0},{c0},{r1},{c1} reward {:.6} terminated {} truncated {} digest {}",
            line.step,
            line.episode,
            line.operation,
            line.reward,
            line.terminated,
            line.truncated,
            hex(line.grid_digest)
        )
    }
}

fn print_summary(out: &mut impl Write, args: &RolloutArgs, task: &Task, s: &RolloutSummary, json: bool) -> io::Result<()> {
    if json {
        let doc = json!({
            "summary": {
                "task_id": task.id,
                "preset": args.env.preset.to_string(),
                "seed": args.seed,
                "steps": s.steps,
                "episodes": s.episodes,
                "submits": s.submits,
                "solved": s.solved,
                "total_reward": s.total_reward,
                "final_digest": hex(s.final_digest),
            }
        });
        writeln!(out, "{doc}")
    } else {
        writeln!(out, "task {}", task.id)?;
        writeln!(out, "preset {}", args.env.preset)?;
        writeln!(out, "seed {}", args.seed)?;
        writeln!(out, "steps {}", s.steps)?;
        writeln!(out, "episodes {}", s.episodes)?;
        writeln!(out, "submits {}", s.submits)?;
        writeln!(out, "solved {}", s.solved)?;
        writeln!(out, "total_reward {:.6}", s.total_reward)?;
        writeln!(out, "final_digest {}", hex(s.final_digest))
    }
}

fn go<E: Environment<Action = BBoxAction>>(env: &mut E, args: &RolloutArgs, task: &Task, options: &ResetOptions, json: bool) -> Result<()> {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let mut write_err = None;
    let summary = run_rollout(env, task, options, args.steps, args.seed, |line| {
        if !args.quiet && write_err.is_none() {
            write_err = print_step(&mut out, line, json).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    print_summary(&mut out, args, task, &summary, json)?;
    out.flush()?;
    Ok(())
}

pub fn run(args: RolloutArgs, json: bool) -> Result<ExitCode> {
    let task = args.task.resolve(None)?;
    let config = args.env.config()?;
    let options = args.env.reset_options();
    let mut env = BBoxWrapper::new(ArcEnv::new(config));

    if args.bench {
        let report = bench_rollout(&mut env, &task, &options, args.steps, args.seed)?;
        if json {
            let doc = json!({
                "bench": report,
                "task_id": task.id,
                "preset": args.env.preset.to_string(),
            });
            println!("{doc}");
        } else {
            println!(
                "{} steps ({} episodes) on {} under {} in {:.3} s: {:.0} steps/s",
                report.steps, report.episodes, task.id, args.env.preset, report.seconds, report.steps_per_sec
            );
        }
        return Ok(ExitCode::SUCCESS);
    }

    match &args.trace {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let session = format!("rollout-{}-{}", task.id, args.seed);
            let mut rec = TraceRecorder::new(env, JsonlSink(file), session);
            go(&mut rec, &args, &task, &options, json)?;
            if rec.recording_errors() > 0 {
                bail!(
                    "{} trace records could not be written: {}",
                    rec.recording_errors(),
                    rec.last_recording_error().unwrap_or_default()
                );
            }
        }
        None => go(&mut env, &args, &task, &options, json)?,
    }
    Ok(ExitCode::SUCCESS)
}
