use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;

use arcle_core::replay::replay;
use arcle_core::trace::{read_trace, TraceRecord};

use crate::common::{hex, usage, EnvArgs, TaskArgs};

#[derive(Debug, Args)]
pub struct ReplayArgs {
    trace: PathBuf,
    /// Overrides the task named in the trace.
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    env: EnvArgs,
}

/// Splits records by session, keeping first-appearance order.
fn sessions(records: Vec<TraceRecord>) -> Vec<(String, Vec<TraceRecord>)> {
    let mut out: Vec<(String, Vec<TraceRecord>)> = Vec::new();
    for rec in records {
        match out.iter_mut().find(|(id, _)| *id == rec.session_id) {
            Some((_, recs)) => recs.push(rec),
            None => out.push((rec.session_id.clone(), vec![rec])),
        }
    }
    out
}

pub fn run(args: ReplayArgs, json: bool) -> Result<ExitCode> {
    let file = File::open(&args.trace).with_context(|| format!("opening {}", args.trace.display()))?;
    let records = read_trace(BufReader::new(file))?;
    if records.is_empty() {
        return Err(usage(format!("{} holds no records", args.trace.display())));
    }
    let config = args.env.config()?;
    let options = args.env.reset_options();
    for (session, recs) in sessions(records) {
        let task = args.task.resolve(Some(&recs[0].task_id))?;
        match replay(&recs, &task, &config, &options) {
            Ok(report) => {
                let digest = report.final_digest.map(hex).unwrap_or_default();
                if json {
                    let doc = json!({
                        "session_id": session,
                        "task_id": task.id,
                        "resets": report.resets,
                        "steps": report.steps,
                        "final_digest": digest,
                        "ok": true,
                    });
                    println!("{doc}");
                } else {
                    println!(
                        "session {session}: {} resets, {} steps, all digests match (final {digest})",
                        report.resets, report.steps
                    );
                }
            }
            Err(e) => {
                if json {
                    let doc = json!({ "session_id": session, "ok": false, "error": e.to_string() });
                    println!("{doc}");
                }
                eprintln!("session {session}: {e}");
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
