use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use serde_json::json;

use arcle_core::grid::{MAX_SIDE, NUM_COLORS};
use arcle_core::task::{load_task_dir_lenient, parse_task, Split, Task, TaskError};

struct SplitReport {
    name: &'static str,
    tasks: usize,
    problems: Vec<String>,
}

/// Bounds and load -> serialize -> load fixed point for one task.
fn check(task: &Task) -> Vec<String> {
    let mut problems = Vec::new();
    for g in task.grids() {
        let (h, w) = (g.height(), g.width());
        if !(1..=MAX_SIDE).contains(&h) || !(1..=MAX_SIDE).contains(&w) {
            problems.push(format!("{}: grid {h}x{w} out of bounds", task.id));
        }
        if g.cells().iter().any(|&v| v >= NUM_COLORS) {
            problems.push(format!("{}: color out of range", task.id));
        }
    }
    let text = task.to_json().to_string();
    match parse_task(&text, &task.id, task.source, Path::new(&task.id)) {
        Ok(again) if &again == task && text.eq(&again.to_json().to_string()) => {}
        Ok(_) => problems.push(format!("{}: serialization is not a fixed point", task.id)),
        Err(e) => problems.push(format!("{}: reserialized task does not parse: {e}", task.id)),
    }
    problems
}

fn check_split(root: &Path, split: Split) -> SplitReport {
    let name = split.dir_name();
    match load_task_dir_lenient(&root.join(name), split.source()) {
        Ok((tasks, bad)) => {
            let mut problems: Vec<String> = bad.iter().map(|e: &TaskError| format!("MalformedTask {e}")).collect();
            problems.extend(tasks.iter().flat_map(check));
            SplitReport {
                name,
                tasks: tasks.len(),
                problems,
            }
        }
        Err(e) => SplitReport {
            name,
            tasks: 0,
            problems: vec![e.to_string()],
        },
    }
}

pub fn run(root: &Path, json: bool) -> Result<ExitCode> {
    let reports: Vec<SplitReport> = Split::ALL.iter().map(|&s| check_split(root, s)).collect();
    let ok = reports.iter().all(|r| r.problems.is_empty());
    if json {
        let splits: serde_json::Map<String, serde_json::Value> = reports
            .iter()
            .map(|r| (r.name.to_string(), json!({ "tasks": r.tasks, "problems": r.problems })))
            .collect();
        println!("{}", json!({ "ok": ok, "splits": splits }));
    } else {
        for r in &reports {
            for p in &r.problems {
                eprintln!("{}: {p}", r.name);
            }
        }
        let counts: Vec<String> = reports.iter().map(|r| format!("{} {}", r.tasks, r.name)).collect();
        println!("{} tasks {}", counts.join(", "), if ok { "OK" } else { "FAILED" });
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
