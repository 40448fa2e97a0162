use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use serde_json::json;

use arcle_core::grid::NUM_COLORS;
use arcle_core::task::{load_task_dir_lenient, Split, Task};

const SIDE_BUCKETS: [(usize, usize); 6] = [(1, 5), (6, 10), (11, 15), (16, 20), (21, 25), (26, 30)];

#[derive(Default)]
struct Histograms {
    tasks: usize,
    grids: usize,
    /// Grids by their longer side, bucketed by `SIDE_BUCKETS`.
    side: [usize; 6],
    /// Tasks by number of distinct colors used.
    colors_per_task: BTreeMap<usize, usize>,
    /// Total cells of each color.
    cells_by_color: [u64; NUM_COLORS as usize],
    demo_pairs: BTreeMap<usize, usize>,
}

impl Histograms {
    fn add(&mut self, task: &Task) {
        self.tasks += 1;
        *self.demo_pairs.entry(task.demo_pairs.len()).or_default() += 1;
        let mut used = [false; NUM_COLORS as usize];
        for g in task.grids() {
            self.grids += 1;
            let side = g.height().max(g.width());
            let bucket = SIDE_BUCKETS.iter().position(|&(lo, hi)| (lo..=hi).contains(&side)).expect("side within 1..=30");
            self.side[bucket] += 1;
            for &v in g.cells() {
                used[v as usize] = true;
                self.cells_by_color[v as usize] += 1;
            }
        }
        *self.colors_per_task.entry(used.iter().filter(|&&u| u).count()).or_default() += 1;
    }

    fn to_json(&self) -> serde_json::Value {
        let side: serde_json::Map<String, serde_json::Value> = SIDE_BUCKETS
            .iter()
            .zip(self.side)
            .map(|((lo, hi), n)| (format!("{lo}-{hi}"), json!(n)))
            .collect();
        json!({
            "tasks": self.tasks,
            "grids": self.grids,
            "max_side": side,
            "colors_per_task": self.colors_per_task,
            "cells_by_color": self.cells_by_color,
            "demo_pairs": self.demo_pairs,
        })
    }

    fn render(&self, name: &str, out: &mut String) -> fmt::Result {
        writeln!(out, "{name}: {} tasks, {} grids", self.tasks, self.grids)?;
        writeln!(out, "  max side")?;
        for ((lo, hi), n) in SIDE_BUCKETS.iter().zip(self.side) {
            writeln!(out, "    {lo:>2}-{hi:<2} {n:>6}")?;
        }
        writeln!(out, "  distinct colors per task")?;
        for (k, n) in &self.colors_per_task {
            writeln!(out, "    {k:>5} {n:>6}")?;
        }
        writeln!(out, "  cells by color")?;
        for (c, n) in self.cells_by_color.iter().enumerate() {
            writeln!(out, "    {c:>5} {n:>8}")?;
        }
        writeln!(out, "  demo pairs per task")?;
        for (k, n) in &self.demo_pairs {
            writeln!(out, "    {k:>5} {n:>6}")?;
        }
        Ok(())
    }
}

pub fn run(root: &Path, json: bool) -> Result<ExitCode> {
    let mut doc = serde_json::Map::new();
    let mut text = String::new();
    for split in Split::ALL {
        let (tasks, bad) = load_task_dir_lenient(&root.join(split.dir_name()), split.source())?;
        let mut h = Histograms::default();
        tasks.iter().for_each(|t| h.add(t));
        if json {
            let mut v = h.to_json();
            v["malformed"] = json!(bad.len());
            doc.insert(split.dir_name().to_string(), v);
        } else {
            h.render(split.dir_name(), &mut text)?;
            if !bad.is_empty() {
                writeln!(text, "  malformed files: {}", bad.len())?;
            }
        }
    }
    if json {
        writeln!(text, "{}", serde_json::Value::Object(doc))?;
    }
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(ExitCode::SUCCESS),
    }
}
