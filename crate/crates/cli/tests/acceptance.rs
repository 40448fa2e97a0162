//! Acceptance checks, one PASS/FAIL line each. Exits nonzero when any check
//! fails.

use std::collections::{BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use arcle_core::grid::{Color, Dims, Grid, Selection};
use arcle_core::ops::{Axis, Direction, Operation, Rotation};
use arcle_core::task::{load_split, parse_task, Pair, Split, Task, TaskSource};
use arcle_core::{
    gen_curriculum, gen_random_task, Action, ArcEnv, BBoxAction, BBoxWrapper, EnvConfig, Environment, GeneratorSpec,
    Phase, ResetOptions, RewardMode,
};

type Outcome = Result<String, String>;

fn arcle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arcle")).args(args).output().expect("arcle binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn random_grid(rng: &mut ChaCha8Rng, dims: Dims, colors: u8) -> Grid {
    let cells = (0..dims.area()).map(|_| rng.random_range(0..colors)).collect();
    Grid::from_cells(dims, cells).unwrap()
}

fn random_dims(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Dims {
    Dims::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi)).unwrap()
}

fn single(input: Grid, output: Grid) -> Task {
    Task {
        id: "acceptance".into(),
        source: TaskSource::Generated,
        demo_pairs: Vec::new(),
        test_pairs: vec![Pair { input, output }],
    }
}

fn env_on(cfg: EnvConfig, input: &Grid, answer: &Grid) -> ArcEnv {
    let mut env = ArcEnv::new(cfg);
    env.reset(&single(input.clone(), answer.clone()), &ResetOptions::default()).unwrap();
    env
}

/// Every operation, including the four O2ARC does not expose.
fn catalogue() -> EnvConfig {
    EnvConfig::custom(Operation::catalogue()).max_steps(u32::MAX)
}

fn step(env: &mut ArcEnv, op: Operation, sel: Selection) -> f64 {
    let id = env.config().op_id(op).unwrap();
    env.step(Action::new(id, sel)).unwrap().reward
}

fn grid_of(env: &ArcEnv) -> Grid {
    env.state().unwrap().grid.clone()
}

/// Random object selection whose bounding box is not square: all four box
/// corners are selected, the interior is random.
fn non_square_object(rng: &mut ChaCha8Rng, dims: Dims) -> Selection {
    loop {
        let (h, w) = (rng.random_range(1..=dims.height()), rng.random_range(1..=dims.width()));
        if h == w {
            continue;
        }
        let top = rng.random_range(0..=dims.height() - h);
        let left = rng.random_range(0..=dims.width() - w);
        let mut sel = Selection::empty(dims);
        for r in top..top + h {
            for c in left..left + w {
                sel.set(r, c, rng.random_bool(0.6));
            }
        }
        for (r, c) in [(top, left), (top, left + w - 1), (top + h - 1, left), (top + h - 1, left + w - 1)] {
            sel.set(r, c, true);
        }
        return sel;
    }
}

fn op_algebra() -> Outcome {
    const CASES: usize = 1000;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a19_eb4a);
    let cfg = catalogue();
    let mut checks = 0usize;
    let mut changed = 0usize;
    let mut failures = Vec::new();
    for case in 0..CASES {
        let dims = random_dims(&mut rng, 5, 10);
        let g = random_grid(&mut rng, dims, 10);
        let sel = non_square_object(&mut rng, dims);
        let none = Selection::empty(dims);
        let fresh = || env_on(cfg.clone(), &g, &g);

        let mut check = |name: &str, ok: bool| {
            checks += 1;
            if !ok && failures.len() < 5 {
                failures.push(format!("case {case}: {name}"));
            }
        };

        let mut env = fresh();
        step(&mut env, Operation::Rotate(Rotation::Ccw90), sel.clone());
        changed += usize::from(grid_of(&env) != g);
        for _ in 0..3 {
            step(&mut env, Operation::Rotate(Rotation::Ccw90), none.clone());
        }
        check("rotate90^4", grid_of(&env) == g);

        for axis in Axis::ALL {
            let mut env = fresh();
            step(&mut env, Operation::Flip(axis), sel.clone());
            step(&mut env, Operation::Flip(axis), none.clone());
            check(&format!("flip{axis:?}^2"), grid_of(&env) == g);
        }

        let mut twice = fresh();
        step(&mut twice, Operation::Rotate(Rotation::Ccw90), sel.clone());
        step(&mut twice, Operation::Rotate(Rotation::Ccw90), none.clone());
        let mut half = fresh();
        step(&mut half, Operation::Rotate(Rotation::Ccw180), sel.clone());
        check("rotate90^2 = rotate180", grid_of(&twice) == grid_of(&half));

        for dir in Direction::ALL {
            let mut env = fresh();
            step(&mut env, Operation::Move(dir), sel.clone());
            step(&mut env, Operation::Move(dir.opposite()), none.clone());
            check(&format!("move{dir:?} then opposite"), grid_of(&env) == g);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let summary = format!("{CASES} cases ({changed} altered by one quarter turn), {checks} checks in {secs:.2} s (limit 10 s)");
    if !failures.is_empty() {
        return Err(format!("{summary}; {}", failures.join(", ")));
    }
    if secs >= 10.0 {
        return Err(summary);
    }
    Ok(summary)
}

/// Reference fill: for each seed, breadth-first over 4-neighbours of the
/// seed's color in the original grid.
fn bfs_fill(grid: &Grid, seeds: &Selection, color: u8) -> Grid {
    let (h, w) = (grid.height(), grid.width());
    let mut out = grid.clone();
    for (sr, sc) in seeds.iter_set() {
        let target = grid.get(sr, sc);
        let mut seen = vec![false; h * w];
        let mut queue = VecDeque::from([(sr, sc)]);
        seen[sr * w + sc] = true;
        while let Some((r, c)) = queue.pop_front() {
            out.set(r, c, Color::new(color).unwrap());
            let mut visit = |nr: usize, nc: usize| {
                if grid.get(nr, nc) == target && !seen[nr * w + nc] {
                    seen[nr * w + nc] = true;
                    queue.push_back((nr, nc));
                }
            };
            if r > 0 {
                visit(r - 1, c);
            }
            if r + 1 < h {
                visit(r + 1, c);
            }
            if c > 0 {
                visit(r, c - 1);
            }
            if c + 1 < w {
                visit(r, c + 1);
            }
        }
    }
    out
}

fn flood_fill() -> Outcome {
    const CASES: usize = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(0xf100d);
    let cfg = catalogue();
    let mut mismatches = Vec::new();
    for case in 0..CASES {
        let dims = random_dims(&mut rng, 1, 12);
        let colors = rng.random_range(1..=4);
        let g = random_grid(&mut rng, dims, colors);
        let density = rng.random_range(0.0..0.3);
        let mut seeds = Selection::empty(dims);
        for r in 0..dims.height() {
            for c in 0..dims.width() {
                seeds.set(r, c, rng.random_bool(density));
            }
        }
        let color = rng.random_range(0..10u8);
        let mut env = env_on(cfg.clone(), &g, &g);
        step(&mut env, Operation::FloodFill(Color::new(color).unwrap()), seeds.clone());
        if grid_of(&env) != bfs_fill(&g, &seeds, color) {
            mismatches.push(case);
        }
    }
    if mismatches.is_empty() {
        Ok(format!("{CASES} grids bit-exact against BFS"))
    } else {
        Err(format!("{} of {CASES} differ (first cases {:?})", mismatches.len(), &mismatches[..mismatches.len().min(5)]))
    }
}

/// Wrong cells over the `max(h) x max(w)` frame, counted directly.
fn direct_mismatch(a: &Grid, b: &Grid) -> f64 {
    let (h, w) = (a.height().max(b.height()), a.width().max(b.width()));
    let mut wrong = 0;
    for r in 0..h {
        for c in 0..w {
            let x = (r < a.height() && c < a.width()).then(|| a.get(r, c));
            let y = (r < b.height() && c < b.width()).then(|| b.get(r, c));
            if x.is_none() || x != y {
                wrong += 1;
            }
        }
    }
    wrong as f64 / (h * w) as f64
}

fn submit_reward(grid: &Grid, answer: &Grid) -> f64 {
    let mut env = env_on(EnvConfig::o2arc(), grid, answer);
    step(&mut env, Operation::Submit, Selection::empty(grid.dims()))
}

fn rewards() -> Outcome {
    const PAIRS: usize = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4e3a4d);
    let dense = catalogue().reward_mode(RewardMode::Dense);
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for case in 0..PAIRS {
        let gd = random_dims(&mut rng, 1, 10);
        let ad = if rng.random_bool(0.5) { gd } else { random_dims(&mut rng, 1, 10) };
        let colors = rng.random_range(1..=10);
        let grid = random_grid(&mut rng, gd, colors);
        let answer = if rng.random_bool(0.1) && ad == gd { grid.clone() } else { random_grid(&mut rng, ad, colors) };

        let mut env = env_on(dense.clone(), &grid, &answer);
        let r = step(&mut env, Operation::Color(Color::new(0).unwrap()), Selection::empty(gd));
        let expected = -direct_mismatch(&grid, &answer);
        worst = worst.max((r - expected).abs());
        if (r - expected).abs() > 1e-12 {
            errors.push(format!("case {case}: dense {r} vs {expected}"));
        }

        let exact = grid == answer;
        let s = submit_reward(&grid, &answer);
        if s != if exact { 1.0 } else { 0.0 } {
            errors.push(format!("case {case}: submit {s} with exact={exact}"));
        }
        if submit_reward(&grid, &grid) != 1.0 {
            errors.push(format!("case {case}: identical grids not rewarded"));
        }
        let (pr, pc) = (rng.random_range(0..gd.height()), rng.random_range(0..gd.width()));
        let mut one_off = grid.clone();
        one_off.set(pr, pc, Color::new((grid.get(pr, pc) + 1) % 10).unwrap());
        if submit_reward(&grid, &one_off) != 0.0 {
            errors.push(format!("case {case}: single-pixel difference rewarded"));
        }
        let bigger = grid.resized(Dims::new(gd.height(), (gd.width() % 30) + 1).unwrap());
        if bigger.dims() != gd && submit_reward(&grid, &bigger) != 0.0 {
            errors.push(format!("case {case}: dims difference rewarded"));
        }
    }
    if errors.is_empty() {
        Ok(format!("{PAIRS} pairs, submit exact-only, max dense error {worst:e} (tolerance 1e-12)"))
    } else {
        Err(format!("{} problems: {}", errors.len(), errors[..errors.len().min(3)].join("; ")))
    }
}

/// Independently built rectangle mask, clipped to `frame`.
fn rect_mask(frame: Dims, r0: i64, c0: i64, r1: i64, c1: i64) -> Selection {
    let mut sel = Selection::empty(frame);
    for r in 0..frame.height() as i64 {
        for c in 0..frame.width() as i64 {
            if (r0.min(r1)..=r0.max(r1)).contains(&r) && (c0.min(c1)..=c0.max(c1)).contains(&c) {
                sel.set(r as usize, c as usize, true);
            }
        }
    }
    sel
}

fn wrapper_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0c5);
    let d5 = Dims::new(5, 5).unwrap();
    let input = random_grid(&mut rng, d5, 10);
    let answer = random_grid(&mut rng, d5, 10);
    let cfg = EnvConfig::o2arc().reward_mode(RewardMode::Dense).expose_answer(true);

    let fresh = env_on(cfg.clone(), &input, &answer);
    let mut clip = fresh.clone();
    step(&mut clip, Operation::Copy(arcle_core::ops::CopySource::Grid), rect_mask(d5, 1, 1, 3, 2));
    let mut object = fresh.clone();
    step(&mut object, Operation::Move(Direction::ALL[0]), rect_mask(d5, 0, 0, 1, 2));
    let prefixes = [("fresh", fresh), ("clip set", clip), ("object active", object)];

    let mut compared = 0usize;
    for (name, start) in &prefixes {
        for (id, &op) in cfg.ops.iter().enumerate() {
            let frame = match op {
                Operation::ResizeGrid => Dims::new(30, 30).unwrap(),
                Operation::Copy(arcle_core::ops::CopySource::Input) => start.state().unwrap().input.dims(),
                _ => start.state().unwrap().grid.dims(),
            };
            for corners in 0..625i64 {
                let (r0, c0, r1, c1) = (corners / 125, corners / 25 % 5, corners / 5 % 5, corners % 5);
                let mut wrapped = BBoxWrapper::new(start.clone());
                let a = wrapped.step(BBoxAction::new(r0, c0, r1, c1, id)).map(|s| {
                    (serde_json::to_value(s.observation).unwrap(), s.reward.to_bits(), s.terminated, s.truncated, s.info)
                });
                let mut raw = start.clone();
                let b = raw.step(Action::new(id, rect_mask(frame, r0, c0, r1, c1))).map(|s| {
                    (serde_json::to_value(s.observation).unwrap(), s.reward.to_bits(), s.terminated, s.truncated, s.info)
                });
                if a != b {
                    return Err(format!("{name}: {op} bbox ({r0},{c0},{r1},{c1}) differs after {compared} matches"));
                }
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} wrapped steps equal raw steps (625 boxes x {} ops x 3 states)", cfg.ops.len()))
}

fn data_root() -> Option<PathBuf> {
    std::env::var_os("ARCLE_DATA_ROOT")
        .map(PathBuf::from)
        .into_iter()
        .chain([PathBuf::from("/root/arc-data")])
        .find(|p| p.join("training").is_dir() && p.join("evaluation").is_dir())
}

fn dataset(root: &Path) -> Outcome {
    let out = arcle(&["validate", root.to_str().unwrap()]);
    let text = stdout(&out);
    if !out.status.success() || !text.contains("400 training, 400 evaluation tasks OK") {
        return Err(format!("validate exit {:?}: {}", out.status.code(), text.trim()));
    }
    let mut grids = 0usize;
    for split in Split::ALL {
        for task in load_split(root, split).map_err(|e| e.to_string())? {
            for g in task.grids() {
                grids += 1;
                let (h, w) = (g.height(), g.width());
                if !(1..=30).contains(&h) || !(1..=30).contains(&w) || g.cells().iter().any(|&v| v > 9) {
                    return Err(format!("{}: grid {h}x{w} out of bounds", task.id));
                }
            }
            let text = task.to_json().to_string();
            let again = parse_task(&text, &task.id, task.source, Path::new("<memory>")).map_err(|e| e.to_string())?;
            if again != task || !text.eq(&again.to_json().to_string()) {
                return Err(format!("{}: serialize/parse is not a fixed point", task.id));
            }
        }
    }
    Ok(format!("{}; {grids} grids in bounds, round trip is a fixed point", text.trim()))
}

fn replay_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let trace = dir.path().join("rollout.jsonl");
    let trace = trace.to_str().unwrap();
    let base = ["rollout", "--random-spec", "5x5-c10-s11", "--preset", "o2arc", "--steps", "100", "--seed", "42"];
    let recorded = arcle(&[&base[..], &["--trace", trace]].concat());
    if !recorded.status.success() {
        return Err(format!("rollout failed: {}", String::from_utf8_lossy(&recorded.stderr)));
    }
    let steps = std::fs::read_to_string(trace)
        .map_err(|e| e.to_string())?
        .lines()
        .filter(|l| l.contains("\"kind\":\"step\""))
        .count();
    if steps != 100 {
        return Err(format!("trace holds {steps} steps, expected 100"));
    }
    let replayed = arcle(&["replay", trace]);
    let report = stdout(&replayed);
    if !replayed.status.success() || !report.contains("all digests match") {
        return Err(format!("replay exit {:?}: {} {}", replayed.status.code(), report.trim(), String::from_utf8_lossy(&replayed.stderr).trim()));
    }
    let first = arcle(&base);
    let second = arcle(&base);
    if first.stdout != second.stdout || !first.status.success() {
        return Err("same seed gave different rollout output".into());
    }
    Ok(format!("100 recorded steps replay ({}); repeat runs byte-identical", report.trim()))
}

fn generators() -> Outcome {
    const TASKS: u64 = 200;
    for k in [2u8, 4, 6, 8, 10] {
        let mut used = BTreeSet::new();
        for seed in 0..TASKS {
            let spec = GeneratorSpec { height: 5, width: 5, num_colors: k, phase_schedule: None, seed };
            let task = gen_random_task(&spec).map_err(|e| e.to_string())?;
            used.extend(task.grids().flat_map(|g| g.cells().iter().copied()));
        }
        if used != (0..k).collect::<BTreeSet<u8>>() {
            return Err(format!("k={k}: colors used {used:?}"));
        }
    }
    let n = 7;
    let spec = GeneratorSpec {
        height: 5,
        width: 5,
        num_colors: 10,
        phase_schedule: Some([2, 4, 6, 8, 10].map(|num_colors| Phase { num_colors, episodes: n }).to_vec()),
        seed: 3,
    };
    let curriculum = gen_curriculum(&spec).map_err(|e| e.to_string())?;
    let boundaries = curriculum.boundaries();
    if boundaries != [0, n, 2 * n, 3 * n, 4 * n] {
        return Err(format!("boundaries {boundaries:?}"));
    }
    let mut per_phase = vec![BTreeSet::new(); 5];
    let mut count = 0;
    for ep in curriculum {
        count += 1;
        if boundaries.contains(&ep.index) != ep.phase_start {
            return Err(format!("episode {} phase_start flag wrong", ep.index));
        }
        per_phase[ep.phase].insert(ep.num_colors);
        if ep.task.grids().flat_map(|g| g.cells()).any(|&v| v >= ep.num_colors) {
            return Err(format!("episode {} exceeds {} colors", ep.index, ep.num_colors));
        }
    }
    let colors: Vec<Vec<u8>> = per_phase.into_iter().map(|s| s.into_iter().collect()).collect();
    if count != 5 * n || colors != [[2], [4], [6], [8], [10]] {
        return Err(format!("{count} episodes with phase colors {colors:?}"));
    }
    Ok(format!("k in {{2,4,6,8,10}} use exactly 0..k over {TASKS} tasks; boundaries {boundaries:?}"))
}

fn throughput() -> Outcome {
    let out = arcle(&["rollout", "--random-spec", "5x5-c10-s0", "--preset", "raw", "--steps", "1000000", "--bench", "--json"]);
    if !out.status.success() {
        return Err(format!("bench failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let doc: serde_json::Value = serde_json::from_str(stdout(&out).trim()).map_err(|e| e.to_string())?;
    let rate = doc["bench"]["steps_per_sec"].as_f64().ok_or("no steps_per_sec")?;
    let line = format!("{rate:.0} steps/s on 5x5 raw (target 100000)");
    if rate >= 100_000.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL {name}: {detail}");
        }
    };
    report("operation algebra", op_algebra());
    report("flood fill oracle", flood_fill());
    report("reward semantics", rewards());
    report("wrapper equivalence", wrapper_equivalence());
    match data_root() {
        Some(root) => report("dataset", dataset(&root)),
        None => println!("SKIP dataset: no ARC data root (set ARCLE_DATA_ROOT)"),
    }
    report("determinism and replay", replay_determinism());
    report("generators", generators());
    report("throughput", throughput());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance check(s) failed");
        ExitCode::FAILURE
    }
}
