//! Seeded random rollouts over rectangle actions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::env::{EnvConfig, EnvError, Environment, ResetOptions};
use crate::ops::Operation;
use crate::state::EnvState;
use crate::task::Task;
use crate::trace::ser_digest;
use crate::wrappers::BBoxAction;

/// Uniform random agent: an operation id, then both corners uniformly inside
/// that operation's selection frame.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self, state: &EnvState, config: &EnvConfig) -> BBoxAction {
        let id = self.rng.random_range(0..config.ops.len());
        let frame = config.ops[id].selection_frame(state);
        let (h, w) = (frame.height() as i64, frame.width() as i64);
        let r0 = self.rng.random_range(0..h);
        let c0 = self.rng.random_range(0..w);
        let r1 = self.rng.random_range(0..h);
        let c1 = self.rng.random_range(0..w);
        BBoxAction::new(r0, c0, r1, c1, id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLine {
    pub step: usize,
    pub episode: usize,
    pub operation: Operation,
    pub bbox: [i64; 4],
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    #[serde(serialize_with = "ser_digest")]
    pub grid_digest: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutSummary {
    pub steps: usize,
    pub episodes: usize,
    pub submits: usize,
    pub solved: usize,
    pub total_reward: f64,
    #[serde(serialize_with = "ser_digest")]
    pub final_digest: u64,
}

/// Runs `steps` random steps, resetting on the same task whenever an
/// episode ends. `on_step` sees every step in order.
pub fn run_rollout<E>(
    env: &mut E,
    task: &Task,
    options: &ResetOptions,
    steps: usize,
    seed: u64,
    mut on_step: impl FnMut(&StepLine),
) -> Result<RolloutSummary, EnvError>
where
    E: Environment<Action = BBoxAction>,
{
    let mut policy = RandomPolicy::new(seed);
    let mut summary = RolloutSummary {
        steps: 0,
        episodes: 1,
        submits: 0,
        solved: 0,
        total_reward: 0.0,
        final_digest: env.reset(task, options)?.grid().digest(),
    };
    let mut done = false;
    for step in 1..=steps {
        if done {
            env.reset(task, options)?;
            summary.episodes += 1;
        }
        let action = policy.sample(env.state().expect("reset"), env.config());
        let res = env.step(action)?;
        let line = StepLine {
            step,
            episode: summary.episodes,
            operation: res.info.operation,
            bbox: [action.r0, action.c0, action.r1, action.c1],
            reward: res.reward,
            terminated: res.terminated,
            truncated: res.truncated,
            grid_digest: res.observation.grid().digest(),
        };
        if res.info.operation == Operation::Submit {
            summary.submits += 1;
            if res.info.exact_match == Some(true) {
                summary.solved += 1;
            }
        }
        done = res.terminated || res.truncated;
        summary.steps = step;
        summary.total_reward += res.reward;
        summary.final_digest = line.grid_digest;
        on_step(&line);
    }
    Ok(summary)
}

/// Steps-per-second measurement: random steps with no per-step output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub steps: usize,
    pub episodes: usize,
    pub seconds: f64,
    pub steps_per_sec: f64,
}

pub fn bench_rollout<E>(env: &mut E, task: &Task, options: &ResetOptions, steps: usize, seed: u64) -> Result<BenchReport, EnvError>
where
    E: Environment<Action = BBoxAction>,
{
    let start = std::time::Instant::now();
    let summary = run_rollout(env, task, options, steps, seed, |_| {})?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(BenchReport {
        steps: summary.steps,
        episodes: summary.episodes,
        seconds,
        steps_per_sec: summary.steps as f64 / seconds.max(f64::MIN_POSITIVE),
    })
}
