//! Procedural task generators: random grid/goal pairs and a color
//! curriculum over them. Everything is reproducible from the `GeneratorSpec` alone.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Dims, Grid, NUM_COLORS};
use crate::task::{Pair, Task, TaskSource};

/// Default curriculum color counts.
pub const DEFAULT_PHASE_COLORS: [u8; 5] = [2, 4, 6, 8, 10];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub num_colors: u8,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub height: usize,
    pub width: usize,
    pub num_colors: u8,
    #[serde(default)]
    pub phase_schedule: Option<Vec<Phase>>,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            height: 5,
            width: 5,
            num_colors: NUM_COLORS,
            phase_schedule: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("invalid dimensions {0}x{1}")]
    Dims(usize, usize),
    #[error("num_colors {0} outside 2..=10")]
    Colors(u8),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

impl GeneratorSpec {
    pub fn with_seed(&self, seed: u64) -> Self {
        GeneratorSpec { seed, ..self.clone() }
    }

    fn dims(&self) -> Result<Dims, GenerateError> {
        Dims::new(self.height, self.width).map_err(|_| GenerateError::Dims(self.height, self.width))
    }

    /// Id encoding everything needed to regenerate the task, e.g.
    /// `random-5x5-c4-s7`.
    pub fn task_id(&self) -> String {
        format!("random-{}x{}-c{}-s{}", self.height, self.width, self.num_colors, self.seed)
    }

    /// Inverse of [`GeneratorSpec::task_id`].
    pub fn from_task_id(id: &str) -> Option<GeneratorSpec> {
        let rest = id.strip_prefix("random-")?;
        let mut parts = rest.split('-');
        let (h, w) = parts.next()?.split_once('x')?;
        let colors = parts.next()?.strip_prefix('c')?;
        let seed = parts.next()?.strip_prefix('s')?;
        if parts.next().is_some() {
            return None;
        }
        Some(GeneratorSpec {
            height: h.parse().ok()?,
            width: w.parse().ok()?,
            num_colors: colors.parse().ok()?,
            phase_schedule: None,
            seed: seed.parse().ok()?,
        })
    }
}

fn check_colors(k: u8) -> Result<(), GenerateError> {
    if (2..=NUM_COLORS).contains(&k) {
        Ok(())
    } else {
        Err(GenerateError::Colors(k))
    }
}

fn random_grid(rng: &mut ChaCha8Rng, dims: Dims, k: u8) -> Grid {
    let cells = (0..dims.area()).map(|_| rng.random_range(0..k)).collect();
    Grid::from_cells(dims, cells).expect("colors below 10")
}

/// One test pair with i.i.d. uniform input and goal grids. No demonstration
/// pairs; intended to be played with the answer exposed.
pub fn gen_random_task(spec: &GeneratorSpec) -> Result<Task, GenerateError> {
    let dims = spec.dims()?;
    check_colors(spec.num_colors)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let input = random_grid(&mut rng, dims, spec.num_colors);
    let output = random_grid(&mut rng, dims, spec.num_colors);
    Ok(Task {
        id: spec.task_id(),
        source: TaskSource::Generated,
        demo_pairs: Vec::new(),
        test_pairs: vec![Pair { input, output }],
    })
}

/// The default five-phase schedule with `episodes` episodes per phase.
pub fn default_schedule(episodes: usize) -> Vec<Phase> {
    DEFAULT_PHASE_COLORS
        .iter()
        .map(|&num_colors| Phase { num_colors, episodes })
        .collect()
}

/// One item of a curriculum stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurriculumEpisode {
    /// Global episode index.
    pub index: usize,
    pub phase: usize,
    pub num_colors: u8,
    /// First episode of its phase.
    pub phase_start: bool,
    pub task: Task,
}

/// Stream of random tasks whose color count follows a phase schedule.
#[derive(Debug, Clone)]
pub struct Curriculum {
    spec: GeneratorSpec,
    schedule: Vec<Phase>,
    phase: usize,
    in_phase: usize,
    index: usize,
}

/// Builds a curriculum from `spec.phase_schedule` (the default schedule with
/// one episode per phase when absent).
pub fn gen_curriculum(spec: &GeneratorSpec) -> Result<Curriculum, GenerateError> {
    spec.dims()?;
    let schedule = spec.phase_schedule.clone().unwrap_or_else(|| default_schedule(1));
    if schedule.is_empty() {
        return Err(GenerateError::InvalidSchedule("no phases".into()));
    }
    for (i, p) in schedule.iter().enumerate() {
        if !(2..=NUM_COLORS).contains(&p.num_colors) {
            return Err(GenerateError::InvalidSchedule(format!(
                "phase {i}: {} colors outside 2..=10",
                p.num_colors
            )));
        }
        if p.episodes == 0 {
            return Err(GenerateError::InvalidSchedule(format!("phase {i}: zero episodes")));
        }
    }
    Ok(Curriculum {
        spec: spec.clone(),
        schedule,
        phase: 0,
        in_phase: 0,
        index: 0,
    })
}

impl Curriculum {
    pub fn schedule(&self) -> &[Phase] {
        &self.schedule
    }

    /// Global index of the first episode of each phase.
    pub fn boundaries(&self) -> Vec<usize> {
        self.schedule
            .iter()
            .scan(0, |start, p| {
                let s = *start;
                *start += p.episodes;
                Some(s)
            })
            .collect()
    }

    pub fn total_episodes(&self) -> usize {
        self.schedule.iter().map(|p| p.episodes).sum()
    }

    /// Seed of the `index`-th episode, derived from the base seed.
    pub fn episode_seed(&self, index: usize) -> u64 {
        splitmix64(self.spec.seed ^ splitmix64(index as u64))
    }
}

impl Iterator for Curriculum {
    type Item = CurriculumEpisode;

    fn next(&mut self) -> Option<Self::Item> {
        while self.phase < self.schedule.len() && self.in_phase >= self.schedule[self.phase].episodes {
            self.phase += 1;
            self.in_phase = 0;
        }
        let phase = self.schedule.get(self.phase)?;
        let spec = GeneratorSpec {
            num_colors: phase.num_colors,
            phase_schedule: None,
            seed: self.episode_seed(self.index),
            ..self.spec.clone()
        };
        let task = gen_random_task(&spec).expect("schedule validated");
        let item = CurriculumEpisode {
            index: self.index,
            phase: self.phase,
            num_colors: phase.num_colors,
            phase_start: self.in_phase == 0,
            task,
        };
        self.in_phase += 1;
        self.index += 1;
        Some(item)
    }
}

/// SplitMix64 output function.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
