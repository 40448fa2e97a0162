//! Grid-editing reinforcement-learning environment for ARC-style tasks.
//!
//! [`ArcEnv`] steps a single task pair under an operation preset; wrappers in
//! [`wrappers`] reshape the action space, [`trace`] records episodes as JSONL
//! and [`replay`] re-executes them.

pub mod env;
pub mod generate;
pub mod grid;
pub mod object;
pub mod ops;
pub mod replay;
pub mod rollout;
pub mod state;
pub mod task;
pub mod trace;
pub mod wrappers;

pub use env::{
    Action, ArcEnv, EnvAction, EnvConfig, EnvError, Environment, PresetName, ResetOptions, RewardMode, StepInfo,
    StepResult, DEFAULT_MAX_STEPS,
};
pub use generate::{gen_curriculum, gen_random_task, Curriculum, GeneratorSpec, Phase};
pub use grid::{compare_exact, mismatch_ratio, overlay, BBox, Color, Dims, Grid, GridError, Pos, Selection};
pub use ops::{Effect, NoOpReason, OpError, Operation};
pub use state::{EnvState, ObjectLayer, Observation};
pub use task::{load_split, load_task_dir, load_task_file, parse_task, Pair, Split, Task, TaskError, TaskSource};
pub use trace::{read_trace, write_trace, TraceRecord, TraceRecorder, TraceSelection};
pub use wrappers::{BBoxAction, BBoxWrapper, OpSubset};
