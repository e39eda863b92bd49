//! Exact safety analysis for finite human-AI interaction games.
//!
//! * [`model`]: information-state game, margin, predictive action bound,
//!   privileged ground truth.
//! * [`format`]: the `.haig.json` file format.
//! * [`solver`]: safety value function, maximal safe set, maximin policies,
//!   and a game-tree oracle.
//! * [`filter`]: the safety filter (fallback, monitor, intervention scheme).
//! * [`scenarios`]: chain, dialogue and random game builders.
//! * [`harness`]: rollouts, exhaustive verification, oracle comparison.

pub mod filter;
pub mod format;
pub mod harness;
pub mod model;
pub mod rng;
pub mod scenarios;
pub mod solver;

pub use filter::{check_initial_condition, filter_action, perfect_filter, pluggable_monitor, Intervention, MonitorMode, SafetyFilter};
pub use format::{parse_spec, serialize, SpecDocument};
pub use model::{validate_model, AiAction, GameSpec, GroundTruthSystem, HumanAction, InfoState, Observation};
pub use solver::{brute_force_value, value_iteration, SolveOptions, ValueSolution};
