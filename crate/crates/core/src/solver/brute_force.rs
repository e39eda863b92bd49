//! Finite-horizon game-tree evaluation used as an oracle for
//! [`value_iteration`](super::value_iteration).
//!
//! This walks the tree of joint actions top-down from the game tables and
//! shares no code with the sweep solver. Subtrees are identified by
//! (state, remaining depth) and evaluated once.

use std::collections::HashMap;

use crate::model::{GameSpec, InfoState, ModelError};

use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteForceOptions {
    /// Maximum number of distinct subtrees expanded before giving up.
    pub max_nodes: u64,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self { max_nodes: 50_000_000 }
    }
}

/// Value of the `horizon`-step truncation of the safety game from `z0`:
///
/// ```text
/// value(z, 0) = l(z)
/// value(z, k) = max_a min_{b in bound(z)} min{ l(z), E_o value(f(z, a, b, o), k - 1) }
/// ```
pub fn brute_force_value(
    spec: &GameSpec,
    z0: InfoState,
    horizon: usize,
    options: BruteForceOptions,
) -> Result<f64, SolverError> {
    GameTree::new(spec, options).value(z0, horizon)
}

/// Reusable oracle; subtrees evaluated for one root are shared with later
/// queries.
#[derive(Debug)]
pub struct GameTree<'a> {
    spec: &'a GameSpec,
    seen: HashMap<(usize, usize), f64>,
    budget: u64,
}

impl<'a> GameTree<'a> {
    pub fn new(spec: &'a GameSpec, options: BruteForceOptions) -> Self {
        Self { spec, seen: HashMap::new(), budget: options.max_nodes }
    }

    pub fn value(&mut self, z0: InfoState, horizon: usize) -> Result<f64, SolverError> {
        if z0.0 >= self.spec.num_states {
            return Err(ModelError::OutOfRange { field: "state", index: z0.0, len: self.spec.num_states }.into());
        }
        self.node(z0.0, horizon)
    }

    fn node(&mut self, z: usize, depth: usize) -> Result<f64, SolverError> {
        let cap = self.spec.margin[z];
        if depth == 0 {
            return Ok(cap);
        }
        if let Some(&v) = self.seen.get(&(z, depth)) {
            return Ok(v);
        }
        if self.seen.len() as u64 >= self.budget {
            return Err(SolverError::BudgetExceeded { budget: self.budget });
        }
        let mut best = f64::NEG_INFINITY;
        for a in 0..self.spec.num_ai_actions() {
            let mut worst = f64::INFINITY;
            for &b in &self.spec.bound[z] {
                let row = self.spec.observation_row(z, a, b.0);
                let mut expectation = 0.0;
                for (o, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        expectation += p * self.node(self.spec.next(z, a, b.0, o), depth - 1)?;
                    }
                }
                worst = worst.min(cap.min(expectation));
            }
            best = best.max(worst);
        }
        self.seen.insert((z, depth), best);
        Ok(best)
    }
}
