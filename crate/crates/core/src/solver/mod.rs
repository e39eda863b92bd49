//! Exact solution of the zero-sum safety game on a finite information-state
//! space.
//!
//! The value function is the greatest fixed point below `l` of
//!
//! ```text
//! V(z) = max_a min_{b in bound(z)} Q(z, a, b)
//! Q(z, a, b) = min{ l(z), E_o[ V(f(z, a, b, o)) ] }
//! ```
//!
//! reached by Jacobi sweeps from `V_0 = l`. Every sweep reads only the
//! previous iterate, so the sequence is pointwise non-increasing and, on
//! deterministic games, stops changing after at most `|Z|` sweeps.

mod brute_force;

pub use brute_force::{brute_force_value, BruteForceOptions, GameTree};

use serde::Serialize;
use thiserror::Error;

use crate::model::{validate_model, AiAction, GameSpec, HumanAction, InfoState, ModelError, ValidationReport};

pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const STOCHASTIC_MAX_ITERS: usize = 100_000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("game fails validation: {}", first_error(.0))]
    InvalidSpec(ValidationReport),
    #[error("epsilon must be finite and nonnegative, got {0}")]
    BadEpsilon(f64),
    #[error("oracle exceeded its budget of {budget} nodes")]
    BudgetExceeded { budget: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn first_error(r: &ValidationReport) -> String {
    r.errors().next().map(|i| i.message.clone()).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub epsilon: f64,
    /// Defaults to `|Z| + 1` for deterministic games and
    /// [`STOCHASTIC_MAX_ITERS`] otherwise.
    pub max_iters: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON, max_iters: None }
    }
}

/// Converged value function, Q-table, maximal safe set and maximin policies.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSolution {
    pub num_ai_actions: usize,
    pub num_human_actions: usize,
    pub margin: Vec<f64>,
    pub bound: Vec<Vec<HumanAction>>,
    pub values: Vec<f64>,
    /// `Q(z, a, b)` over every human action, `[z][a][b]`.
    pub q: Vec<f64>,
    /// `E_o[V(f(z, a, b, o))]`, `[z][a][b]`.
    pub continuation: Vec<f64>,
    /// Largest [`rank`](Self::rank) among the successors of `(z, a, b)`.
    pub successor_rank: Vec<usize>,
    /// Last sweep at which `V(z)` changed; 0 when `V(z) = l(z)`.
    pub rank: Vec<usize>,
    pub safe_set: Vec<InfoState>,
    pub pi_shield: Vec<AiAction>,
    /// Worst-case human response, `[z][a]`.
    pub pi_dagger: Vec<HumanAction>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub epsilon: f64,
}

impl ValueSolution {
    pub fn num_states(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, z: InfoState) -> f64 {
        self.values[z.0]
    }

    pub fn in_safe_set(&self, z: InfoState) -> bool {
        self.values.get(z.0).is_some_and(|&v| v >= 0.0)
    }

    #[inline]
    fn qi(&self, z: usize, a: usize, b: usize) -> usize {
        (z * self.num_ai_actions + a) * self.num_human_actions + b
    }

    /// `Q(z, a, b)` from the converged value. `b` may lie outside the bound.
    pub fn q_value(&self, z: InfoState, a: AiAction, b: HumanAction) -> Result<f64, ModelError> {
        range("state", z.0, self.num_states())?;
        range("ai_action", a.0, self.num_ai_actions)?;
        range("human_action", b.0, self.num_human_actions)?;
        Ok(self.q[self.qi(z.0, a.0, b.0)])
    }

    /// Worst case of `Q(z, a, .)` over the allowed human actions.
    pub fn worst_q(&self, z: InfoState, a: AiAction) -> f64 {
        self.bound[z.0]
            .iter()
            .map(|b| self.q[self.qi(z.0, a.0, b.0)])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn fallback(&self, z: InfoState) -> AiAction {
        self.pi_shield[z.0]
    }

    pub fn adversary(&self, z: InfoState, a: AiAction) -> HumanAction {
        self.pi_dagger[z.0 * self.num_ai_actions + a.0]
    }

    pub fn export(&self) -> SolutionExport {
        let nz = self.num_states();
        let q = (0..nz)
            .map(|z| {
                (0..self.num_ai_actions)
                    .map(|a| (0..self.num_human_actions).map(|b| self.q[self.qi(z, a, b)]).collect())
                    .collect()
            })
            .collect();
        SolutionExport {
            v: self.values.clone(),
            q,
            safe_set: self.safe_set.iter().map(|z| z.0).collect(),
            pi_shield: self.pi_shield.iter().map(|a| a.0).collect(),
            pi_dagger: self.pi_dagger.chunks(self.num_ai_actions).map(|r| r.iter().map(|b| b.0).collect()).collect(),
            iterations: self.iterations,
            epsilon: self.epsilon,
            converged: self.converged,
            residual: self.residual,
        }
    }
}

fn range(field: &'static str, index: usize, len: usize) -> Result<(), ModelError> {
    if index < len {
        Ok(())
    } else {
        Err(ModelError::OutOfRange { field, index, len })
    }
}

/// JSON form of a [`ValueSolution`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionExport {
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<Vec<f64>>>,
    pub safe_set: Vec<usize>,
    pub pi_shield: Vec<usize>,
    pub pi_dagger: Vec<Vec<usize>>,
    pub iterations: usize,
    pub epsilon: f64,
    pub converged: bool,
    pub residual: f64,
}

/// `E_o[V(f(z, a, b, o))]`, summed in observation index order.
#[inline]
pub fn expected_next_value(spec: &GameSpec, values: &[f64], z: usize, a: usize, b: usize) -> f64 {
    spec.outcomes(z, a, b).fold(0.0, |acc, (_, p, next)| acc + p * values[next])
}

/// The per-step operator. The expectation sits inside the min with the
/// margin; swapping in a different operator means changing this function.
#[inline]
pub fn isaacs_q(spec: &GameSpec, values: &[f64], z: usize, a: usize, b: usize) -> f64 {
    spec.margin[z].min(expected_next_value(spec, values, z, a, b))
}

/// Right-hand side of the fixed-point equation at one state.
pub fn isaacs_backup(spec: &GameSpec, values: &[f64], z: usize) -> f64 {
    (0..spec.num_ai_actions())
        .map(|a| {
            spec.bound[z]
                .iter()
                .map(|b| isaacs_q(spec, values, z, a, b.0))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One Jacobi sweep: `V_{k+1}` from `V_k`.
pub fn sweep(spec: &GameSpec, values: &[f64]) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..spec.num_states).into_par_iter().map(|z| isaacs_backup(spec, values, z)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..spec.num_states).map(|z| isaacs_backup(spec, values, z)).collect()
    }
}

pub fn value_iteration(spec: &GameSpec, options: SolveOptions) -> Result<ValueSolution, SolverError> {
    if !(options.epsilon.is_finite() && options.epsilon >= 0.0) {
        return Err(SolverError::BadEpsilon(options.epsilon));
    }
    let report = validate_model(spec, None);
    if report.has_errors() {
        return Err(SolverError::InvalidSpec(report));
    }
    let deterministic = spec.is_deterministic();
    let max_iters = options
        .max_iters
        .unwrap_or(if deterministic { spec.num_states + 1 } else { STOCHASTIC_MAX_ITERS });

    let mut values = spec.margin.clone();
    let mut rank = vec![0usize; spec.num_states];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while iterations < max_iters {
        let next = sweep(spec, &values);
        iterations += 1;
        residual = 0.0;
        for (z, (&new, &old)) in next.iter().zip(&values).enumerate() {
            debug_assert!(new <= old, "sweep {iterations} increased V({z}) from {old} to {new}");
            if new != old {
                rank[z] = iterations;
            }
            residual = f64::max(residual, (new - old).abs());
        }
        values = next;
        if residual <= options.epsilon {
            converged = true;
            break;
        }
    }
    if iterations == 0 {
        residual = f64::INFINITY;
    }
    Ok(assemble(spec, values, rank, iterations, converged, residual, options.epsilon))
}

fn assemble(
    spec: &GameSpec,
    values: Vec<f64>,
    rank: Vec<usize>,
    iterations: usize,
    converged: bool,
    residual: f64,
    epsilon: f64,
) -> ValueSolution {
    let d = spec.dims();
    let cells = d.states * d.ai_actions * d.human_actions;
    let mut q = Vec::with_capacity(cells);
    let mut continuation = Vec::with_capacity(cells);
    let mut successor_rank = Vec::with_capacity(cells);
    for z in 0..d.states {
        for a in 0..d.ai_actions {
            for b in 0..d.human_actions {
                let cont = expected_next_value(spec, &values, z, a, b);
                continuation.push(cont);
                q.push(spec.margin[z].min(cont));
                successor_rank.push(spec.outcomes(z, a, b).map(|(_, _, n)| rank[n]).max().unwrap_or(0));
            }
        }
    }
    let safe_set = (0..d.states).filter(|&z| values[z] >= 0.0).map(InfoState).collect();
    let mut sol = ValueSolution {
        num_ai_actions: d.ai_actions,
        num_human_actions: d.human_actions,
        margin: spec.margin.clone(),
        bound: spec.bound.clone(),
        values,
        q,
        continuation,
        successor_rank,
        rank,
        safe_set,
        pi_shield: Vec::new(),
        pi_dagger: Vec::new(),
        iterations,
        converged,
        residual,
        epsilon,
    };
    let (shield, dagger) = extract_policies(&sol);
    sol.pi_shield = shield;
    sol.pi_dagger = dagger;
    sol
}

/// Maximin policy pair read off the Q-table.
///
/// The fallback maximises the worst-case Q, lowest index on ties. The
/// adversary minimises Q over the allowed actions; ties go to the lower
/// expected successor value, then to the successor that settled in the
/// earliest sweep, then to the lowest index. The sweep key keeps the
/// adversary from cycling among equally bad states without ever reaching the
/// one that realises the value.
pub fn extract_policies(sol: &ValueSolution) -> (Vec<AiAction>, Vec<HumanAction>) {
    let nz = sol.num_states();
    let mut shield = Vec::with_capacity(nz);
    let mut dagger = Vec::with_capacity(nz * sol.num_ai_actions);
    for z in 0..nz {
        let mut best = (AiAction(0), f64::NEG_INFINITY);
        for a in 0..sol.num_ai_actions {
            let mut pick: Option<(HumanAction, f64, f64, usize)> = None;
            for &b in &sol.bound[z] {
                let i = sol.qi(z, a, b.0);
                let key = (b, sol.q[i], sol.continuation[i], sol.successor_rank[i]);
                let better = match pick {
                    None => true,
                    Some((_, q, c, r)) => (key.1, key.2, key.3) < (q, c, r),
                };
                if better {
                    pick = Some(key);
                }
            }
            let (b, worst, _, _) = pick.expect("action bound is nonempty");
            dagger.push(b);
            if worst > best.1 {
                best = (AiAction(a), worst);
            }
        }
        shield.push(best.0);
    }
    (shield, dagger)
}
