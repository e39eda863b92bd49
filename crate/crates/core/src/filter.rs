//! Runtime safety filter: a fallback policy, a safety monitor and an
//! intervention scheme wrapped around an arbitrary task policy.
//!
//! The perfect filter built from a converged [`ValueSolution`] uses the
//! fallback `pi_shield`, the monitor `Q(z, a, pi_dagger(z, a))` and a switch
//! that passes the task action only when its monitor value is strictly
//! positive. From any `z0` with `monitor(z0, fallback(z0)) >= 0`, filtered
//! play stays out of the failure set against every allowed human action on
//! deterministic games.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::model::{AiAction, GameSpec, InfoState};
use crate::solver::ValueSolution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("value solution has not converged (residual {residual} after {iterations} sweeps)")]
    NotConverged { residual: f64, iterations: usize },
    #[error("rollout monitor horizon must be at least 1")]
    ZeroHorizon,
}

/// Safety monitor `Delta(z, a)`: non-negative when the fallback can still keep
/// the system safe after `a` is taken at `z`.
#[derive(Clone)]
pub struct Monitor(Arc<dyn Fn(InfoState, AiAction) -> f64 + Send + Sync>);

impl Monitor {
    pub fn new(f: impl Fn(InfoState, AiAction) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn value(&self, z: InfoState, a: AiAction) -> f64 {
        (self.0)(z, a)
    }
}

impl fmt::Debug for Monitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Monitor(..)")
    }
}

/// Distance between AI actions used by least-restrictive intervention.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionMetric {
    IndexDistance,
    Table(Vec<Vec<f64>>),
}

impl ActionMetric {
    pub fn from_spec(spec: &GameSpec) -> Self {
        match &spec.action_metric {
            Some(table) => ActionMetric::Table(table.clone()),
            None => ActionMetric::IndexDistance,
        }
    }

    pub fn distance(&self, from: AiAction, to: AiAction) -> f64 {
        match self {
            ActionMetric::IndexDistance => (from.0 as f64 - to.0 as f64).abs(),
            ActionMetric::Table(t) => t[from.0][to.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Intervention {
    /// Task action if its monitor is positive, fallback otherwise.
    Switch,
    /// Closest action with positive monitor, fallback if there is none.
    LeastRestrictive(ActionMetric),
    FallbackOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterventionRecord {
    pub t: usize,
    pub z: InfoState,
    pub task_a: AiAction,
    pub monitor: f64,
    pub intervened: bool,
    pub executed_a: AiAction,
}

#[derive(Debug, Clone)]
pub struct SafetyFilter {
    pub fallback: Vec<AiAction>,
    pub monitor: Monitor,
    pub intervention: Intervention,
    pub num_ai_actions: usize,
    pub solution: Option<Arc<ValueSolution>>,
}

impl SafetyFilter {
    pub fn new(fallback: Vec<AiAction>, monitor: Monitor, intervention: Intervention, num_ai_actions: usize) -> Self {
        Self { fallback, monitor, intervention, num_ai_actions, solution: None }
    }

    pub fn with_intervention(mut self, intervention: Intervention) -> Self {
        self.intervention = intervention;
        self
    }

    pub fn fallback(&self, z: InfoState) -> AiAction {
        self.fallback[z.0]
    }

    /// Applies the intervention scheme at time `t`.
    pub fn filter(&self, t: usize, z: InfoState, task_a: AiAction) -> (AiAction, InterventionRecord) {
        let monitor = self.monitor.value(z, task_a);
        let executed = match &self.intervention {
            Intervention::Switch if monitor > 0.0 => task_a,
            Intervention::Switch | Intervention::FallbackOnly => self.fallback(z),
            Intervention::LeastRestrictive(metric) => {
                let mut best: Option<(AiAction, f64)> = None;
                for a in (0..self.num_ai_actions).map(AiAction) {
                    if self.monitor.value(z, a) <= 0.0 {
                        continue;
                    }
                    let d = metric.distance(task_a, a);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((a, d));
                    }
                }
                best.map_or_else(|| self.fallback(z), |(a, _)| a)
            }
        };
        let record = InterventionRecord { t, z, task_a, monitor, intervened: executed != task_a, executed_a: executed };
        (executed, record)
    }
}

/// The least-restrictive filter encoded by an exact game solution.
pub fn perfect_filter(sol: Arc<ValueSolution>) -> Result<SafetyFilter, FilterError> {
    if !sol.converged {
        return Err(FilterError::NotConverged { residual: sol.residual, iterations: sol.iterations });
    }
    let critic = Arc::clone(&sol);
    let monitor = Monitor::new(move |z, a| {
        let b = critic.adversary(z, a);
        critic.q[(z.0 * critic.num_ai_actions + a.0) * critic.num_human_actions + b.0]
    });
    Ok(SafetyFilter {
        fallback: sol.pi_shield.clone(),
        monitor,
        intervention: Intervention::Switch,
        num_ai_actions: sol.num_ai_actions,
        solution: Some(sol),
    })
}

pub fn filter_action(f: &SafetyFilter, z: InfoState, task_a: AiAction) -> (AiAction, InterventionRecord) {
    f.filter(0, z, task_a)
}

/// Precondition of the safety guarantee: the fallback is certified at `z0`.
pub fn check_initial_condition(f: &SafetyFilter, z0: InfoState) -> bool {
    f.monitor.value(z0, f.fallback(z0)) >= 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorMode {
    /// Read the Q-table against the worst-case human.
    Critic,
    /// Play the candidate action, then the fallback, against the worst-case
    /// human for `horizon` steps and report the smallest margin seen.
    RolloutAdversary(usize),
}

/// Builds a monitor from a converged solution.
///
/// The rollout variant follows the most likely observation at each step
/// (lowest index on ties); on deterministic games that is the only one.
pub fn pluggable_monitor(
    spec: Arc<GameSpec>,
    sol: Arc<ValueSolution>,
    mode: MonitorMode,
) -> Result<Monitor, FilterError> {
    if !sol.converged {
        return Err(FilterError::NotConverged { residual: sol.residual, iterations: sol.iterations });
    }
    match mode {
        MonitorMode::Critic => Ok(perfect_filter(sol)?.monitor),
        MonitorMode::RolloutAdversary(0) => Err(FilterError::ZeroHorizon),
        MonitorMode::RolloutAdversary(horizon) => Ok(Monitor::new(move |z0, a0| {
            let mut z = z0.0;
            let mut a = a0;
            let mut lowest = spec.margin[z];
            for _ in 0..horizon {
                let b = sol.adversary(InfoState(z), a);
                let o = likeliest(spec.observation_row(z, a.0, b.0));
                z = spec.next(z, a.0, b.0, o);
                lowest = lowest.min(spec.margin[z]);
                a = sol.fallback(InfoState(z));
            }
            lowest
        })),
    }
}

fn likeliest(row: &[f64]) -> usize {
    let mut best = 0;
    for (o, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = o;
        }
    }
    best
}
