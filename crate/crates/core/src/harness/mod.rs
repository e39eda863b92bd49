//! Rollouts, verification and oracle comparison. This is the only place that
//! steps the privileged ground truth.

mod oracle;
mod rollout;
mod verify;

pub use oracle::{compare_oracle, OracleReport, OracleRow, STOCHASTIC_ORACLE_TOLERANCE};
pub use rollout::{rollout, RolloutConfig, RolloutTrace, StepRecord, TraceSummary};
pub use verify::{verify_filter_safety, Counterexample, CounterexampleStep, VerificationMode, VerificationReport, VerifyOptions};

use std::sync::Arc;

use thiserror::Error;

use crate::filter::{perfect_filter, ActionMetric, FilterError, Intervention, SafetyFilter};
use crate::format::{HumanPolicySpec, SpecDocument, TaskPolicySpec};
use crate::model::{AiAction, GameSpec, GroundTruthSystem, HumanAction, ModelError};
use crate::solver::{value_iteration, SolveOptions, SolverError, ValueSolution};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot resolve policy {0:?}")]
    PolicyResolution(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("max_steps must be at least 1")]
    NoSteps,
    #[error("verification budget of {budget} transitions exceeded")]
    BudgetExceeded { budget: u64, partial: Box<VerificationReport> },
    #[error("trace is inconsistent with the world model: {0}")]
    TraceInconsistent(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskPolicy {
    Constant(AiAction),
    Table(Vec<AiAction>),
    /// Uniform over all AI actions, drawn from the rollout stream.
    UniformRandom,
    /// Propose the fallback action itself.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HumanPolicy {
    /// The virtual adversary `pi_dagger`.
    WorstCase,
    /// Uniform over the allowed actions, drawn from the rollout stream.
    UniformInBound,
    Table(Vec<HumanAction>),
    /// Time-indexed sequence; the last action repeats.
    Script(Vec<HumanAction>),
    /// Minimises `Q` over every human action, allowed or not.
    OffOddViolator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    None,
    Switch,
    LeastRestrictive,
    FallbackOnly,
}

impl std::str::FromStr for FilterMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(FilterMode::None),
            "switch" => Ok(FilterMode::Switch),
            "least-restrictive" | "least_restrictive" => Ok(FilterMode::LeastRestrictive),
            "fallback-only" | "fallback_only" => Ok(FilterMode::FallbackOnly),
            other => Err(HarnessError::PolicyResolution(format!("filter {other}"))),
        }
    }
}

/// A solved game ready for rollouts and verification.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub doc: Arc<SpecDocument>,
    pub spec: Arc<GameSpec>,
    pub solution: Arc<ValueSolution>,
    pub filter: SafetyFilter,
}

impl Experiment {
    pub fn new(doc: SpecDocument, options: SolveOptions) -> Result<Self, HarnessError> {
        let spec = Arc::new(doc.game.clone());
        let solution = Arc::new(value_iteration(&spec, options)?);
        let filter = perfect_filter(Arc::clone(&solution))?;
        Ok(Self { doc: Arc::new(doc), spec, solution, filter })
    }

    pub fn ground_truth(&self) -> Option<&GroundTruthSystem> {
        self.doc.ground_truth.as_ref()
    }

    /// The perfect filter with the intervention scheme `mode` selects, or
    /// `None` for unfiltered play.
    pub fn filter_for(&self, mode: FilterMode) -> Option<SafetyFilter> {
        let intervention = match mode {
            FilterMode::None => return None,
            FilterMode::Switch => Intervention::Switch,
            FilterMode::LeastRestrictive => Intervention::LeastRestrictive(ActionMetric::from_spec(&self.spec)),
            FilterMode::FallbackOnly => Intervention::FallbackOnly,
        };
        Some(self.filter.clone().with_intervention(intervention))
    }

    /// Task policy by name: `constant:<action>`, `random`, `fallback`, or a
    /// policy named in the document.
    pub fn resolve_task(&self, name: &str) -> Result<TaskPolicy, HarnessError> {
        if let Some(action) = name.strip_prefix("constant:") {
            return Ok(TaskPolicy::Constant(AiAction(lookup(&self.spec.ai_actions, action, name)?)));
        }
        match name {
            "random" => Ok(TaskPolicy::UniformRandom),
            "fallback" => Ok(TaskPolicy::Fallback),
            _ => match self.doc.policies.task.get(name) {
                Some(TaskPolicySpec::Constant(a)) => Ok(TaskPolicy::Constant(*a)),
                Some(TaskPolicySpec::Table(t)) => Ok(TaskPolicy::Table(t.clone())),
                None => Err(HarnessError::PolicyResolution(name.to_string())),
            },
        }
    }

    /// Human policy by name: `worst_case`, `uniform`, `violator`,
    /// `script:<a>,<b>,...`, or a policy named in the document.
    pub fn resolve_human(&self, name: &str) -> Result<HumanPolicy, HarnessError> {
        if let Some(list) = name.strip_prefix("script:") {
            let actions = list
                .split(',')
                .map(|a| lookup(&self.spec.human_actions, a.trim(), name).map(HumanAction))
                .collect::<Result<Vec<_>, _>>()?;
            if actions.is_empty() {
                return Err(HarnessError::PolicyResolution(name.to_string()));
            }
            return Ok(HumanPolicy::Script(actions));
        }
        match name {
            "worst_case" | "worst-case" => Ok(HumanPolicy::WorstCase),
            "uniform" => Ok(HumanPolicy::UniformInBound),
            "violator" => Ok(HumanPolicy::OffOddViolator),
            _ => match self.doc.policies.human.get(name) {
                Some(HumanPolicySpec::Table(t)) => Ok(HumanPolicy::Table(t.clone())),
                Some(HumanPolicySpec::Script(s)) => Ok(HumanPolicy::Script(s.clone())),
                None => Err(HarnessError::PolicyResolution(name.to_string())),
            },
        }
    }
}

/// Resolves an action given by label or index.
fn lookup(labels: &[String], item: &str, whole: &str) -> Result<usize, HarnessError> {
    labels
        .iter()
        .position(|l| l == item)
        .or_else(|| item.parse::<usize>().ok().filter(|&i| i < labels.len()))
        .ok_or_else(|| HarnessError::PolicyResolution(whole.to_string()))
}
