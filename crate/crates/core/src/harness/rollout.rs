use serde::Serialize;

use super::{Experiment, FilterMode, HarnessError, HumanPolicy, TaskPolicy};
use crate::model::{AiAction, HumanAction, InfoState, Observation};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutConfig {
    pub task: TaskPolicy,
    pub human: HumanPolicy,
    pub filter: FilterMode,
    pub initial_state: InfoState,
    pub max_steps: usize,
    pub seed: u64,
}

/// One line of the JSONL trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub z: InfoState,
    pub task_a: AiAction,
    /// Perfect monitor value of the task action, also for unfiltered runs.
    pub monitor: f64,
    pub intervened: bool,
    pub executed_a: AiAction,
    pub a_human: HumanAction,
    pub obs: Observation,
    /// Margin of `z`.
    pub margin: f64,
    pub z_next: InfoState,
    /// Set when the human action lies outside the bound at `z`.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub off_odd: bool,
    /// Whether the ground-truth state at this step is a privileged failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gt_failure: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub steps: usize,
    /// Smallest margin over every visited state, the final one included.
    pub min_margin: f64,
    /// Visited states (final one included) with negative margin.
    pub violations: usize,
    pub intervention_rate: f64,
    pub off_odd_steps: usize,
    pub gt_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutTrace {
    pub records: Vec<StepRecord>,
    pub final_state: InfoState,
    pub final_gt_failure: Option<bool>,
    pub summary: TraceSummary,
}

impl RolloutTrace {
    /// First step at which the visited state has negative margin; `max_steps`
    /// denotes the final state.
    pub fn first_violation(&self) -> Option<usize> {
        self.records
            .iter()
            .position(|r| r.margin < 0.0)
            .or_else(|| (self.summary.violations > 0).then_some(self.records.len()))
    }

    /// JSONL export. Each step is re-derived from the world model first.
    pub fn to_jsonl(&self, exp: &Experiment) -> Result<String, HarnessError> {
        let mut out = String::new();
        for (i, r) in self.records.iter().enumerate() {
            let next = exp.spec.step(r.z, r.executed_a, r.a_human, r.obs)?;
            if next != r.z_next {
                return Err(HarnessError::TraceInconsistent(format!("step {i}: recorded {} but model gives {next}", r.z_next)));
            }
            if let Some(following) = self.records.get(i + 1) {
                if following.z != next {
                    return Err(HarnessError::TraceInconsistent(format!("step {} does not start where step {i} ended", i + 1)));
                }
            }
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Runs one episode.
///
/// Per step: the task policy proposes, the filter maps the proposal to the
/// executed action, the human responds, an observation is drawn and the
/// information state advances. With a ground truth present the observation
/// is the one the world emits; otherwise it is sampled. Random draws come from
/// one `chacha8-v1` stream in the order task, human, observation, each only
/// when that draw is needed.
pub fn rollout(exp: &Experiment, config: &RolloutConfig) -> Result<RolloutTrace, HarnessError> {
    if config.max_steps == 0 {
        return Err(HarnessError::NoSteps);
    }
    let spec = &exp.spec;
    let sol = &exp.solution;
    exp.spec.margin(config.initial_state)?;
    validate_policies(exp, config)?;

    let filter = exp.filter_for(config.filter);
    let mut rng = Stream::new(config.seed);
    let gt = exp.ground_truth();
    let mut joint = gt.and_then(|g| g.initial_joint_state(config.initial_state));

    let mut z = config.initial_state;
    let mut records = Vec::with_capacity(config.max_steps);
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    let mut interventions = 0;
    let mut off_odd_steps = 0;
    let mut gt_failures = 0;

    for t in 0..config.max_steps {
        let margin = spec.margin[z.0];
        min_margin = min_margin.min(margin);
        violations += usize::from(margin < 0.0);
        let gt_failure = match (gt, joint) {
            (Some(g), Some((s, h))) => Some(g.is_privileged_failure(s, h)),
            _ => None,
        };
        gt_failures += usize::from(gt_failure == Some(true));

        let task_a = match &config.task {
            TaskPolicy::Constant(a) => *a,
            TaskPolicy::Table(table) => table[z.0],
            TaskPolicy::UniformRandom => AiAction(rng.below(spec.num_ai_actions())),
            TaskPolicy::Fallback => sol.fallback(z),
        };
        let (executed_a, monitor, intervened) = match &filter {
            Some(f) => {
                let (exec, rec) = f.filter(t, z, task_a);
                (exec, rec.monitor, rec.intervened)
            }
            None => (task_a, exp.filter.monitor.value(z, task_a), false),
        };
        interventions += usize::from(intervened);

        let a_human = match &config.human {
            HumanPolicy::WorstCase => sol.adversary(z, executed_a),
            HumanPolicy::UniformInBound => {
                let allowed = &spec.bound[z.0];
                allowed[rng.below(allowed.len())]
            }
            HumanPolicy::Table(table) => table[z.0],
            HumanPolicy::Script(script) => script[t.min(script.len() - 1)],
            HumanPolicy::OffOddViolator => {
                let mut best = HumanAction(0);
                let mut best_q = f64::INFINITY;
                for b in spec.human_action_ids() {
                    let q = sol.q_value(z, executed_a, b)?;
                    if q < best_q {
                        best = b;
                        best_q = q;
                    }
                }
                best
            }
        };
        let off_odd = !spec.is_allowed(z, a_human);
        off_odd_steps += usize::from(off_odd);

        let obs = match (gt, joint) {
            (Some(g), Some((s, _))) => Observation(g.ai_observation[s]),
            _ => {
                let row = spec.observation_row(z.0, executed_a.0, a_human.0);
                match row.iter().position(|&p| p == 1.0) {
                    Some(o) => Observation(o),
                    None => Observation(rng.categorical(row)),
                }
            }
        };
        let z_next = spec.step(z, executed_a, a_human, obs)?;
        if let (Some(g), Some((s, h))) = (gt, joint) {
            joint = Some(g.step(s, h, executed_a.0, a_human.0, spec.num_ai_actions(), spec.num_human_actions()));
        }
        records.push(StepRecord {
            t,
            z,
            task_a,
            monitor,
            intervened,
            executed_a,
            a_human,
            obs,
            margin,
            z_next,
            off_odd,
            gt_failure,
        });
        z = z_next;
    }

    let final_margin = spec.margin[z.0];
    min_margin = min_margin.min(final_margin);
    violations += usize::from(final_margin < 0.0);
    let final_gt_failure = match (gt, joint) {
        (Some(g), Some((s, h))) => Some(g.is_privileged_failure(s, h)),
        _ => None,
    };
    gt_failures += usize::from(final_gt_failure == Some(true));

    let steps = records.len();
    Ok(RolloutTrace {
        records,
        final_state: z,
        final_gt_failure,
        summary: TraceSummary {
            steps,
            min_margin,
            violations,
            intervention_rate: interventions as f64 / steps as f64,
            off_odd_steps,
            gt_failures,
        },
    })
}

fn validate_policies(exp: &Experiment, config: &RolloutConfig) -> Result<(), HarnessError> {
    let (nz, na, nh) = (exp.spec.num_states, exp.spec.num_ai_actions(), exp.spec.num_human_actions());
    let bad = |what: &str| Err(HarnessError::PolicyResolution(what.to_string()));
    match &config.task {
        TaskPolicy::Constant(a) if a.0 >= na => return bad("task action out of range"),
        TaskPolicy::Table(t) if t.len() != nz || t.iter().any(|a| a.0 >= na) => return bad("task table"),
        _ => {}
    }
    match &config.human {
        HumanPolicy::Table(t) if t.len() != nz || t.iter().any(|b| b.0 >= nh) => bad("human table"),
        HumanPolicy::Script(s) if s.is_empty() || s.iter().any(|b| b.0 >= nh) => bad("human script"),
        _ => Ok(()),
    }
}
