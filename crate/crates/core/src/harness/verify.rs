use std::collections::BTreeSet;

use serde::Serialize;

use super::{Experiment, FilterMode, HarnessError};
use crate::filter::check_initial_condition;
use crate::model::{AiAction, HumanAction, InfoState, Observation};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub depth: usize,
    /// Largest state count explored exhaustively; bigger games are sampled.
    pub exhaustive_limit: usize,
    pub filter: FilterMode,
    /// Initial states to check. `None` means every certified state.
    pub initial_states: Option<Vec<InfoState>>,
    /// Trajectories drawn in sampled mode, spread over the initial states.
    pub samples: usize,
    pub seed: u64,
    /// Cap on transitions expanded.
    pub max_transitions: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            depth: 8,
            exhaustive_limit: 200,
            filter: FilterMode::Switch,
            initial_states: None,
            samples: 10_000,
            seed: 0,
            max_transitions: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleStep {
    pub z: InfoState,
    pub task_a: AiAction,
    pub executed_a: AiAction,
    pub a_human: HumanAction,
    pub obs: Observation,
    pub z_next: InfoState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub z0: InfoState,
    pub steps: Vec<CounterexampleStep>,
    pub failure_state: InfoState,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub mode: VerificationMode,
    pub depth: usize,
    pub initial_states: Vec<InfoState>,
    pub transitions: u64,
    pub trajectories: u64,
    pub counterexamples: Vec<Counterexample>,
}

impl VerificationReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Checks that no admissible play from a certified state reaches the failure
/// set within `depth` steps.
///
/// Task actions range over every AI action, the human over the bound and
/// observations over every outcome of positive probability. Deterministic
/// games with at most `exhaustive_limit` states are checked exactly: the set
/// of states reachable within `depth` steps is built layer by layer, keeping
/// one witness path to each. Other games are checked on seeded random
/// trajectories. At most one
/// counterexample is kept per initial state.
pub fn verify_filter_safety(exp: &Experiment, options: &VerifyOptions) -> Result<VerificationReport, HarnessError> {
    let spec = &exp.spec;
    let initial_states = match &options.initial_states {
        Some(states) => {
            for &z in states {
                spec.margin(z)?;
            }
            states.clone()
        }
        None => spec.states().filter(|&z| check_initial_condition(&exp.filter, z)).collect(),
    };

    // executed action for each (state, task action)
    let filter = exp.filter_for(options.filter);
    let na = spec.num_ai_actions();
    let executed: Vec<AiAction> = spec
        .states()
        .flat_map(|z| spec.ai_action_ids().map(move |a| (z, a)))
        .map(|(z, a)| filter.as_ref().map_or(a, |f| f.filter(0, z, a).0))
        .collect();

    let mut report = VerificationReport {
        mode: if spec.is_deterministic() && spec.num_states <= options.exhaustive_limit {
            VerificationMode::Exhaustive
        } else {
            VerificationMode::Sampled
        },
        depth: options.depth,
        initial_states: initial_states.clone(),
        transitions: 0,
        trajectories: 0,
        counterexamples: Vec::new(),
    };

    match report.mode {
        VerificationMode::Exhaustive => {
            for &z0 in &initial_states {
                if let Some(cx) = explore(exp, z0, options, &executed, &mut report)? {
                    report.counterexamples.push(cx);
                }
            }
        }
        VerificationMode::Sampled => {
            if initial_states.is_empty() {
                return Ok(report);
            }
            let mut rng = Stream::new(options.seed);
            let mut failed = BTreeSet::new();
            for k in 0..options.samples {
                let z0 = initial_states[k % initial_states.len()];
                let mut z = z0;
                let mut steps = Vec::new();
                report.trajectories += 1;
                if spec.margin[z.0] < 0.0 && failed.insert(z0) {
                    report.counterexamples.push(Counterexample { z0, steps: Vec::new(), failure_state: z, margin: spec.margin[z.0] });
                    continue;
                }
                for _ in 0..options.depth {
                    if report.transitions >= options.max_transitions {
                        return Err(budget(options, report));
                    }
                    report.transitions += 1;
                    let task_a = AiAction(rng.below(na));
                    let executed_a = executed[z.0 * na + task_a.0];
                    let allowed = &spec.bound[z.0];
                    let a_human = allowed[rng.below(allowed.len())];
                    let obs = Observation(rng.categorical(spec.observation_row(z.0, executed_a.0, a_human.0)));
                    let z_next = spec.step(z, executed_a, a_human, obs)?;
                    steps.push(CounterexampleStep { z, task_a, executed_a, a_human, obs, z_next });
                    z = z_next;
                    if spec.margin[z.0] < 0.0 {
                        if failed.insert(z0) {
                            report.counterexamples.push(Counterexample {
                                z0,
                                steps: steps.clone(),
                                failure_state: z,
                                margin: spec.margin[z.0],
                            });
                        }
                        break;
                    }
                }
            }
        }
    }
    Ok(report)
}

fn budget(options: &VerifyOptions, report: VerificationReport) -> HarnessError {
    HarnessError::BudgetExceeded { budget: options.max_transitions, partial: Box::new(report) }
}

fn explore(
    exp: &Experiment,
    z0: InfoState,
    options: &VerifyOptions,
    executed: &[AiAction],
    report: &mut VerificationReport,
) -> Result<Option<Counterexample>, HarnessError> {
    let spec = &exp.spec;
    let na = spec.num_ai_actions();
    let mut parent: Vec<Option<CounterexampleStep>> = vec![None; spec.num_states];
    let mut seen = vec![false; spec.num_states];
    seen[z0.0] = true;
    if spec.margin[z0.0] < 0.0 {
        return Ok(Some(Counterexample { z0, steps: Vec::new(), failure_state: z0, margin: spec.margin[z0.0] }));
    }
    let mut frontier = vec![z0];
    for _ in 0..options.depth {
        let mut next_frontier = Vec::new();
        for &z in &frontier {
            for task_a in spec.ai_action_ids() {
                let executed_a = executed[z.0 * na + task_a.0];
                for &a_human in &spec.bound[z.0] {
                    for (o, _, next) in spec.outcomes(z.0, executed_a.0, a_human.0) {
                        if report.transitions >= options.max_transitions {
                            return Err(HarnessError::BudgetExceeded {
                                budget: options.max_transitions,
                                partial: Box::new(report.clone()),
                            });
                        }
                        report.transitions += 1;
                        if seen[next] {
                            continue;
                        }
                        seen[next] = true;
                        parent[next] = Some(CounterexampleStep {
                            z,
                            task_a,
                            executed_a,
                            a_human,
                            obs: Observation(o),
                            z_next: InfoState(next),
                        });
                        if spec.margin[next] < 0.0 {
                            return Ok(Some(witness(z0, InfoState(next), &parent, spec.margin[next])));
                        }
                        next_frontier.push(InfoState(next));
                    }
                }
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        frontier = next_frontier;
    }
    Ok(None)
}

fn witness(z0: InfoState, failure: InfoState, parent: &[Option<CounterexampleStep>], margin: f64) -> Counterexample {
    let mut steps = Vec::new();
    let mut cur = failure;
    while cur != z0 {
        let step = parent[cur.0].clone().expect("reached states have parents");
        cur = step.z;
        steps.push(step);
    }
    steps.reverse();
    Counterexample { z0, steps, failure_state: failure, margin }
}
