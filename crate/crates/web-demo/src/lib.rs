//! Browser demo: solve a chain, roll out a filtered episode, inspect the
//! dialogue monitor. Each operation returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use hai_safety::harness::{rollout, Experiment, FilterMode, RolloutConfig};
use hai_safety::scenarios::{build_chain_with_actions, build_dialogue_with_bound};
use hai_safety::{InfoState, SolveOptions};

const MAX_CHAIN: usize = 60;
const MAX_STEPS: usize = 500;

#[derive(Serialize)]
struct ChainSolution {
    values: Vec<f64>,
    margin: Vec<f64>,
    safe_set: Vec<usize>,
    fallback: Vec<String>,
    iterations: usize,
}

#[derive(Serialize)]
struct Step {
    z: usize,
    task_a: String,
    executed_a: String,
    a_human: String,
    monitor: f64,
    intervened: bool,
    off_odd: bool,
    margin: f64,
}

#[derive(Serialize)]
struct Episode {
    steps: Vec<Step>,
    final_state: usize,
    violations: usize,
    min_margin: f64,
    intervention_rate: f64,
}

#[derive(Serialize)]
struct MonitorTable {
    states: Vec<String>,
    actions: Vec<String>,
    values: Vec<f64>,
    /// `monitor[z][a]`
    monitor: Vec<Vec<f64>>,
    fallback: Vec<String>,
}

fn chain(n: usize, reach: usize, action_reach: usize) -> Result<Experiment, String> {
    if !(2..=MAX_CHAIN).contains(&n) {
        return Err(format!("chain length must be between 2 and {MAX_CHAIN}"));
    }
    if reach == 0 || action_reach < reach || action_reach > n {
        return Err("need 1 <= reach <= action reach <= n".into());
    }
    Experiment::new(build_chain_with_actions(n, reach, action_reach), SolveOptions::default()).map_err(|e| e.to_string())
}

pub fn solve_chain_json(n: usize, reach: usize) -> Result<String, String> {
    let exp = chain(n, reach, reach)?;
    let sol = &exp.solution;
    let out = ChainSolution {
        values: sol.values.clone(),
        margin: exp.spec.margin.clone(),
        safe_set: sol.safe_set.iter().map(|z| z.0).collect(),
        fallback: sol.pi_shield.iter().map(|a| exp.spec.ai_actions[a.0].clone()).collect(),
        iterations: sol.iterations,
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

#[allow(clippy::too_many_arguments)]
pub fn rollout_chain_json(
    n: usize,
    reach: usize,
    action_reach: usize,
    z0: usize,
    task: &str,
    human: &str,
    filter: &str,
    steps: usize,
    seed: u64,
) -> Result<String, String> {
    let exp = chain(n, reach, action_reach)?;
    if z0 > n {
        return Err(format!("initial state must lie in 0..={n}"));
    }
    if steps == 0 || steps > MAX_STEPS {
        return Err(format!("steps must be between 1 and {MAX_STEPS}"));
    }
    let config = RolloutConfig {
        task: exp.resolve_task(task).map_err(|e| e.to_string())?,
        human: exp.resolve_human(human).map_err(|e| e.to_string())?,
        filter: filter.parse::<FilterMode>().map_err(|e| e.to_string())?,
        initial_state: InfoState(z0),
        max_steps: steps,
        seed,
    };
    let trace = rollout(&exp, &config).map_err(|e| e.to_string())?;
    let label_a = |a: hai_safety::AiAction| exp.spec.ai_actions[a.0].clone();
    let out = Episode {
        steps: trace
            .records
            .iter()
            .map(|r| Step {
                z: r.z.0,
                task_a: label_a(r.task_a),
                executed_a: label_a(r.executed_a),
                a_human: exp.spec.human_actions[r.a_human.0].clone(),
                monitor: r.monitor,
                intervened: r.intervened,
                off_odd: r.off_odd,
                margin: r.margin,
            })
            .collect(),
        final_state: trace.final_state.0,
        violations: trace.summary.violations,
        min_margin: trace.summary.min_margin,
        intervention_rate: trace.summary.intervention_rate,
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

pub fn dialogue_monitor_json(normative: bool) -> Result<String, String> {
    let exp = Experiment::new(build_dialogue_with_bound(normative), SolveOptions::default()).map_err(|e| e.to_string())?;
    let spec = &exp.spec;
    let out = MonitorTable {
        states: spec.states().map(|z| spec.state_label(z)).collect(),
        actions: spec.ai_actions.clone(),
        values: exp.solution.values.clone(),
        monitor: spec.states().map(|z| spec.ai_action_ids().map(|a| exp.filter.monitor.value(z, a)).collect()).collect(),
        fallback: exp.solution.pi_shield.iter().map(|a| spec.ai_actions[a.0].clone()).collect(),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

#[wasm_bindgen]
pub fn solve_chain(n: usize, reach: usize) -> Result<String, JsValue> {
    solve_chain_json(n, reach).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn rollout_chain(
    n: usize,
    reach: usize,
    action_reach: usize,
    z0: usize,
    task: &str,
    human: &str,
    filter: &str,
    steps: usize,
    seed: u64,
) -> Result<String, JsValue> {
    rollout_chain_json(n, reach, action_reach, z0, task, human, filter, steps, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn dialogue_monitor(normative: bool) -> Result<String, JsValue> {
    dialogue_monitor_json(normative).map_err(|e| JsValue::from_str(&e))
}
