//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use hai_safety::filter::{pluggable_monitor, MonitorMode};
use hai_safety::format::{parse_spec, serialize, SpecDocument};
use hai_safety::harness::{
    compare_oracle, rollout, verify_filter_safety, Experiment, FilterMode, HumanPolicy, RolloutConfig, TaskPolicy,
    VerificationMode, VerifyOptions,
};
use hai_safety::rng::Stream;
use hai_safety::scenarios::{
    build_chain, build_chain_with_actions, build_dialogue, build_dialogue_with_bound, random_game, RandomGameParams,
};
use hai_safety::solver::{sweep, BruteForceOptions};
use hai_safety::{AiAction, GameSpec, HumanAction, InfoState, SolveOptions, ValueSolution};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solve(spec: &GameSpec) -> ValueSolution {
    hai_safety::value_iteration(spec, SolveOptions::default()).expect("corpus games solve")
}

fn experiment(doc: SpecDocument) -> Experiment {
    Experiment::new(doc, SolveOptions::default()).expect("corpus games solve")
}

/// Random deterministic game whose sizes are drawn from the seed.
fn sized_game(seed: u64, max_states: usize) -> SpecDocument {
    let mut rng = Stream::new(seed ^ 0x5eed);
    let states = 1 + rng.below(max_states);
    let na = 1 + rng.below(4);
    let nh = 1 + rng.below(4);
    random_game(seed, RandomGameParams::new(states, na, nh, 1))
}

fn scenario_corpus() -> Vec<SpecDocument> {
    vec![
        build_chain(5, 1),
        build_chain(5, 2),
        build_chain(2, 1),
        build_chain_with_actions(5, 1, 3),
        build_dialogue(),
        build_dialogue_with_bound(false),
    ]
}

fn random_corpus() -> Vec<SpecDocument> {
    (0..100).map(|seed| sized_game(1000 + seed, 50)).collect()
}

fn oracle_equivalence() -> Outcome {
    let mut states = 0;
    let mut largest = 0;
    for seed in 0..100 {
        let doc = sized_game(seed, 200);
        let spec = &doc.game;
        let sol = solve(spec);
        check(sol.converged, || format!("seed {seed} did not converge"))?;
        let report = compare_oracle(spec, &sol, sol.iterations, BruteForceOptions::default()).map_err(|e| e.to_string())?;
        check(report.max_discrepancy == 0.0, || {
            format!("seed {seed}: discrepancy {} at horizon {}", report.max_discrepancy, report.horizon)
        })?;
        states += spec.num_states;
        largest = largest.max(spec.num_states);
    }
    Ok(format!("100 games, {states} states (largest {largest}), discrepancy 0.0"))
}

fn chain_closed_forms() -> Outcome {
    let sol = solve(&build_chain(5, 1).game);
    let expected: Vec<f64> = (0..=5).map(|z| z as f64 - 1.0).collect();
    check(sol.values == expected, || format!("CHAIN(5) V = {:?}", sol.values))?;
    check(sol.safe_set == (1..=5).map(InfoState).collect::<Vec<_>>(), || format!("CHAIN(5) safe set {:?}", sol.safe_set))?;
    for z in 1..=5 {
        check(sol.fallback(InfoState(z)) == AiAction(2), || format!("fallback at {z} is not +1"))?;
    }
    let weak = solve(&build_chain(5, 2).game);
    check(weak.values.iter().all(|&v| v == -1.0), || format!("CHAIN-WEAK(5) V = {:?}", weak.values))?;
    check(weak.safe_set.is_empty(), || "CHAIN-WEAK(5) safe set is not empty".into())?;
    Ok("CHAIN(5) V = z - 1, CHAIN-WEAK(5) V = -1".into())
}

fn exhaustive_verification() -> Outcome {
    let mut docs = vec![build_chain(5, 1), build_dialogue()];
    docs.extend(random_corpus());
    let mut certified = 0;
    let mut transitions = 0;
    for doc in docs {
        let name = doc.game.name.clone().unwrap_or_default();
        let exp = experiment(doc);
        let report = verify_filter_safety(&exp, &VerifyOptions { depth: 8, ..VerifyOptions::default() })
            .map_err(|e| format!("{name}: {e}"))?;
        check(report.mode == VerificationMode::Exhaustive, || format!("{name} was sampled"))?;
        check(report.holds(), || format!("{name}: counterexample {:?}", report.counterexamples[0]))?;
        certified += report.initial_states.len();
        transitions += report.transitions;
    }

    let exp = experiment(build_chain(5, 1));
    let control = verify_filter_safety(
        &exp,
        &VerifyOptions { depth: 3, filter: FilterMode::None, initial_states: Some(vec![InfoState(3)]), ..VerifyOptions::default() },
    )
    .map_err(|e| e.to_string())?;
    let cx = control.counterexamples.first().ok_or("unfiltered control found no violation")?;
    check(cx.steps.len() <= 3, || format!("control violation after {} steps", cx.steps.len()))?;
    Ok(format!(
        "{certified} certified initial states, {transitions} transitions, 0 counterexamples; control violates after {} steps",
        cx.steps.len()
    ))
}

fn controlled_invariance() -> Outcome {
    let mut checked = 0;
    for doc in scenario_corpus().into_iter().chain(random_corpus()) {
        let spec = &doc.game;
        let sol = solve(spec);
        for &z in &sol.safe_set {
            if spec.margin[z.0] < 0.0 {
                continue;
            }
            let a = sol.fallback(z);
            for &b in &spec.bound[z.0] {
                for (_, _, next) in spec.outcomes(z.0, a.0, b.0) {
                    check(sol.in_safe_set(InfoState(next)), || {
                        format!("{:?}: {z} -> {next} under fallback leaves the safe set", spec.name)
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} fallback successors stay in the safe set"))
}

fn odd_monotonicity() -> Outcome {
    let mut shrunk = 0;
    for seed in 0..50u64 {
        let spec = sized_game(2000 + seed, 60).game;
        let wide = solve(&spec);
        let mut rng = Stream::new(seed);
        let mut bound = spec.bound.clone();
        for _ in 0..=spec.num_states / 2 {
            let z = rng.below(spec.num_states);
            if bound[z].len() > 1 {
                let drop = rng.below(bound[z].len());
                bound[z].remove(drop);
                shrunk += 1;
            }
        }
        let narrow = solve(&spec.with_bound(bound));
        for z in spec.states() {
            check(narrow.value(z) >= wide.value(z), || format!("seed {seed}: V dropped at {z}"))?;
        }
        for z in &wide.safe_set {
            check(narrow.in_safe_set(*z), || format!("seed {seed}: {z} left the safe set"))?;
        }
    }
    Ok(format!("50 games, {shrunk} bound entries removed, no value decreased"))
}

fn monotone_iteration() -> Outcome {
    let mut sweeps = 0;
    let mut docs = scenario_corpus();
    docs.extend(random_corpus());
    docs.extend((0..100).map(|seed| sized_game(seed, 200)));
    for doc in docs {
        let spec = &doc.game;
        let mut v = spec.margin.clone();
        let mut changed_sweeps = 0;
        loop {
            let next = sweep(spec, &v);
            sweeps += 1;
            for z in 0..spec.num_states {
                check(next[z] <= v[z], || format!("{:?}: sweep increased V at {z}", spec.name))?;
            }
            if next == v {
                break;
            }
            changed_sweeps += 1;
            v = next;
            check(changed_sweeps <= spec.num_states, || format!("{:?}: still changing after |Z| sweeps", spec.name))?;
        }
        let sol = solve(spec);
        check(sol.iterations <= spec.num_states, || {
            format!("{:?}: {} sweeps for {} states", spec.name, sol.iterations, spec.num_states)
        })?;
    }
    Ok(format!("{sweeps} sweeps, none increasing; all settle within |Z|"))
}

fn acceptance_rollouts(exp: &Experiment, seed: u64) -> Vec<RolloutConfig> {
    let mut configs = Vec::new();
    let task_choices = [TaskPolicy::UniformRandom, TaskPolicy::Constant(AiAction(0))];
    let human_choices = [HumanPolicy::WorstCase, HumanPolicy::UniformInBound];
    for (i, &z) in exp.solution.safe_set.iter().enumerate().take(5) {
        for task in &task_choices {
            for human in &human_choices {
                for filter in [FilterMode::Switch, FilterMode::LeastRestrictive] {
                    configs.push(RolloutConfig {
                        task: task.clone(),
                        human: human.clone(),
                        filter,
                        initial_state: z,
                        max_steps: 20,
                        seed: seed + i as u64,
                    });
                }
            }
        }
    }
    configs
}

fn least_restrictiveness() -> Outcome {
    let mut steps = 0;
    let mut pairs = 0;
    let mut docs = scenario_corpus();
    docs.extend(random_corpus());
    for (k, doc) in docs.into_iter().enumerate() {
        let exp = experiment(doc);
        for config in acceptance_rollouts(&exp, k as u64) {
            let trace = rollout(&exp, &config).map_err(|e| e.to_string())?;
            check(trace.summary.violations == 0, || format!("{:?}: filtered rollout violated", exp.spec.name))?;
            for r in &trace.records {
                steps += 1;
                let modified = r.executed_a != r.task_a;
                check(!modified || r.monitor <= 0.0, || {
                    format!("{:?}: step {} modified with monitor {}", exp.spec.name, r.t, r.monitor)
                })?;
                check(r.intervened == modified, || format!("{:?}: intervention flag mismatch", exp.spec.name))?;
            }
        }

        if exp.spec.is_deterministic() {
            let critic = &exp.filter.monitor;
            let horizon = exp.solution.iterations.max(1);
            let rollout_monitor =
                pluggable_monitor(Arc::clone(&exp.spec), Arc::clone(&exp.solution), MonitorMode::RolloutAdversary(horizon))
                    .map_err(|e| e.to_string())?;
            for z in exp.spec.states() {
                for a in exp.spec.ai_action_ids() {
                    let (c, r) = (critic.value(z, a), rollout_monitor.value(z, a));
                    check(c.signum() == r.signum() && (c == 0.0) == (r == 0.0), || {
                        format!("{:?}: critic {c} vs rollout {r} at ({z}, {a:?})", exp.spec.name)
                    })?;
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{steps} filtered steps modified only at monitor <= 0; {pairs} (z, a) pairs agree in sign"))
}

fn conditionality() -> Outcome {
    let exp = experiment(build_chain_with_actions(5, 1, 3));
    let z0 = InfoState(3);
    check(exp.solution.in_safe_set(z0), || "z0 = 3 is not certified".into())?;
    let trace = rollout(
        &exp,
        &RolloutConfig {
            task: TaskPolicy::Constant(AiAction(0)),
            human: HumanPolicy::OffOddViolator,
            filter: FilterMode::Switch,
            initial_state: z0,
            max_steps: 5,
            seed: 0,
        },
    )
    .map_err(|e| e.to_string())?;
    let minus_three = HumanAction(0);
    check(exp.spec.human_actions[minus_three.0] == "-3", || "action 0 is not -3".into())?;
    let flagged = trace.records.iter().filter(|r| r.off_odd && r.a_human == minus_three).count();
    check(flagged > 0, || "no flagged |b| = 3 step".into())?;
    let first = trace.first_violation().ok_or("off-bound play did not violate")?;
    check(trace.records[..first.min(trace.records.len())].iter().any(|r| r.off_odd), || {
        "violation was not preceded by a flagged step".into()
    })?;
    Ok(format!("{flagged} flagged steps with b = -3, first violation at step {first}"))
}

fn determinism_round_trip() -> Outcome {
    let mut corpus = scenario_corpus();
    corpus.extend(random_corpus());
    corpus.extend((0..20).map(|seed| random_game(seed, RandomGameParams { stochastic: true, ..RandomGameParams::new(12, 3, 2, 3) })));
    for seed in 0..20 {
        let a = serialize(&sized_game(seed, 200)).map_err(|e| e.to_string())?;
        let b = serialize(&sized_game(seed, 200)).map_err(|e| e.to_string())?;
        check(a == b, || format!("seed {seed} serialized differently"))?;
    }
    for doc in &corpus {
        let bytes = serialize(doc).map_err(|e| e.to_string())?;
        let back = parse_spec(&bytes).map_err(|e| format!("{:?}: {e}", doc.game.name))?;
        check(&back == doc, || format!("{:?}: parse(serialize(doc)) != doc", doc.game.name))?;
        check(serialize(&back).map_err(|e| e.to_string())? == bytes, || format!("{:?}: bytes changed", doc.game.name))?;
    }
    let mut traces = 0;
    for doc in corpus.iter().take(30) {
        let exp = experiment(doc.clone());
        for config in acceptance_rollouts(&exp, 9).into_iter().take(4) {
            let first = rollout(&exp, &config).and_then(|t| t.to_jsonl(&exp)).map_err(|e| e.to_string())?;
            let second = rollout(&exp, &config).and_then(|t| t.to_jsonl(&exp)).map_err(|e| e.to_string())?;
            check(first == second, || format!("{:?}: trace differs between runs", doc.game.name))?;
            traces += 1;
        }
    }
    Ok(format!("{} documents round-trip byte-identically; {traces} traces reproduce", corpus.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("chain closed forms", chain_closed_forms),
        ("exhaustive safety verification", exhaustive_verification),
        ("controlled invariance", controlled_invariance),
        ("bound monotonicity", odd_monotonicity),
        ("monotone iteration", monotone_iteration),
        ("filter least-restrictiveness", least_restrictiveness),
        ("conditionality on the bound", conditionality),
        ("determinism and round trip", determinism_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
