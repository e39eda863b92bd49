use hai_safety::harness::{
    compare_oracle, rollout, verify_filter_safety, Experiment, FilterMode, HarnessError, HumanPolicy, RolloutConfig,
    TaskPolicy, VerificationMode, VerifyOptions,
};
use hai_safety::scenarios::{build_chain, build_chain_with_actions, build_dialogue, dialogue, random_game, RandomGameParams};
use hai_safety::solver::BruteForceOptions;
use hai_safety::{AiAction, HumanAction, InfoState, SolveOptions};

fn experiment(doc: hai_safety::SpecDocument) -> Experiment {
    Experiment::new(doc, SolveOptions::default()).unwrap()
}

fn tailgate(filter: FilterMode, steps: usize) -> RolloutConfig {
    RolloutConfig {
        task: TaskPolicy::Constant(AiAction(0)),
        human: HumanPolicy::WorstCase,
        filter,
        initial_state: InfoState(3),
        max_steps: steps,
        seed: 1,
    }
}

#[test]
fn filtered_chain_never_violates() {
    let exp = experiment(build_chain(5, 1));
    let trace = rollout(&exp, &tailgate(FilterMode::Switch, 10)).unwrap();
    assert_eq!(trace.summary.violations, 0);
    assert_eq!(trace.summary.intervention_rate, 1.0);
    assert!(trace.summary.min_margin >= 0.0);
    assert_eq!(trace.summary.gt_failures, 0);
}

#[test]
fn unfiltered_chain_violates_within_three_steps() {
    let exp = experiment(build_chain(5, 1));
    let trace = rollout(&exp, &tailgate(FilterMode::None, 10)).unwrap();
    let first = trace.first_violation().unwrap();
    assert!(first <= 3, "first violation at {first}");
    assert_eq!(trace.records[0].z_next, InfoState(1));
    assert_eq!(trace.records[1].z_next, InfoState(0));
    assert!(trace.summary.gt_failures > 0);
    assert_eq!(trace.summary.intervention_rate, 0.0);
}

#[test]
fn one_step_from_safe_set_is_safe() {
    let exp = experiment(random_game(5, RandomGameParams::new(30, 3, 3, 1)));
    for z in exp.solution.safe_set.clone() {
        for task in [TaskPolicy::UniformRandom, TaskPolicy::Constant(AiAction(0))] {
            let config = RolloutConfig {
                task,
                human: HumanPolicy::UniformInBound,
                filter: FilterMode::Switch,
                initial_state: z,
                max_steps: 1,
                seed: z.0 as u64,
            };
            assert_eq!(rollout(&exp, &config).unwrap().summary.violations, 0);
        }
    }
}

#[test]
fn off_odd_violator_is_flagged() {
    let exp = experiment(build_chain_with_actions(5, 1, 3));
    let config = RolloutConfig { human: HumanPolicy::OffOddViolator, ..tailgate(FilterMode::Switch, 4) };
    let trace = rollout(&exp, &config).unwrap();
    assert!(trace.summary.violations > 0);
    assert!(trace.summary.off_odd_steps > 0);
    assert!(trace.records.iter().any(|r| r.off_odd && r.a_human == HumanAction(0)));
}

#[test]
fn seeds_reproduce_traces() {
    let exp = experiment(random_game(9, RandomGameParams { stochastic: true, ..RandomGameParams::new(15, 3, 3, 3) }));
    let config = RolloutConfig {
        task: TaskPolicy::UniformRandom,
        human: HumanPolicy::UniformInBound,
        filter: FilterMode::LeastRestrictive,
        initial_state: InfoState(0),
        max_steps: 50,
        seed: 77,
    };
    let a = rollout(&exp, &config).unwrap().to_jsonl(&exp).unwrap();
    let b = rollout(&exp, &config).unwrap().to_jsonl(&exp).unwrap();
    assert_eq!(a, b);
    let c = rollout(&exp, &RolloutConfig { seed: 78, ..config }).unwrap().to_jsonl(&exp).unwrap();
    assert_ne!(a, c);
}

#[test]
fn jsonl_lines_carry_the_documented_keys() {
    let exp = experiment(build_dialogue());
    let config = RolloutConfig {
        task: exp.resolve_task("eager").unwrap(),
        human: exp.resolve_human("reckless_child").unwrap(),
        filter: FilterMode::Switch,
        initial_state: InfoState(dialogue::START),
        max_steps: 3,
        seed: 0,
    };
    let trace = rollout(&exp, &config).unwrap();
    let text = trace.to_jsonl(&exp).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["t", "z", "task_a", "monitor", "intervened", "executed_a", "a_human", "obs", "margin", "gt_failure"] {
            assert!(v.get(key).is_some(), "missing {key} in {line}");
        }
    }
    assert!(trace.records[0].intervened);
    assert_eq!(trace.records[0].executed_a, AiAction(dialogue::SAY_METAL_SAFE_BOWL));
    // microwaving the bowl after the warning is outside the bound
    assert!(trace.records[1].off_odd);
    assert!(!trace.records[0].off_odd);
}

#[test]
fn tampered_trace_is_rejected() {
    let exp = experiment(build_chain(5, 1));
    let mut trace = rollout(&exp, &tailgate(FilterMode::Switch, 3)).unwrap();
    trace.records[1].z_next = InfoState(5);
    assert!(matches!(trace.to_jsonl(&exp), Err(HarnessError::TraceInconsistent(_))));
}

#[test]
fn policy_names_resolve() {
    let exp = experiment(build_chain(5, 1));
    assert_eq!(exp.resolve_task("tailgate").unwrap(), TaskPolicy::Constant(AiAction(0)));
    assert_eq!(exp.resolve_task("constant:+1").unwrap(), TaskPolicy::Constant(AiAction(2)));
    assert_eq!(exp.resolve_task("constant:1").unwrap(), TaskPolicy::Constant(AiAction(1)));
    assert_eq!(exp.resolve_human("script:-1,+1").unwrap(), HumanPolicy::Script(vec![HumanAction(0), HumanAction(2)]));
    for bad in ["nobody", "constant:+7", "script:"] {
        assert!(matches!(exp.resolve_task(bad).or(exp.resolve_human(bad).map(|_| TaskPolicy::Fallback)), Err(HarnessError::PolicyResolution(_))), "{bad}");
    }
    let config = RolloutConfig { max_steps: 0, ..tailgate(FilterMode::Switch, 1) };
    assert!(matches!(rollout(&exp, &config), Err(HarnessError::NoSteps)));
    let config = RolloutConfig { task: TaskPolicy::Table(vec![AiAction(0)]), ..tailgate(FilterMode::Switch, 1) };
    assert!(matches!(rollout(&exp, &config), Err(HarnessError::PolicyResolution(_))));
}

#[test]
fn chain_verification() {
    let exp = experiment(build_chain(5, 1));
    let report = verify_filter_safety(&exp, &VerifyOptions { depth: 10, ..VerifyOptions::default() }).unwrap();
    assert_eq!(report.mode, VerificationMode::Exhaustive);
    assert_eq!(report.initial_states.len(), 5);
    assert!(report.holds());

    let control = verify_filter_safety(&exp, &VerifyOptions { depth: 10, filter: FilterMode::None, ..VerifyOptions::default() }).unwrap();
    assert!(!control.holds());
    for cx in &control.counterexamples {
        assert!(cx.margin < 0.0);
        assert_eq!(cx.steps.first().map(|s| s.z), Some(cx.z0));
        assert_eq!(cx.steps.last().map(|s| s.z_next), Some(cx.failure_state));
    }
}

#[test]
fn verification_budget_returns_partial_report() {
    let exp = experiment(build_chain(5, 1));
    let err = verify_filter_safety(&exp, &VerifyOptions { max_transitions: 10, ..VerifyOptions::default() }).unwrap_err();
    match err {
        HarnessError::BudgetExceeded { budget, partial } => {
            assert_eq!(budget, 10);
            assert_eq!(partial.transitions, 10);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn sampled_verification_on_large_games() {
    let exp = experiment(random_game(3, RandomGameParams { failure_fraction: 0.05, ..RandomGameParams::new(60, 3, 3, 1) }));
    assert!(!exp.solution.safe_set.is_empty());
    let options = VerifyOptions { exhaustive_limit: 50, samples: 2000, ..VerifyOptions::default() };
    let report = verify_filter_safety(&exp, &options).unwrap();
    assert_eq!(report.mode, VerificationMode::Sampled);
    assert_eq!(report.trajectories, 2000);
    assert!(report.holds());
}

#[test]
fn oracle_comparison_examples() {
    let exp = experiment(build_chain(5, 1));
    let report = compare_oracle(&exp.spec, &exp.solution, 6, BruteForceOptions::default()).unwrap();
    assert_eq!(report.max_discrepancy, 0.0);
    assert!(report.passed());

    let exp = experiment(random_game(7, RandomGameParams::new(20, 3, 3, 1)));
    let report = compare_oracle(&exp.spec, &exp.solution, 25, BruteForceOptions::default()).unwrap();
    assert_eq!(report.max_discrepancy, 0.0);
}

#[test]
fn stochastic_oracle_uses_a_tolerance() {
    let exp = experiment(random_game(11, RandomGameParams { stochastic: true, ..RandomGameParams::new(8, 2, 2, 2) }));
    let report = compare_oracle(&exp.spec, &exp.solution, 3, BruteForceOptions::default()).unwrap();
    assert!(!report.deterministic);
    assert!(report.tolerance > 0.0);
    for row in &report.rows {
        // a truncated game can only look safer
        assert!(row.oracle >= row.value - 1e-12);
    }
}
