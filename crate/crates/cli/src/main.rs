use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hai_safety::format::{parse_spec, serialize, write_canonical, SpecDocument};
use hai_safety::harness::{
    compare_oracle, rollout, verify_filter_safety, Experiment, FilterMode, HarnessError, RolloutConfig, VerifyOptions,
};
use hai_safety::scenarios::{build_chain, build_chain_with_actions, build_dialogue_with_bound, random_game, RandomGameParams};
use hai_safety::solver::{value_iteration, BruteForceOptions, SolveOptions, SolverError, DEFAULT_EPSILON};
use hai_safety::InfoState;

const EXIT_COUNTEREXAMPLE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "haig", version, about = "Safety games, filters and verification for human-AI interaction models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in scenario as a .haig.json document
    Generate {
        scenario: Scenario,
        #[arg(short, long)]
        output: PathBuf,
        /// Chain length
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Human reach covered by the chain's bound
        #[arg(long)]
        reach: Option<usize>,
        /// Human reach of the chain's action set, at least the bound reach
        #[arg(long)]
        action_reach: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        states: usize,
        #[arg(long, default_value_t = 3)]
        ai_actions: usize,
        #[arg(long, default_value_t = 3)]
        human_actions: usize,
        #[arg(long, default_value_t = 1)]
        observations: usize,
        #[arg(long, default_value_t = 0.2)]
        failure_fraction: f64,
        #[arg(long)]
        stochastic: bool,
    },
    /// Compute the value function, safe set and policies
    Solve {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Simulate one filtered episode and write its JSONL trace
    FilterRollout {
        spec: PathBuf,
        /// Named policy, `constant:<action>`, `random` or `fallback`
        #[arg(long)]
        task: String,
        /// Named policy, `worst_case`, `uniform`, `violator` or `script:<b>,<b>,...`
        #[arg(long)]
        human: String,
        #[arg(long, default_value = "switch")]
        filter: String,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial state, by label or index
        #[arg(long, default_value = "0")]
        z0: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Append a CSV row with the summary metrics
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Check that no admissible play from a certified state reaches failure
    Verify {
        spec: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 200)]
        exhaustive_limit: usize,
        /// Run the unfiltered control arm
        #[arg(long)]
        no_filter: bool,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50_000_000)]
        max_transitions: u64,
        /// Write the full report as JSON
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare the solver with an exhaustive game-tree search
    CompareOracle {
        spec: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 50_000_000)]
        max_nodes: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Chain,
    ChainWeak,
    Dialogue,
    DialogueConservative,
    Random,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Self { code: EXIT_INPUT, message: message.to_string() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::BudgetExceeded { .. } | HarnessError::Solver(SolverError::BudgetExceeded { .. }) => {
                Self { code: EXIT_BUDGET, message: e.to_string() }
            }
            other => Self::input(other),
        }
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        HarnessError::Solver(e).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<SpecDocument, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_spec(&bytes).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn canonical<T: serde::Serialize>(value: &T) -> String {
    let mut text = String::new();
    write_canonical(&serde_json::to_value(value).expect("serializable"), 0, &mut text);
    text.push('\n');
    text
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Generate {
            scenario,
            output,
            n,
            reach,
            action_reach,
            seed,
            states,
            ai_actions,
            human_actions,
            observations,
            failure_fraction,
            stochastic,
        } => {
            let doc = match scenario {
                Scenario::Chain | Scenario::ChainWeak => {
                    let default_reach = if matches!(scenario, Scenario::Chain) { 1 } else { 2 };
                    let reach = reach.unwrap_or(default_reach);
                    let action_reach = action_reach.unwrap_or(reach);
                    if n < 2 || action_reach < reach {
                        return Err(Failure::input("chain needs n >= 2 and action-reach >= reach"));
                    }
                    if action_reach == reach {
                        build_chain(n, reach)
                    } else {
                        build_chain_with_actions(n, reach, action_reach)
                    }
                }
                Scenario::Dialogue => build_dialogue_with_bound(true),
                Scenario::DialogueConservative => build_dialogue_with_bound(false),
                Scenario::Random => {
                    if states == 0 || ai_actions == 0 || human_actions == 0 || observations == 0 {
                        return Err(Failure::input("random game sizes must be at least 1"));
                    }
                    if !(0.0..1.0).contains(&failure_fraction) {
                        return Err(Failure::input("failure fraction must lie in [0, 1)"));
                    }
                    let params = RandomGameParams {
                        failure_fraction,
                        stochastic,
                        ..RandomGameParams::new(states, ai_actions, human_actions, observations)
                    };
                    random_game(seed, params)
                }
            };
            write(&output, &serialize(&doc).map_err(Failure::input)?)?;
            Ok(0)
        }
        Command::Solve { spec, output, epsilon, max_iters } => {
            let doc = load(&spec)?;
            let sol = value_iteration(&doc.game, SolveOptions { epsilon, max_iters })?;
            write(&output, canonical(&sol.export()).as_bytes())?;
            println!(
                "{} states, {} safe, {} sweeps, {}",
                doc.game.num_states,
                sol.safe_set.len(),
                sol.iterations,
                if sol.converged { "converged" } else { "not converged" }
            );
            Ok(0)
        }
        Command::FilterRollout { spec, task, human, filter, steps, seed, z0, output, summary } => {
            let doc = load(&spec)?;
            let exp = Experiment::new(doc, SolveOptions::default())?;
            let initial_state = resolve_state(&exp, &z0)?;
            let config = RolloutConfig {
                task: exp.resolve_task(&task)?,
                human: exp.resolve_human(&human)?,
                filter: filter.parse::<FilterMode>()?,
                initial_state,
                max_steps: steps,
                seed,
            };
            let trace = rollout(&exp, &config)?;
            write(&output, trace.to_jsonl(&exp)?.as_bytes())?;
            if let Some(path) = summary {
                append_summary(&path, &spec, &task, &human, &filter, seed, &trace.summary)?;
            }
            let s = &trace.summary;
            println!(
                "steps {} violations {} min_margin {} intervention_rate {}",
                s.steps, s.violations, s.min_margin, s.intervention_rate
            );
            Ok(0)
        }
        Command::Verify { spec, depth, exhaustive_limit, no_filter, samples, seed, max_transitions, output } => {
            let doc = load(&spec)?;
            let exp = Experiment::new(doc, SolveOptions::default())?;
            let options = VerifyOptions {
                depth,
                exhaustive_limit,
                filter: if no_filter { FilterMode::None } else { FilterMode::Switch },
                initial_states: None,
                samples,
                seed,
                max_transitions,
            };
            let report = match verify_filter_safety(&exp, &options) {
                Ok(report) => report,
                Err(HarnessError::BudgetExceeded { budget, partial }) => {
                    if let Some(path) = &output {
                        write(path, canonical(&partial).as_bytes())?;
                    }
                    return Err(Failure {
                        code: EXIT_BUDGET,
                        message: format!(
                            "budget of {budget} transitions exceeded; {} counterexamples so far",
                            partial.counterexamples.len()
                        ),
                    });
                }
                Err(e) => return Err(e.into()),
            };
            if let Some(path) = &output {
                write(path, canonical(&report).as_bytes())?;
            }
            println!(
                "{:?} check, depth {}, {} initial states, {} transitions, {} counterexamples",
                report.mode,
                report.depth,
                report.initial_states.len(),
                report.transitions,
                report.counterexamples.len()
            );
            for cx in &report.counterexamples {
                println!("{}", serde_json::to_string(cx).expect("serializable"));
            }
            Ok(if report.holds() { 0 } else { EXIT_COUNTEREXAMPLE })
        }
        Command::CompareOracle { spec, horizon, max_nodes } => {
            let doc = load(&spec)?;
            let sol = value_iteration(&doc.game, SolveOptions::default())?;
            let report = compare_oracle(&doc.game, &sol, horizon, BruteForceOptions { max_nodes })?;
            println!(
                "horizon {} max discrepancy {:e} tolerance {:e} {}",
                report.horizon,
                report.max_discrepancy,
                report.tolerance,
                if report.passed() { "ok" } else { "MISMATCH" }
            );
            Ok(if report.passed() { 0 } else { EXIT_COUNTEREXAMPLE })
        }
    }
}

fn resolve_state(exp: &Experiment, text: &str) -> Result<InfoState, Failure> {
    let labels = exp.spec.state_labels.as_deref().unwrap_or(&[]);
    labels
        .iter()
        .position(|l| l == text)
        .or_else(|| text.parse::<usize>().ok().filter(|&z| z < exp.spec.num_states))
        .map(InfoState)
        .ok_or_else(|| Failure::input(format!("unknown initial state {text:?}")))
}

#[derive(serde::Serialize)]
struct SummaryRow<'a> {
    spec: String,
    task: &'a str,
    human: &'a str,
    filter: &'a str,
    seed: u64,
    steps: usize,
    min_margin: f64,
    violations: usize,
    intervention_rate: f64,
    off_odd_steps: usize,
    gt_failures: usize,
}

fn append_summary(
    path: &Path,
    spec: &Path,
    task: &str,
    human: &str,
    filter: &str,
    seed: u64,
    s: &hai_safety::harness::TraceSummary,
) -> Result<(), Failure> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut out = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    out.serialize(SummaryRow {
        spec: spec.display().to_string(),
        task,
        human,
        filter,
        seed,
        steps: s.steps,
        min_margin: s.min_margin,
        violations: s.violations,
        intervention_rate: s.intervention_rate,
        off_odd_steps: s.off_odd_steps,
        gt_failures: s.gt_failures,
    })
    .and_then(|()| out.flush().map_err(csv::Error::from))
    .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}
