//! The `.haig.json` game file.
//!
//! ```text
//! {
//!   "format_version": "1",
//!   "game": {
//!     "name": "chain",                        optional
//!     "states": 6 | ["far", "near", ...],     count or labels
//!     "ai_actions": [...], "human_actions": [...], "observations": [...],
//!     "transitions": [z][a][b][o] -> state | {"sparse": [[z, a, b, o, z'], ...]},
//!     "observation_model": [z][a][b][o] -> probability,   optional with one observation
//!     "margin": [z] -> real,
//!     "bound": [z] -> [human action, ...],    optional, defaults to every action
//!     "action_metric": [a][a'] -> real,       optional
//!     "belief_support": [z] -> {"world_states": [...], "human_states": [...]}   optional
//!   },
//!   "ground_truth": {...},                    optional
//!   "policies": {"task": {name: policy}, "human": {name: policy}}   optional
//! }
//! ```
//!
//! Every reference to a state, action or observation is either an index or a
//! label; labels are resolved at parse time. [`serialize`] writes the
//! canonical form: sorted keys, indices only, reals with 17 significant
//! digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{
    validate_model, AiAction, BeliefSupport, GameSpec, GroundTruthSystem, HumanAction, IssueKind,
};

pub const FORMAT_VERSION: &str = "1";
pub const FILE_EXTENSION: &str = ".haig.json";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unresolved reference {reference} at {path}")]
    Reference { path: String, reference: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("distribution error: {0}")]
    Distribution(String),
    #[error("inconsistent ground truth: {0}")]
    Inconsistent(String),
    #[error("cannot serialize: {0}")]
    Serialization(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskPolicySpec {
    Constant(AiAction),
    Table(Vec<AiAction>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum HumanPolicySpec {
    /// One action per information state.
    Table(Vec<HumanAction>),
    /// Fixed sequence indexed by time; the last action repeats.
    Script(Vec<HumanAction>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Policies {
    pub task: BTreeMap<String, TaskPolicySpec>,
    pub human: BTreeMap<String, HumanPolicySpec>,
}

impl Policies {
    pub fn is_empty(&self) -> bool {
        self.task.is_empty() && self.human.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecDocument {
    pub format_version: String,
    pub game: GameSpec,
    pub ground_truth: Option<GroundTruthSystem>,
    pub policies: Policies,
}

impl SpecDocument {
    pub fn new(game: GameSpec) -> Self {
        Self { format_version: FORMAT_VERSION.to_string(), game, ground_truth: None, policies: Policies::default() }
    }
}

// ---------------------------------------------------------------------------
// raw serde layer

#[derive(Deserialize)]
#[serde(untagged)]
enum Ref {
    Index(usize),
    Name(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawStates {
    Count(usize),
    Labels(Vec<String>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTransitions {
    Dense(Vec<Vec<Vec<Vec<Ref>>>>),
    Sparse { sparse: Vec<[Ref; 5]> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    format_version: String,
    game: RawGame,
    #[serde(default)]
    ground_truth: Option<RawGroundTruth>,
    #[serde(default)]
    policies: Option<RawPolicies>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    #[serde(default)]
    name: Option<String>,
    states: RawStates,
    ai_actions: Vec<String>,
    human_actions: Vec<String>,
    observations: Vec<String>,
    transitions: RawTransitions,
    #[serde(default)]
    observation_model: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    margin: Vec<f64>,
    #[serde(default)]
    bound: Option<Vec<Vec<Ref>>>,
    #[serde(default)]
    action_metric: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    belief_support: Option<Vec<BeliefSupport>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroundTruth {
    world_states: Vec<String>,
    human_states: Vec<String>,
    human_observations: Vec<String>,
    world_dynamics: Vec<Vec<Vec<Ref>>>,
    human_dynamics: Vec<Vec<Vec<Vec<Ref>>>>,
    human_observation: Vec<Ref>,
    ai_observation: Vec<Ref>,
    privileged_failure: Vec<[Ref; 2]>,
    projection: Vec<Vec<Ref>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPolicies {
    #[serde(default)]
    task: BTreeMap<String, RawTask>,
    #[serde(default)]
    human: BTreeMap<String, RawHuman>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawTask {
    Constant { action: Ref },
    Table { actions: Vec<Ref> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawHuman {
    Table { actions: Vec<Ref> },
    Script { actions: Vec<Ref> },
}

// ---------------------------------------------------------------------------
// parsing

/// Name table for one kind of entity.
struct Names<'a> {
    kind: &'static str,
    len: usize,
    labels: Option<&'a [String]>,
}

impl Names<'_> {
    fn resolve(&self, r: &Ref, path: impl Fn() -> String) -> Result<usize, FormatError> {
        match r {
            Ref::Index(i) if *i < self.len => Ok(*i),
            Ref::Index(i) => Err(FormatError::Reference { path: path(), reference: format!("{} {i}", self.kind) }),
            Ref::Name(name) => self
                .labels
                .and_then(|ls| ls.iter().position(|l| l == name))
                .ok_or_else(|| FormatError::Reference { path: path(), reference: format!("{} {name:?}", self.kind) }),
        }
    }
}

fn arity<T>(items: &[T], want: usize, path: impl Fn() -> String) -> Result<(), FormatError> {
    if items.len() == want {
        Ok(())
    } else {
        Err(FormatError::Schema(format!("{} has {} entries, expected {want}", path(), items.len())))
    }
}

pub fn parse_spec(text: &[u8]) -> Result<SpecDocument, FormatError> {
    let raw: RawDocument = serde_json::from_slice(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => FormatError::Schema(e.to_string()),
        _ => FormatError::Syntax { line: e.line(), column: e.column(), message: e.to_string() },
    })?;
    if raw.format_version != FORMAT_VERSION {
        return Err(FormatError::Schema(format!(
            "unsupported format_version {:?}, expected {FORMAT_VERSION:?}",
            raw.format_version
        )));
    }
    let game = build_game(raw.game)?;
    let ground_truth = raw.ground_truth.map(|gt| build_ground_truth(gt, &game)).transpose()?;
    let policies = build_policies(raw.policies.unwrap_or_default(), &game)?;

    let report = validate_model(&game, ground_truth.as_ref());
    if let Some(issue) = report.errors().next() {
        let msg = issue.message.clone();
        return Err(match issue.kind {
            IssueKind::Distribution => FormatError::Distribution(msg),
            IssueKind::Commutation => FormatError::Inconsistent(msg),
            IssueKind::Index => FormatError::Reference { path: "game".into(), reference: msg },
            _ => FormatError::Schema(msg),
        });
    }
    Ok(SpecDocument { format_version: raw.format_version, game, ground_truth, policies })
}

fn build_game(raw: RawGame) -> Result<GameSpec, FormatError> {
    let (num_states, state_labels) = match raw.states {
        RawStates::Count(n) => (n, None),
        RawStates::Labels(labels) => (labels.len(), Some(labels)),
    };
    let (na, nb, no) = (raw.ai_actions.len(), raw.human_actions.len(), raw.observations.len());
    for (what, n) in [("states", num_states), ("ai_actions", na), ("human_actions", nb), ("observations", no)] {
        if n == 0 {
            return Err(FormatError::Schema(format!("game.{what} must be nonempty")));
        }
    }
    let states = Names { kind: "state", len: num_states, labels: state_labels.as_deref() };
    let ai = Names { kind: "ai action", len: na, labels: Some(&raw.ai_actions) };
    let human = Names { kind: "human action", len: nb, labels: Some(&raw.human_actions) };
    let obs = Names { kind: "observation", len: no, labels: Some(&raw.observations) };

    let table_len = num_states * na * nb * no;
    let transitions = match raw.transitions {
        RawTransitions::Dense(dense) => {
            let mut out = Vec::with_capacity(table_len);
            arity(&dense, num_states, || "game.transitions".into())?;
            for (z, by_a) in dense.iter().enumerate() {
                arity(by_a, na, || format!("game.transitions[{z}]"))?;
                for (a, by_b) in by_a.iter().enumerate() {
                    arity(by_b, nb, || format!("game.transitions[{z}][{a}]"))?;
                    for (b, by_o) in by_b.iter().enumerate() {
                        arity(by_o, no, || format!("game.transitions[{z}][{a}][{b}]"))?;
                        for (o, r) in by_o.iter().enumerate() {
                            out.push(states.resolve(r, || format!("game.transitions[{z}][{a}][{b}][{o}]"))?);
                        }
                    }
                }
            }
            out
        }
        RawTransitions::Sparse { sparse } => {
            let mut out: Vec<Option<usize>> = vec![None; table_len];
            for (i, [z, a, b, o, to]) in sparse.iter().enumerate() {
                let path = || format!("game.transitions.sparse[{i}]");
                let z = states.resolve(z, path)?;
                let a = ai.resolve(a, path)?;
                let b = human.resolve(b, path)?;
                let o = obs.resolve(o, path)?;
                let to = states.resolve(to, path)?;
                let slot = &mut out[((z * na + a) * nb + b) * no + o];
                match slot {
                    Some(prev) if *prev != to => {
                        return Err(FormatError::Schema(format!(
                            "{}: conflicting successors {prev} and {to} for ({z}, {a}, {b}, {o})",
                            path()
                        )))
                    }
                    _ => *slot = Some(to),
                }
            }
            let mut dense = Vec::with_capacity(table_len);
            for (i, slot) in out.into_iter().enumerate() {
                let o = i % no;
                let b = (i / no) % nb;
                let a = (i / no / nb) % na;
                let z = i / no / nb / na;
                dense.push(slot.ok_or_else(|| {
                    FormatError::Schema(format!("game.transitions.sparse has no entry for ({z}, {a}, {b}, {o})"))
                })?);
            }
            dense
        }
    };

    let observation_probs = match raw.observation_model {
        Some(model) => {
            let mut out = Vec::with_capacity(table_len);
            arity(&model, num_states, || "game.observation_model".into())?;
            for (z, by_a) in model.iter().enumerate() {
                arity(by_a, na, || format!("game.observation_model[{z}]"))?;
                for (a, by_b) in by_a.iter().enumerate() {
                    arity(by_b, nb, || format!("game.observation_model[{z}][{a}]"))?;
                    for (b, row) in by_b.iter().enumerate() {
                        arity(row, no, || format!("game.observation_model[{z}][{a}][{b}]"))?;
                        out.extend_from_slice(row);
                    }
                }
            }
            out
        }
        None if no == 1 => vec![1.0; table_len],
        None => {
            return Err(FormatError::Schema(
                "missing field \"observation_model\" (required with more than one observation)".into(),
            ))
        }
    };

    arity(&raw.margin, num_states, || "game.margin".into())?;

    let bound = match raw.bound {
        None => vec![(0..nb).map(HumanAction).collect(); num_states],
        Some(rows) => {
            arity(&rows, num_states, || "game.bound".into())?;
            let mut out = Vec::with_capacity(num_states);
            for (z, row) in rows.iter().enumerate() {
                if row.is_empty() {
                    return Err(FormatError::Schema(format!("empty action bound at game.bound[{z}]")));
                }
                let mut set = row
                    .iter()
                    .enumerate()
                    .map(|(k, r)| human.resolve(r, || format!("game.bound[{z}][{k}]")).map(HumanAction))
                    .collect::<Result<Vec<_>, _>>()?;
                set.sort();
                set.dedup();
                out.push(set);
            }
            out
        }
    };

    if let Some(m) = &raw.action_metric {
        arity(m, na, || "game.action_metric".into())?;
        for (a, row) in m.iter().enumerate() {
            arity(row, na, || format!("game.action_metric[{a}]"))?;
        }
    }
    if let Some(support) = &raw.belief_support {
        arity(support, num_states, || "game.belief_support".into())?;
    }

    Ok(GameSpec {
        name: raw.name,
        num_states,
        state_labels,
        ai_actions: raw.ai_actions,
        human_actions: raw.human_actions,
        observations: raw.observations,
        transitions,
        observation_probs,
        margin: raw.margin,
        bound,
        action_metric: raw.action_metric,
        belief_support: raw.belief_support,
    })
}

fn build_ground_truth(raw: RawGroundTruth, game: &GameSpec) -> Result<GroundTruthSystem, FormatError> {
    let (na, nb) = (game.num_ai_actions(), game.num_human_actions());
    let world = Names { kind: "world state", len: raw.world_states.len(), labels: Some(&raw.world_states) };
    let human = Names { kind: "human state", len: raw.human_states.len(), labels: Some(&raw.human_states) };
    let hobs = Names { kind: "human observation", len: raw.human_observations.len(), labels: Some(&raw.human_observations) };
    let states = Names { kind: "state", len: game.num_states, labels: game.state_labels.as_deref() };
    let obs = Names { kind: "observation", len: game.num_observations(), labels: Some(&game.observations) };
    if world.len == 0 || human.len == 0 || hobs.len == 0 {
        return Err(FormatError::Schema("ground truth state and observation lists must be nonempty".into()));
    }

    let mut world_dynamics = Vec::with_capacity(world.len * na * nb);
    arity(&raw.world_dynamics, world.len, || "ground_truth.world_dynamics".into())?;
    for (s, by_a) in raw.world_dynamics.iter().enumerate() {
        arity(by_a, na, || format!("ground_truth.world_dynamics[{s}]"))?;
        for (a, by_b) in by_a.iter().enumerate() {
            arity(by_b, nb, || format!("ground_truth.world_dynamics[{s}][{a}]"))?;
            for (b, r) in by_b.iter().enumerate() {
                world_dynamics.push(world.resolve(r, || format!("ground_truth.world_dynamics[{s}][{a}][{b}]"))?);
            }
        }
    }

    let mut human_dynamics = Vec::with_capacity(human.len * na * nb * hobs.len);
    arity(&raw.human_dynamics, human.len, || "ground_truth.human_dynamics".into())?;
    for (h, by_a) in raw.human_dynamics.iter().enumerate() {
        arity(by_a, na, || format!("ground_truth.human_dynamics[{h}]"))?;
        for (a, by_b) in by_a.iter().enumerate() {
            arity(by_b, nb, || format!("ground_truth.human_dynamics[{h}][{a}]"))?;
            for (b, by_o) in by_b.iter().enumerate() {
                arity(by_o, hobs.len, || format!("ground_truth.human_dynamics[{h}][{a}][{b}]"))?;
                for (o, r) in by_o.iter().enumerate() {
                    human_dynamics
                        .push(human.resolve(r, || format!("ground_truth.human_dynamics[{h}][{a}][{b}][{o}]"))?);
                }
            }
        }
    }

    let per_world = |rows: &[Ref], names: &Names, field: &str| -> Result<Vec<usize>, FormatError> {
        arity(rows, world.len, || format!("ground_truth.{field}"))?;
        rows.iter().enumerate().map(|(s, r)| names.resolve(r, || format!("ground_truth.{field}[{s}]"))).collect()
    };
    let human_observation = per_world(&raw.human_observation, &hobs, "human_observation")?;
    let ai_observation = per_world(&raw.ai_observation, &obs, "ai_observation")?;

    let privileged_failure = raw
        .privileged_failure
        .iter()
        .enumerate()
        .map(|(i, [s, h])| {
            let path = || format!("ground_truth.privileged_failure[{i}]");
            Ok((world.resolve(s, path)?, human.resolve(h, path)?))
        })
        .collect::<Result<Vec<_>, FormatError>>()?;

    let mut projection = Vec::with_capacity(world.len * human.len);
    arity(&raw.projection, world.len, || "ground_truth.projection".into())?;
    for (s, row) in raw.projection.iter().enumerate() {
        arity(row, human.len, || format!("ground_truth.projection[{s}]"))?;
        for (h, r) in row.iter().enumerate() {
            projection.push(states.resolve(r, || format!("ground_truth.projection[{s}][{h}]"))?);
        }
    }

    Ok(GroundTruthSystem {
        world_states: raw.world_states,
        human_states: raw.human_states,
        human_observations: raw.human_observations,
        world_dynamics,
        human_dynamics,
        human_observation,
        ai_observation,
        privileged_failure,
        projection,
    })
}

fn build_policies(raw: RawPolicies, game: &GameSpec) -> Result<Policies, FormatError> {
    let ai = Names { kind: "ai action", len: game.num_ai_actions(), labels: Some(&game.ai_actions) };
    let human = Names { kind: "human action", len: game.num_human_actions(), labels: Some(&game.human_actions) };
    let mut out = Policies::default();
    for (name, policy) in raw.task {
        let path = |k: usize| format!("policies.task.{name}[{k}]");
        let spec = match policy {
            RawTask::Constant { action } => {
                TaskPolicySpec::Constant(AiAction(ai.resolve(&action, || format!("policies.task.{name}"))?))
            }
            RawTask::Table { actions } => {
                arity(&actions, game.num_states, || format!("policies.task.{name}"))?;
                TaskPolicySpec::Table(
                    actions
                        .iter()
                        .enumerate()
                        .map(|(k, r)| ai.resolve(r, || path(k)).map(AiAction))
                        .collect::<Result<_, _>>()?,
                )
            }
        };
        out.task.insert(name, spec);
    }
    for (name, policy) in raw.human {
        let path = |k: usize| format!("policies.human.{name}[{k}]");
        let resolve = |actions: &[Ref]| -> Result<Vec<HumanAction>, FormatError> {
            actions.iter().enumerate().map(|(k, r)| human.resolve(r, || path(k)).map(HumanAction)).collect()
        };
        let spec = match policy {
            RawHuman::Table { actions } => {
                arity(&actions, game.num_states, || format!("policies.human.{name}"))?;
                HumanPolicySpec::Table(resolve(&actions)?)
            }
            RawHuman::Script { actions } => {
                if actions.is_empty() {
                    return Err(FormatError::Schema(format!("policies.human.{name} script is empty")));
                }
                HumanPolicySpec::Script(resolve(&actions)?)
            }
        };
        out.human.insert(name, spec);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// serialization

#[derive(Serialize)]
struct OutDocument<'a> {
    format_version: &'a str,
    game: OutGame<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_truth: Option<OutGroundTruth<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    policies: Option<OutPolicies>,
}

#[derive(Serialize)]
struct OutGame<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    states: Value,
    ai_actions: &'a [String],
    human_actions: &'a [String],
    observations: &'a [String],
    transitions: Vec<Vec<Vec<Vec<usize>>>>,
    observation_model: Vec<Vec<Vec<Vec<f64>>>>,
    margin: &'a [f64],
    bound: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    action_metric: Option<&'a Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    belief_support: Option<&'a Vec<BeliefSupport>>,
}

#[derive(Serialize)]
struct OutGroundTruth<'a> {
    world_states: &'a [String],
    human_states: &'a [String],
    human_observations: &'a [String],
    world_dynamics: Vec<Vec<Vec<usize>>>,
    human_dynamics: Vec<Vec<Vec<Vec<usize>>>>,
    human_observation: &'a [usize],
    ai_observation: &'a [usize],
    privileged_failure: Vec<[usize; 2]>,
    projection: Vec<Vec<usize>>,
}

#[derive(Serialize)]
struct OutPolicies {
    task: BTreeMap<String, Value>,
    human: BTreeMap<String, Value>,
}

fn nested4<T: Copy>(flat: &[T], d: [usize; 4]) -> Vec<Vec<Vec<Vec<T>>>> {
    let (sa, sb, so) = (d[1] * d[2] * d[3], d[2] * d[3], d[3]);
    (0..d[0])
        .map(|z| {
            (0..d[1])
                .map(|a| (0..d[2]).map(|b| flat[z * sa + a * sb + b * so..][..so].to_vec()).collect())
                .collect()
        })
        .collect()
}

fn nested3<T: Copy>(flat: &[T], d: [usize; 3]) -> Vec<Vec<Vec<T>>> {
    (0..d[0]).map(|s| (0..d[1]).map(|a| flat[(s * d[1] + a) * d[2]..][..d[2]].to_vec()).collect()).collect()
}

/// Canonical text of `doc`.
pub fn serialize(doc: &SpecDocument) -> Result<Vec<u8>, FormatError> {
    let g = &doc.game;
    let non_finite = |what: &str, xs: Vec<f64>| -> Result<(), FormatError> {
        match xs.into_iter().find(|x| !x.is_finite()) {
            Some(x) => Err(FormatError::Serialization(format!("{what} contains {x}"))),
            None => Ok(()),
        }
    };
    non_finite("margin", g.margin.clone())?;
    non_finite("observation_model", g.observation_probs.clone())?;
    if let Some(m) = &g.action_metric {
        non_finite("action_metric", m.iter().flatten().copied().collect())?;
    }

    let d = g.dims();
    let dims4 = [d.states, d.ai_actions, d.human_actions, d.observations];
    let game = OutGame {
        name: g.name.as_deref(),
        states: match &g.state_labels {
            Some(labels) => Value::from(labels.clone()),
            None => Value::from(g.num_states),
        },
        ai_actions: &g.ai_actions,
        human_actions: &g.human_actions,
        observations: &g.observations,
        transitions: nested4(&g.transitions, dims4),
        observation_model: nested4(&g.observation_probs, dims4),
        margin: &g.margin,
        bound: g.bound.iter().map(|set| set.iter().map(|b| b.0).collect()).collect(),
        action_metric: g.action_metric.as_ref(),
        belief_support: g.belief_support.as_ref(),
    };
    let ground_truth = doc.ground_truth.as_ref().map(|gt| OutGroundTruth {
        world_states: &gt.world_states,
        human_states: &gt.human_states,
        human_observations: &gt.human_observations,
        world_dynamics: nested3(&gt.world_dynamics, [gt.num_world(), d.ai_actions, d.human_actions]),
        human_dynamics: nested4(
            &gt.human_dynamics,
            [gt.num_human(), d.ai_actions, d.human_actions, gt.human_observations.len()],
        ),
        human_observation: &gt.human_observation,
        ai_observation: &gt.ai_observation,
        privileged_failure: gt.privileged_failure.iter().map(|&(s, h)| [s, h]).collect(),
        projection: gt.projection.chunks(gt.num_human().max(1)).map(<[usize]>::to_vec).collect(),
    });
    let policies = (!doc.policies.is_empty()).then(|| OutPolicies {
        task: doc
            .policies
            .task
            .iter()
            .map(|(k, p)| {
                let v = match p {
                    TaskPolicySpec::Constant(a) => serde_json::json!({"kind": "constant", "action": a.0}),
                    TaskPolicySpec::Table(t) => {
                        serde_json::json!({"kind": "table", "actions": t.iter().map(|a| a.0).collect::<Vec<_>>()})
                    }
                };
                (k.clone(), v)
            })
            .collect(),
        human: doc
            .policies
            .human
            .iter()
            .map(|(k, p)| {
                let (kind, actions) = match p {
                    HumanPolicySpec::Table(t) => ("table", t),
                    HumanPolicySpec::Script(t) => ("script", t),
                };
                let actions: Vec<usize> = actions.iter().map(|b| b.0).collect();
                (k.clone(), serde_json::json!({"kind": kind, "actions": actions}))
            })
            .collect(),
    });
    let out = OutDocument { format_version: &doc.format_version, game, ground_truth, policies };
    let value = serde_json::to_value(&out).map_err(|e| FormatError::Serialization(e.to_string()))?;
    let mut text = String::new();
    write_canonical(&value, 0, &mut text);
    text.push('\n');
    Ok(text.into_bytes())
}

/// Writes `v` with sorted keys, two-space indentation, scalar-only arrays on
/// one line and every float with 17 significant digits.
pub fn write_canonical(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64 number");
                let _ = write!(out, "{x:.16e}");
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_canonical(x, indent, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, x) in items.iter().enumerate() {
                    pad(out, indent + 1);
                    write_canonical(x, indent + 1, out);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_canonical(&map[k.as_str()], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{build_chain, random_game, RandomGameParams};

    #[test]
    fn chain_round_trips() {
        let doc = build_chain(5, 1);
        let text = serialize(&doc).unwrap();
        let back = parse_spec(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.game.num_states, 6);
        assert_eq!(back.game.num_ai_actions(), 3);
        assert_eq!(serialize(&back).unwrap(), text);
    }

    #[test]
    fn equal_documents_serialize_identically() {
        let a = build_chain(4, 2);
        let b = build_chain(4, 2);
        assert_eq!(serialize(&a).unwrap(), serialize(&b).unwrap());
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        let text = String::from_utf8(serialize(&build_chain(2, 1)).unwrap()).unwrap();
        assert!(text.contains("-1.0000000000000000e0"), "{text}");
    }

    #[test]
    fn nan_margin_is_refused() {
        let mut doc = build_chain(3, 1);
        doc.game.margin[1] = f64::NAN;
        assert!(matches!(serialize(&doc), Err(FormatError::Serialization(_))));
    }

    fn chain_json() -> Value {
        serde_json::from_slice(&serialize(&build_chain(5, 1)).unwrap()).unwrap()
    }

    fn parse_value(v: &Value) -> Result<SpecDocument, FormatError> {
        parse_spec(serde_json::to_string(v).unwrap().as_bytes())
    }

    #[test]
    fn missing_margin_is_a_schema_error() {
        let mut v = chain_json();
        v["game"].as_object_mut().unwrap().remove("margin");
        match parse_value(&v) {
            Err(FormatError::Schema(msg)) => assert!(msg.contains("margin"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_bound_is_a_schema_error() {
        let mut v = chain_json();
        v["game"]["bound"][2] = serde_json::json!([]);
        match parse_value(&v) {
            Err(FormatError::Schema(msg)) => assert!(msg.contains("empty action bound"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_row_is_a_distribution_error() {
        let mut v = chain_json();
        v["game"]["observation_model"][1][0][0][0] = serde_json::json!(0.9);
        assert!(matches!(parse_value(&v), Err(FormatError::Distribution(_))));
    }

    #[test]
    fn unknown_label_is_a_reference_error() {
        let mut v = chain_json();
        v["game"]["bound"][0] = serde_json::json!(["-1", "sideways"]);
        match parse_value(&v) {
            Err(FormatError::Reference { path, reference }) => {
                assert_eq!(path, "game.bound[0][1]");
                assert!(reference.contains("sideways"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn labels_resolve_to_indices() {
        let mut v = chain_json();
        v["game"]["bound"][0] = serde_json::json!(["+1", "-1"]);
        let doc = parse_value(&v).unwrap();
        assert_eq!(doc.game.bound[0], vec![HumanAction(0), HumanAction(2)]);
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_spec(b"{\n  \"format_version\": \"1\",\n  oops\n}") {
            Err(FormatError::Syntax { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sparse_transitions_match_dense() {
        let doc = build_chain(3, 1);
        let mut v: Value = serde_json::from_slice(&serialize(&doc).unwrap()).unwrap();
        let g = &doc.game;
        let d = g.dims();
        let mut quads = Vec::new();
        for z in 0..d.states {
            for a in 0..d.ai_actions {
                for b in 0..d.human_actions {
                    quads.push(serde_json::json!([z, a, b, 0, g.next(z, a, b, 0)]));
                }
            }
        }
        v["game"]["transitions"] = serde_json::json!({ "sparse": quads });
        assert_eq!(parse_value(&v).unwrap(), doc);

        let Value::Array(list) = &mut v["game"]["transitions"]["sparse"] else { unreachable!() };
        list.pop();
        assert!(matches!(parse_value(&v), Err(FormatError::Schema(_))));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut v = chain_json();
        v["format_version"] = serde_json::json!("2");
        assert!(matches!(parse_value(&v), Err(FormatError::Schema(_))));
    }

    #[test]
    fn stochastic_random_game_round_trips() {
        let params = RandomGameParams { stochastic: true, ..RandomGameParams::new(12, 2, 3, 3) };
        let doc = random_game(5, params);
        assert_eq!(parse_spec(&serialize(&doc).unwrap()).unwrap(), doc);
    }
}
