//! The finite human-AI game.
//!
//! The AI never sees the world state or the human's internal state; it
//! evolves an information state `z` through a tabulated world model
//! `z' = f(z, a_ai, a_h, o)`. Safety is judged on `z` alone through the
//! margin `l(z)`, whose strict negative sublevel set is the inferred failure
//! set. The predictive action bound restricts which human actions the safety
//! analysis must withstand at each `z`.
//!
//! [`GroundTruthSystem`] is the privileged simulator (world state, human
//! internal state, privileged failure set). Only the harness touches it.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Stream;

/// Tolerance on observation rows summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Above this many `(world, human)` joint states the commutation check
/// samples random tuples instead of enumerating.
pub const EXHAUSTIVE_JOINT_LIMIT: usize = 10_000;
const SAMPLED_TUPLES: usize = 10_000;

macro_rules! index_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

index_newtype!(
    /// One AI information state.
    InfoState
);
index_newtype!(AiAction);
index_newtype!(HumanAction);
index_newtype!(Observation);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{field} index {index} out of range (size {len})")]
    OutOfRange { field: &'static str, index: usize, len: usize },
}

fn check(field: &'static str, index: usize, len: usize) -> Result<(), ModelError> {
    if index < len {
        Ok(())
    } else {
        Err(ModelError::OutOfRange { field, index, len })
    }
}

/// Optional documentation of which world and human states an information
/// state stands for. No algorithm reads it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BeliefSupport {
    pub world_states: Vec<String>,
    pub human_states: Vec<String>,
}

/// Table sizes of a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub states: usize,
    pub ai_actions: usize,
    pub human_actions: usize,
    pub observations: usize,
}

impl Dims {
    /// Offset of `(z, a, b, o)` in a dense `[z][a][b][o]` table.
    #[inline]
    pub fn offset(&self, z: usize, a: usize, b: usize, o: usize) -> usize {
        ((z * self.ai_actions + a) * self.human_actions + b) * self.observations + o
    }

    #[inline]
    pub fn row(&self, z: usize, a: usize, b: usize) -> usize {
        self.offset(z, a, b, 0)
    }

    pub fn table_len(&self) -> usize {
        self.states * self.ai_actions * self.human_actions * self.observations
    }
}

/// A complete finite human-AI game.
///
/// Tables are dense and indexed `[z][a_ai][a_h][o]`. The struct is plain data;
/// [`validate_model`] checks it and the parser refuses anything it flags.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub name: Option<String>,
    pub num_states: usize,
    pub state_labels: Option<Vec<String>>,
    pub ai_actions: Vec<String>,
    pub human_actions: Vec<String>,
    pub observations: Vec<String>,
    /// Successor information state for every `(z, a_ai, a_h, o)`.
    pub transitions: Vec<usize>,
    /// `P(o | z, a_ai, a_h)` for every `(z, a_ai, a_h, o)`.
    pub observation_probs: Vec<f64>,
    pub margin: Vec<f64>,
    /// Allowed human actions per state, sorted and deduplicated.
    pub bound: Vec<Vec<HumanAction>>,
    /// Distance between AI actions for least-restrictive filtering,
    /// `[from][to]`. Absent means absolute index distance.
    pub action_metric: Option<Vec<Vec<f64>>>,
    pub belief_support: Option<Vec<BeliefSupport>>,
}

impl GameSpec {
    pub fn dims(&self) -> Dims {
        Dims {
            states: self.num_states,
            ai_actions: self.ai_actions.len(),
            human_actions: self.human_actions.len(),
            observations: self.observations.len(),
        }
    }

    pub fn num_ai_actions(&self) -> usize {
        self.ai_actions.len()
    }

    pub fn num_human_actions(&self) -> usize {
        self.human_actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn states(&self) -> impl Iterator<Item = InfoState> {
        (0..self.num_states).map(InfoState)
    }

    pub fn ai_action_ids(&self) -> impl Iterator<Item = AiAction> {
        (0..self.ai_actions.len()).map(AiAction)
    }

    pub fn human_action_ids(&self) -> impl Iterator<Item = HumanAction> {
        (0..self.human_actions.len()).map(HumanAction)
    }

    pub fn state_label(&self, z: InfoState) -> String {
        match &self.state_labels {
            Some(labels) if z.0 < labels.len() => labels[z.0].clone(),
            _ => z.0.to_string(),
        }
    }

    /// One step of the AI world model. Total over all human actions, so
    /// out-of-bound behaviour can be simulated.
    pub fn step(
        &self,
        z: InfoState,
        a: AiAction,
        b: HumanAction,
        o: Observation,
    ) -> Result<InfoState, ModelError> {
        let d = self.dims();
        check("state", z.0, d.states)?;
        check("ai_action", a.0, d.ai_actions)?;
        check("human_action", b.0, d.human_actions)?;
        check("observation", o.0, d.observations)?;
        Ok(InfoState(self.transitions[d.offset(z.0, a.0, b.0, o.0)]))
    }

    /// Unchecked variant of [`step`](Self::step) for inner loops.
    #[inline]
    pub fn next(&self, z: usize, a: usize, b: usize, o: usize) -> usize {
        self.transitions[self.dims().offset(z, a, b, o)]
    }

    pub fn margin(&self, z: InfoState) -> Result<f64, ModelError> {
        check("state", z.0, self.num_states)?;
        Ok(self.margin[z.0])
    }

    pub fn in_failure_set(&self, z: InfoState) -> Result<bool, ModelError> {
        Ok(self.margin(z)? < 0.0)
    }

    /// States with negative margin, in index order.
    pub fn failure_set(&self) -> Vec<InfoState> {
        self.states().filter(|z| self.margin[z.0] < 0.0).collect()
    }

    pub fn allowed_human_actions(&self, z: InfoState) -> Result<&[HumanAction], ModelError> {
        check("state", z.0, self.num_states)?;
        Ok(&self.bound[z.0])
    }

    pub fn is_allowed(&self, z: InfoState, b: HumanAction) -> bool {
        self.bound.get(z.0).is_some_and(|set| set.binary_search(&b).is_ok())
    }

    /// Observation distribution for one `(z, a_ai, a_h)`.
    pub fn observation_row(&self, z: usize, a: usize, b: usize) -> &[f64] {
        let d = self.dims();
        let start = d.row(z, a, b);
        &self.observation_probs[start..start + d.observations]
    }

    /// Positive-probability outcomes `(o, p, z')` of one joint action.
    pub fn outcomes(&self, z: usize, a: usize, b: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        let d = self.dims();
        let start = d.row(z, a, b);
        (0..d.observations).filter_map(move |o| {
            let p = self.observation_probs[start + o];
            (p > 0.0).then(|| (o, p, self.transitions[start + o]))
        })
    }

    /// True when every joint action has a single observation with
    /// probability one.
    pub fn is_deterministic(&self) -> bool {
        let n_obs = self.observations.len();
        self.observation_probs
            .chunks(n_obs.max(1))
            .all(|row| row.iter().filter(|&&p| p > 0.0).count() == 1 && row.contains(&1.0))
    }

    /// Distance between two AI actions used by least-restrictive filtering.
    pub fn action_distance(&self, from: AiAction, to: AiAction) -> f64 {
        match &self.action_metric {
            Some(m) => m[from.0][to.0],
            None => (from.0 as f64 - to.0 as f64).abs(),
        }
    }

    /// Copy of this game with a different action bound.
    pub fn with_bound(&self, bound: Vec<Vec<HumanAction>>) -> GameSpec {
        GameSpec { bound, ..self.clone() }
    }

    /// The maximally conservative bound: every human action everywhere.
    pub fn full_bound(&self) -> Vec<Vec<HumanAction>> {
        vec![self.human_action_ids().collect(); self.num_states]
    }
}

/// The privileged simulator of world state `s` and human internal state
/// `z_h`. All indices are plain positions in the label vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSystem {
    pub world_states: Vec<String>,
    pub human_states: Vec<String>,
    pub human_observations: Vec<String>,
    /// `s' = f_s(s, a_ai, a_h)`, dense `[s][a_ai][a_h]`.
    pub world_dynamics: Vec<usize>,
    /// `z_h' = f_h(z_h, a_ai, a_h, o_h)`, dense `[z_h][a_ai][a_h][o_h]`.
    pub human_dynamics: Vec<usize>,
    /// Deterministic human observation `o_h(s)`.
    pub human_observation: Vec<usize>,
    /// Observation `o_ai(s)` the AI receives while in world state `s`.
    pub ai_observation: Vec<usize>,
    /// Privileged failure set as `(s, z_h)` pairs.
    pub privileged_failure: Vec<(usize, usize)>,
    /// Information state the AI holds in joint state `(s, z_h)`, `[s][z_h]`.
    pub projection: Vec<usize>,
}

impl GroundTruthSystem {
    pub fn num_world(&self) -> usize {
        self.world_states.len()
    }

    pub fn num_human(&self) -> usize {
        self.human_states.len()
    }

    pub fn project(&self, s: usize, zh: usize) -> InfoState {
        InfoState(self.projection[s * self.num_human() + zh])
    }

    pub fn is_privileged_failure(&self, s: usize, zh: usize) -> bool {
        self.privileged_failure.contains(&(s, zh))
    }

    /// Steps `(s, z_h)` jointly. `n_ai` and `n_h` are the game's action counts.
    pub fn step(&self, s: usize, zh: usize, a: usize, b: usize, n_ai: usize, n_h: usize) -> (usize, usize) {
        let s_next = self.world_dynamics[(s * n_ai + a) * n_h + b];
        let oh = self.human_observation[s];
        let n_oh = self.human_observations.len();
        let zh_next = self.human_dynamics[((zh * n_ai + a) * n_h + b) * n_oh + oh];
        (s_next, zh_next)
    }

    /// Lowest-index joint state projecting onto `z`.
    pub fn initial_joint_state(&self, z: InfoState) -> Option<(usize, usize)> {
        (0..self.num_world())
            .flat_map(|s| (0..self.num_human()).map(move |zh| (s, zh)))
            .find(|&(s, zh)| self.project(s, zh) == z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    /// Table of the wrong length or a missing component.
    Shape,
    Index,
    Distribution,
    EmptyBound,
    Margin,
    Metric,
    /// Ground truth and world model disagree on a step.
    Commutation,
    /// A privileged failure state projects outside the inferred failure set.
    Soundness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn error(&mut self, kind: IssueKind, message: impl Into<String>) {
        self.issues.push(Issue { severity: Severity::Error, kind, message: message.into() });
    }

    fn warning(&mut self, kind: IssueKind, message: impl Into<String>) {
        self.issues.push(Issue { severity: Severity::Warning, kind, message: message.into() });
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }
}

/// Checks structural invariants of `spec` and, when given, the consistency of
/// the ground truth with it.
pub fn validate_model(spec: &GameSpec, ground_truth: Option<&GroundTruthSystem>) -> ValidationReport {
    let mut report = ValidationReport::default();
    validate_structure(spec, &mut report);
    if report.has_errors() {
        return report;
    }
    if let Some(gt) = ground_truth {
        validate_ground_truth(spec, gt, &mut report);
    }
    report
}

fn validate_structure(spec: &GameSpec, r: &mut ValidationReport) {
    let d = spec.dims();
    for (name, n) in [
        ("states", d.states),
        ("ai_actions", d.ai_actions),
        ("human_actions", d.human_actions),
        ("observations", d.observations),
    ] {
        if n == 0 {
            r.error(IssueKind::Shape, format!("{name} must be nonempty"));
        }
    }
    if r.has_errors() {
        return;
    }
    if let Some(labels) = &spec.state_labels {
        if labels.len() != d.states {
            r.error(IssueKind::Shape, format!("state_labels has {} entries, expected {}", labels.len(), d.states));
        }
    }
    if spec.transitions.len() != d.table_len() {
        r.error(
            IssueKind::Shape,
            format!("transitions has {} entries, expected {}", spec.transitions.len(), d.table_len()),
        );
    }
    if spec.observation_probs.len() != d.table_len() {
        r.error(
            IssueKind::Shape,
            format!("observation_model has {} entries, expected {}", spec.observation_probs.len(), d.table_len()),
        );
    }
    if spec.margin.len() != d.states {
        r.error(IssueKind::Shape, format!("margin has {} entries, expected {}", spec.margin.len(), d.states));
    }
    if spec.bound.len() != d.states {
        r.error(IssueKind::Shape, format!("bound has {} entries, expected {}", spec.bound.len(), d.states));
    }
    if r.has_errors() {
        return;
    }

    for z in 0..d.states {
        for a in 0..d.ai_actions {
            for b in 0..d.human_actions {
                let row_at = d.row(z, a, b);
                let mut sum = 0.0;
                for o in 0..d.observations {
                    let next = spec.transitions[row_at + o];
                    if next >= d.states {
                        r.error(
                            IssueKind::Index,
                            format!("transitions[{z}][{a}][{b}][{o}] = {next} is not a state (size {})", d.states),
                        );
                    }
                    let p = spec.observation_probs[row_at + o];
                    if !p.is_finite() || p < 0.0 {
                        r.error(
                            IssueKind::Distribution,
                            format!("observation_model[{z}][{a}][{b}][{o}] = {p} is not a probability"),
                        );
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    r.error(IssueKind::Distribution, format!("observation_model[{z}][{a}][{b}] sums to {sum}, not 1"));
                }
            }
        }
    }

    for (z, &l) in spec.margin.iter().enumerate() {
        if !l.is_finite() {
            r.error(IssueKind::Margin, format!("margin[{z}] = {l} is not a real number"));
        }
    }

    for (z, set) in spec.bound.iter().enumerate() {
        if set.is_empty() {
            r.error(IssueKind::EmptyBound, format!("empty action bound at state {z}"));
        }
        if set.windows(2).any(|w| w[0] >= w[1]) {
            r.error(IssueKind::Shape, format!("bound[{z}] is not sorted and unique"));
        }
        for b in set {
            if b.0 >= d.human_actions {
                r.error(
                    IssueKind::Index,
                    format!("bound[{z}] names human action {} (size {})", b.0, d.human_actions),
                );
            }
        }
    }

    if let Some(m) = &spec.action_metric {
        let square = m.len() == d.ai_actions && m.iter().all(|row| row.len() == d.ai_actions);
        if !square {
            r.error(IssueKind::Metric, format!("action_metric must be {0}x{0}", d.ai_actions));
        } else if m.iter().flatten().any(|x| !x.is_finite() || *x < 0.0) {
            r.error(IssueKind::Metric, "action_metric entries must be finite and nonnegative");
        }
    }

    if let Some(support) = &spec.belief_support {
        if support.len() != d.states {
            r.error(IssueKind::Shape, format!("belief_support has {} entries, expected {}", support.len(), d.states));
        }
    }
}

fn validate_ground_truth(spec: &GameSpec, gt: &GroundTruthSystem, r: &mut ValidationReport) {
    let d = spec.dims();
    let (ns, nh, noh) = (gt.num_world(), gt.num_human(), gt.human_observations.len());
    let shape = [
        ("ground_truth.world_dynamics", gt.world_dynamics.len(), ns * d.ai_actions * d.human_actions),
        ("ground_truth.human_dynamics", gt.human_dynamics.len(), nh * d.ai_actions * d.human_actions * noh),
        ("ground_truth.human_observation", gt.human_observation.len(), ns),
        ("ground_truth.ai_observation", gt.ai_observation.len(), ns),
        ("ground_truth.projection", gt.projection.len(), ns * nh),
    ];
    for (name, got, want) in shape {
        if got != want {
            r.error(IssueKind::Shape, format!("{name} has {got} entries, expected {want}"));
        }
    }
    if ns == 0 || nh == 0 || noh == 0 {
        r.error(IssueKind::Shape, "ground truth state and observation sets must be nonempty");
    }
    if r.has_errors() {
        return;
    }
    let ranges = [
        ("ground_truth.world_dynamics", &gt.world_dynamics, ns),
        ("ground_truth.human_dynamics", &gt.human_dynamics, nh),
        ("ground_truth.human_observation", &gt.human_observation, noh),
        ("ground_truth.ai_observation", &gt.ai_observation, d.observations),
        ("ground_truth.projection", &gt.projection, d.states),
    ];
    for (name, table, len) in ranges {
        if let Some((i, v)) = table.iter().enumerate().find(|(_, &v)| v >= len) {
            r.error(IssueKind::Index, format!("{name}[{i}] = {v} out of range (size {len})"));
        }
    }
    for &(s, zh) in &gt.privileged_failure {
        if s >= ns || zh >= nh {
            r.error(IssueKind::Index, format!("privileged failure ({s}, {zh}) out of range"));
        }
    }
    if r.has_errors() {
        return;
    }

    let commutes = |s: usize, zh: usize, a: usize, b: usize, r: &mut ValidationReport| {
        let z = gt.project(s, zh).0;
        let o = gt.ai_observation[s];
        let (s2, zh2) = gt.step(s, zh, a, b, d.ai_actions, d.human_actions);
        let projected = gt.project(s2, zh2).0;
        let modelled = spec.next(z, a, b, o);
        if spec.observation_row(z, a, b)[o] <= 0.0 {
            r.error(
                IssueKind::Commutation,
                format!("ground truth (s={s}, z_h={zh}) emits observation {o}, which has probability 0 at (z={z}, a={a}, b={b})"),
            );
        } else if projected != modelled {
            r.error(
                IssueKind::Commutation,
                format!(
                    "projection does not commute at (s={s}, z_h={zh}, a={a}, b={b}, o={o}): ground truth gives z={projected}, world model gives z={modelled}"
                ),
            );
        }
    };
    let joint = ns * nh;
    if joint <= EXHAUSTIVE_JOINT_LIMIT {
        for s in 0..ns {
            for zh in 0..nh {
                for a in 0..d.ai_actions {
                    for b in 0..d.human_actions {
                        commutes(s, zh, a, b, r);
                    }
                }
            }
        }
    } else {
        let mut rng = Stream::new(0);
        for _ in 0..SAMPLED_TUPLES {
            let (s, zh) = (rng.below(ns), rng.below(nh));
            let (a, b) = (rng.below(d.ai_actions), rng.below(d.human_actions));
            commutes(s, zh, a, b, r);
        }
    }

    for &(s, zh) in &gt.privileged_failure {
        let z = gt.project(s, zh);
        if spec.margin[z.0] >= 0.0 {
            r.warning(
                IssueKind::Soundness,
                format!(
                    "privileged failure state (s={s}, z_h={zh}) projects to z={} with margin {} outside the inferred failure set",
                    z.0, spec.margin[z.0]
                ),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two states, one action per side, self loops.
    fn tiny() -> GameSpec {
        GameSpec {
            name: None,
            num_states: 2,
            state_labels: None,
            ai_actions: vec!["stay".into()],
            human_actions: vec!["stay".into()],
            observations: vec!["none".into()],
            transitions: vec![0, 1],
            observation_probs: vec![1.0, 1.0],
            margin: vec![1.0, -0.5],
            bound: vec![vec![HumanAction(0)]; 2],
            action_metric: None,
            belief_support: None,
        }
    }

    #[test]
    fn self_loop_is_identity() {
        let spec = tiny();
        for z in spec.states() {
            assert_eq!(spec.step(z, AiAction(0), HumanAction(0), Observation(0)).unwrap(), z);
        }
    }

    #[test]
    fn out_of_range_names_field() {
        let spec = tiny();
        let err = spec.step(InfoState(0), AiAction(0), HumanAction(4), Observation(0)).unwrap_err();
        assert_eq!(err, ModelError::OutOfRange { field: "human_action", index: 4, len: 1 });
        assert!(err.to_string().contains("human_action"));
        assert!(matches!(spec.margin(InfoState(2)), Err(ModelError::OutOfRange { field: "state", .. })));
        assert!(spec.allowed_human_actions(InfoState(9)).is_err());
    }

    #[test]
    fn failure_set_is_negative_margin() {
        let spec = tiny();
        assert_eq!(spec.failure_set(), vec![InfoState(1)]);
        assert!(spec.in_failure_set(InfoState(1)).unwrap());
        assert!(!spec.in_failure_set(InfoState(0)).unwrap());
    }

    #[test]
    fn short_row_is_a_distribution_error() {
        let mut spec = tiny();
        spec.observation_probs[1] = 0.9;
        let report = validate_model(&spec, None);
        let err = report.errors().next().unwrap();
        assert_eq!(err.kind, IssueKind::Distribution);
        assert!(err.message.contains("observation_model[1][0][0]"), "{}", err.message);
    }

    #[test]
    fn empty_bound_is_rejected() {
        let mut spec = tiny();
        spec.bound[0].clear();
        let report = validate_model(&spec, None);
        assert!(report.errors().any(|i| i.kind == IssueKind::EmptyBound));
    }

    #[test]
    fn deterministic_detection() {
        let mut spec = tiny();
        assert!(spec.is_deterministic());
        spec.observations.push("other".into());
        spec.transitions = vec![0, 1, 1, 0];
        spec.observation_probs = vec![0.5, 0.5, 0.0, 1.0];
        assert!(validate_model(&spec, None).is_empty());
        assert!(!spec.is_deterministic());
    }

    fn identity_truth() -> GroundTruthSystem {
        GroundTruthSystem {
            world_states: vec!["ok".into(), "hurt".into()],
            human_states: vec!["calm".into()],
            human_observations: vec!["none".into()],
            world_dynamics: vec![0, 1],
            human_dynamics: vec![0],
            human_observation: vec![0, 0],
            ai_observation: vec![0, 0],
            privileged_failure: vec![(1, 0)],
            projection: vec![0, 1],
        }
    }

    #[test]
    fn consistent_ground_truth_is_clean() {
        assert!(validate_model(&tiny(), Some(&identity_truth())).is_empty());
    }

    #[test]
    fn unsound_failure_projection_warns() {
        let mut spec = tiny();
        spec.margin = vec![1.0, 0.5];
        let report = validate_model(&spec, Some(&identity_truth()));
        assert!(!report.has_errors());
        let w = report.warnings().next().unwrap();
        assert_eq!(w.kind, IssueKind::Soundness);
    }

    #[test]
    fn non_commuting_projection_is_an_error() {
        let mut gt = identity_truth();
        gt.world_dynamics = vec![1, 1];
        let report = validate_model(&tiny(), Some(&gt));
        assert!(report.errors().any(|i| i.kind == IssueKind::Commutation));
    }
}
