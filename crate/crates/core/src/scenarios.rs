//! Deterministic game builders: the headway chain, the microwave dialogue,
//! and seeded random games for property tests.

use std::collections::BTreeMap;

use crate::format::{HumanPolicySpec, Policies, SpecDocument, TaskPolicySpec, FORMAT_VERSION};
use crate::model::{AiAction, GameSpec, GroundTruthSystem, HumanAction};
use crate::rng::Stream;

fn signed_label(v: i64) -> String {
    if v == 0 {
        "0".to_string()
    } else {
        format!("{v:+}")
    }
}

/// `CHAIN(n)` for `human_reach = 1`, `CHAIN-WEAK(n)` for `human_reach = 2`.
///
/// States `0..=n` are headway to stopped traffic with margin `z - 1`. The AI
/// moves by `-1..=1`, the human by `-human_reach..=human_reach`, and the gap
/// is `clamp(z + a + b, 0, n)`.
pub fn build_chain(n: usize, human_reach: usize) -> SpecDocument {
    build_chain_with_actions(n, human_reach, human_reach)
}

/// Chain whose human can act up to `action_reach` while the bound only covers
/// `-bound_reach..=bound_reach`. The extra actions exist so out-of-bound
/// behaviour can be simulated.
pub fn build_chain_with_actions(n: usize, bound_reach: usize, action_reach: usize) -> SpecDocument {
    assert!(n >= 2, "chain needs at least three states");
    assert!(action_reach >= bound_reach, "bound cannot exceed the action set");
    let states = n + 1;
    let ai: Vec<i64> = vec![-1, 0, 1];
    let human: Vec<i64> = (-(action_reach as i64)..=action_reach as i64).collect();
    let clamp = |z: usize, a: i64, b: i64| (z as i64 + a + b).clamp(0, n as i64) as usize;

    let mut transitions = Vec::with_capacity(states * ai.len() * human.len());
    for z in 0..states {
        for &a in &ai {
            for &b in &human {
                transitions.push(clamp(z, a, b));
            }
        }
    }
    let allowed: Vec<HumanAction> = human
        .iter()
        .enumerate()
        .filter(|(_, &b)| b.unsigned_abs() as usize <= bound_reach)
        .map(|(i, _)| HumanAction(i))
        .collect();
    let game = GameSpec {
        name: Some(match (bound_reach, action_reach) {
            (1, 1) => format!("chain-{n}"),
            (2, 2) => format!("chain-weak-{n}"),
            _ => format!("chain-{n}-bound{bound_reach}-reach{action_reach}"),
        }),
        num_states: states,
        state_labels: None,
        ai_actions: ai.iter().map(|&a| signed_label(a)).collect(),
        human_actions: human.iter().map(|&b| signed_label(b)).collect(),
        observations: vec!["none".into()],
        observation_probs: vec![1.0; transitions.len()],
        transitions,
        margin: (0..states).map(|z| z as f64 - 1.0).collect(),
        bound: vec![allowed; states],
        action_metric: None,
        belief_support: None,
    };

    let world_dynamics = game.transitions.clone();
    let ground_truth = GroundTruthSystem {
        world_states: (0..states).map(|s| format!("gap{s}")).collect(),
        human_states: vec!["driver".into()],
        human_observations: vec!["road".into()],
        world_dynamics,
        human_dynamics: vec![0; ai.len() * human.len()],
        human_observation: vec![0; states],
        ai_observation: vec![0; states],
        privileged_failure: vec![(0, 0)],
        projection: (0..states).collect(),
    };

    let mut task = BTreeMap::new();
    task.insert("tailgate".to_string(), TaskPolicySpec::Constant(AiAction(0)));
    task.insert("cruise".to_string(), TaskPolicySpec::Constant(AiAction(1)));
    SpecDocument {
        format_version: FORMAT_VERSION.into(),
        game,
        ground_truth: Some(ground_truth),
        policies: Policies { task, human: BTreeMap::new() },
    }
}

/// Indices of the dialogue game's entities.
pub mod dialogue {
    pub const START: usize = 0;
    pub const WARNED: usize = 1;
    pub const METAL_UNWARNED: usize = 2;
    pub const METAL_WARNED: usize = 3;
    pub const GLASS_UNWARNED: usize = 4;
    pub const GLASS_WARNED: usize = 5;
    pub const HEATED_GLASS: usize = 6;
    pub const METAL_IN_MICROWAVE: usize = 7;

    pub const SAY_ANY_BOWL: usize = 0;
    pub const SAY_METAL_SAFE_BOWL: usize = 1;
    pub const SAY_WAIT: usize = 2;

    pub const GRAB_METAL: usize = 0;
    pub const GRAB_GLASS: usize = 1;
    pub const MICROWAVE: usize = 2;
    pub const WAIT: usize = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Held {
    Nothing,
    Metal,
    Glass,
    HeatedGlass,
    MetalInMicrowave,
}

impl Held {
    fn after(self, human: usize) -> Held {
        use dialogue::*;
        match (self, human) {
            (Held::HeatedGlass | Held::MetalInMicrowave, _) => self,
            (_, GRAB_METAL) => Held::Metal,
            (_, GRAB_GLASS) => Held::Glass,
            (Held::Metal, MICROWAVE) => Held::MetalInMicrowave,
            (Held::Glass, MICROWAVE) => Held::HeatedGlass,
            _ => self,
        }
    }
}

fn dialogue_state(held: Held, warned: bool) -> usize {
    use dialogue::*;
    match (held, warned) {
        (Held::Nothing, false) => START,
        (Held::Nothing, true) => WARNED,
        (Held::Metal, false) => METAL_UNWARNED,
        (Held::Metal, true) => METAL_WARNED,
        (Held::Glass, false) => GLASS_UNWARNED,
        (Held::Glass, true) => GLASS_WARNED,
        (Held::HeatedGlass, _) => HEATED_GLASS,
        (Held::MetalInMicrowave, _) => METAL_IN_MICROWAVE,
    }
}

const DIALOGUE_STATES: [(Held, bool); 8] = [
    (Held::Nothing, false),
    (Held::Nothing, true),
    (Held::Metal, false),
    (Held::Metal, true),
    (Held::Glass, false),
    (Held::Glass, true),
    (Held::HeatedGlass, false),
    (Held::MetalInMicrowave, false),
];

/// A child asks the assistant for help heating food.
///
/// The assistant can suggest any bowl, suggest a microwave-safe bowl while
/// warning about metal, or tell the child to wait. The child can grab the
/// metal or glass bowl, run the microwave, or wait. The normative bound says a
/// child who holds the metal bowl after being warned about it will not put it
/// in the microwave. Metal in the microwave is the failure.
pub fn build_dialogue() -> SpecDocument {
    build_dialogue_with_bound(true)
}

/// The dialogue game with the normative bound (`normative = true`) or with
/// every human action allowed everywhere.
pub fn build_dialogue_with_bound(normative: bool) -> SpecDocument {
    use dialogue::*;
    let (n_ai, n_h) = (3, 4);
    let mut transitions = Vec::with_capacity(DIALOGUE_STATES.len() * n_ai * n_h);
    for &(held, warned) in &DIALOGUE_STATES {
        for a in 0..n_ai {
            for b in 0..n_h {
                let warned = warned || a == SAY_METAL_SAFE_BOWL;
                transitions.push(dialogue_state(held.after(b), warned));
            }
        }
    }
    let margin = DIALOGUE_STATES
        .iter()
        .map(|&(held, warned)| match (held, warned) {
            (Held::MetalInMicrowave, _) => -1.0,
            (Held::Metal, false) => 0.0,
            _ => 1.0,
        })
        .collect();
    let every: Vec<HumanAction> = (0..n_h).map(HumanAction).collect();
    let bound = (0..DIALOGUE_STATES.len())
        .map(|z| {
            if normative && z == METAL_WARNED {
                vec![HumanAction(GRAB_METAL), HumanAction(GRAB_GLASS), HumanAction(WAIT)]
            } else {
                every.clone()
            }
        })
        .collect();
    let game = GameSpec {
        name: Some(if normative { "dialogue" } else { "dialogue-conservative" }.into()),
        num_states: DIALOGUE_STATES.len(),
        state_labels: Some(
            [
                "start",
                "warned",
                "metal_unwarned",
                "metal_warned",
                "glass_unwarned",
                "glass_warned",
                "heated_glass",
                "metal_in_microwave",
            ]
            .map(String::from)
            .to_vec(),
        ),
        ai_actions: ["say_any_bowl", "say_metal_safe_bowl", "say_wait"].map(String::from).to_vec(),
        human_actions: ["grab_metal", "grab_glass", "microwave", "wait"].map(String::from).to_vec(),
        observations: vec!["none".into()],
        observation_probs: vec![1.0; transitions.len()],
        transitions,
        margin,
        bound,
        action_metric: None,
        belief_support: None,
    };

    // World: what is held or in the microwave. Human: whether warned.
    let world = [Held::Nothing, Held::Metal, Held::Glass, Held::HeatedGlass, Held::MetalInMicrowave];
    let world_index = |h: Held| world.iter().position(|&w| w == h).expect("known world state");
    let mut world_dynamics = Vec::new();
    for &held in &world {
        for _a in 0..n_ai {
            for b in 0..n_h {
                world_dynamics.push(world_index(held.after(b)));
            }
        }
    }
    let mut human_dynamics = Vec::new();
    for warned in [false, true] {
        for a in 0..n_ai {
            for _b in 0..n_h {
                human_dynamics.push(usize::from(warned || a == SAY_METAL_SAFE_BOWL));
            }
        }
    }
    let projection = world
        .iter()
        .flat_map(|&held| [false, true].map(|warned| dialogue_state(held, warned)))
        .collect();
    let ground_truth = GroundTruthSystem {
        world_states: ["empty_handed", "metal_bowl", "glass_bowl", "glass_heated", "metal_in_microwave"]
            .map(String::from)
            .to_vec(),
        human_states: ["unaware", "warned"].map(String::from).to_vec(),
        human_observations: vec!["kitchen".into()],
        world_dynamics,
        human_dynamics,
        human_observation: vec![0; world.len()],
        ai_observation: vec![0; world.len()],
        privileged_failure: vec![(4, 0), (4, 1)],
        projection,
    };

    let mut task = BTreeMap::new();
    task.insert("eager".to_string(), TaskPolicySpec::Constant(AiAction(SAY_ANY_BOWL)));
    task.insert("careful".to_string(), TaskPolicySpec::Constant(AiAction(SAY_METAL_SAFE_BOWL)));
    let mut human = BTreeMap::new();
    human.insert(
        "reckless_child".to_string(),
        HumanPolicySpec::Script(vec![HumanAction(GRAB_METAL), HumanAction(MICROWAVE)]),
    );
    SpecDocument {
        format_version: FORMAT_VERSION.into(),
        game,
        ground_truth: Some(ground_truth),
        policies: Policies { task, human },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGameParams {
    pub states: usize,
    pub ai_actions: usize,
    pub human_actions: usize,
    pub observations: usize,
    /// Fraction of states with negative margin, in `[0, 1)`.
    pub failure_fraction: f64,
    /// Draw observation rows with several outcomes instead of one-hot rows.
    pub stochastic: bool,
}

impl RandomGameParams {
    pub fn new(states: usize, ai_actions: usize, human_actions: usize, observations: usize) -> Self {
        Self { states, ai_actions, human_actions, observations, failure_fraction: 0.2, stochastic: false }
    }
}

/// Seeded random game with uniform transitions and the full action bound.
///
/// Margins are multiples of 1/1000 in `[-1, 0)` for the
/// `round(failure_fraction * states)` failure states and in `(0, 1]`
/// elsewhere. Stochastic observation rows use integer weights `0..=3`, so
/// every probability is rational.
pub fn random_game(seed: u64, params: RandomGameParams) -> SpecDocument {
    let RandomGameParams { states, ai_actions, human_actions, observations, failure_fraction, stochastic } = params;
    assert!(states >= 1 && ai_actions >= 1 && human_actions >= 1 && observations >= 1, "sizes must be positive");
    assert!((0.0..1.0).contains(&failure_fraction), "failure_fraction must be in [0, 1)");
    let mut rng = Stream::new(seed);

    let failures = ((failure_fraction * states as f64).round() as usize).min(states);
    let mut order: Vec<usize> = (0..states).collect();
    rng.shuffle(&mut order);
    let mut margin = vec![0.0; states];
    for (rank, &z) in order.iter().enumerate() {
        let magnitude = (1 + rng.below(1000)) as f64 / 1000.0;
        margin[z] = if rank < failures { -magnitude } else { magnitude };
    }

    let cells = states * ai_actions * human_actions;
    let transitions: Vec<usize> = (0..cells * observations).map(|_| rng.below(states)).collect();
    let mut observation_probs = Vec::with_capacity(cells * observations);
    for _ in 0..cells {
        let mut weights = vec![0u32; observations];
        if stochastic {
            for w in weights.iter_mut() {
                *w = rng.below(4) as u32;
            }
        }
        if weights.iter().all(|&w| w == 0) {
            weights[rng.below(observations)] = 1;
        }
        let total: u32 = weights.iter().sum();
        observation_probs.extend(weights.iter().map(|&w| f64::from(w) / f64::from(total)));
    }

    let game = GameSpec {
        name: Some(format!("random-{seed}")),
        num_states: states,
        state_labels: None,
        ai_actions: (0..ai_actions).map(|a| format!("a{a}")).collect(),
        human_actions: (0..human_actions).map(|b| format!("h{b}")).collect(),
        observations: (0..observations).map(|o| format!("o{o}")).collect(),
        transitions,
        observation_probs,
        margin,
        bound: vec![(0..human_actions).map(HumanAction).collect(); states],
        action_metric: None,
        belief_support: None,
    };
    SpecDocument::new(game)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::serialize;
    use crate::model::{validate_model, InfoState, Observation};

    #[test]
    fn chain_steps() {
        let doc = build_chain(5, 1);
        let g = &doc.game;
        // a = +1 is index 2, b = -1 is index 0
        assert_eq!(g.step(InfoState(2), AiAction(2), HumanAction(0), Observation(0)).unwrap(), InfoState(2));
        assert_eq!(g.step(InfoState(0), AiAction(0), HumanAction(0), Observation(0)).unwrap(), InfoState(0));
        assert_eq!(g.margin(InfoState(0)).unwrap(), -1.0);
        assert_eq!(g.margin(InfoState(1)).unwrap(), 0.0);
        assert_eq!(g.margin(InfoState(4)).unwrap(), 3.0);
    }

    #[test]
    fn chain_bounds() {
        let chain = build_chain(5, 1);
        let weak = build_chain(5, 2);
        for z in chain.game.states() {
            let labels: Vec<_> = chain.game.allowed_human_actions(z).unwrap().iter().map(|b| &chain.game.human_actions[b.0]).collect();
            assert_eq!(labels, ["-1", "0", "+1"]);
            assert_eq!(weak.game.allowed_human_actions(z).unwrap().len(), 5);
        }
        let wide = build_chain_with_actions(5, 1, 3);
        assert_eq!(wide.game.num_human_actions(), 7);
        assert_eq!(wide.game.bound[0], vec![HumanAction(2), HumanAction(3), HumanAction(4)]);
    }

    #[test]
    fn builders_validate_cleanly() {
        for doc in [build_chain(5, 1), build_chain(5, 2), build_chain(2, 1), build_dialogue(), build_dialogue_with_bound(false)] {
            let report = validate_model(&doc.game, doc.ground_truth.as_ref());
            assert!(report.is_empty(), "{:?}: {report:?}", doc.game.name);
        }
        for seed in 0..20 {
            let doc = random_game(seed, RandomGameParams { stochastic: seed % 2 == 0, ..RandomGameParams::new(15, 3, 2, 2) });
            assert!(validate_model(&doc.game, None).is_empty());
        }
    }

    #[test]
    fn normative_bound_is_a_strict_subset() {
        let doc = build_dialogue();
        let set = doc.game.allowed_human_actions(InfoState(dialogue::METAL_WARNED)).unwrap();
        assert!(set.len() < doc.game.num_human_actions());
        assert!(!set.contains(&HumanAction(dialogue::MICROWAVE)));
    }

    #[test]
    fn random_game_is_seed_deterministic() {
        let p = RandomGameParams::new(20, 3, 3, 1);
        assert_eq!(serialize(&random_game(42, p)).unwrap(), serialize(&random_game(42, p)).unwrap());
        assert_ne!(serialize(&random_game(42, p)).unwrap(), serialize(&random_game(43, p)).unwrap());
    }

    #[test]
    fn failure_fraction_controls_negative_margins() {
        let none = random_game(1, RandomGameParams { failure_fraction: 0.0, ..RandomGameParams::new(30, 2, 2, 1) });
        assert!(none.game.margin.iter().all(|&l| l > 0.0));
        let some = random_game(1, RandomGameParams { failure_fraction: 0.2, ..RandomGameParams::new(30, 2, 2, 1) });
        assert_eq!(some.game.margin.iter().filter(|&&l| l < 0.0).count(), 6);
        assert!(some.game.margin.iter().all(|&l| (-1.0..=1.0).contains(&l) && l != 0.0));
    }
}
