//! Built-in games and scenarios.
//!
//! The three-archetype launch game carries the published payoff matrix
//! verbatim. Its response set is reduced to `adopt` / `defer`: the matrix
//! cell is the payoff of adopting, deferring pays both sides zero, so every
//! type best-responds by adopting and the matrix cell is exactly the
//! equilibrium payoff. The type vectors behind the archetypes are not
//! published and are illustrative.

use crate::population::{PayoffPatch, ScenarioEvent, TensorTarget};
use crate::types::{Belief, GameSpec, PayoffTensor, TypeSet, TypeVector};

pub const LAUNCH_ACTIONS: [&str; 3] = ["clinical_deep_dive", "kol_webinar", "patient_story"];
pub const LAUNCH_RESPONSES: [&str; 2] = ["adopt", "defer"];

/// `(u_P, u_D)` per `[action][type]`.
pub const LAUNCH_PAYOFFS: [[(f64, f64); 3]; 3] = [
    [(0.90, 0.85), (0.40, 0.30), (0.30, 0.25)],
    [(0.35, 0.40), (0.85, 0.90), (0.50, 0.45)],
    [(0.20, 0.30), (0.40, 0.50), (0.95, 0.90)],
];

pub const LAUNCH_PRIOR: [f64; 3] = [0.35, 0.45, 0.20];

/// Likelihood of "defer" after the KOL webinar, per type, as used in the
/// round-one update of the launch example.
pub const DEFER_LIKELIHOODS: [f64; 3] = [0.65, 0.20, 0.40];

pub fn archetypes() -> Vec<TypeVector> {
    vec![
        // evidence-driven
        TypeVector::new(0.60, 0.15, 0.15, 0.10, 1.0, 0.3, 0.8, 0.9),
        // peer-influenced
        TypeVector::new(0.15, 0.60, 0.15, 0.10, 0.8, 0.5, 0.6, 0.7),
        // patient-centric
        TypeVector::new(0.15, 0.10, 0.65, 0.10, 0.6, 0.4, 0.7, 1.2),
    ]
}

/// The three-archetype launch game with rationality `tau`.
pub fn launch_game_with_tau(tau: f64) -> GameSpec {
    let ts = TypeSet::new(archetypes(), 0.1).expect("archetypes are separated");
    let u_p = PayoffTensor::from_fn(3, 2, 3, |a, d, k| if d == 0 { LAUNCH_PAYOFFS[a][k].0 } else { 0.0 });
    let u_d = PayoffTensor::from_fn(3, 2, 3, |a, d, k| if d == 0 { LAUNCH_PAYOFFS[a][k].1 } else { 0.0 });
    GameSpec::new(
        ts,
        LAUNCH_ACTIONS.iter().map(|s| s.to_string()).collect(),
        LAUNCH_RESPONSES.iter().map(|s| s.to_string()).collect(),
        u_p,
        u_d,
        Belief::new(LAUNCH_PRIOR.to_vec()).expect("prior is valid"),
        crate::defaults::TAU,
    )
    .expect("launch game is well formed")
    .with_tau(tau)
    .expect("tau positive")
}

pub fn launch_game() -> GameSpec {
    launch_game_with_tau(crate::defaults::TAU)
}

/// Market-shift population scenario: evidence, peer and formulary-sensitive
/// physicians under a fixed clinical-content policy, with a competitor
/// entering at `t = 100`.
///
/// Fitness magnitudes are reconstructed, not published: before entry the
/// evidence type is slightly favoured; entry raises the formulary type's
/// adoption utility and lowers the others'.
pub fn market_shift_game() -> GameSpec {
    let types = vec![
        TypeVector::new(0.60, 0.15, 0.15, 0.10, 1.0, 0.3, 0.8, 0.9),
        TypeVector::new(0.15, 0.60, 0.15, 0.10, 0.8, 0.5, 0.6, 0.7),
        TypeVector::new(0.10, 0.15, 0.15, 0.60, 0.6, 0.4, 0.7, 1.2),
    ];
    let ts = TypeSet::new(types, 0.1).expect("separated");
    // adoption utility per [action][type]; deferring is worth 0.3
    let adopt = [[0.62, 0.60, 0.595], [0.60, 0.61, 0.595], [0.58, 0.58, 0.62]];
    let u_d = PayoffTensor::from_fn(3, 2, 3, |a, d, k| if d == 0 { adopt[a][k] } else { 0.3 });
    let u_p = PayoffTensor::from_fn(3, 2, 3, |a, d, k| if d == 0 { LAUNCH_PAYOFFS[a][k].0 } else { 0.0 });
    GameSpec::new(
        ts,
        vec!["clinical_deep_dive".into(), "kol_webinar".into(), "formulary_brief".into()],
        LAUNCH_RESPONSES.iter().map(|s| s.to_string()).collect(),
        u_p,
        u_d,
        Belief::new(vec![0.35, 0.45, 0.20]).expect("valid"),
        crate::defaults::TAU,
    )
    .expect("market-shift game is well formed")
}

/// The competitor-entry shock of the market-shift scenario.
pub fn competitor_entry(time: f64) -> ScenarioEvent {
    ScenarioEvent {
        time,
        id: "competitor_entry".into(),
        patches: vec![
            PayoffPatch {
                target: TensorTarget::UD,
                action: None,
                response: Some(0),
                type_index: Some(2),
                delta: 0.06,
            },
            PayoffPatch {
                target: TensorTarget::UD,
                action: None,
                response: Some(0),
                type_index: Some(0),
                delta: -0.02,
            },
            PayoffPatch {
                target: TensorTarget::UD,
                action: None,
                response: Some(0),
                type_index: Some(1),
                delta: -0.01,
            },
        ],
    }
}
