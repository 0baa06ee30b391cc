//! Replicator dynamics over physician-type shares, payoff shocks, and the
//! ESS audit.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::{best_response_value, solve_stackelberg};
use crate::types::{ActionId, Belief, GameSpec, ResponseId, TypeIndex, SIMPLEX_TOL};

/// Type shares at a point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    shares: Vec<f64>,
    pub time: f64,
}

impl PopulationState {
    pub fn new(shares: Vec<f64>, time: f64) -> Result<Self> {
        if shares.is_empty() {
            return invalid("population needs at least one type");
        }
        if let Some(i) = shares.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return invalid(format!("share {i} is negative or not finite"));
        }
        let s: f64 = shares.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return invalid(format!("shares sum to {s}"));
        }
        Ok(Self { shares, time })
    }

    pub fn uniform(k: usize) -> Self {
        Self { shares: vec![1.0 / k as f64; k], time: 0.0 }
    }

    pub fn vertex(k: usize, at: TypeIndex) -> Self {
        let mut shares = vec![0.0; k];
        shares[at] = 1.0;
        Self { shares, time: 0.0 }
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    /// The shares read as a belief over types.
    pub fn as_belief(&self) -> Belief {
        Belief::from_masses(self.shares.clone()).expect("shares are a distribution")
    }
}

/// Pharma strategy faced by the population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PharmaStrategy {
    Pure(ActionId),
    Mixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub values: Vec<f64>,
    /// `Σ x_k f_k`
    pub mean: f64,
}

/// Per-type best-response utility under `sigma`; a mixed strategy gives the
/// probability-weighted mixture of per-action fitnesses.
pub fn fitness(x: &PopulationState, game: &GameSpec, sigma: &PharmaStrategy) -> Result<Fitness> {
    let k = game.num_types();
    if x.len() != k {
        return Err(Error::Dimension(format!("{} shares for {k} types", x.len())));
    }
    let m = game.num_actions();
    let values: Vec<f64> = match sigma {
        PharmaStrategy::Pure(a) => {
            if *a >= m {
                return invalid(format!("action {a} out of range"));
            }
            (0..k).map(|j| best_response_value(game, *a, j)).collect()
        }
        PharmaStrategy::Mixed(p) => {
            if p.len() != m {
                return Err(Error::Dimension(format!("{} action weights for {m} actions", p.len())));
            }
            let r = crate::types::validate_belief(p);
            if !r.is_ok() {
                return invalid("mixed strategy is not a distribution");
            }
            (0..k)
                .map(|j| (0..m).map(|a| p[a] * best_response_value(game, a, j)).sum())
                .collect()
        }
    };
    let mean = values.iter().zip(x.shares()).map(|(f, s)| f * s).sum();
    Ok(Fitness { values, mean })
}

/// One Euler step of `ẋ_k = x_k (f_k − f̄)`, renormalized.
pub fn replicator_step(x: &PopulationState, f: &[f64], dt: f64) -> Result<PopulationState> {
    if !(dt > 0.0) {
        return invalid("dt must be positive");
    }
    if f.len() != x.len() {
        return Err(Error::Dimension(format!("{} fitness values for {} shares", f.len(), x.len())));
    }
    let mean: f64 = f.iter().zip(x.shares()).map(|(a, b)| a * b).sum();
    let mut next = Vec::with_capacity(x.len());
    for (index, (&s, &fk)) in x.shares().iter().zip(f).enumerate() {
        let value = s + dt * s * (fk - mean);
        if value < 0.0 {
            return Err(Error::StepTooLarge { index, value });
        }
        next.push(value);
    }
    let z: f64 = next.iter().sum();
    for v in next.iter_mut() {
        *v /= z;
    }
    Ok(PopulationState { shares: next, time: x.time + dt })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorTarget {
    #[serde(rename = "u_P")]
    UP,
    #[serde(rename = "u_D")]
    UD,
}

/// Additive change to payoff entries; `None` indices match everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffPatch {
    pub target: TensorTarget,
    #[serde(default)]
    pub action: Option<ActionId>,
    #[serde(default)]
    pub response: Option<ResponseId>,
    #[serde(default)]
    pub type_index: Option<TypeIndex>,
    pub delta: f64,
}

/// A payoff shock applied from `time` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub time: f64,
    pub id: String,
    pub patches: Vec<PayoffPatch>,
}

/// Applies every patch of `event` to a copy of `game`.
pub fn apply_event(game: &GameSpec, event: &ScenarioEvent) -> Result<GameSpec> {
    let mut out = game.clone();
    let (m, l, k) = (game.num_actions(), game.num_responses(), game.num_types());
    for p in &event.patches {
        if p.action.is_some_and(|a| a >= m)
            || p.response.is_some_and(|d| d >= l)
            || p.type_index.is_some_and(|j| j >= k)
            || !p.delta.is_finite()
        {
            return invalid(format!("event `{}` has a patch outside the game", event.id));
        }
        let (u_p, u_d) = out.payoffs_mut();
        let tensor = match p.target {
            TensorTarget::UP => u_p,
            TensorTarget::UD => u_d,
        };
        for a in 0..m {
            for d in 0..l {
                for j in 0..k {
                    if p.action.is_none_or(|x| x == a)
                        && p.response.is_none_or(|x| x == d)
                        && p.type_index.is_none_or(|x| x == j)
                    {
                        tensor.set(a, d, j, tensor.get(a, d, j) + p.delta);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// How the pharma side moves during integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Fixed(PharmaStrategy),
    /// Recompute the Stackelberg action against the current shares every step.
    Stackelberg,
}

impl Policy {
    pub fn strategy(&self, x: &PopulationState, game: &GameSpec) -> PharmaStrategy {
        match self {
            Policy::Fixed(s) => s.clone(),
            Policy::Stackelberg => PharmaStrategy::Pure(solve_stackelberg(game, &x.as_belief()).0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<PopulationState>,
    /// `(time, event id)` in application order.
    pub events: Vec<(f64, String)>,
    /// Pharma strategy used for the step leaving each state.
    pub strategies: Vec<PharmaStrategy>,
}

impl Trajectory {
    pub fn last(&self) -> &PopulationState {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// `t,x1..xK,event`; the event column names any event applied at that
    /// state's time.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let k = self.states[0].len();
        let mut header = vec!["t".to_string()];
        header.extend((1..=k).map(|i| format!("x{i}")));
        header.push("event".into());
        wtr.write_record(&header)?;
        for s in &self.states {
            let event = self
                .events
                .iter()
                .filter(|(t, _)| (t - s.time).abs() < 1e-9)
                .map(|(_, id)| id.as_str())
                .collect::<Vec<_>>()
                .join(";");
            let mut row = vec![format!("{}", s.time)];
            row.extend(s.shares().iter().map(|x| format!("{x}")));
            row.push(event);
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Integrates from `x0` for `horizon` time units in steps of `dt`. Events
/// fire at the first grid time at or after their timestamp.
pub fn integrate_replicator(
    x0: &PopulationState,
    game: &GameSpec,
    policy: &Policy,
    horizon: f64,
    dt: f64,
    events: &[ScenarioEvent],
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return invalid("dt must be positive and the horizon nonnegative");
    }
    if x0.len() != game.num_types() {
        return Err(Error::Dimension("initial shares do not match the type set".into()));
    }
    let steps = (horizon / dt).round() as usize;
    let mut pending: Vec<&ScenarioEvent> = events.iter().collect();
    pending.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut pending = pending.into_iter().peekable();
    let mut game = game.clone();
    let mut x = x0.clone();
    let t0 = x0.time;
    let mut traj = Trajectory {
        states: vec![x.clone()],
        events: Vec::new(),
        strategies: Vec::new(),
    };
    for i in 0..steps {
        while let Some(ev) = pending.next_if(|e| e.time <= x.time + 1e-9) {
            game = apply_event(&game, ev)?;
            traj.events.push((x.time, ev.id.clone()));
        }
        let sigma = policy.strategy(&x, &game);
        let f = fitness(&x, &game, &sigma)?;
        let mut next = replicator_step(&x, &f.values, dt)?;
        // grid times from the index so they do not accumulate rounding
        next.time = t0 + (i + 1) as f64 * dt;
        traj.strategies.push(sigma);
        traj.states.push(next.clone());
        x = next;
    }
    for ev in pending.filter(|e| e.time <= x.time + 1e-9) {
        traj.events.push((x.time, ev.id.clone()));
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssReport {
    pub mean_fitness: f64,
    /// `f̄(x*) − f_k` for each type with positive share.
    pub condition_i: Vec<(TypeIndex, f64)>,
    pub condition_i_passed: bool,
    /// `f̄(x*) − f̄(y)` for each mutant distinct from `x*`.
    pub condition_ii: Vec<f64>,
    pub condition_ii_passed: bool,
    pub passed: bool,
}

/// Checks both ESS conditions at `x_star` against the supplied mutants.
pub fn ess_audit(
    x_star: &PopulationState,
    game: &GameSpec,
    sigma: ActionId,
    mutants: &[PopulationState],
) -> Result<EssReport> {
    let strat = PharmaStrategy::Pure(sigma);
    let f = fitness(x_star, game, &strat)?;
    let condition_i: Vec<(TypeIndex, f64)> = x_star
        .shares()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .map(|(k, _)| (k, f.mean - f.values[k]))
        .collect();
    let condition_i_passed = condition_i.iter().all(|(_, s)| *s >= -crate::game::TIE_TOL);
    let mut condition_ii = Vec::new();
    for y in mutants {
        if y.shares() == x_star.shares() {
            continue;
        }
        condition_ii.push(f.mean - fitness(y, game, &strat)?.mean);
    }
    let condition_ii_passed = condition_ii.iter().all(|s| *s > 0.0);
    Ok(EssReport {
        mean_fitness: f.mean,
        condition_i,
        condition_i_passed,
        condition_ii,
        condition_ii_passed,
        passed: condition_i_passed && condition_ii_passed,
    })
}
