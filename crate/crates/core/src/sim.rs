//! The engagement loop against simulated quantal-response physicians, with
//! the exploration schedule, a deterministic content planner, reward
//! scoring and experiment-level metrics.

use std::io::Write;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{bayes_update, drift_detect, entropy, DriftSettings, Interaction, InteractionHistory};
use crate::error::{invalid, Error, Result};
use crate::game::{best_response, expected_pharma_utility, qre_distribution, solve_stackelberg, Responder};
use crate::info::{channel_capacity, information_gain, qre_channels, ChannelMatrix};
use crate::population::{integrate_replicator, Policy, PopulationState, ScenarioEvent, Trajectory};
use crate::types::{ActionId, Belief, GameSpec, ResponseId, TypeIndex, TypeSet, TypeVector};

/// Posterior mass that counts as confident identification.
pub const CONFIDENCE: f64 = 0.9;

/// Samples a quantal response of type `k` to `action`.
pub fn simulate_response<R: Rng + ?Sized>(
    game: &GameSpec,
    action: ActionId,
    k: TypeIndex,
    rng: &mut R,
) -> ResponseId {
    let p = qre_distribution(game, action, k);
    WeightedIndex::new(&p).expect("QRE probabilities are a distribution").sample(rng)
}

/// `min(1, √(K·ln(t+1)/t))` for `t ≥ 1`.
pub fn epsilon_schedule(t: usize, k: f64) -> f64 {
    assert!(t >= 1, "steps are counted from 1");
    let t = t as f64;
    (k * (t + 1.0).ln() / t).sqrt().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceDensity {
    Low,
    Medium,
    High,
}

/// Structured brief for one piece of content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentPlan {
    pub action: ActionId,
    pub evidence_density: EvidenceDensity,
    pub length_words: u32,
    pub tone: String,
    pub hedging: bool,
    pub compliance_flags: Vec<String>,
}

/// Flags every plan carries; the compliance filter only checks presence.
pub const REQUIRED_FLAGS: [&str; 2] = ["fair_balance", "on_label"];

const TONES: [&str; 4] = ["clinical", "peer", "patient_outcome", "access"];

/// Deterministic content brief.
///
/// Evidence density splits the type set's `α_E` range into thirds and
/// places the posterior-mean `α_E`; length is `200 + 1000·min(C, 1)` words;
/// tone follows the largest posterior-mean motivation weight; hedging is on
/// above one bit of belief entropy.
pub fn content_plan(
    action: ActionId,
    mu: &Belief,
    types: &TypeSet,
    capacity_bits: f64,
) -> Result<ContentPlan> {
    if !(capacity_bits >= 0.0) {
        return invalid("capacity must be nonnegative");
    }
    if mu.len() != types.len() {
        return Err(Error::Dimension("belief and type set differ in size".into()));
    }
    let mean = types.mean_type(mu);
    let (lo, hi) = types
        .types()
        .iter()
        .map(|t| t.alpha_e)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let evidence_density = if hi - lo <= 0.0 {
        EvidenceDensity::Medium
    } else {
        let pos = (mean.alpha_e - lo) / (hi - lo);
        if pos < 1.0 / 3.0 {
            EvidenceDensity::Low
        } else if pos < 2.0 / 3.0 {
            EvidenceDensity::Medium
        } else {
            EvidenceDensity::High
        }
    };
    let alphas = mean.alphas();
    let mut dom = 0;
    for i in 1..4 {
        if alphas[i] > alphas[dom] {
            dom = i;
        }
    }
    Ok(ContentPlan {
        action,
        evidence_density,
        length_words: (200.0 + 1000.0 * capacity_bits.min(1.0)).round() as u32,
        tone: TONES[dom].to_string(),
        hedging: entropy(mu, 1.0) > 1.0,
        compliance_flags: REQUIRED_FLAGS.iter().map(|s| s.to_string()).collect(),
    })
}

/// Passes plans that carry every required flag.
pub fn compliance_filter(plan: &ContentPlan) -> bool {
    REQUIRED_FLAGS.iter().all(|f| plan.compliance_flags.iter().any(|g| g == f))
}

/// One reward component.
pub type Scorer = fn(&ContentPlan, &TypeVector, ActionId) -> f64;

/// Relevance, accuracy, compliance, bias penalty and alignment scorers.
#[derive(Clone, Copy)]
pub struct RewardScorers {
    pub components: [Scorer; 5],
}

fn relevance(plan: &ContentPlan, theta: &TypeVector, _: ActionId) -> f64 {
    let alphas = theta.alphas();
    let max = alphas.iter().copied().fold(0.0, f64::max);
    match TONES.iter().position(|t| *t == plan.tone) {
        Some(i) if max > 0.0 => alphas[i] / max,
        _ => 0.0,
    }
}

fn accuracy(plan: &ContentPlan, _: &TypeVector, _: ActionId) -> f64 {
    match plan.evidence_density {
        EvidenceDensity::High => 1.0,
        EvidenceDensity::Medium => 0.75,
        EvidenceDensity::Low => 0.5,
    }
}

fn compliance(plan: &ContentPlan, _: &TypeVector, _: ActionId) -> f64 {
    let have = REQUIRED_FLAGS
        .iter()
        .filter(|f| plan.compliance_flags.iter().any(|g| g == *f))
        .count();
    have as f64 / REQUIRED_FLAGS.len() as f64
}

/// Penalizes confident low-evidence messaging.
fn bias_penalty(plan: &ContentPlan, _: &TypeVector, _: ActionId) -> f64 {
    if !plan.hedging && plan.evidence_density == EvidenceDensity::Low {
        -1.0
    } else {
        0.0
    }
}

fn alignment(plan: &ContentPlan, _: &TypeVector, equilibrium: ActionId) -> f64 {
    if plan.action == equilibrium {
        1.0
    } else {
        0.0
    }
}

impl Default for RewardScorers {
    fn default() -> Self {
        Self {
            components: [relevance, accuracy, compliance, bias_penalty, alignment],
        }
    }
}

/// `Σ w_i · score_i(plan, θ, a*)` with the default scorers.
pub fn reward_score(
    plan: &ContentPlan,
    theta: &TypeVector,
    equilibrium_action: ActionId,
    weights: [f64; 5],
) -> f64 {
    reward_score_with(plan, theta, equilibrium_action, weights, &RewardScorers::default())
}

pub fn reward_score_with(
    plan: &ContentPlan,
    theta: &TypeVector,
    equilibrium_action: ActionId,
    weights: [f64; 5],
    scorers: &RewardScorers,
) -> f64 {
    weights
        .iter()
        .zip(&scorers.components)
        .filter(|(w, _)| **w != 0.0)
        .map(|(w, s)| w * s(plan, theta, equilibrium_action))
        .sum()
}

/// A scripted response for one step, with an optional likelihood vector
/// replacing the model's for the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcedResponse {
    pub response: String,
    #[serde(default)]
    pub likelihoods: Option<Vec<f64>>,
}

/// The hidden type changes at step `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeSwitch {
    pub at: usize,
    pub to: TypeIndex,
}

/// Optional replicator run shipped with a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationLayer {
    /// Game for the population run; the loop's game when absent.
    #[serde(default)]
    pub game: Option<GameSpec>,
    pub initial: Vec<f64>,
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub policy: Policy,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

fn default_dt() -> f64 {
    crate::defaults::REPLICATOR_DT
}

fn default_tau_explore() -> f64 {
    0.5
}

fn default_replications() -> usize {
    1
}

fn default_reward_weights() -> [f64; 5] {
    [1.0, 1.0, 1.0, 1.0, 1.0]
}

fn default_drift() -> Option<DriftSettings> {
    Some(DriftSettings::default())
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub game: GameSpec,
    /// Hidden type; drawn from the prior per replication when absent.
    #[serde(default)]
    pub true_type: Option<TypeIndex>,
    pub horizon: usize,
    /// Entropy (bits) above which the loop explores.
    #[serde(default = "default_tau_explore")]
    pub tau_explore: f64,
    /// `K` in the exploration schedule; defaults to the number of types.
    #[serde(default)]
    pub epsilon_scale: Option<f64>,
    #[serde(default = "default_drift")]
    pub drift: Option<DriftSettings>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_reward_weights")]
    pub reward_weights: [f64; 5],
    #[serde(default)]
    pub forced_responses: Vec<ForcedResponse>,
    #[serde(default)]
    pub type_switch: Option<TypeSwitch>,
    #[serde(default)]
    pub population: Option<PopulationLayer>,
    /// Also run the random and greedy baselines.
    #[serde(default = "yes")]
    pub baselines: bool,
}

fn yes() -> bool {
    true
}

impl ScenarioConfig {
    /// A config with defaults around `game`.
    pub fn new(game: GameSpec, horizon: usize) -> Self {
        Self {
            name: String::new(),
            game,
            true_type: None,
            horizon,
            tau_explore: default_tau_explore(),
            epsilon_scale: None,
            drift: default_drift(),
            seed: 0,
            replications: 1,
            reward_weights: default_reward_weights(),
            forced_responses: Vec::new(),
            type_switch: None,
            population: None,
            baselines: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.game.num_types();
        if self.horizon < 1 {
            return invalid("horizon must be at least 1");
        }
        if self.replications < 1 {
            return invalid("replications must be at least 1");
        }
        if !(self.tau_explore >= 0.0) {
            return invalid("tau_explore must be nonnegative");
        }
        if let Some(e) = self.epsilon_scale {
            if !(e >= 0.0 && e.is_finite()) {
                return invalid("epsilon_scale must be finite and nonnegative");
            }
        }
        if let Some(d) = &self.drift {
            if d.window < 1 || !(d.threshold >= 0.0) || !(d.alpha >= 0.0) {
                return invalid("drift needs window ≥ 1 and nonnegative threshold and order");
            }
            if d.smoothing.is_some_and(|s| !(s > 0.0)) {
                return invalid("drift smoothing must be positive");
            }
        }
        if self.true_type.is_some_and(|t| t >= k) {
            return invalid(format!("true_type out of range (K = {k})"));
        }
        if self.type_switch.is_some_and(|s| s.to >= k || s.at < 1) {
            return invalid("type_switch needs at ≥ 1 and a valid type");
        }
        if self.reward_weights.iter().any(|w| !w.is_finite()) {
            return invalid("reward weights must be finite");
        }
        for f in &self.forced_responses {
            if self.game.response_index(&f.response).is_none() {
                return invalid(format!("forced response `{}` is not a response", f.response));
            }
            if let Some(l) = &f.likelihoods {
                if l.len() != k || l.iter().any(|x| !(*x >= 0.0)) {
                    return invalid("forced likelihoods must be K nonnegative numbers");
                }
            }
        }
        if let Some(p) = &self.population {
            PopulationState::new(p.initial.clone(), 0.0)?;
            let pk = p.game.as_ref().map_or(k, |g| g.num_types());
            if p.initial.len() != pk || !(p.dt > 0.0) || !(p.horizon >= 0.0) {
                return invalid("population layer needs K shares, dt > 0 and horizon ≥ 0");
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Action-selection rule of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Entropy-gated exploration, otherwise Stackelberg.
    Egpf,
    /// Uniformly random action.
    Random,
    /// Stackelberg every step.
    Greedy,
}

/// Everything one step records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub action: ActionId,
    pub response: ResponseId,
    pub explored: bool,
    pub epsilon: f64,
    /// Entropy of the belief the action was chosen under.
    pub entropy: f64,
    /// Information gain of the chosen action under that belief.
    pub predicted_gain: f64,
    /// `log₂ μ_t(θ*) − log₂ μ_{t-1}(θ*)`.
    pub log_gain: f64,
    pub regret: f64,
    pub cumulative_regret: f64,
    /// `−log₂ μ_t(θ*)`.
    pub kl_to_truth: f64,
    pub belief: Vec<f64>,
    pub true_type: TypeIndex,
    pub drift_statistic: Option<f64>,
    pub drift_triggered: bool,
    pub plan: ContentPlan,
    pub reward: f64,
}

/// Mutable state of one simulated physician.
#[derive(Debug, Clone)]
pub struct LoopState {
    pub mu: Belief,
    pub t: usize,
    pub history: InteractionHistory,
    pub true_type: TypeIndex,
    pub cumulative_regret: f64,
    /// History length at the last recalibration.
    pub reset_at: usize,
    pub drift_triggers: usize,
}

impl LoopState {
    pub fn new(prior: Belief, true_type: TypeIndex) -> Self {
        Self {
            mu: prior,
            t: 0,
            history: InteractionHistory::new(),
            true_type,
            cumulative_regret: 0.0,
            reset_at: 0,
            drift_triggers: 0,
        }
    }
}

/// Per-run constants derived once from the config.
#[derive(Debug, Clone)]
pub struct Engine {
    pub config: ScenarioConfig,
    pub channels: Vec<ChannelMatrix>,
    /// Capacity of each type's own action channel.
    pub capacities: Vec<f64>,
}

impl Engine {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let channels = qre_channels(&config.game);
        let capacities = channels
            .iter()
            .map(|c| {
                channel_capacity(c, crate::defaults::CAPACITY_TOL, crate::defaults::CAPACITY_MAX_ITERS)
                    .capacity
            })
            .collect();
        Ok(Self { config, channels, capacities })
    }

    fn epsilon_scale(&self) -> f64 {
        self.config
            .epsilon_scale
            .unwrap_or(self.config.game.num_types() as f64)
    }

    /// Regret of `action` against the hidden type under exact best responses.
    pub fn regret(&self, action: ActionId, k: TypeIndex) -> f64 {
        let g = &self.config.game;
        let value = |a: ActionId| g.u_p().get(a, best_response(g, a, k), k);
        let best = (0..g.num_actions()).map(value).fold(f64::NEG_INFINITY, f64::max);
        best - value(action)
    }

    /// One loop iteration.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &mut LoopState,
        strategy: Strategy,
        rng: &mut R,
    ) -> Result<StepRecord> {
        let cfg = &self.config;
        let g = &cfg.game;
        state.t += 1;
        let t = state.t;
        if let Some(sw) = cfg.type_switch {
            if t == sw.at {
                state.true_type = sw.to;
            }
        }
        let k_star = state.true_type;
        let h = entropy(&state.mu, 1.0);
        let eps = epsilon_schedule(t, self.epsilon_scale());
        let (action, explored) = match strategy {
            Strategy::Egpf => choose_action(g, &state.mu, &self.channels, eps, h, cfg.tau_explore),
            Strategy::Greedy => (solve_stackelberg(g, &state.mu).0, false),
            Strategy::Random => (rng.random_range(0..g.num_actions()), false),
        };
        let predicted_gain = information_gain(&state.mu, action, &self.channels);

        let (map, _) = state.mu.map_estimate();
        let plan = content_plan(action, &state.mu, g.type_set(), self.capacities[map])?;
        if !compliance_filter(&plan) {
            return invalid("content plan failed the compliance filter");
        }
        let equilibrium = solve_stackelberg(g, &state.mu).0;
        let reward = reward_score(&plan, g.type_set().get(k_star), equilibrium, cfg.reward_weights);

        let forced = cfg.forced_responses.get(t - 1);
        let response = match forced {
            Some(f) => g.response_index(&f.response).expect("validated"),
            None => simulate_response(g, action, k_star, rng),
        };
        state.history.push(Interaction { t: t as u64, action, response })?;

        let likelihoods: Vec<f64> = match forced.and_then(|f| f.likelihoods.clone()) {
            Some(l) => l,
            None => self.channels.iter().map(|c| c.row(action)[response]).collect(),
        };
        let before = state.mu[k_star];
        state.mu = bayes_update(&state.mu, &likelihoods)?;
        let after = state.mu[k_star];

        let mut drift_statistic = None;
        let mut drift_triggered = false;
        if let Some(settings) = &cfg.drift {
            if state.history.len() - state.reset_at >= settings.window {
                let report = drift_detect(&state.history, &self.channels, &state.mu, settings)?;
                drift_statistic = Some(report.statistic);
                if report.triggered {
                    drift_triggered = true;
                    state.drift_triggers += 1;
                    state.mu = g.prior().clone();
                    state.reset_at = state.history.len();
                }
            }
        }

        let regret = self.regret(action, k_star);
        state.cumulative_regret += regret;
        Ok(StepRecord {
            t,
            action,
            response,
            explored,
            epsilon: eps,
            entropy: h,
            predicted_gain,
            log_gain: after.log2() - before.log2(),
            regret,
            cumulative_regret: state.cumulative_regret,
            kl_to_truth: -state.mu[k_star].log2(),
            belief: state.mu.weights().to_vec(),
            true_type: k_star,
            drift_statistic,
            drift_triggered,
            plan,
            reward,
        })
    }
}

/// Exploration rule: above `tau_explore` bits of entropy maximize
/// `(1−ε)·E[u_P] + ε·IG`, otherwise commit to the Stackelberg action.
pub fn choose_action(
    game: &GameSpec,
    mu: &Belief,
    channels: &[ChannelMatrix],
    epsilon: f64,
    entropy_bits: f64,
    tau_explore: f64,
) -> (ActionId, bool) {
    if entropy_bits > tau_explore {
        let score = |a: ActionId| {
            (1.0 - epsilon) * expected_pharma_utility(game, a, mu, Responder::BestResponse)
                + epsilon * information_gain(mu, a, channels)
        };
        let mut best = (0, score(0));
        for a in 1..game.num_actions() {
            let s = score(a);
            if s > best.1 {
                best = (a, s);
            }
        }
        (best.0, true)
    } else {
        (solve_stackelberg(game, mu).0, false)
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub strategy: Strategy,
    pub replication: usize,
    pub true_type: TypeIndex,
    pub cumulative_regret: Vec<f64>,
    pub kl_to_truth: Vec<f64>,
    pub log_gain: Vec<f64>,
    pub predicted_gain: Vec<f64>,
    /// First step at which the hidden type holds ≥ 90% posterior mass and
    /// is the unique mode.
    pub steps_to_confidence: Option<usize>,
    pub explore_steps: usize,
    pub explore_regret: f64,
    pub exploit_regret: f64,
    pub epsilon_sum: f64,
    pub drift_triggers: usize,
    pub actions: Vec<ActionId>,
    /// Full records, kept only when requested.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub steps: Vec<StepRecord>,
}

fn confident(mu: &Belief, k: TypeIndex) -> bool {
    mu[k] >= CONFIDENCE
        && mu
            .weights()
            .iter()
            .enumerate()
            .all(|(j, &w)| j == k || w < mu[k])
}

/// Independent generator for replication `r`.
pub fn replication_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

impl Engine {
    /// Runs one replication of `strategy`.
    pub fn run_once(&self, strategy: Strategy, replication: usize, keep_steps: bool) -> Result<RunMetrics> {
        let cfg = &self.config;
        let mut rng = replication_rng(cfg.seed, replication);
        let true_type = match cfg.true_type {
            Some(k) => k,
            None => WeightedIndex::new(cfg.game.prior().weights())
                .expect("prior is a distribution")
                .sample(&mut rng),
        };
        let mut state = LoopState::new(cfg.game.prior().clone(), true_type);
        let mut m = RunMetrics {
            strategy,
            replication,
            true_type,
            cumulative_regret: Vec::with_capacity(cfg.horizon),
            kl_to_truth: Vec::with_capacity(cfg.horizon),
            log_gain: Vec::with_capacity(cfg.horizon),
            predicted_gain: Vec::with_capacity(cfg.horizon),
            steps_to_confidence: None,
            explore_steps: 0,
            explore_regret: 0.0,
            exploit_regret: 0.0,
            epsilon_sum: 0.0,
            drift_triggers: 0,
            actions: Vec::with_capacity(cfg.horizon),
            steps: Vec::new(),
        };
        for _ in 0..cfg.horizon {
            let rec = self.step(&mut state, strategy, &mut rng)?;
            m.cumulative_regret.push(rec.cumulative_regret);
            m.kl_to_truth.push(rec.kl_to_truth);
            m.log_gain.push(rec.log_gain);
            m.predicted_gain.push(rec.predicted_gain);
            m.actions.push(rec.action);
            m.epsilon_sum += rec.epsilon;
            if rec.explored {
                m.explore_steps += 1;
                m.explore_regret += rec.regret;
            } else {
                m.exploit_regret += rec.regret;
            }
            if m.steps_to_confidence.is_none() && confident(&state.mu, state.true_type) {
                m.steps_to_confidence = Some(rec.t);
            }
            if keep_steps {
                m.steps.push(rec);
            }
        }
        m.drift_triggers = state.drift_triggers;
        Ok(m)
    }
}

/// Mean with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

impl Estimate {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, ci95: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let ci95 = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, ci95, n }
    }

    pub fn std_error(&self) -> f64 {
        self.ci95 / 1.96
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeConvergence {
    pub true_type: TypeIndex,
    /// Steps to confidence, with runs that never got there counted as
    /// `horizon + 1`.
    pub steps: Estimate,
    pub censored: usize,
}

/// Aggregates of one strategy over all replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub final_regret: Estimate,
    pub regret_curve: Vec<f64>,
    pub kl_curve: Vec<f64>,
    pub kl_curve_ci95: Vec<f64>,
    pub steps_to_confidence: Vec<TypeConvergence>,
    pub explore_steps: Estimate,
    pub explore_regret: Estimate,
    pub exploit_regret: Estimate,
    /// `Σ ε_t`, compared with `2·√(K·T·ln T)`.
    pub epsilon_sum: f64,
    pub explore_bound: f64,
    pub drift_triggers: Estimate,
    /// Action sequence of the first replication.
    pub first_actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub seed: u64,
    pub horizon: usize,
    pub replications: usize,
    pub strategies: Vec<StrategySummary>,
}

pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    /// Loop runs, grouped by strategy in summary order.
    pub runs: Vec<Vec<RunMetrics>>,
    pub trajectory: Option<Trajectory>,
}

fn summarize(engine: &Engine, strategy: Strategy, runs: &[RunMetrics]) -> StrategySummary {
    let cfg = &engine.config;
    let t = cfg.horizon;
    let r = runs.len() as f64;
    let column = |f: &dyn Fn(&RunMetrics) -> f64| Estimate::of(runs.iter().map(f));
    let regret_curve = (0..t)
        .map(|i| runs.iter().map(|m| m.cumulative_regret[i]).sum::<f64>() / r)
        .collect();
    let kl: Vec<Estimate> = (0..t).map(|i| Estimate::of(runs.iter().map(|m| m.kl_to_truth[i]))).collect();
    let steps_to_confidence = (0..cfg.game.num_types())
        .filter_map(|k| {
            let of_type: Vec<&RunMetrics> = runs.iter().filter(|m| m.true_type == k).collect();
            if of_type.is_empty() {
                return None;
            }
            Some(TypeConvergence {
                true_type: k,
                steps: Estimate::of(
                    of_type
                        .iter()
                        .map(|m| m.steps_to_confidence.unwrap_or(t + 1) as f64),
                ),
                censored: of_type.iter().filter(|m| m.steps_to_confidence.is_none()).count(),
            })
        })
        .collect();
    let k = cfg.game.num_types() as f64;
    let tf = t as f64;
    StrategySummary {
        strategy,
        final_regret: column(&|m| *m.cumulative_regret.last().unwrap()),
        regret_curve,
        kl_curve: kl.iter().map(|e| e.mean).collect(),
        kl_curve_ci95: kl.iter().map(|e| e.ci95).collect(),
        steps_to_confidence,
        explore_steps: column(&|m| m.explore_steps as f64),
        explore_regret: column(&|m| m.explore_regret),
        exploit_regret: column(&|m| m.exploit_regret),
        epsilon_sum: runs.first().map_or(0.0, |m| m.epsilon_sum),
        explore_bound: 2.0 * (k * tf * tf.ln().max(0.0)).sqrt(),
        drift_triggers: column(&|m| m.drift_triggers as f64),
        first_actions: runs
            .first()
            .map(|m| m.actions.iter().map(|&a| cfg.game.pharma_actions()[a].clone()).collect())
            .unwrap_or_default(),
    }
}

/// Runs every replication of the loop (and the baselines when enabled),
/// in parallel with per-replication streams and ordered aggregation.
pub fn run_experiment(config: &ScenarioConfig, keep_steps: bool) -> Result<ExperimentResult> {
    let engine = Engine::new(config.clone())?;
    let strategies: &[Strategy] = if config.baselines {
        &[Strategy::Egpf, Strategy::Random, Strategy::Greedy]
    } else {
        &[Strategy::Egpf]
    };
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for &s in strategies {
        let keep = keep_steps && s == Strategy::Egpf;
        let group = (0..config.replications)
            .into_par_iter()
            .map(|r| engine.run_once(s, r, keep))
            .collect::<Result<Vec<_>>>()?;
        summaries.push(summarize(&engine, s, &group));
        runs.push(group);
    }
    let trajectory = match &config.population {
        Some(p) => Some(integrate_replicator(
            &PopulationState::new(p.initial.clone(), 0.0)?,
            p.game.as_ref().unwrap_or(&config.game),
            &p.policy,
            p.horizon,
            p.dt,
            &p.events,
        )?),
        None => None,
    };
    Ok(ExperimentResult {
        summary: ExperimentSummary {
            name: config.name.clone(),
            seed: config.seed,
            horizon: config.horizon,
            replications: config.replications,
            strategies: summaries,
        },
        runs,
        trajectory,
    })
}

/// Per-step CSV of the kept loop records.
pub fn write_steps_csv<W: Write>(runs: &[RunMetrics], k: usize, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "replication", "t", "true_type", "action", "response", "explored", "epsilon", "entropy",
        "predicted_gain", "log_gain", "regret", "cumulative_regret", "kl_to_truth",
        "drift_statistic", "drift_triggered", "length_words", "evidence_density", "tone", "reward",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=k).map(|i| format!("mu{i}")));
    wtr.write_record(&header)?;
    for m in runs {
        for s in &m.steps {
            let mut row = vec![
                m.replication.to_string(),
                s.t.to_string(),
                s.true_type.to_string(),
                s.action.to_string(),
                s.response.to_string(),
                s.explored.to_string(),
                s.epsilon.to_string(),
                s.entropy.to_string(),
                s.predicted_gain.to_string(),
                s.log_gain.to_string(),
                s.regret.to_string(),
                s.cumulative_regret.to_string(),
                s.kl_to_truth.to_string(),
                s.drift_statistic.map(|x| x.to_string()).unwrap_or_default(),
                s.drift_triggered.to_string(),
                s.plan.length_words.to_string(),
                serde_json::to_value(s.plan.evidence_density)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                s.plan.tone.clone(),
                s.reward.to_string(),
            ];
            row.extend(s.belief.iter().map(|x| x.to_string()));
            wtr.write_record(&row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}
