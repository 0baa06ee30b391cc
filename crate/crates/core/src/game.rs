//! Utilities, quantal and best responses, equilibrium solvers and the
//! mechanism-design audit over a finite [`GameSpec`].
//!
//! Ties are broken toward the lowest index everywhere so that every solver
//! is a deterministic function of its inputs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::types::{
    ActionId, Belief, GameSpec, ResponseId, TypeIndex, TypeSet, TypeVector, UtilityFeatures,
};

/// Tolerance for treating two expected utilities as tied, and for the
/// slack of IC/IR constraints.
pub const TIE_TOL: f64 = 1e-12;

/// Physician utility of `response` to `action`, given the previous
/// response (for the switching term).
///
/// `α_E·E + α_P·P + α_O·O + α_F·F − β·Var − γ·S − L/δ`
pub fn physician_utility(
    features: &UtilityFeatures,
    action: ActionId,
    response: ResponseId,
    prev_response: ResponseId,
    theta: &TypeVector,
) -> Result<f64> {
    if action >= features.num_actions() {
        return invalid(format!("action {action} out of range"));
    }
    let l = features.num_responses();
    if response >= l || prev_response >= l {
        return invalid(format!("response index out of range (L = {l})"));
    }
    if theta.delta <= 0.0 {
        return invalid("delta must be positive (cognitive load divides by it)");
    }
    let switch = if response != prev_response { 1.0 } else { 0.0 };
    Ok(theta.alpha_e * features.evidence[action]
        + theta.alpha_p * features.peer[action]
        + theta.alpha_o * features.outcome[action][response]
        + theta.alpha_f * features.access[response]
        - theta.beta * features.variance[action]
        - theta.gamma * switch
        - features.load[action] / theta.delta)
}

/// Trade-off weights of the pharma utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PharmaWeights {
    /// Lifetime-value weight.
    pub lambda: f64,
    /// Regulatory-risk weight.
    pub psi: f64,
    /// Exploration (information gain) weight.
    pub omega: f64,
}

impl Default for PharmaWeights {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            psi: 1.0,
            omega: crate::defaults::OMEGA,
        }
    }
}

/// `R − C + λ·LTV − ψ·Reg + ω·I_gain`.
pub fn pharma_utility(
    revenue: f64,
    cost: f64,
    ltv: f64,
    reg_risk: f64,
    info_gain: f64,
    w: PharmaWeights,
) -> f64 {
    revenue - cost + w.lambda * ltv - w.psi * reg_risk + w.omega * info_gain
}

/// Inputs for the pharma side of a feature-built game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PharmaFeatures {
    /// `R(d)`
    pub revenue: Vec<f64>,
    /// `C(a)`
    pub cost: Vec<f64>,
    /// `LTV(d, θ)` indexed `[d][k]`
    pub ltv: Vec<Vec<f64>>,
    /// `Reg(a)`
    pub reg_risk: Vec<f64>,
    /// `I_gain(a, d)` indexed `[a][d]`
    pub info_gain: Vec<Vec<f64>>,
    pub weights: PharmaWeights,
}

/// Fills reduced-form payoff tensors from feature-based utilities.
///
/// `status_quo` is the response used as `d_{t-1}` in the switching term.
#[allow(clippy::too_many_arguments)]
pub fn game_from_features(
    type_set: TypeSet,
    pharma_actions: Vec<String>,
    physician_responses: Vec<String>,
    physician: &UtilityFeatures,
    pharma: &PharmaFeatures,
    status_quo: ResponseId,
    prior: Belief,
    tau: f64,
) -> Result<GameSpec> {
    let report = physician.validate();
    if !report.is_ok() {
        return invalid(format!("utility features: {:?}", report.violations));
    }
    let (m, l, k) = (pharma_actions.len(), physician_responses.len(), type_set.len());
    if physician.num_actions() != m || physician.num_responses() != l {
        return Err(Error::Dimension("features do not match action/response sets".into()));
    }
    if pharma.revenue.len() != l
        || pharma.cost.len() != m
        || pharma.reg_risk.len() != m
        || pharma.ltv.len() != l
        || pharma.ltv.iter().any(|r| r.len() != k)
        || pharma.info_gain.len() != m
        || pharma.info_gain.iter().any(|r| r.len() != l)
    {
        return Err(Error::Dimension("pharma features do not match M×L×K".into()));
    }
    let mut u_d = crate::types::PayoffTensor::zeros(m, l, k);
    let mut u_p = crate::types::PayoffTensor::zeros(m, l, k);
    for a in 0..m {
        for d in 0..l {
            for (j, theta) in type_set.types().iter().enumerate() {
                u_d.set(a, d, j, physician_utility(physician, a, d, status_quo, theta)?);
                u_p.set(
                    a,
                    d,
                    j,
                    pharma_utility(
                        pharma.revenue[d],
                        pharma.cost[a],
                        pharma.ltv[d][j],
                        pharma.reg_risk[a],
                        pharma.info_gain[a][d],
                        pharma.weights,
                    ),
                );
            }
        }
    }
    GameSpec::new(
        type_set,
        pharma_actions,
        physician_responses,
        u_p,
        u_d,
        prior,
        tau,
    )
}

/// Numerically stable softmax of `tau * utilities`.
pub fn softmax(utilities: &[f64], tau: f64) -> Vec<f64> {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = utilities.iter().map(|u| (tau * (u - max)).exp()).collect();
    let z: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= z;
    }
    out
}

/// Quantal (logit) response distribution of type `k` to `action`.
pub fn qre_distribution(game: &GameSpec, action: ActionId, k: TypeIndex) -> Vec<f64> {
    let utils: Vec<f64> = (0..game.num_responses())
        .map(|d| game.u_d().get(action, d, k))
        .collect();
    softmax(&utils, game.tau())
}

/// Exact best response of type `k` to `action`; lowest index wins ties.
pub fn best_response(game: &GameSpec, action: ActionId, k: TypeIndex) -> ResponseId {
    let u = game.u_d();
    let mut best = 0;
    for d in 1..game.num_responses() {
        if u.get(action, d, k) > u.get(action, best, k) {
            best = d;
        }
    }
    best
}

/// Physician value of an action: the utility of the best response.
pub fn best_response_value(game: &GameSpec, action: ActionId, k: TypeIndex) -> f64 {
    game.u_d().get(action, best_response(game, action, k), k)
}

/// How the physician is assumed to respond when evaluating pharma payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Responder {
    BestResponse,
    Qre,
}

/// `Σ_k μ(θ_k) · u_P(a, d_k, θ_k)` with `d_k` chosen by `responder`.
pub fn expected_pharma_utility(
    game: &GameSpec,
    action: ActionId,
    mu: &Belief,
    responder: Responder,
) -> f64 {
    let u = game.u_p();
    (0..game.num_types())
        .map(|k| {
            let payoff = match responder {
                Responder::BestResponse => u.get(action, best_response(game, action, k), k),
                Responder::Qre => qre_distribution(game, action, k)
                    .iter()
                    .enumerate()
                    .map(|(d, p)| p * u.get(action, d, k))
                    .sum(),
            };
            mu[k] * payoff
        })
        .sum()
}

/// A pharma mixed strategy plus the physician's per-(action, type) response
/// distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub pharma_strategy: Vec<f64>,
    /// Indexed `[action][type]`, each a distribution over responses.
    pub physician_strategy: Vec<Vec<Vec<f64>>>,
    /// Pharma expected payoff of `pharma_strategy` under the prior.
    pub leader_payoff: f64,
}

impl StrategyProfile {
    /// The pharma action, if the strategy is pure.
    pub fn pure_action(&self) -> Option<ActionId> {
        let support: Vec<_> = self
            .pharma_strategy
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .collect();
        (support.len() == 1).then(|| support[0].0)
    }
}

/// Bayesian Nash equilibrium by enumeration: exact per-type best
/// responses, then the pharma maximizer set under the prior. Unique
/// maximizers give a pure strategy, otherwise uniform over the ties.
pub fn solve_bne(game: &GameSpec) -> StrategyProfile {
    let (m, l, k) = (game.num_actions(), game.num_responses(), game.num_types());
    let physician_strategy = (0..m)
        .map(|a| {
            (0..k)
                .map(|j| {
                    let mut dist = vec![0.0; l];
                    dist[best_response(game, a, j)] = 1.0;
                    dist
                })
                .collect()
        })
        .collect();
    let values: Vec<f64> = (0..m)
        .map(|a| expected_pharma_utility(game, a, game.prior(), Responder::BestResponse))
        .collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..m).filter(|&a| best - values[a] <= TIE_TOL).collect();
    let mut pharma_strategy = vec![0.0; m];
    for &a in &ties {
        pharma_strategy[a] = 1.0 / ties.len() as f64;
    }
    StrategyProfile {
        pharma_strategy,
        physician_strategy,
        leader_payoff: ties.iter().map(|&a| values[a]).fold(f64::INFINITY, f64::min),
    }
}

/// Stackelberg commitment: the pharma action maximizing expected payoff
/// against anticipated best responses under `mu`.
pub fn solve_stackelberg(game: &GameSpec, mu: &Belief) -> (ActionId, f64) {
    let mut best = (0, expected_pharma_utility(game, 0, mu, Responder::BestResponse));
    for a in 1..game.num_actions() {
        let v = expected_pharma_utility(game, a, mu, Responder::BestResponse);
        if v > best.1 {
            best = (a, v);
        }
    }
    best
}

/// Direct mechanism: allocation `g`, transfers `t` and outside options `ū`,
/// all indexed by (reported) type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub allocation: Vec<ActionId>,
    pub transfers: Vec<f64>,
    pub outside_option: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcViolation {
    pub true_type: TypeIndex,
    pub reported: TypeIndex,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrViolation {
    pub true_type: TypeIndex,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismAudit {
    pub ic_violations: Vec<IcViolation>,
    pub ir_violations: Vec<IrViolation>,
    pub passed: bool,
    /// Smallest IC slack over all (θ, θ′) pairs, violated or not.
    pub min_ic_slack: f64,
    pub min_ir_slack: f64,
}

/// Checks every IC pair and IR constraint, valuing each allocated action
/// by the true type's best response.
pub fn audit_mechanism(game: &GameSpec, mech: &Mechanism) -> Result<MechanismAudit> {
    let k = game.num_types();
    if mech.allocation.len() != k || mech.transfers.len() != k || mech.outside_option.len() != k
    {
        return Err(Error::Dimension(format!(
            "mechanism must cover all {k} types"
        )));
    }
    if let Some(&a) = mech.allocation.iter().find(|&&a| a >= game.num_actions()) {
        return invalid(format!("allocation uses unknown action {a}"));
    }
    if mech.transfers.iter().chain(&mech.outside_option).any(|x| !x.is_finite()) {
        return invalid("transfers and outside options must be finite");
    }
    let value = |a: ActionId, j: TypeIndex| best_response_value(game, a, j);
    let mut ic_violations = Vec::new();
    let mut ir_violations = Vec::new();
    let mut min_ic = f64::INFINITY;
    let mut min_ir = f64::INFINITY;
    for truth in 0..k {
        let truthful = value(mech.allocation[truth], truth) + mech.transfers[truth];
        for report in 0..k {
            if report == truth {
                continue;
            }
            let lie = value(mech.allocation[report], truth) + mech.transfers[report];
            let slack = truthful - lie;
            min_ic = min_ic.min(slack);
            if slack < -TIE_TOL {
                ic_violations.push(IcViolation {
                    true_type: truth,
                    reported: report,
                    slack,
                });
            }
        }
        let slack = truthful - mech.outside_option[truth];
        min_ir = min_ir.min(slack);
        if slack < -TIE_TOL {
            ir_violations.push(IrViolation {
                true_type: truth,
                slack,
            });
        }
    }
    let passed = ic_violations.is_empty() && ir_violations.is_empty();
    Ok(MechanismAudit {
        ic_violations,
        ir_violations,
        passed,
        min_ic_slack: min_ic,
        min_ir_slack: min_ir,
    })
}

/// Transfers pinned down by the allocation along the alpha_E ordering:
///
/// `t(θ_k) = t(θ_1) + Σ_{j<k} [V(g(θ_j), θ_j) − V(g(θ_{j+1}), θ_j)]`
///
/// where `V(a, θ)` is the best-response utility of `θ` under `a`. Each
/// type is left indifferent between its own report and the next one up,
/// so with transfers added to `V` (as [`audit_mechanism`] does) the result
/// is IC whenever `V` has increasing differences along a monotone
/// allocation.
pub fn derive_transfers(
    game: &GameSpec,
    allocation: &[ActionId],
    base_transfer: f64,
) -> Result<Vec<f64>> {
    let k = game.num_types();
    if allocation.len() != k {
        return Err(Error::Dimension(format!("allocation must cover all {k} types")));
    }
    if let Some(&a) = allocation.iter().find(|&&a| a >= game.num_actions()) {
        return invalid(format!("allocation uses unknown action {a}"));
    }
    let types = game.type_set().types();
    if let Some(pos) = types.windows(2).position(|w| w[1].alpha_e < w[0].alpha_e) {
        return Err(Error::UnsortedTypes { position: pos + 1 });
    }
    let mut transfers = Vec::with_capacity(k);
    transfers.push(base_transfer);
    for j in 0..k.saturating_sub(1) {
        let step = best_response_value(game, allocation[j], j)
            - best_response_value(game, allocation[j + 1], j);
        transfers.push(transfers[j] + step);
    }
    Ok(transfers)
}
