//! Channels, mutual information, Blahut-Arimoto capacity and
//! rate-distortion, information gain, and Fisher information with
//! D-optimal action selection. Everything is reported in bits.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::{physician_utility, softmax};
use crate::types::{ActionId, Belief, GameSpec, ResponseId, TypeVector, UtilityFeatures};

const ROW_TOL: f64 = 1e-9;

/// Row-stochastic matrix `P(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ChannelMatrix {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for ChannelMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<ChannelMatrix> for Vec<Vec<f64>> {
    fn from(c: ChannelMatrix) -> Self {
        c.rows
    }
}

impl ChannelMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return invalid("channel needs at least one input and one output");
        }
        let l = rows[0].len();
        for (x, row) in rows.iter().enumerate() {
            if row.len() != l {
                return Err(Error::Dimension(format!("row {x} has {} outputs, expected {l}", row.len())));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return invalid(format!("row {x} has an entry outside [0,1]"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOL {
                return invalid(format!("row {x} sums to {s}"));
            }
        }
        Ok(Self { rows })
    }

    /// Builds a channel from strictly valid rows of a closure.
    pub fn from_fn(inputs: usize, outputs: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new((0..inputs).map(|x| (0..outputs).map(|y| f(x, y)).collect()).collect())
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn output_dist(&self, input: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.outputs()];
        for (row, &p) in self.rows.iter().zip(input) {
            for (qy, &pyx) in q.iter_mut().zip(row) {
                *qy += p * pyx;
            }
        }
        q
    }
}

/// Per-type QRE channels of a game: channel `k` maps actions to the
/// quantal response distribution of type `k`.
pub fn qre_channels(game: &GameSpec) -> Vec<ChannelMatrix> {
    (0..game.num_types())
        .map(|k| {
            let rows = (0..game.num_actions())
                .map(|a| crate::game::qre_distribution(game, a, k))
                .collect();
            ChannelMatrix { rows }
        })
        .collect()
}

/// Type-to-response channel for a fixed action: row `k` is `P_k(·|a)`.
pub fn type_channel(channels: &[ChannelMatrix], action: ActionId) -> ChannelMatrix {
    ChannelMatrix {
        rows: channels.iter().map(|c| c.row(action).to_vec()).collect(),
    }
}

/// `Σ p(x) P(y|x) log₂ [P(y|x) / p(y)]`.
///
/// # Panics
/// If `input` does not have one weight per channel input.
pub fn mutual_information(input: &[f64], channel: &ChannelMatrix) -> f64 {
    assert_eq!(input.len(), channel.inputs(), "input length must match channel inputs");
    let q = channel.output_dist(input);
    let mut mi = 0.0;
    for (row, &px) in channel.rows.iter().zip(input) {
        if px <= 0.0 {
            continue;
        }
        for (&pyx, &qy) in row.iter().zip(&q) {
            if pyx > 0.0 {
                mi += px * pyx * (pyx / qy).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Result of a capacity computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Bits; the mutual information of `input`.
    pub capacity: f64,
    pub input: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Upper bound minus capacity at exit, in bits.
    pub gap: f64,
    /// Mutual information of every iterate, starting with the uniform input.
    pub history: Vec<f64>,
}

/// Blahut-Arimoto capacity.
///
/// Stops once `max_x D(P(·|x) ‖ q) − I(r)` falls below `tol` bits: the
/// first term bounds capacity from above, the second from below. When
/// `max_iters` is hit the best iterate is returned with `converged = false`.
pub fn channel_capacity(channel: &ChannelMatrix, tol: f64, max_iters: usize) -> CapacityResult {
    let m = channel.inputs();
    let mut r = vec![1.0 / m as f64; m];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let q = channel.output_dist(&r);
        // per-input divergence from the output marginal, in bits
        let div: Vec<f64> = channel
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&q)
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(&p, &qy)| p * (p / qy).log2())
                    .sum::<f64>()
            })
            .collect();
        let lower: f64 = r.iter().zip(&div).map(|(ri, di)| ri * di).sum::<f64>().max(0.0);
        let upper = div.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        history.push(lower);
        let gap = (upper - lower).max(0.0);
        if gap < tol || iterations >= max_iters {
            return CapacityResult {
                capacity: lower,
                input: r,
                iterations,
                converged: gap < tol,
                gap,
                history,
            };
        }
        let w: Vec<f64> = r.iter().zip(&div).map(|(ri, di)| ri * di.exp2()).collect();
        let z: f64 = w.iter().sum();
        r = w.into_iter().map(|x| x / z).collect();
        iterations += 1;
    }
}

/// Expected entropy reduction about the type from observing the response
/// to `action`, i.e. `I(Θ; D | a, μ)`.
///
/// # Panics
/// If `channels` does not hold one channel per type of `mu`.
pub fn information_gain(mu: &Belief, action: ActionId, channels: &[ChannelMatrix]) -> f64 {
    assert_eq!(channels.len(), mu.len(), "one channel per type");
    mutual_information(mu.weights(), &type_channel(channels, action))
}

/// Symmetric Fisher information matrix over the 8 type parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub entries: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (&self.entries - self.entries.transpose()).amax() <= tol
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// A differentiable response model `θ ↦ P(·|a, θ)`.
pub trait LikelihoodFamily {
    fn num_actions(&self) -> usize;
    fn likelihood(&self, action: ActionId, theta: &[f64]) -> Result<Vec<f64>>;
}

/// Logit responses to feature-based physician utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QreFeatureFamily {
    pub features: UtilityFeatures,
    pub tau: f64,
    /// Previous response, for the switching term.
    pub status_quo: ResponseId,
}

impl QreFeatureFamily {
    /// Gradient of the utility of response `d` with respect to `θ`.
    pub fn utility_gradient(&self, action: ActionId, d: ResponseId, theta: &[f64]) -> [f64; 8] {
        let f = &self.features;
        let switch = if d != self.status_quo { 1.0 } else { 0.0 };
        [
            f.evidence[action],
            f.peer[action],
            f.outcome[action][d],
            f.access[d],
            -f.variance[action],
            -switch,
            f.load[action] / (theta[6] * theta[6]),
            0.0,
        ]
    }
}

impl LikelihoodFamily for QreFeatureFamily {
    fn num_actions(&self) -> usize {
        self.features.num_actions()
    }

    fn likelihood(&self, action: ActionId, theta: &[f64]) -> Result<Vec<f64>> {
        let tv = TypeVector::from_slice(theta);
        let utils = (0..self.features.num_responses())
            .map(|d| physician_utility(&self.features, action, d, self.status_quo, &tv))
            .collect::<Result<Vec<_>>>()?;
        Ok(softmax(&utils, self.tau))
    }
}

/// Any closure `(action, θ) ↦ P(·|a, θ)` over a fixed number of actions.
pub struct FnFamily<F> {
    pub actions: usize,
    pub f: F,
}

impl<F: Fn(ActionId, &[f64]) -> Vec<f64>> LikelihoodFamily for FnFamily<F> {
    fn num_actions(&self) -> usize {
        self.actions
    }

    fn likelihood(&self, action: ActionId, theta: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(action, theta))
    }
}

fn positive(p: Vec<f64>) -> Result<Vec<f64>> {
    match p.iter().position(|&x| !(x > 0.0)) {
        Some(response) => Err(Error::NonPositiveLikelihood { response }),
        None => Ok(p),
    }
}

/// `I_jk = Σ_d P(d) ∂_j log P(d) ∂_k log P(d)` with central differences of
/// relative step `step` (the perturbation of coordinate `j` is
/// `step·max(1, |θ_j|)`).
pub fn fisher_information(
    theta: &[f64],
    action: ActionId,
    family: &impl LikelihoodFamily,
    step: f64,
) -> Result<FisherMatrix> {
    if !(step > 0.0) {
        return invalid("finite-difference step must be positive");
    }
    let n = theta.len();
    let p = positive(family.likelihood(action, theta)?)?;
    let l = p.len();
    // scores[j][d] = ∂_j log P(d)
    let mut scores = vec![vec![0.0; l]; n];
    let mut probe = theta.to_vec();
    for j in 0..n {
        let h = step * theta[j].abs().max(1.0);
        probe[j] = theta[j] + h;
        let up = positive(family.likelihood(action, &probe)?)?;
        probe[j] = theta[j] - h;
        let down = positive(family.likelihood(action, &probe)?)?;
        probe[j] = theta[j];
        for d in 0..l {
            scores[j][d] = (up[d].ln() - down[d].ln()) / (2.0 * h);
        }
    }
    let entries = DMatrix::from_fn(n, n, |j, k| {
        (0..l).map(|d| p[d] * scores[j][d] * scores[k][d]).sum()
    });
    // exact symmetry regardless of summation order
    let entries = (&entries + entries.transpose()) * 0.5;
    Ok(FisherMatrix { entries })
}

/// Orthonormal basis (8×7) of the directions that keep the four
/// motivation weights on the simplex.
pub fn simplex_tangent_basis() -> DMatrix<f64> {
    let mut b = DMatrix::zeros(8, 7);
    // Helmert contrasts for the first four coordinates
    for c in 0..3 {
        let m = (c + 1) as f64;
        let norm = (m * (m + 1.0)).sqrt();
        for r in 0..=c {
            b[(r, c)] = 1.0 / norm;
        }
        b[(c + 1, c)] = -m / norm;
    }
    for c in 3..7 {
        b[(c + 1, c)] = 1.0;
    }
    b
}

/// Numerical rank and pseudo-determinant of a symmetric PSD matrix.
pub fn pseudo_determinant(m: &DMatrix<f64>) -> (usize, f64) {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().copied().fold(0.0, f64::max);
    let cutoff = 1e-9 * max.max(1.0);
    let kept: Vec<f64> = eig.iter().copied().filter(|&x| x > cutoff).collect();
    if kept.is_empty() {
        (0, 0.0)
    } else {
        (kept.len(), kept.iter().product())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignMode {
    /// Largest (pseudo-)determinant of the projected Fisher matrix.
    Det,
    /// Largest `½·tr(I Σ)` for the given posterior covariance.
    TraceApprox(DMatrix<f64>),
}

/// Score of one action under `mode`. Det scores compare by rank first,
/// then pseudo-determinant.
pub fn design_score(fisher: &FisherMatrix, mode: &DesignMode) -> (usize, f64) {
    match mode {
        DesignMode::Det => {
            let b = simplex_tangent_basis();
            let projected = if fisher.dim() == 8 {
                b.transpose() * &fisher.entries * b
            } else {
                fisher.entries.clone()
            };
            pseudo_determinant(&projected)
        }
        DesignMode::TraceApprox(sigma) => (0, 0.5 * (&fisher.entries * sigma).trace()),
    }
}

/// Most informative action at `mu_hat`; ties go to the lowest index.
pub fn d_optimal_action(
    mu_hat: &TypeVector,
    family: &impl LikelihoodFamily,
    mode: &DesignMode,
    step: f64,
) -> Result<ActionId> {
    if let DesignMode::TraceApprox(s) = mode {
        if s.nrows() != 8 || s.ncols() != 8 {
            return Err(Error::Dimension("posterior covariance must be 8×8".into()));
        }
    }
    let theta = mu_hat.to_array();
    let mut best = 0;
    let mut best_score = (0usize, f64::NEG_INFINITY);
    for a in 0..family.num_actions() {
        let score = design_score(&fisher_information(&theta, a, family, step)?, mode);
        let better = score.0 > best_score.0
            || (score.0 == best_score.0 && score.1 > best_score.1 + 1e-12 * best_score.1.abs());
        if a == 0 || better {
            best = a;
            best_score = score;
        }
    }
    Ok(best)
}

/// Weights of the regulatory and privacy terms in the distortion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DistortionWeights {
    pub lambda_r: f64,
    pub lambda_p: f64,
}

/// Distortion `d(θ, c) = 1 − Rel(c, θ) + λ_r Reg(c) + λ_p Priv(c, θ)`,
/// indexed `[type][content]`.
pub fn personalization_distortion(
    relevance: &[Vec<f64>],
    reg: &[f64],
    privacy: &[Vec<f64>],
    w: DistortionWeights,
) -> Result<Vec<Vec<f64>>> {
    let c = reg.len();
    if relevance.len() != privacy.len()
        || relevance.iter().chain(privacy).any(|r| r.len() != c)
    {
        return Err(Error::Dimension("relevance/privacy must be K×C with C = |reg|".into()));
    }
    Ok(relevance
        .iter()
        .zip(privacy)
        .map(|(rel, pr)| {
            (0..c)
                .map(|j| 1.0 - rel[j] + w.lambda_r * reg[j] + w.lambda_p * pr[j])
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDistortionPoint {
    /// Lagrange slope `s`; larger values buy lower distortion.
    pub lambda: f64,
    pub rate: f64,
    pub distortion: f64,
    pub lambda_r: f64,
    pub lambda_p: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Blahut-Arimoto rate-distortion points for each slope in `slopes`,
/// returned sorted by distortion.
///
/// Slope 0 is the rate-zero end: all mass on the content with the least
/// expected distortion.
pub fn rate_distortion_curve(
    type_dist: &Belief,
    distortion: &[Vec<f64>],
    weights: DistortionWeights,
    slopes: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<RateDistortionPoint>> {
    let k = type_dist.len();
    if distortion.len() != k || distortion.is_empty() || distortion[0].is_empty() {
        return Err(Error::Dimension("distortion must be K×C".into()));
    }
    let c = distortion[0].len();
    if distortion.iter().any(|r| r.len() != c) {
        return Err(Error::Dimension("ragged distortion matrix".into()));
    }
    if distortion.iter().flatten().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return invalid("distortion must be finite and nonnegative");
    }
    if slopes.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return invalid("slopes must be finite and nonnegative");
    }
    let mu = type_dist.weights();
    let mut points: Vec<RateDistortionPoint> = slopes
        .iter()
        .map(|&s| {
            let (cond, q, iterations, converged) = if s == 0.0 {
                let expected: Vec<f64> = (0..c)
                    .map(|j| (0..k).map(|i| mu[i] * distortion[i][j]).sum())
                    .collect();
                let mut best = 0;
                for j in 1..c {
                    if expected[j] < expected[best] {
                        best = j;
                    }
                }
                let q: Vec<f64> = (0..c).map(|j| if j == best { 1.0 } else { 0.0 }).collect();
                (vec![q.clone(); k], q, 0, true)
            } else {
                ba_rate_distortion(mu, distortion, s, tol, max_iters)
            };
            let mut rate = 0.0;
            let mut dist = 0.0;
            for i in 0..k {
                for j in 0..c {
                    let p = cond[i][j];
                    if p > 0.0 {
                        rate += mu[i] * p * (p / q[j]).log2();
                        dist += mu[i] * p * distortion[i][j];
                    }
                }
            }
            RateDistortionPoint {
                lambda: s,
                rate: rate.max(0.0),
                distortion: dist,
                lambda_r: weights.lambda_r,
                lambda_p: weights.lambda_p,
                converged,
                iterations,
            }
        })
        .collect();
    points.sort_by(|a, b| a.distortion.total_cmp(&b.distortion));
    Ok(points)
}

type Conditional = Vec<Vec<f64>>;

fn ba_rate_distortion(
    mu: &[f64],
    d: &[Vec<f64>],
    s: f64,
    tol: f64,
    max_iters: usize,
) -> (Conditional, Vec<f64>, usize, bool) {
    let (k, c) = (d.len(), d[0].len());
    let mut q = vec![1.0 / c as f64; c];
    let mut cond = vec![vec![0.0; c]; k];
    for it in 0..=max_iters {
        for i in 0..k {
            // shift by the row minimum so the exponentials cannot underflow to all-zero
            let dmin = d[i].iter().copied().fold(f64::INFINITY, f64::min);
            let mut z = 0.0;
            for j in 0..c {
                cond[i][j] = q[j] * (-s * (d[i][j] - dmin)).exp();
                z += cond[i][j];
            }
            for x in cond[i].iter_mut() {
                *x /= z;
            }
        }
        let next: Vec<f64> = (0..c).map(|j| (0..k).map(|i| mu[i] * cond[i][j]).sum()).collect();
        let change = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        q = next;
        if change < tol {
            return (cond, q, it, true);
        }
    }
    (cond, q, max_iters, false)
}

/// Checks that a curve sorted by distortion is non-increasing and convex
/// within `tol`.
pub fn is_monotone_convex(points: &[RateDistortionPoint], tol: f64) -> bool {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for p in points {
        match pts.last_mut() {
            // coincident distortions: keep the smaller rate
            Some(last) if (p.distortion - last.0).abs() < 1e-12 => last.1 = last.1.min(p.rate),
            _ => pts.push((p.distortion, p.rate)),
        }
    }
    if pts.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 > w[0].1 + tol) {
        return false;
    }
    // area test: each middle point lies on or below the chord of its neighbours
    pts.windows(3).all(|w| {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        let (x2, y2) = w[2];
        let chord = y0 + (y2 - y0) * (x1 - x0) / (x2 - x0);
        y1 <= chord + tol
    })
}
