//! Domain types shared by every other module: physician type vectors, type
//! sets, beliefs, payoff tensors and the finite game specification.
//!
//! All of these are immutable after construction and validate their own
//! invariants, so downstream code can take them at face value.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance for "sums to one" checks on simplex-valued data.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Index of a pharma action inside a [`GameSpec`].
pub type ActionId = usize;
/// Index of a physician response inside a [`GameSpec`].
pub type ResponseId = usize;
/// Index of a type inside a [`TypeSet`].
pub type TypeIndex = usize;

/// One violated constraint, with the measured residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub residual: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (residual {:e})", self.constraint, self.residual)
    }
}

/// Outcome of a validation pass. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, constraint: impl Into<String>, residual: f64) {
        self.violations.push(Violation {
            constraint: constraint.into(),
            residual,
        });
    }

    /// True if any violation message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.constraint.contains(needle))
    }

    fn into_result(self, what: &str) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            invalid(format!("{what}: {}", msgs.join("; ")))
        }
    }
}

/// Physician archetype: four influence weights on the 3-simplex plus risk
/// aversion, inertia, processing bandwidth and temporal discount.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeVector {
    #[serde(rename = "alpha_E")]
    pub alpha_e: f64,
    #[serde(rename = "alpha_P")]
    pub alpha_p: f64,
    #[serde(rename = "alpha_O")]
    pub alpha_o: f64,
    #[serde(rename = "alpha_F")]
    pub alpha_f: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub kappa: f64,
}

impl TypeVector {
    pub const DIM: usize = 8;

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha_e: f64,
        alpha_p: f64,
        alpha_o: f64,
        alpha_f: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        kappa: f64,
    ) -> Self {
        Self {
            alpha_e,
            alpha_p,
            alpha_o,
            alpha_f,
            beta,
            gamma,
            delta,
            kappa,
        }
    }

    /// The unit object for type mixing: equal influence weights, no risk
    /// aversion, no inertia, full bandwidth, neutral discount.
    pub fn unit() -> Self {
        Self::new(0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 1.0, 1.0)
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.alpha_e,
            self.alpha_p,
            self.alpha_o,
            self.alpha_f,
            self.beta,
            self.gamma,
            self.delta,
            self.kappa,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), Self::DIM, "type vectors have 8 components");
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7])
    }

    pub fn alphas(&self) -> [f64; 4] {
        [self.alpha_e, self.alpha_p, self.alpha_o, self.alpha_f]
    }

    pub fn distance(&self, other: &TypeVector) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_type_vector(self)
    }
}

/// Checks every [`TypeVector`] invariant and names each violation.
pub fn validate_type_vector(theta: &TypeVector) -> ValidationReport {
    let mut report = ValidationReport::default();
    let arr = theta.to_array();
    if let Some(i) = arr.iter().position(|x| !x.is_finite()) {
        report.push(format!("component {i} not finite"), f64::NAN);
        return report;
    }
    let sum: f64 = theta.alphas().iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        report.push(format!("simplex sum = {sum}"), sum - 1.0);
    }
    for (name, a) in ["alpha_E", "alpha_P", "alpha_O", "alpha_F"]
        .iter()
        .zip(theta.alphas())
    {
        if !(0.0..=1.0).contains(&a) {
            report.push(format!("{name} = {a} outside [0,1]"), out_of(a, 0.0, 1.0));
        }
    }
    if theta.beta < 0.0 {
        report.push(format!("beta = {} negative", theta.beta), theta.beta);
    }
    if theta.kappa < 0.0 {
        report.push(format!("kappa = {} negative", theta.kappa), theta.kappa);
    }
    if !(0.0..=1.0).contains(&theta.gamma) {
        report.push(
            format!("gamma = {} outside [0,1]", theta.gamma),
            out_of(theta.gamma, 0.0, 1.0),
        );
    }
    if !(theta.delta > 0.0 && theta.delta <= 1.0) {
        report.push(
            format!("delta = {} outside (0,1]", theta.delta),
            out_of(theta.delta, 0.0, 1.0),
        );
    }
    report
}

fn out_of(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        x - lo
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

/// A finite, epsilon-separated set of physician types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TypeSetDoc", into = "TypeSetDoc")]
pub struct TypeSet {
    types: Vec<TypeVector>,
    separation: f64,
}

#[derive(Serialize, Deserialize)]
struct TypeSetDoc {
    types: Vec<TypeVector>,
    separation: f64,
}

impl TryFrom<TypeSetDoc> for TypeSet {
    type Error = Error;
    fn try_from(doc: TypeSetDoc) -> Result<Self> {
        TypeSet::new(doc.types, doc.separation)
    }
}

impl From<TypeSet> for TypeSetDoc {
    fn from(ts: TypeSet) -> Self {
        TypeSetDoc {
            types: ts.types,
            separation: ts.separation,
        }
    }
}

impl TypeSet {
    /// Builds a type set, keeping the caller's ordering (payoff tensors are
    /// indexed by it). Fails if any type is invalid or two types are closer
    /// than `separation`.
    pub fn new(types: Vec<TypeVector>, separation: f64) -> Result<Self> {
        if types.is_empty() {
            return invalid("type set needs at least one type");
        }
        if !(separation >= 0.0 && separation.is_finite()) {
            return invalid(format!("separation {separation} must be finite and >= 0"));
        }
        for (i, t) in types.iter().enumerate() {
            t.validate().into_result(&format!("type {i}"))?;
        }
        for i in 0..types.len() {
            for j in (i + 1)..types.len() {
                let d = types[i].distance(&types[j]);
                if d <= separation {
                    return invalid(format!(
                        "types {i} and {j} are {d} apart, not more than separation {separation}"
                    ));
                }
            }
        }
        Ok(Self { types, separation })
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[TypeVector] {
        &self.types
    }

    pub fn get(&self, k: TypeIndex) -> &TypeVector {
        &self.types[k]
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.types.len() {
            for j in (i + 1)..self.types.len() {
                best = best.min(self.types[i].distance(&self.types[j]));
            }
        }
        best
    }

    /// True when types ascend in alpha_E (ties broken by alpha_P).
    pub fn is_canonical(&self) -> bool {
        self.types
            .windows(2)
            .all(|w| canonical_cmp(&w[0], &w[1]) != std::cmp::Ordering::Greater)
    }

    /// Posterior-mean type vector under `mu`.
    pub fn mean_type(&self, mu: &Belief) -> TypeVector {
        let mut acc = [0.0; 8];
        for (t, w) in self.types.iter().zip(mu.weights()) {
            for (a, x) in acc.iter_mut().zip(t.to_array()) {
                *a += w * x;
            }
        }
        TypeVector::from_slice(&acc)
    }
}

fn canonical_cmp(a: &TypeVector, b: &TypeVector) -> std::cmp::Ordering {
    a.alpha_e
        .total_cmp(&b.alpha_e)
        .then(a.alpha_p.total_cmp(&b.alpha_p))
}

/// Sampling box for the unbounded type parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingBox {
    pub beta_max: f64,
    pub kappa_max: f64,
    pub delta_min: f64,
    /// Rejections tolerated before giving up.
    pub max_rejections: usize,
}

impl Default for SamplingBox {
    fn default() -> Self {
        Self {
            beta_max: 5.0,
            kappa_max: 5.0,
            delta_min: 0.1,
            max_rejections: 10_000,
        }
    }
}

/// Draws `k` epsilon-separated types with the default sampling box.
pub fn sample_type_set(k: usize, epsilon: f64, seed: u64) -> Result<TypeSet> {
    sample_type_set_in(k, epsilon, seed, &SamplingBox::default())
}

/// Rejection-samples `k` types: influence weights uniform on the simplex,
/// the remaining parameters uniform on the box. The result is sorted into
/// canonical order and is bit-for-bit reproducible for a given seed.
pub fn sample_type_set_in(
    k: usize,
    epsilon: f64,
    seed: u64,
    bounds: &SamplingBox,
) -> Result<TypeSet> {
    if k == 0 {
        return invalid("K must be at least 1");
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return invalid(format!("epsilon {epsilon} must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<TypeVector> = Vec::with_capacity(k);
    let mut rejections = 0usize;
    while accepted.len() < k {
        let cand = draw_type(&mut rng, bounds);
        if accepted.iter().all(|t| t.distance(&cand) > epsilon) {
            accepted.push(cand);
        } else {
            rejections += 1;
            if rejections >= bounds.max_rejections {
                return Err(Error::SeparationInfeasible {
                    k,
                    epsilon,
                    attempts: rejections,
                });
            }
        }
    }
    accepted.sort_by(canonical_cmp);
    TypeSet::new(accepted, epsilon)
}

fn draw_type(rng: &mut ChaCha8Rng, b: &SamplingBox) -> TypeVector {
    // Normalized exponentials give the uniform distribution on the simplex.
    let mut e = [0.0f64; 4];
    for x in e.iter_mut() {
        let u: f64 = rng.random();
        *x = -(1.0 - u).ln();
    }
    let s: f64 = e.iter().sum();
    let mut alphas = e.map(|x| x / s);
    // Put rounding error on the largest weight so the sum is 1 to the ulp.
    let imax = (0..4).max_by(|&i, &j| alphas[i].total_cmp(&alphas[j])).unwrap();
    let rest: f64 = (0..4).filter(|&i| i != imax).map(|i| alphas[i]).sum();
    alphas[imax] = 1.0 - rest;
    let beta = rng.random::<f64>() * b.beta_max;
    let gamma = rng.random::<f64>();
    let delta = b.delta_min + (1.0 - b.delta_min) * rng.random::<f64>();
    let delta = delta.max(f64::MIN_POSITIVE);
    let kappa = rng.random::<f64>() * b.kappa_max;
    TypeVector::new(
        alphas[0], alphas[1], alphas[2], alphas[3], beta, gamma, delta, kappa,
    )
}

/// A probability distribution over a finite type set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief {
    weights: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Belief::new(v)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.weights
    }
}

/// Checks nonnegativity and unit sum (within [`SIMPLEX_TOL`]).
pub fn validate_belief(weights: &[f64]) -> ValidationReport {
    let mut report = ValidationReport::default();
    if weights.is_empty() {
        report.push("empty belief", f64::NAN);
        return report;
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        report.push(format!("weight {i} not finite"), f64::NAN);
        return report;
    }
    if let Some(min) = weights.iter().copied().filter(|&w| w < 0.0).reduce(f64::min) {
        report.push("negative weight", min);
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        report.push(format!("sum ≠ 1 (sum = {sum})"), sum - 1.0);
    }
    report
}

impl Belief {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        validate_belief(&weights).into_result("belief")?;
        Ok(Self { weights })
    }

    /// Normalizes nonnegative masses into a belief.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return invalid("masses must be finite and nonnegative");
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroEvidence);
        }
        Ok(Self {
            weights: masses.into_iter().map(|m| m / total).collect(),
        })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0);
        Self {
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, at: TypeIndex) -> Self {
        assert!(at < k);
        let mut weights = vec![0.0; k];
        weights[at] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn has_full_support(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Most likely type (lowest index on ties) and its probability.
    pub fn map_estimate(&self) -> (TypeIndex, f64) {
        let mut best = (0, self.weights[0]);
        for (k, &w) in self.weights.iter().enumerate().skip(1) {
            if w > best.1 {
                best = (k, w);
            }
        }
        best
    }
}

impl std::ops::Index<usize> for Belief {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.weights[k]
    }
}

/// Dense real tensor indexed `[action][response][type]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTensor {
    actions: usize,
    responses: usize,
    types: usize,
    data: Vec<f64>,
}

impl PayoffTensor {
    pub fn zeros(actions: usize, responses: usize, types: usize) -> Self {
        Self {
            actions,
            responses,
            types,
            data: vec![0.0; actions * responses * types],
        }
    }

    pub fn from_fn(
        actions: usize,
        responses: usize,
        types: usize,
        mut f: impl FnMut(ActionId, ResponseId, TypeIndex) -> f64,
    ) -> Self {
        let mut t = Self::zeros(actions, responses, types);
        for a in 0..actions {
            for d in 0..responses {
                for k in 0..types {
                    t.set(a, d, k, f(a, d, k));
                }
            }
        }
        t
    }

    pub fn from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let m = nested.len();
        let l = nested.first().map_or(0, |r| r.len());
        let k = nested
            .first()
            .and_then(|r| r.first())
            .map_or(0, |c| c.len());
        if m == 0 || l == 0 || k == 0 {
            return Err(Error::Dimension("payoff tensor has an empty axis".into()));
        }
        let mut t = Self::zeros(m, l, k);
        for (a, rows) in nested.iter().enumerate() {
            if rows.len() != l {
                return Err(Error::Dimension(format!(
                    "action {a} has {} responses, expected {l}",
                    rows.len()
                )));
            }
            for (d, cells) in rows.iter().enumerate() {
                if cells.len() != k {
                    return Err(Error::Dimension(format!(
                        "cell [{a}][{d}] has {} types, expected {k}",
                        cells.len()
                    )));
                }
                for (j, &v) in cells.iter().enumerate() {
                    t.set(a, d, j, v);
                }
            }
        }
        Ok(t)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.actions)
            .map(|a| {
                (0..self.responses)
                    .map(|d| (0..self.types).map(|k| self.get(a, d, k)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.actions, self.responses, self.types)
    }

    #[inline]
    fn idx(&self, a: ActionId, d: ResponseId, k: TypeIndex) -> usize {
        debug_assert!(a < self.actions && d < self.responses && k < self.types);
        (a * self.responses + d) * self.types + k
    }

    #[inline]
    pub fn get(&self, a: ActionId, d: ResponseId, k: TypeIndex) -> f64 {
        self.data[self.idx(a, d, k)]
    }

    #[inline]
    pub fn set(&mut self, a: ActionId, d: ResponseId, k: TypeIndex, v: f64) {
        let i = self.idx(a, d, k);
        self.data[i] = v;
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// A finite pharma-physician Bayesian game in reduced form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameSpecDoc", into = "GameSpecDoc")]
pub struct GameSpec {
    type_set: TypeSet,
    pharma_actions: Vec<String>,
    physician_responses: Vec<String>,
    u_p: PayoffTensor,
    u_d: PayoffTensor,
    prior: Belief,
    tau: f64,
}

/// On-disk layout of a [`GameSpec`]; tensors are nested `[a][d][k]`.
#[derive(Serialize, Deserialize)]
struct GameSpecDoc {
    types: Vec<TypeVector>,
    separation: f64,
    pharma_actions: Vec<String>,
    physician_responses: Vec<String>,
    #[serde(rename = "u_P")]
    u_p: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "u_D")]
    u_d: Vec<Vec<Vec<f64>>>,
    prior: Vec<f64>,
    tau: f64,
}

impl TryFrom<GameSpecDoc> for GameSpec {
    type Error = Error;
    fn try_from(doc: GameSpecDoc) -> Result<Self> {
        GameSpec::new(
            TypeSet::new(doc.types, doc.separation)?,
            doc.pharma_actions,
            doc.physician_responses,
            PayoffTensor::from_nested(&doc.u_p)?,
            PayoffTensor::from_nested(&doc.u_d)?,
            Belief::new(doc.prior)?,
            doc.tau,
        )
    }
}

impl From<GameSpec> for GameSpecDoc {
    fn from(g: GameSpec) -> Self {
        GameSpecDoc {
            separation: g.type_set.separation(),
            types: g.type_set.types().to_vec(),
            pharma_actions: g.pharma_actions,
            physician_responses: g.physician_responses,
            u_p: g.u_p.to_nested(),
            u_d: g.u_d.to_nested(),
            prior: g.prior.weights().to_vec(),
            tau: g.tau,
        }
    }
}

impl GameSpec {
    pub fn new(
        type_set: TypeSet,
        pharma_actions: Vec<String>,
        physician_responses: Vec<String>,
        u_p: PayoffTensor,
        u_d: PayoffTensor,
        prior: Belief,
        tau: f64,
    ) -> Result<Self> {
        let shape = (
            pharma_actions.len(),
            physician_responses.len(),
            type_set.len(),
        );
        if shape.0 == 0 || shape.1 == 0 {
            return invalid("game needs at least one action and one response");
        }
        for (name, t) in [("u_P", &u_p), ("u_D", &u_d)] {
            if t.shape() != shape {
                return Err(Error::Dimension(format!(
                    "{name} has shape {:?}, expected {:?} (M×L×K)",
                    t.shape(),
                    shape
                )));
            }
            if !t.all_finite() {
                return invalid(format!("{name} contains non-finite payoffs"));
            }
        }
        if prior.len() != type_set.len() {
            return Err(Error::Dimension(format!(
                "prior has {} weights for {} types",
                prior.len(),
                type_set.len()
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid(format!("tau = {tau} must be positive and finite"));
        }
        Ok(Self {
            type_set,
            pharma_actions,
            physician_responses,
            u_p,
            u_d,
            prior,
            tau,
        })
    }

    pub fn type_set(&self) -> &TypeSet {
        &self.type_set
    }
    pub fn pharma_actions(&self) -> &[String] {
        &self.pharma_actions
    }
    pub fn physician_responses(&self) -> &[String] {
        &self.physician_responses
    }
    pub fn num_actions(&self) -> usize {
        self.pharma_actions.len()
    }
    pub fn num_responses(&self) -> usize {
        self.physician_responses.len()
    }
    pub fn num_types(&self) -> usize {
        self.type_set.len()
    }
    pub fn u_p(&self) -> &PayoffTensor {
        &self.u_p
    }
    pub fn u_d(&self) -> &PayoffTensor {
        &self.u_d
    }
    pub fn prior(&self) -> &Belief {
        &self.prior
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let mut g = self.clone();
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid(format!("tau = {tau} must be positive and finite"));
        }
        g.tau = tau;
        Ok(g)
    }

    pub fn with_prior(&self, prior: Belief) -> Result<Self> {
        if prior.len() != self.num_types() {
            return Err(Error::Dimension("prior length".into()));
        }
        let mut g = self.clone();
        g.prior = prior;
        Ok(g)
    }

    /// Mutable access for payoff patches; the shape cannot change.
    pub(crate) fn payoffs_mut(&mut self) -> (&mut PayoffTensor, &mut PayoffTensor) {
        (&mut self.u_p, &mut self.u_d)
    }

    pub fn action_index(&self, name: &str) -> Option<ActionId> {
        self.pharma_actions.iter().position(|a| a == name)
    }

    pub fn response_index(&self, name: &str) -> Option<ResponseId> {
        self.physician_responses.iter().position(|d| d == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Feature scores feeding the physician utility: per-action evidence,
/// peer, variance and load; per (action, response) outcome; per response
/// formulary favorability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityFeatures {
    pub evidence: Vec<f64>,
    pub peer: Vec<f64>,
    pub outcome: Vec<Vec<f64>>,
    pub access: Vec<f64>,
    pub variance: Vec<f64>,
    pub load: Vec<f64>,
}

impl UtilityFeatures {
    pub fn num_actions(&self) -> usize {
        self.evidence.len()
    }

    pub fn num_responses(&self) -> usize {
        self.access.len()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let m = self.evidence.len();
        let l = self.access.len();
        if self.peer.len() != m || self.variance.len() != m || self.load.len() != m {
            report.push("per-action feature lengths disagree", f64::NAN);
        }
        if self.outcome.len() != m || self.outcome.iter().any(|r| r.len() != l) {
            report.push("outcome must be M×L", f64::NAN);
        }
        let unit = |name: &str, xs: &[f64], report: &mut ValidationReport| {
            for (i, &x) in xs.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    report.push(format!("{name}[{i}] = {x} outside [0,1]"), out_of(x, 0.0, 1.0));
                }
            }
        };
        unit("E", &self.evidence, &mut report);
        unit("P", &self.peer, &mut report);
        unit("F", &self.access, &mut report);
        for row in &self.outcome {
            unit("O", row, &mut report);
        }
        for (name, xs) in [("Var", &self.variance), ("L", &self.load)] {
            for (i, &x) in xs.iter().enumerate() {
                if !(x >= 0.0 && x.is_finite()) {
                    report.push(format!("{name}[{i}] = {x} negative"), x);
                }
            }
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_simplex_point_is_valid() {
        let t = TypeVector::new(0.25, 0.25, 0.25, 0.25, 1.0, 0.5, 0.5, 1.0);
        assert!(validate_type_vector(&t).is_ok());
    }

    #[test]
    fn hand_summed_type_is_valid() {
        let t = TypeVector::new(0.60, 0.25, 0.10, 0.05, 2.0, 0.3, 0.8, 0.9);
        assert!(validate_type_vector(&t).is_ok());
    }

    #[test]
    fn simplex_violation_reports_sum() {
        let t = TypeVector::new(0.5, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 1.0);
        let r = validate_type_vector(&t);
        assert!(!r.is_ok());
        assert!(r.mentions("simplex sum = 2"), "{r:?}");
        let v = &r.violations[0];
        assert!((v.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_violations_are_named() {
        let t = TypeVector::new(0.25, 0.25, 0.25, 0.25, -1.0, 1.5, 0.0, -0.1);
        let r = validate_type_vector(&t);
        assert!(r.mentions("beta"));
        assert!(r.mentions("gamma"));
        assert!(r.mentions("delta"));
        assert!(r.mentions("kappa"));
    }

    #[test]
    fn belief_validation_cases() {
        assert!(validate_belief(&[0.35, 0.45, 0.20]).is_ok());
        assert!(validate_belief(&[1.0, 0.0, 0.0]).is_ok());
        let r = validate_belief(&[0.5, 0.6, -0.1]);
        assert!(r.mentions("negative weight"));
        // 0.5 + 0.6 - 0.1 = 1.0, so only the sign is wrong here
        let r = validate_belief(&[0.5, 0.6, -0.2]);
        assert!(r.mentions("negative weight"));
        assert!(r.mentions("sum ≠ 1"));
    }

    #[test]
    fn single_type_sample() {
        let ts = sample_type_set(1, 0.1, 42).unwrap();
        assert_eq!(ts.len(), 1);
        assert!(ts.get(0).validate().is_ok());
        assert_eq!(ts.min_pairwise_distance(), f64::INFINITY);
    }

    #[test]
    fn five_types_are_separated() {
        let ts = sample_type_set(5, 0.05, 7).unwrap();
        assert_eq!(ts.len(), 5);
        for i in 0..5 {
            for j in (i + 1)..5 {
                assert!(ts.get(i).distance(ts.get(j)) > 0.05);
            }
        }
        assert!(ts.is_canonical());
    }

    #[test]
    fn infeasible_separation_fails() {
        // The sampling box has diameter sqrt(2 + 25 + 1 + 0.81 + 25) < 7.4.
        let err = sample_type_set(100, 10.0, 1).unwrap_err();
        assert!(err.to_string().contains("separation infeasible"), "{err}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_type_set(6, 0.2, 99).unwrap();
        let b = sample_type_set(6, 0.2, 99).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.types().iter().zip(b.types()) {
            assert_eq!(x.to_array().map(f64::to_bits), y.to_array().map(f64::to_bits));
        }
    }

    #[test]
    fn type_set_rejects_close_types() {
        let t = TypeVector::unit();
        let mut u = t;
        u.beta = 0.01;
        assert!(TypeSet::new(vec![t, u], 0.05).is_err());
        assert!(TypeSet::new(vec![t, u], 0.001).is_ok());
    }

    #[test]
    fn tensor_nested_roundtrip_shape() {
        let t = PayoffTensor::from_fn(2, 3, 4, |a, d, k| (a * 100 + d * 10 + k) as f64);
        let n = t.to_nested();
        assert_eq!(n[1][2][3], 123.0);
        assert_eq!(PayoffTensor::from_nested(&n).unwrap(), t);
        let mut bad = n.clone();
        bad[0][1].pop();
        assert!(PayoffTensor::from_nested(&bad).is_err());
    }
}
