//! Compositional checks on beliefs: functor laws of Bayesian updating,
//! convex mixing of types, naturality defects of domain-transfer maps and
//! the sheaf consistency loss across temporal scales.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::belief::bayes_update;
use crate::error::{invalid, Error, Result};
use crate::types::{Belief, TypeVector};

/// `½‖p − q‖₁`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions over different supports");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// A likelihood vector viewed as a morphism `Belief → Belief`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BeliefUpdateMap {
    likelihood: Vec<f64>,
}

impl TryFrom<Vec<f64>> for BeliefUpdateMap {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BeliefUpdateMap> for Vec<f64> {
    fn from(m: BeliefUpdateMap) -> Self {
        m.likelihood
    }
}

impl BeliefUpdateMap {
    pub fn new(likelihood: Vec<f64>) -> Result<Self> {
        if likelihood.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return invalid("likelihoods must be finite and nonnegative");
        }
        if likelihood.iter().all(|&l| l == 0.0) {
            return invalid("likelihood vector is identically zero");
        }
        Ok(Self { likelihood })
    }

    pub fn identity(k: usize) -> Self {
        Self { likelihood: vec![1.0; k] }
    }

    pub fn likelihood(&self) -> &[f64] {
        &self.likelihood
    }

    /// A constant likelihood is an identity and returns `mu` untouched.
    pub fn apply(&self, mu: &Belief) -> Result<Belief> {
        if self.likelihood.len() == mu.len() && self.likelihood.windows(2).all(|w| w[0] == w[1]) {
            return Ok(mu.clone());
        }
        bayes_update(mu, &self.likelihood)
    }

    /// The single update equivalent to applying `self` then `next`.
    pub fn then(&self, next: &BeliefUpdateMap) -> Result<Self> {
        if self.likelihood.len() != next.likelihood.len() {
            return Err(Error::Dimension("maps over different type sets".into()));
        }
        Self::new(self.likelihood.iter().zip(&next.likelihood).map(|(a, b)| a * b).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctorResiduals {
    /// TV distance between `μ` and its update by the all-ones likelihood.
    pub identity: f64,
    /// TV distance between sequential and fused updates.
    pub composition: f64,
}

/// Checks identity and composition laws of updating at `mu`.
pub fn functor_law_check(
    mu: &Belief,
    f: &BeliefUpdateMap,
    g: &BeliefUpdateMap,
) -> Result<FunctorResiduals> {
    let id = BeliefUpdateMap::identity(mu.len()).apply(mu)?;
    let seq = g.apply(&f.apply(mu)?)?;
    let fused = f.then(g)?.apply(mu)?;
    Ok(FunctorResiduals {
        identity: tv_distance(id.weights(), mu.weights()),
        composition: tv_distance(seq.weights(), fused.weights()),
    })
}

/// Context-weighted mix `w(x)·θ₁ + (1 − w(x))·θ₂`.
pub fn tensor_compose<X: ?Sized>(
    theta1: &TypeVector,
    theta2: &TypeVector,
    w: impl Fn(&X) -> f64,
    context: &X,
) -> Result<TypeVector> {
    let wx = w(context);
    if !(0.0..=1.0).contains(&wx) {
        return invalid(format!("mixing weight {wx} outside [0,1]"));
    }
    Ok(mix(theta1, theta2, wx))
}

pub(crate) fn mix(a: &TypeVector, b: &TypeVector, w: f64) -> TypeVector {
    let (x, y) = (a.to_array(), b.to_array());
    let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| w * p + (1.0 - w) * q).collect();
    TypeVector::from_slice(&z)
}

/// Weights `(u, v)` with `θ₁ ⊗_u (θ₂ ⊗_v θ₃) = (θ₁ ⊗_w θ₂) ⊗_{w'} θ₃`,
/// given `w = w_inner`, `w' = w_outer`. If the left grouping puts all mass
/// on `θ₃`, `v` is 0.
pub fn reassociate(w_inner: f64, w_outer: f64) -> (f64, f64) {
    // left: w_outer·(w_inner θ1 + (1-w_inner) θ2) + (1-w_outer) θ3
    let u = w_outer * w_inner;
    let rest = 1.0 - u;
    let v = if rest > 0.0 { w_outer * (1.0 - w_inner) / rest } else { 0.0 };
    (u, v)
}

/// Row-stochastic `K_src × K_dst` map between type spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TransferMap {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for TransferMap {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<TransferMap> for Vec<Vec<f64>> {
    fn from(t: TransferMap) -> Self {
        t.rows
    }
}

impl TransferMap {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        check_stochastic(&rows)?;
        Ok(Self { rows })
    }

    pub fn identity(k: usize) -> Self {
        Self { rows: identity_rows(k) }
    }

    pub fn source_len(&self) -> usize {
        self.rows.len()
    }

    pub fn target_len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Pushes a source belief forward: `ν_j = Σ_i μ_i η_ij`.
    pub fn apply(&self, mu: &Belief) -> Result<Belief> {
        if mu.len() != self.source_len() {
            return Err(Error::Dimension(format!(
                "belief over {} types, map expects {}",
                mu.len(),
                self.source_len()
            )));
        }
        Belief::new(push_forward(&self.rows, mu.weights()))
    }
}

fn identity_rows(k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn check_stochastic(rows: &[Vec<f64>]) -> Result<()> {
    if rows.is_empty() || rows[0].is_empty() {
        return invalid("empty map");
    }
    let n = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(Error::Dimension(format!("row {i} has length {}, expected {n}", r.len())));
        }
        if r.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return invalid(format!("row {i} has an entry outside [0,1]"));
        }
        let s: f64 = r.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return invalid(format!("row {i} sums to {s}"));
        }
    }
    Ok(())
}

fn push_forward(rows: &[Vec<f64>], mu: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows[0].len()];
    for (r, &m) in rows.iter().zip(mu) {
        for (o, x) in out.iter_mut().zip(r) {
            *o += m * x;
        }
    }
    out
}

fn compose_rows(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter().map(|r| push_forward(b, r)).collect()
}

/// TV defect of the square `η ∘ update_src = update_dst ∘ η` at `mu`.
pub fn naturality_residual(
    eta: &TransferMap,
    source: &BeliefUpdateMap,
    target: &BeliefUpdateMap,
    mu: &Belief,
) -> Result<f64> {
    if source.likelihood().len() != eta.source_len() || target.likelihood().len() != eta.target_len() {
        return Err(Error::Dimension("likelihoods do not match the transfer map".into()));
    }
    let via_source = eta.apply(&source.apply(mu)?)?;
    let via_target = target.apply(&eta.apply(mu)?)?;
    Ok(tv_distance(via_source.weights(), via_target.weights()))
}

/// Totally ordered temporal scales, finest first, with restriction maps
/// from every coarser scale to every finer one.
///
/// A restriction `ρ_{U,V}` is a row-stochastic `K×K` matrix acting on
/// beliefs as `μ ↦ μ·ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalePoset {
    scales: Vec<String>,
    /// keyed by (coarse index, fine index)
    restrictions: BTreeMap<(usize, usize), Vec<Vec<f64>>>,
}

/// Default scale ladder.
pub const DEFAULT_SCALES: [&str; 4] = ["interaction", "weekly", "monthly", "quarterly"];

impl ScalePoset {
    /// Identity restrictions over the default ladder.
    pub fn standard(k: usize) -> Self {
        Self::new(DEFAULT_SCALES.iter().map(|s| s.to_string()).collect(), k, Vec::new())
            .expect("identity restrictions compose")
    }

    /// Builds the poset. Unlisted restrictions between neighbouring scales
    /// are the identity; longer ones are composed from neighbours. Every
    /// chain `W ≤ V ≤ U` is then checked.
    pub fn new(
        scales: Vec<String>,
        k: usize,
        explicit: Vec<(String, String, Vec<Vec<f64>>)>,
    ) -> Result<Self> {
        if scales.is_empty() {
            return invalid("no scales");
        }
        for (i, s) in scales.iter().enumerate() {
            if scales[..i].contains(s) {
                return invalid(format!("duplicate scale `{s}`"));
            }
        }
        let index = |name: &str| {
            scales
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::MissingScale(name.to_string()))
        };
        let mut restrictions = BTreeMap::new();
        for (coarse, fine, m) in explicit {
            let (u, v) = (index(&coarse)?, index(&fine)?);
            if v >= u {
                return invalid(format!("`{fine}` is not finer than `{coarse}`"));
            }
            check_stochastic(&m)?;
            if m.len() != k || m[0].len() != k {
                return Err(Error::Dimension(format!("restriction {coarse}>{fine} must be {k}×{k}")));
            }
            restrictions.insert((u, v), m);
        }
        let n = scales.len();
        for gap in 1..n {
            for v in 0..n - gap {
                let u = v + gap;
                if restrictions.contains_key(&(u, v)) {
                    continue;
                }
                let m = if gap == 1 {
                    identity_rows(k)
                } else {
                    // ρ_{u,v} = ρ_{u,u-1} then ρ_{u-1,v}
                    compose_rows(&restrictions[&(u, u - 1)], &restrictions[&(u - 1, v)])
                };
                restrictions.insert((u, v), m);
            }
        }
        let poset = Self { scales, restrictions };
        poset.check_composition(1e-9)?;
        Ok(poset)
    }

    pub fn scales(&self) -> &[String] {
        &self.scales
    }

    pub fn restriction(&self, coarse: &str, fine: &str) -> Option<&[Vec<f64>]> {
        let u = self.scales.iter().position(|s| s == coarse)?;
        let v = self.scales.iter().position(|s| s == fine)?;
        self.restrictions.get(&(u, v)).map(|m| m.as_slice())
    }

    /// `ρ_{U,W} = ρ_{V,W} ∘ ρ_{U,V}` for every chain.
    pub fn check_composition(&self, tol: f64) -> Result<()> {
        let n = self.scales.len();
        for u in 0..n {
            for v in 0..u {
                for w in 0..v {
                    let direct = &self.restrictions[&(u, w)];
                    let via = compose_rows(&self.restrictions[&(u, v)], &self.restrictions[&(v, w)]);
                    let residual = direct
                        .iter()
                        .flatten()
                        .zip(via.iter().flatten())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    if residual > tol {
                        return Err(Error::RestrictionComposition {
                            outer: self.scales[u].clone(),
                            mid: self.scales[v].clone(),
                            inner: self.scales[w].clone(),
                            residual,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Coarse-scale section from fine-scale beliefs: their average.
pub fn aggregate_beliefs(beliefs: &[Belief]) -> Result<Belief> {
    let Some(first) = beliefs.first() else {
        return invalid("nothing to aggregate");
    };
    let k = first.len();
    if beliefs.iter().any(|b| b.len() != k) {
        return Err(Error::Dimension("beliefs over different type sets".into()));
    }
    let mut sum = vec![0.0; k];
    for b in beliefs {
        for (s, w) in sum.iter_mut().zip(b.weights()) {
            *s += w;
        }
    }
    Belief::from_masses(sum)
}

/// Sheaf loss with its per-pair terms, keyed `"coarse>fine"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheafReport {
    pub loss: f64,
    pub pairs: BTreeMap<String, f64>,
}

/// `Σ_{V<U} ‖ρ_{U,V}(μ_U) − μ_V‖²_TV`.
pub fn sheaf_loss(beliefs: &BTreeMap<String, Belief>, poset: &ScalePoset) -> Result<SheafReport> {
    let sections = poset
        .scales
        .iter()
        .map(|s| beliefs.get(s).ok_or_else(|| Error::MissingScale(s.clone())))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = BTreeMap::new();
    let mut loss = 0.0;
    for (&(u, v), m) in &poset.restrictions {
        if sections[u].len() != m.len() || sections[v].len() != m.len() {
            return Err(Error::Dimension("belief length differs from restriction size".into()));
        }
        let restricted = push_forward(m, sections[u].weights());
        let tv = tv_distance(&restricted, sections[v].weights());
        let term = tv * tv;
        loss += term;
        pairs.insert(format!("{}>{}", poset.scales[u], poset.scales[v]), term);
    }
    Ok(SheafReport { loss, pairs })
}
