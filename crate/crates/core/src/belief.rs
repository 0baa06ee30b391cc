//! Posterior updates, Shannon/Rényi entropies and divergences, interaction
//! histories and windowed drift detection. Information quantities are in
//! bits.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::info::ChannelMatrix;
use crate::types::{ActionId, Belief, ResponseId};

/// Orders within this distance of 1 use the Shannon limit.
const SHANNON_BAND: f64 = 1e-9;

/// Bayes' rule: posterior ∝ likelihood × prior, renormalized.
pub fn bayes_update(mu: &Belief, likelihoods: &[f64]) -> Result<Belief> {
    if likelihoods.len() != mu.len() {
        return Err(Error::Dimension(format!(
            "{} likelihoods for {} types",
            likelihoods.len(),
            mu.len()
        )));
    }
    if likelihoods.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return invalid("likelihoods must be finite and nonnegative");
    }
    let masses: Vec<f64> = mu
        .weights()
        .iter()
        .zip(likelihoods)
        .map(|(p, l)| p * l)
        .collect();
    Belief::from_masses(masses)
}

/// Rényi entropy of order `alpha` in bits; `alpha = 1` is Shannon entropy,
/// `alpha = ∞` is min-entropy.
pub fn entropy(mu: &Belief, alpha: f64) -> f64 {
    entropy_of(mu.weights(), alpha)
}

pub(crate) fn entropy_of(p: &[f64], alpha: f64) -> f64 {
    assert!(alpha >= 0.0, "Rényi order must be nonnegative");
    if (alpha - 1.0).abs() < SHANNON_BAND {
        return -p
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| x * x.log2())
            .sum::<f64>();
    }
    if alpha.is_infinite() {
        let max = p.iter().copied().fold(0.0, f64::max);
        return -max.log2();
    }
    let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(alpha)).sum();
    (s.log2() / (1.0 - alpha)).max(0.0)
}

/// Rényi divergence `D_α(p‖q)` in bits; `alpha = 1` is Kullback-Leibler.
///
/// Fails when `p` puts mass where `q` has none and the order makes that
/// infinite (`alpha ≥ 1`).
pub fn divergence(p: &[f64], q: &[f64], alpha: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "supports differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    if !(alpha >= 0.0) {
        return invalid(format!("order {alpha} must be nonnegative"));
    }
    if alpha >= 1.0 - SHANNON_BAND {
        if let Some(index) = p.iter().zip(q).position(|(&pi, &qi)| pi > 0.0 && qi <= 0.0) {
            return Err(Error::AbsoluteContinuity { index });
        }
    }
    let d = if (alpha - 1.0).abs() < SHANNON_BAND {
        p.iter()
            .zip(q)
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(&pi, &qi)| pi * (pi / qi).log2())
            .sum::<f64>()
    } else if alpha.is_infinite() {
        p.iter()
            .zip(q)
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(&pi, &qi)| pi / qi)
            .fold(0.0, f64::max)
            .log2()
    } else {
        let s: f64 = p
            .iter()
            .zip(q)
            .filter(|(&pi, &qi)| pi > 0.0 && qi > 0.0)
            .map(|(&pi, &qi)| pi.powf(alpha) * qi.powf(1.0 - alpha))
            .sum();
        s.log2() / (alpha - 1.0)
    };
    Ok(d.max(0.0))
}

/// One delivered action and the observed response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub t: u64,
    pub action: ActionId,
    pub response: ResponseId,
}

/// Time-ordered interaction records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interaction>", into = "Vec<Interaction>")]
pub struct InteractionHistory {
    records: Vec<Interaction>,
}

impl TryFrom<Vec<Interaction>> for InteractionHistory {
    type Error = Error;
    fn try_from(records: Vec<Interaction>) -> Result<Self> {
        let mut h = InteractionHistory::default();
        for r in records {
            h.push(r)?;
        }
        Ok(h)
    }
}

impl From<InteractionHistory> for Vec<Interaction> {
    fn from(h: InteractionHistory) -> Self {
        h.records
    }
}

impl InteractionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; timestamps must strictly increase.
    pub fn push(&mut self, rec: Interaction) -> Result<()> {
        if let Some(last) = self.records.last() {
            if rec.t <= last.t {
                return invalid(format!(
                    "timestamp {} does not follow {}",
                    rec.t, last.t
                ));
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn records(&self) -> &[Interaction] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The trailing `w` records.
    pub fn window(&self, w: usize) -> &[Interaction] {
        &self.records[self.records.len().saturating_sub(w)..]
    }

    /// Writes `t,action,response` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        for r in &self.records {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut h = Self::new();
        for rec in rdr.deserialize() {
            h.push(rec?)?;
        }
        Ok(h)
    }
}

/// Outcome of one drift check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Divergence of observed from predicted responses, in bits.
    pub statistic: f64,
    pub threshold: f64,
    pub triggered: bool,
    pub window: usize,
    pub alpha: f64,
}

/// Drift-check knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSettings {
    pub window: usize,
    pub threshold: f64,
    /// Divergence order; 1 is KL.
    pub alpha: f64,
    /// Probability mass added to every bin of each empirical histogram
    /// before renormalizing. `None` means `1/window`.
    pub smoothing: Option<f64>,
}

impl Default for DriftSettings {
    fn default() -> Self {
        Self {
            window: crate::defaults::DRIFT_WINDOW,
            threshold: crate::defaults::TAU_DRIFT,
            alpha: 1.0,
            smoothing: None,
        }
    }
}

/// Model-predicted response distribution for `action` under belief `mu`:
/// `Σ_k μ_k P_k(·|a)`.
pub fn predictive(channels: &[ChannelMatrix], mu: &Belief, action: ActionId) -> Vec<f64> {
    let l = channels[0].outputs();
    let mut out = vec![0.0; l];
    for (ch, &w) in channels.iter().zip(mu.weights()) {
        if w == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(ch.row(action)) {
            *o += w * p;
        }
    }
    out
}

/// Compares the responses in the trailing window with the model.
///
/// Each action seen in the window gets its own smoothed empirical
/// histogram, compared with the belief-mixed model prediction for that
/// action; the per-action divergences are pooled with weights equal to the
/// action's share of the window.
pub fn drift_detect(
    history: &InteractionHistory,
    channels: &[ChannelMatrix],
    mu: &Belief,
    settings: &DriftSettings,
) -> Result<DriftReport> {
    let w = settings.window;
    if w < 1 {
        return invalid("window must be at least 1");
    }
    if history.len() < w {
        return Err(Error::ShortHistory {
            len: history.len(),
            window: w,
        });
    }
    if channels.len() != mu.len() {
        return Err(Error::Dimension(format!(
            "{} channels for {} types",
            channels.len(),
            mu.len()
        )));
    }
    let (m, l) = (channels[0].inputs(), channels[0].outputs());
    let mut counts = vec![vec![0usize; l]; m];
    for r in history.window(w) {
        if r.action >= m || r.response >= l {
            return invalid(format!("record {:?} outside the channel alphabet", r));
        }
        counts[r.action][r.response] += 1;
    }
    let smoothing = settings.smoothing.unwrap_or(1.0 / w as f64);
    let mut statistic = 0.0;
    for (a, row) in counts.iter().enumerate() {
        let n: usize = row.iter().sum();
        if n == 0 {
            continue;
        }
        let z = 1.0 + smoothing * l as f64;
        let observed: Vec<f64> = row
            .iter()
            .map(|&c| (c as f64 / n as f64 + smoothing) / z)
            .collect();
        let model = predictive(channels, mu, a);
        statistic += (n as f64 / w as f64) * divergence(&observed, &model, settings.alpha)?;
    }
    Ok(DriftReport {
        statistic,
        threshold: settings.threshold,
        triggered: statistic > settings.threshold,
        window: w,
        alpha: settings.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[f64]) -> Belief {
        Belief::new(v.to_vec()).unwrap()
    }

    #[test]
    fn worked_example_posterior() {
        let post = bayes_update(&b(&[0.35, 0.45, 0.20]), &[0.65, 0.20, 0.40]).unwrap();
        assert!((post[0] - 0.2275 / 0.3975).abs() < 1e-12);
        assert!((post[0] - 0.5723).abs() < 5e-5);
        assert!((post[1] - 0.2264).abs() < 5e-5);
        assert!((post[2] - 0.2013).abs() < 5e-5);
    }

    #[test]
    fn uninformative_update_keeps_prior() {
        let mu = b(&[0.35, 0.45, 0.20]);
        let post = bayes_update(&mu, &[0.3, 0.3, 0.3]).unwrap();
        for k in 0..3 {
            assert!((post[k] - mu[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn point_mass_is_absorbing() {
        let mu = Belief::point_mass(3, 1);
        let post = bayes_update(&mu, &[0.9, 0.01, 0.5]).unwrap();
        assert_eq!(post, mu);
    }

    #[test]
    fn zero_evidence_is_an_error() {
        let mu = Belief::point_mass(3, 1);
        assert!(matches!(
            bayes_update(&mu, &[0.9, 0.0, 0.5]),
            Err(Error::ZeroEvidence)
        ));
    }

    #[test]
    fn entropy_cases() {
        assert!((entropy(&Belief::uniform(3), 1.0) - 3f64.log2()).abs() < 1e-12);
        for k in [2, 3, 7] {
            assert!((entropy(&Belief::uniform(k), 2.0) - (k as f64).log2()).abs() < 1e-12);
        }
        // -(0.72 log 0.72 + 0.18 log 0.18 + 0.10 log 0.10)
        let h = entropy(&b(&[0.72, 0.18, 0.10]), 1.0);
        let oracle = -(0.72f64 * 0.72f64.log2() + 0.18 * 0.18f64.log2() + 0.10 * 0.10f64.log2());
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 1.118).abs() < 1e-3);
    }

    #[test]
    fn entropy_is_continuous_at_one() {
        let mu = b(&[0.5, 0.3, 0.2]);
        let h1 = entropy(&mu, 1.0);
        assert!((entropy(&mu, 1.0 + 1e-6) - h1).abs() < 1e-5);
        assert!((entropy(&mu, 1.0 - 1e-6) - h1).abs() < 1e-5);
    }

    #[test]
    fn divergence_cases() {
        let p = [0.5, 0.5];
        assert_eq!(divergence(&p, &p, 1.0).unwrap(), 0.0);
        let d = divergence(&p, &[0.25, 0.75], 1.0).unwrap();
        let oracle = 0.5 * 2f64.log2() + 0.5 * (2.0f64 / 3.0).log2();
        assert!((d - oracle).abs() < 1e-15);
        assert!((d - 0.20752).abs() < 1e-5);
        let u = [1.0 / 3.0; 3];
        assert!(divergence(&u, &u, 2.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn divergence_support_violation() {
        assert!(matches!(
            divergence(&[0.5, 0.5], &[1.0, 0.0], 1.0),
            Err(Error::AbsoluteContinuity { index: 1 })
        ));
        assert!(divergence(&[0.5, 0.5], &[1.0, 0.0], 2.0).is_err());
        // below order one the missing mass only contributes zero terms
        assert!(divergence(&[0.5, 0.5], &[1.0, 0.0], 0.5).is_ok());
    }

    #[test]
    fn history_rejects_unordered_timestamps() {
        let mut h = InteractionHistory::new();
        h.push(Interaction { t: 1, action: 0, response: 0 }).unwrap();
        assert!(h.push(Interaction { t: 1, action: 0, response: 1 }).is_err());
    }

    #[test]
    fn history_csv_roundtrip() {
        let mut h = InteractionHistory::new();
        for t in 1..=5 {
            h.push(Interaction { t, action: (t % 3) as usize, response: (t % 2) as usize })
                .unwrap();
        }
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,action,response\n1,1,1\n"), "{text}");
        assert_eq!(InteractionHistory::read_csv(buf.as_slice()).unwrap(), h);
    }

    fn single_channel(row: Vec<f64>) -> Vec<ChannelMatrix> {
        vec![ChannelMatrix::new(vec![row]).unwrap()]
    }

    fn history_from(responses: &[usize]) -> InteractionHistory {
        let mut h = InteractionHistory::new();
        for (i, &d) in responses.iter().enumerate() {
            h.push(Interaction { t: i as u64 + 1, action: 0, response: d }).unwrap();
        }
        h
    }

    #[test]
    fn drift_exact_match_is_near_zero() {
        // 10 of each response, model is uniform: smoothing keeps it uniform
        let responses: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let report = drift_detect(
            &history_from(&responses),
            &single_channel(vec![1.0 / 3.0; 3]),
            &Belief::uniform(1),
            &DriftSettings::default(),
        )
        .unwrap();
        assert!(report.statistic < 1e-12);
        assert!(!report.triggered);
    }

    #[test]
    fn drift_disjoint_mode_triggers() {
        let responses = vec![2usize; 30];
        let report = drift_detect(
            &history_from(&responses),
            &single_channel(vec![0.9, 0.09, 0.01]),
            &Belief::uniform(1),
            &DriftSettings::default(),
        )
        .unwrap();
        assert!(report.triggered, "{report:?}");
    }

    #[test]
    fn drift_needs_full_window() {
        let h = history_from(&[0, 1]);
        let err = drift_detect(
            &h,
            &single_channel(vec![0.5, 0.5]),
            &Belief::uniform(1),
            &DriftSettings::default(),
        );
        assert!(matches!(err, Err(Error::ShortHistory { .. })));
        let zero = DriftSettings { window: 0, ..DriftSettings::default() };
        assert!(drift_detect(&h, &single_channel(vec![0.5, 0.5]), &Belief::uniform(1), &zero).is_err());
    }
}
