//! Numerical checks of the convergence argument on recorded traces.
//!
//! Infinite-series statements are tested through tail-mass surrogates over the
//! final 10% of a trace.

use serde::Serialize;

use crate::error::{usage, Result};
use crate::hpe::SolveResult;

/// Per-iteration diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `|x^{k+1} - x^k|^2`
    pub step_sq: f64,
    /// `|x^k - y^k|^2`
    pub gap_sq: f64,
    /// `|v^k|^2`
    pub v_sq: f64,
    pub eps: f64,
    /// `|r^k|`
    pub r_norm: f64,
    /// rhs - lhs of the relative-error inequality
    pub slack: f64,
    pub rhs: f64,
    pub c: f64,
    pub alpha: f64,
    /// `|x^k - z|^2 / 2` for the reference zero `z`
    pub phi: Option<f64>,
    pub mu: Option<f64>,
    /// `|r^k - (y^k - x^{k+1})|`
    pub identity_gap: f64,
}

/// `mu_k = phi_k - alpha_k phi_{k-1} + 2 alpha_k (1 + sigma^2) |x^{k-1} - y^{k-1}|^2`
pub fn compute_mu(phi_k: f64, phi_prev: f64, alpha_k: f64, sigma: f64, gap_prev_sq: f64) -> f64 {
    phi_k - alpha_k * phi_prev + 2.0 * alpha_k * (1.0 + sigma * sigma) * gap_prev_sq
}

/// `(1 - alpha (5 + 4 sigma^2) - sigma^2) / 2`, the guaranteed decrease rate of `mu`.
pub fn mu_decrease_rate(alpha: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    0.5 * (1.0 - alpha * (5.0 + 4.0 * s2) - s2)
}

/// Records `k, k+1` whose `mu` difference exceeds the bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuViolation {
    pub k: usize,
    pub increment: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuReport {
    pub rate: f64,
    pub pairs_checked: usize,
    pub violations: Vec<MuViolation>,
}

impl MuReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `mu_{k+1} - mu_k <= -rate * |x^k - y^k|^2` on consecutive records.
pub fn check_mu_decrease(trace: &[TraceRecord], alpha: f64, sigma: f64) -> Result<MuReport> {
    let rate = mu_decrease_rate(alpha, sigma);
    let mus: Vec<f64> = trace
        .iter()
        .map(|r| r.mu.ok_or_else(|| usage(format!("record k = {} has no mu (reference point missing)", r.k))))
        .collect::<Result<_>>()?;
    let mut violations = Vec::new();
    for (i, pair) in trace.windows(2).enumerate() {
        let increment = mus[i + 1] - mus[i];
        let bound = -rate * pair[0].gap_sq;
        if increment > bound + 1e-9 * (1.0 + mus[i].abs()) {
            violations.push(MuViolation { k: pair[0].k, increment, bound });
        }
    }
    Ok(MuReport { rate, pairs_checked: trace.len().saturating_sub(1), violations })
}

fn tail_start(len: usize) -> usize {
    len - len / 10
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    /// Indices `k` where `phi_{k+1} <= phi_k + alpha_k (phi_k - phi_{k-1}) + delta_k` fails.
    pub hypothesis_violations: Vec<usize>,
    pub alpha_in_range: bool,
    pub delta_tail: f64,
    /// Partial sum of `[phi_k - phi_{k-1}]_+`.
    pub positive_variation: f64,
    pub positive_variation_tail: f64,
    /// `max - min` of `phi` over the final window.
    pub oscillation: f64,
}

impl Lemma1Report {
    pub fn hypothesis_holds(&self) -> bool {
        self.hypothesis_violations.is_empty()
    }

    pub fn delta_summable(&self) -> bool {
        self.delta_tail < 1e-12
    }

    pub fn variation_summable(&self) -> bool {
        self.positive_variation.is_finite() && self.positive_variation_tail < 1e-10
    }

    pub fn limit_exists(&self) -> bool {
        self.oscillation < 1e-8
    }
}

/// Checks the hypothesis of the extended Fejer lemma pointwise and reports
/// surrogates for its two conclusions. `alpha_seq[k]` and `delta[k]` pair with
/// the inequality at index `k >= 1`.
pub fn lemma1_check(phi: &[f64], alpha_seq: &[f64], delta: &[f64]) -> Result<Lemma1Report> {
    if phi.is_empty() {
        return Err(usage("phi sequence is empty"));
    }
    let needed = phi.len().saturating_sub(1);
    if alpha_seq.len() < needed || delta.len() < needed {
        return Err(usage(format!("need at least {needed} alpha and delta entries")));
    }
    if delta.iter().any(|d| !(*d >= 0.0)) {
        return Err(usage("delta must be nonnegative"));
    }
    let alpha_in_range = alpha_seq.iter().all(|a| (0.0..1.0).contains(a));

    let mut hypothesis_violations = Vec::new();
    for k in 1..needed {
        let bound = phi[k] + alpha_seq[k] * (phi[k] - phi[k - 1]) + delta[k];
        if phi[k + 1] > bound + 1e-9 * (1.0 + phi[k].abs()) {
            hypothesis_violations.push(k);
        }
    }

    let positive: Vec<f64> = phi.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let positive_variation = positive.iter().sum();
    let positive_variation_tail = positive[tail_start(positive.len())..].iter().sum();
    let delta_tail = delta[tail_start(delta.len())..].iter().sum();
    let window = &phi[tail_start(phi.len()).min(phi.len() - 1)..];
    let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(*p), hi.max(*p)));

    Ok(Lemma1Report {
        hypothesis_violations,
        alpha_in_range,
        delta_tail,
        positive_variation,
        positive_variation_tail,
        oscillation: hi - lo,
    })
}

/// `phi`, `alpha` and `delta_k = 2 alpha_k (1 + sigma^2) |x^{k-1} - y^{k-1}|^2`
/// from a run, aligned for [`lemma1_check`]: index `i` is iteration `i + 1`.
pub fn lemma1_sequences(result: &SolveResult, sigma: f64) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let factor = 2.0 * (1.0 + sigma * sigma);
    let mut phi = vec![result.start.phi1?];
    let mut alpha = vec![result.start.alpha1];
    let mut delta = vec![factor * result.start.alpha1 * result.start.gap0_sq];
    let mut gap_prev = result.start.gap1_sq;
    for rec in &result.trace {
        phi.push(rec.phi?);
        alpha.push(rec.alpha);
        delta.push(factor * rec.alpha * gap_prev);
        gap_prev = rec.gap_sq;
    }
    phi.push(result.phi_final?);
    Some((phi, alpha, delta))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub name: &'static str,
    pub total: f64,
    pub tail: f64,
    #[serde(skip)]
    pub partial_sums: Vec<f64>,
}

impl SeriesSummary {
    fn from_terms(name: &'static str, terms: Vec<f64>) -> Self {
        let partial_sums: Vec<f64> = terms
            .iter()
            .scan(0.0, |acc, t| {
                *acc += t;
                Some(*acc)
            })
            .collect();
        let total = partial_sums.last().copied().unwrap_or(0.0);
        // Summed directly: differencing partial sums loses the tail to rounding.
        let tail = terms[tail_start(terms.len())..].iter().sum();
        SeriesSummary { name, total, tail, partial_sums }
    }

    pub fn passed(&self) -> bool {
        self.tail <= 1e-10 * (1.0 + self.total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub series: Vec<SeriesSummary>,
}

impl SummabilityReport {
    pub fn passed(&self) -> bool {
        self.series.iter().all(SeriesSummary::passed)
    }
}

/// Partial sums and final-window tail mass of the four series that must be summable.
pub fn summability_report(trace: &[TraceRecord]) -> SummabilityReport {
    let series = vec![
        SeriesSummary::from_terms("step_sq", trace.iter().map(|r| r.step_sq).collect()),
        SeriesSummary::from_terms("gap_sq", trace.iter().map(|r| r.gap_sq).collect()),
        SeriesSummary::from_terms("v_sq", trace.iter().map(|r| r.v_sq).collect()),
        SeriesSummary::from_terms("eps", trace.iter().map(|r| r.eps).collect()),
    ];
    SummabilityReport { series }
}

/// Measured `sum_{k=1}^{n} |x^k - y^k|^2` against the a-priori bound
/// `(alpha^{n+1} phi_0 + mu_1 / (1 - alpha)) / rate`.
pub fn gap_sum_bound(result: &SolveResult, alpha: f64, sigma: f64) -> Option<(f64, f64)> {
    let phi0 = result.start.phi0?;
    let phi1 = result.start.phi1?;
    let mu1 = compute_mu(phi1, phi0, result.start.alpha1, sigma, result.start.gap0_sq);
    let rate = mu_decrease_rate(alpha, sigma);
    let n = result.trace.len() + 1;
    let measured = result.start.gap1_sq + result.trace.iter().map(|r| r.gap_sq).sum::<f64>();
    let bound = (alpha.powi(n as i32 + 1) * phi0 + mu1 / (1.0 - alpha)) / rate;
    Some((measured, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize, gap_sq: f64, mu: Option<f64>) -> TraceRecord {
        TraceRecord {
            k,
            step_sq: 0.0,
            gap_sq,
            v_sq: 0.0,
            eps: 0.0,
            r_norm: 0.0,
            slack: 0.0,
            rhs: 0.0,
            c: 1.0,
            alpha: 0.0,
            phi: mu,
            mu,
            identity_gap: 0.0,
        }
    }

    #[test]
    fn mu_examples() {
        assert_eq!(compute_mu(0.7, 123.0, 0.0, 0.5, 9.0), 0.7);
        assert!((compute_mu(1.0, 1.0, 0.1, 0.0, 0.0) - 0.9).abs() < 1e-15);
        assert!((compute_mu(0.0, 0.0, 0.1, 1.0, 1.0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn mu_check_on_stationary_trace() {
        let trace: Vec<_> = (2..20).map(|k| record(k, 0.0, Some(0.0))).collect();
        let rep = check_mu_decrease(&trace, 0.1, 0.3).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.pairs_checked, 17);
    }

    #[test]
    fn mu_check_specializes_without_inertia() {
        // alpha = sigma = 0: mu must drop by at least gap_sq / 2.
        assert_eq!(mu_decrease_rate(0.0, 0.0), 0.5);
        let ok = vec![record(2, 1.0, Some(2.0)), record(3, 0.0, Some(1.5))];
        assert!(check_mu_decrease(&ok, 0.0, 0.0).unwrap().passed());
        let bad = vec![record(2, 1.0, Some(2.0)), record(3, 0.0, Some(1.6))];
        let rep = check_mu_decrease(&bad, 0.0, 0.0).unwrap();
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].k, 2);
    }

    #[test]
    fn mu_check_needs_phi() {
        let trace = vec![record(2, 0.0, None)];
        assert!(check_mu_decrease(&trace, 0.0, 0.0).is_err());
    }

    #[test]
    fn lemma1_constant_sequence() {
        let phi = vec![3.0; 50];
        let rep = lemma1_check(&phi, &[0.3; 50], &[0.0; 50]).unwrap();
        assert!(rep.hypothesis_holds() && rep.variation_summable() && rep.limit_exists() && rep.delta_summable());
        assert!(rep.alpha_in_range);
        assert_eq!(rep.positive_variation, 0.0);
    }

    #[test]
    fn lemma1_geometric_sequence() {
        let phi: Vec<f64> = (0..80).map(|k| 0.5f64.powi(k)).collect();
        let rep = lemma1_check(&phi, &[0.0; 80], &[0.0; 80]).unwrap();
        assert!(rep.hypothesis_holds());
        assert_eq!(rep.positive_variation, 0.0);
        assert!(rep.limit_exists());
    }

    #[test]
    fn lemma1_flags_growth() {
        let phi: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let rep = lemma1_check(&phi, &[0.0; 20], &[0.0; 20]).unwrap();
        assert_eq!(rep.hypothesis_violations.len(), 18);
        assert!(!rep.limit_exists());
    }

    #[test]
    fn summability_single_record() {
        let mut r = record(2, 0.5, None);
        r.step_sq = 2.0;
        r.v_sq = 3.0;
        r.eps = 0.25;
        let rep = summability_report(&[r]);
        let totals: Vec<f64> = rep.series.iter().map(|s| s.total).collect();
        assert_eq!(totals, vec![2.0, 0.5, 3.0, 0.25]);
        assert!(rep.passed());
    }

    #[test]
    fn summability_flags_nonvanishing_tail() {
        let trace: Vec<_> = (0..100).map(|k| record(k, 1.0, None)).collect();
        let rep = summability_report(&trace);
        assert!(!rep.series[1].passed());
        assert_eq!(rep.series[1].tail, 10.0);
        assert!(rep.series[0].passed());
    }
}
