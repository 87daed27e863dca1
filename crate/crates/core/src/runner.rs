//! Oracle selection, default parameters and post-run analysis shared by the
//! command line, the C interface and the acceptance suite.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::{
    check_mu_decrease, lemma1_check, lemma1_sequences, summability_report, Lemma1Report, MuReport, SummabilityReport,
};
use crate::error::{usage, HpeError, Result};
use crate::hpe::{self, CertificateOracle, HpeConfig, InitialPoints, SolveResult, Variant};
use crate::operators::OperatorSpec;
use crate::oracles::{derive_fbf_params, FbOracle, FbfOracle, FbfParams, IppOracle};
use crate::problems::{ProblemInstance, ProblemOperator};

pub const IPP_DEFAULT_ALPHA: f64 = 0.1;
pub const IPP_DEFAULT_SIGMA: f64 = 0.0;
pub const IPP_DEFAULT_C: f64 = 1.0;
pub const FB_DEFAULT_ALPHA: f64 = 0.05;
pub const FB_DEFAULT_SIGMA: f64 = 0.75;
pub const FBF_DEFAULT_ALPHA: f64 = 0.05;
/// Fraction of the forward-backward-forward step bound used by default.
pub const FBF_STEP_FRACTION: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Ipp,
    Fb,
    Fbf,
}

impl OracleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OracleKind::Ipp => "ipp",
            OracleKind::Fb => "fb",
            OracleKind::Fbf => "fbf",
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleKind {
    type Err = HpeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ipp" => Ok(OracleKind::Ipp),
            "fb" => Ok(OracleKind::Fb),
            "fbf" => Ok(OracleKind::Fbf),
            other => Err(HpeError::Parse(format!("unknown oracle '{other}' (ipp, fb, fbf)"))),
        }
    }
}

/// User-supplied values that replace the per-oracle defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub c: Option<f64>,
    pub variant: Option<Variant>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub enforce_step_inequality: Option<bool>,
}

/// Resolved configuration for one oracle on one problem.
#[derive(Clone, Debug)]
pub struct Plan {
    pub oracle: OracleKind,
    pub config: HpeConfig,
    /// Largest admissible constant step for the oracle.
    pub c_max: f64,
    pub fbf: Option<FbfParams>,
}

/// `(A, B)` for the splitting oracles; a lone single-valued `T` pairs with `B = 0`.
fn split_pair(problem: &ProblemOperator, oracle: OracleKind) -> Result<(OperatorSpec, OperatorSpec)> {
    match problem {
        ProblemOperator::Split { a, b } => Ok((a.clone(), b.clone())),
        ProblemOperator::Single(t) if t.is_single_valued() => Ok((t.clone(), OperatorSpec::scaled_identity(0.0)?)),
        ProblemOperator::Single(_) => {
            Err(usage(format!("oracle {oracle} needs a split problem with a single-valued A")))
        }
    }
}

pub fn plan(problem: &ProblemOperator, oracle: OracleKind, ov: &Overrides) -> Result<Plan> {
    let variant = ov.variant.unwrap_or(Variant::Standard);
    let (alpha, sigma, c, c_max, fbf) = match oracle {
        OracleKind::Ipp => {
            let c = ov.c.unwrap_or(IPP_DEFAULT_C);
            (ov.alpha.unwrap_or(IPP_DEFAULT_ALPHA), ov.sigma.unwrap_or(IPP_DEFAULT_SIGMA), c, f64::INFINITY, None)
        }
        OracleKind::Fb => {
            let (a, _) = split_pair(problem, oracle)?;
            let gamma = a.gamma().ok_or_else(|| usage("oracle fb needs a declared gamma on A"))?;
            let sigma = ov.sigma.unwrap_or(FB_DEFAULT_SIGMA);
            let c_max = 2.0 * gamma * sigma * sigma;
            let default_c = if c_max.is_finite() && c_max > 0.0 { c_max } else { 1.0 };
            (ov.alpha.unwrap_or(FB_DEFAULT_ALPHA), sigma, ov.c.unwrap_or(default_c), c_max, None)
        }
        OracleKind::Fbf => {
            if variant == Variant::Relaxed {
                return Err(HpeError::InvalidConfig(
                    "oracle fbf certifies the standard inequality only; use --variant standard".into(),
                ));
            }
            let (a, _) = split_pair(problem, oracle)?;
            let beta = a.beta().ok_or_else(|| usage("oracle fbf needs a declared beta on A"))?;
            let alpha = ov.alpha.unwrap_or(FBF_DEFAULT_ALPHA);
            let params = derive_fbf_params(alpha, beta, None)?;
            let default_c = if params.c_max.is_finite() { FBF_STEP_FRACTION * params.c_max } else { 1.0 };
            let sigma = ov.sigma.unwrap_or(params.sigma);
            (alpha, sigma, ov.c.unwrap_or(default_c), params.c_max, Some(params))
        }
    };
    if !(c > 0.0 && c.is_finite()) {
        return Err(HpeError::InvalidConfig(format!("step c must be finite and > 0, got {c}")));
    }
    if c > c_max * (1.0 + 1e-12) {
        return Err(HpeError::InvalidConfig(format!("step c = {c} exceeds the {oracle} bound {c_max}")));
    }
    let mut config = HpeConfig::new(alpha, sigma, c).with_variant(variant);
    if let Some(m) = ov.max_iters {
        config = config.with_max_iters(m);
    }
    if let Some(t) = ov.tol {
        config = config.with_residual_tol(t);
    }
    if let Some(e) = ov.enforce_step_inequality {
        config = config.with_enforcement(e);
    }
    hpe::validate_config(&config).map_err(|v| HpeError::InvalidConfig(v.to_string()))?;
    Ok(Plan { oracle, config, c_max, fbf })
}

pub fn build_oracle(problem: &ProblemOperator, plan: &Plan) -> Result<Box<dyn CertificateOracle>> {
    let cfg = &plan.config;
    Ok(match plan.oracle {
        OracleKind::Ipp => Box::new(IppOracle::new(problem.combined()?)),
        OracleKind::Fb => {
            let (a, b) = split_pair(problem, plan.oracle)?;
            Box::new(FbOracle::new(a, b, cfg.sigma, cfg.alpha, cfg.variant)?)
        }
        OracleKind::Fbf => {
            let (a, b) = split_pair(problem, plan.oracle)?;
            let sigma_bar = plan.fbf.map(|p| p.sigma_bar);
            Box::new(FbfOracle::new(a, b, cfg.alpha, sigma_bar)?)
        }
    })
}

/// Plans, builds the oracle and runs from the instance's start point.
pub fn solve(problem: &ProblemInstance, oracle: OracleKind, ov: &Overrides) -> Result<(Plan, SolveResult)> {
    let plan = plan(&problem.operator, oracle, ov)?;
    let built = build_oracle(&problem.operator, &plan)?;
    let init = InitialPoints::from_start(problem.start.clone());
    let result = hpe::run(built.as_ref(), &plan.config, init, problem.known_solution.as_ref())?;
    Ok((plan, result))
}

/// Post-run diagnostics against the instance's known solution, when present.
#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub final_residual: f64,
    pub distance_to_known: Option<f64>,
    pub min_slack_ratio: f64,
    pub max_identity_gap: f64,
    pub summability: SummabilityReport,
    pub mu: Option<MuReport>,
    pub lemma1: Option<Lemma1Report>,
}

pub fn analyze(problem: &ProblemInstance, plan: &Plan, result: &SolveResult) -> Result<Analysis> {
    let final_residual = problem.inclusion_residual(&result.x)?;
    let distance_to_known = problem.known_solution.as_ref().map(|z| (&result.x - z).norm());
    let min_slack_ratio = result.trace.iter().map(|r| r.slack / (1.0 + r.rhs)).fold(f64::INFINITY, f64::min);
    let max_identity_gap = result.trace.iter().map(|r| r.identity_gap).fold(0.0, f64::max);
    let (mu, lemma1) = if problem.known_solution.is_some() {
        let (alpha, sigma) = (plan.config.alpha, plan.config.sigma);
        let mu = check_mu_decrease(&result.trace, alpha, sigma)?;
        let lemma1 = match lemma1_sequences(result, sigma) {
            Some((phi, a, d)) => Some(lemma1_check(&phi, &a, &d)?),
            None => None,
        };
        (Some(mu), lemma1)
    } else {
        (None, None)
    };
    Ok(Analysis {
        final_residual,
        distance_to_known,
        min_slack_ratio,
        max_identity_gap,
        summability: summability_report(&result.trace),
        mu,
        lemma1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpe::StopReason;
    use crate::problems::{gen_composite, gen_quadratic, gen_saddle};

    #[test]
    fn defaults_per_oracle() {
        let q = gen_quadratic(3, 10.0, 1).unwrap();
        let p = plan(&q.operator, OracleKind::Ipp, &Overrides::default()).unwrap();
        assert_eq!((p.config.alpha, p.config.sigma, p.config.c_schedule.at(2)), (0.1, 0.0, 1.0));

        let comp = gen_composite(6, 0.5, 1).unwrap();
        let p = plan(&comp.operator, OracleKind::Fb, &Overrides::default()).unwrap();
        assert_eq!(p.config.sigma, FB_DEFAULT_SIGMA);
        assert_eq!(p.config.c_schedule.at(2), p.c_max);

        let s = gen_saddle(4, 1).unwrap();
        let p = plan(&s.operator, OracleKind::Fbf, &Overrides::default()).unwrap();
        let params = p.fbf.unwrap();
        assert_eq!(p.config.sigma, params.sigma);
        assert!((p.config.c_schedule.at(2) - 0.99 * params.c_max).abs() < 1e-15);
    }

    #[test]
    fn plan_rejections() {
        let s = gen_saddle(4, 1).unwrap();
        let big = Overrides { c: Some(10.0), ..Default::default() };
        assert!(matches!(plan(&s.operator, OracleKind::Fbf, &big), Err(HpeError::InvalidConfig(_))));
        let relaxed = Overrides { variant: Some(Variant::Relaxed), ..Default::default() };
        assert!(matches!(plan(&s.operator, OracleKind::Fbf, &relaxed), Err(HpeError::InvalidConfig(_))));
        // the saddle A is not cocoercive, so no gamma is declared
        assert!(matches!(plan(&s.operator, OracleKind::Fb, &Overrides::default()), Err(HpeError::InvalidArgument(_))));
        let q = gen_quadratic(3, 10.0, 1).unwrap();
        let bad = Overrides { alpha: Some(0.2), sigma: Some(0.0), ..Default::default() };
        assert!(matches!(plan(&q.operator, OracleKind::Ipp, &bad), Err(HpeError::InvalidConfig(_))));
    }

    #[test]
    fn quadratic_ipp_converges() {
        let q = gen_quadratic(10, 100.0, 2).unwrap();
        let (plan, result) = solve(&q, OracleKind::Ipp, &Overrides::default()).unwrap();
        assert_eq!(result.stop_reason, StopReason::Converged);
        let a = analyze(&q, &plan, &result).unwrap();
        assert!(a.distance_to_known.unwrap() <= 1e-6);
        assert!(a.mu.unwrap().passed());
        assert!(a.lemma1.unwrap().hypothesis_holds());
    }
}
