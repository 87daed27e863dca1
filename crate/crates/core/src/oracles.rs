//! Certificate oracles for the classical splitting methods that fit the
//! inertial HPE template: inertial proximal point, inertial forward-backward
//! and inertial forward-backward-forward.
//!
//! Each oracle performs the method's own step and repackages it as a
//! certificate `(y, v, eps)` such that the generic extragradient update
//! reproduces the method's next iterate.

use crate::error::{usage, HpeError, Result};
use crate::hpe::{parameter_condition, CertificateOracle, IterationState, Variant};
use crate::operators::{Certificate, OperatorSpec, Provenance};

/// Relative slack allowed when comparing a step size with its upper bound.
const STEP_BOUND_SLACK: f64 = 1e-12;

/// Inertial proximal point: `y = J_{cT}(x + alpha (x - x_prev))`, `eps = 0`.
#[derive(Clone, Debug)]
pub struct IppOracle {
    op: OperatorSpec,
}

impl IppOracle {
    pub fn new(op: OperatorSpec) -> Self {
        IppOracle { op }
    }
}

impl CertificateOracle for IppOracle {
    fn certificate(&self, state: &IterationState, c_k: f64, alpha_k: f64) -> Result<Certificate> {
        ipp_certificate(&self.op, state, c_k, alpha_k)
    }
}

pub fn ipp_certificate(op: &OperatorSpec, state: &IterationState, c_k: f64, alpha_k: f64) -> Result<Certificate> {
    let w = state.extrapolated(alpha_k);
    let y = op.resolvent(c_k, &w)?;
    let v = (&w - &y) / c_k;
    Certificate::exact(y, v)
}

/// Step-size data for the inertial forward-backward embedding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FbParams {
    pub gamma: f64,
    pub sigma: f64,
    pub alpha: f64,
    /// `2 gamma sigma^2`
    pub c_max: f64,
}

impl FbParams {
    pub fn new(gamma: f64, sigma: f64, alpha: f64, variant: Variant) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(usage(format!("gamma must be > 0, got {gamma}")));
        }
        let cond = parameter_condition(alpha, sigma, variant);
        if !(alpha >= 0.0 && sigma >= 0.0 && cond < 1.0) {
            return Err(HpeError::InvalidConfig(format!(
                "alpha = {alpha}, sigma = {sigma} give {cond} for the {} condition",
                variant.as_str()
            )));
        }
        Ok(FbParams { gamma, sigma, alpha, c_max: 2.0 * gamma * sigma * sigma })
    }
}

/// Inertial forward-backward for `A + B`, `A` cocoercive:
/// `x+ = J_{cB}(x - c A x + alpha (x - x_prev))`, reported with `y = x+`.
#[derive(Clone, Debug)]
pub struct FbOracle {
    a: OperatorSpec,
    b: OperatorSpec,
    params: FbParams,
    inertial_eps: bool,
}

impl FbOracle {
    /// `a` must carry a declared cocoercivity modulus.
    pub fn new(a: OperatorSpec, b: OperatorSpec, sigma: f64, alpha: f64, variant: Variant) -> Result<Self> {
        let gamma = a.gamma().ok_or_else(|| usage("forward-backward needs a declared gamma on A"))?;
        let params = FbParams::new(gamma, sigma, alpha, variant)?;
        // The relaxed inequality has no room for the inertial part of eps.
        Ok(FbOracle { a, b, params, inertial_eps: variant == Variant::Standard })
    }

    /// Toggles the `(alpha_k / gamma) |x - x_prev|^2` part of `eps`.
    pub fn with_inertial_eps(mut self, on: bool) -> Self {
        self.inertial_eps = on;
        self
    }

    pub fn params(&self) -> FbParams {
        self.params
    }

    /// The plain forward-backward step, without certificate bookkeeping.
    pub fn forward_backward_step(
        &self,
        state: &IterationState,
        c_k: f64,
        alpha_k: f64,
    ) -> Result<crate::space::Vector> {
        let ax = self.a.apply(&state.x_curr)?;
        self.b.resolvent(c_k, &(state.extrapolated(alpha_k) - ax * c_k))
    }
}

impl CertificateOracle for FbOracle {
    fn certificate(&self, state: &IterationState, c_k: f64, alpha_k: f64) -> Result<Certificate> {
        if c_k > self.params.c_max * (1.0 + STEP_BOUND_SLACK) {
            return Err(HpeError::InvalidConfig(format!("step {c_k} exceeds 2*gamma*sigma^2 = {}", self.params.c_max)));
        }
        let x = &state.x_curr;
        let x_next = self.forward_backward_step(state, c_k, alpha_k)?;
        let inertia = x - &state.x_prev;
        let v = (x - &x_next) / c_k + &inertia * (alpha_k / c_k);
        let gamma = self.params.gamma;
        let mut eps = (&x_next - x).norm_squared() / (4.0 * gamma);
        if self.inertial_eps {
            eps += alpha_k / gamma * inertia.norm_squared();
        }
        Certificate::new(x_next, v, eps, Provenance::Composite)
    }
}

/// Step-size data for the inertial forward-backward-forward embedding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FbfParams {
    pub beta: f64,
    pub alpha: f64,
    pub sigma_bar: f64,
    /// `sqrt((1 - 5 alpha - 2 sigma_bar) / (4 alpha + 2 sigma_bar + 1))`
    pub sigma: f64,
    /// `sigma / beta`, infinite when `beta = 0`.
    pub c_max: f64,
}

/// The relative-error tolerance induced by `sigma_bar`.
pub fn fbf_induced_sigma(alpha: f64, sigma_bar: f64) -> f64 {
    ((1.0 - 5.0 * alpha - 2.0 * sigma_bar) / (4.0 * alpha + 2.0 * sigma_bar + 1.0)).sqrt()
}

/// Lower edge of the window for `sigma_bar` given the induced tolerance `sigma`.
pub fn fbf_window_lower(alpha: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    (1.0 - 5.0 * alpha - s2 * (4.0 * alpha + 1.0)) / (2.0 * (s2 + 1.0))
}

fn check_fbf_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(usage(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if 5.0 * alpha >= 1.0 {
        return Err(HpeError::Infeasible(format!("5*alpha = {} >= 1 leaves no sigma_bar window", 5.0 * alpha)));
    }
    Ok(())
}

/// Open interval of admissible `sigma_bar`.
///
/// The upper edge is `(1 - 5 alpha) / 2`, where the induced `sigma` reaches
/// zero. The lower edge is found by bisection as the smallest `sigma_bar`
/// whose induced `sigma` still satisfies the parameter condition strictly.
pub fn fbf_sigma_bar_window(alpha: f64) -> Result<(f64, f64)> {
    check_fbf_alpha(alpha)?;
    let upper = 0.5 * (1.0 - 5.0 * alpha);
    let feasible = |sb: f64| parameter_condition(alpha, fbf_induced_sigma(alpha, sb), Variant::Standard) < 1.0;
    let (mut lo, mut hi) = (0.0, 0.5 * upper);
    if feasible(lo) {
        return Ok((lo, upper));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * upper {
            break;
        }
    }
    Ok((hi, upper))
}

pub fn derive_fbf_params(alpha: f64, beta: f64, sigma_bar: Option<f64>) -> Result<FbfParams> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(usage(format!("beta must be finite and >= 0, got {beta}")));
    }
    let (lo, hi) = fbf_sigma_bar_window(alpha)?;
    let sigma_bar = match sigma_bar {
        Some(sb) if sb > lo && sb < hi => sb,
        Some(sb) => {
            return Err(HpeError::InvalidConfig(format!("sigma_bar = {sb} outside the window ({lo}, {hi})")));
        }
        None => 0.5 * (lo + hi),
    };
    let sigma = fbf_induced_sigma(alpha, sigma_bar);
    let cond = parameter_condition(alpha, sigma, Variant::Standard);
    if !(sigma < 1.0 && cond < 1.0) {
        return Err(HpeError::Infeasible(format!("induced sigma = {sigma} gives {cond} for the standard condition")));
    }
    let c_max = if beta == 0.0 { f64::INFINITY } else { sigma / beta };
    Ok(FbfParams { beta, alpha, sigma_bar, sigma, c_max })
}

/// Inertial forward-backward-forward (Tseng) for `A + B`, `A` monotone and
/// Lipschitz: `y = J_{cB}(x - c A x + alpha (x - x_prev))`, then
/// `x+ = y + c (A x - A y)` through the generic update.
#[derive(Clone, Debug)]
pub struct FbfOracle {
    a: OperatorSpec,
    b: OperatorSpec,
    params: FbfParams,
}

impl FbfOracle {
    /// `a` must carry a declared Lipschitz modulus.
    pub fn new(a: OperatorSpec, b: OperatorSpec, alpha: f64, sigma_bar: Option<f64>) -> Result<Self> {
        let beta = a.beta().ok_or_else(|| usage("forward-backward-forward needs a declared beta on A"))?;
        Ok(FbfOracle { a, b, params: derive_fbf_params(alpha, beta, sigma_bar)? })
    }

    pub fn params(&self) -> FbfParams {
        self.params
    }
}

impl CertificateOracle for FbfOracle {
    fn certificate(&self, state: &IterationState, c_k: f64, alpha_k: f64) -> Result<Certificate> {
        if c_k > self.params.c_max * (1.0 + STEP_BOUND_SLACK) {
            return Err(HpeError::InvalidConfig(format!(
                "step {c_k} exceeds the forward-backward-forward bound {}",
                self.params.c_max
            )));
        }
        let x = &state.x_curr;
        let inertia = x - &state.x_prev;
        let ax = self.a.apply(x)?;
        let y = self.b.resolvent(c_k, &(x - &ax * c_k + &inertia * alpha_k))?;
        let ay = self.a.apply(&y)?;
        // b lies in B(y) by the resolvent inclusion.
        let b = (x - &y) / c_k - &ax + &inertia * (alpha_k / c_k);
        let v = &ay + b;

        let r = &v * c_k + &y - x - &inertia * alpha_k;
        let expected = (&ay - &ax) * c_k;
        let gap = (&r - &expected).norm();
        let scale = 1.0 + x.norm() + y.norm() + c_k * (ax.norm() + ay.norm());
        if gap > 1e-12 * scale {
            return Err(HpeError::IdentityViolation { k: state.k, what: "r^k = c_k (A y^k - A x^k)", gap });
        }
        Certificate::new(y, v, 0.0, Provenance::Composite)
    }
}
