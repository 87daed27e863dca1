//! The inertial hybrid proximal-extragradient driver.
//!
//! Each iteration asks a [`CertificateOracle`] for a triple `(y, v, eps)` with
//! `v` in the `eps`-enlargement of `T` at `y`, checks the relative-error
//! inequality against the inertial residual history, and takes the
//! extragradient step `x+ = x + alpha_k (x - x_prev) - c_k v`.

use crate::diagnostics::{compute_mu, TraceRecord};
use crate::error::{HpeError, Result};
use crate::operators::Certificate;
use crate::space::{self, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Inequality with the `4 alpha_k sigma^2 |y_prev - x_prev|^2` term on the right;
    /// parameters need `alpha (5 + 4 sigma^2) + sigma^2 < 1`.
    Standard,
    /// Right side `sigma^2 |y - x|^2` only; parameters need `5 alpha + sigma^2 < 1`.
    Relaxed,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Relaxed => "relaxed",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = HpeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Variant::Standard),
            "relaxed" => Ok(Variant::Relaxed),
            other => Err(HpeError::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

/// A per-iteration parameter sequence indexed from `k = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// `values[i]` is the value at `k = i + 1`; the last entry repeats.
    Sequence(Vec<f64>),
}

impl Schedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Sequence(values) => {
                let i = k.saturating_sub(1).min(values.len().saturating_sub(1));
                values.get(i).copied().unwrap_or(f64::NAN)
            }
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Schedule::Constant(v) => std::slice::from_ref(v),
            Schedule::Sequence(values) => values,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HpeConfig {
    /// Upper bound on the inertial coefficients.
    pub alpha: f64,
    /// Relative-error tolerance.
    pub sigma: f64,
    pub c_schedule: Schedule,
    pub c_lower: f64,
    pub alpha_schedule: Schedule,
    pub variant: Variant,
    pub max_iters: usize,
    /// Stop once `|v_k| <= residual_tol` and `eps_k <= residual_tol`.
    pub residual_tol: f64,
    pub enforce_step_inequality: bool,
}

pub const DEFAULT_MAX_ITERS: usize = 50_000;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

impl HpeConfig {
    /// Constant step `c` and constant inertia `alpha_k = alpha`.
    pub fn new(alpha: f64, sigma: f64, c: f64) -> Self {
        HpeConfig {
            alpha,
            sigma,
            c_schedule: Schedule::Constant(c),
            c_lower: c,
            alpha_schedule: Schedule::Constant(alpha),
            variant: Variant::Standard,
            max_iters: DEFAULT_MAX_ITERS,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            enforce_step_inequality: true,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn with_enforcement(mut self, enforce: bool) -> Self {
        self.enforce_step_inequality = enforce;
        self
    }
}

/// Left side of the parameter condition for `variant`; feasible iff `< 1`.
pub fn parameter_condition(alpha: f64, sigma: f64, variant: Variant) -> f64 {
    let s2 = sigma * sigma;
    match variant {
        Variant::Standard => alpha * (5.0 + 4.0 * s2) + s2,
        Variant::Relaxed => 5.0 * alpha + s2,
    }
}

pub fn parameter_condition_label(variant: Variant) -> &'static str {
    match variant {
        Variant::Standard => "alpha*(5 + 4*sigma^2) + sigma^2 < 1",
        Variant::Relaxed => "5*alpha + sigma^2 < 1",
    }
}

/// The first configuration invariant that fails, with its evaluated value.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigViolation {
    pub condition: String,
    pub value: f64,
}

impl std::fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} violated (evaluated {})", self.condition, self.value)
    }
}

pub fn validate_config(cfg: &HpeConfig) -> std::result::Result<(), ConfigViolation> {
    let fail = |condition: &str, value: f64| Err(ConfigViolation { condition: condition.to_string(), value });
    if !(cfg.alpha >= 0.0 && cfg.alpha.is_finite()) {
        return fail("alpha >= 0", cfg.alpha);
    }
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return fail("sigma >= 0", cfg.sigma);
    }
    let value = parameter_condition(cfg.alpha, cfg.sigma, cfg.variant);
    if !(value < 1.0) {
        return fail(parameter_condition_label(cfg.variant), value);
    }
    if !(cfg.c_lower > 0.0 && cfg.c_lower.is_finite()) {
        return fail("c_lower > 0", cfg.c_lower);
    }
    let cs = cfg.c_schedule.values();
    if cs.is_empty() {
        return fail("c schedule nonempty", 0.0);
    }
    if let Some(&c) = cs.iter().find(|c| !(**c >= cfg.c_lower && c.is_finite())) {
        return fail("c_k >= c_lower", c);
    }
    let alphas = cfg.alpha_schedule.values();
    if alphas.is_empty() {
        return fail("alpha schedule nonempty", 0.0);
    }
    if let Some(&a) = alphas.iter().find(|a| !(**a >= 0.0 && **a <= cfg.alpha)) {
        return fail("0 <= alpha_k <= alpha", a);
    }
    if let Some(w) = alphas.windows(2).find(|w| w[1] < w[0]) {
        return fail("alpha_k nondecreasing", w[1] - w[0]);
    }
    if cfg.max_iters == 0 {
        return fail("max_iters > 0", 0.0);
    }
    if !(cfg.residual_tol > 0.0) {
        return fail("residual_tol > 0", cfg.residual_tol);
    }
    Ok(())
}

/// The six free starting points.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialPoints {
    pub x0: Vector,
    pub x1: Vector,
    pub x2: Vector,
    pub y0: Vector,
    pub y1: Vector,
    pub v1: Vector,
}

impl InitialPoints {
    /// `x0 = x1 = x2 = y0 = y1 = start`, `v1 = 0`: every history residual vanishes.
    pub fn from_start(start: Vector) -> Self {
        let zero = Vector::zeros(start.len());
        InitialPoints {
            x0: start.clone(),
            x1: start.clone(),
            x2: start.clone(),
            y0: start.clone(),
            y1: start,
            v1: zero,
        }
    }

    fn dim(&self) -> Result<usize> {
        let n = self.x0.len();
        for v in [&self.x1, &self.x2, &self.y0, &self.y1, &self.v1] {
            if v.len() != n {
                return Err(HpeError::DimensionMismatch { expected: n, found: v.len() });
            }
        }
        if n == 0 {
            return Err(HpeError::InvalidArgument("initial points must have dimension >= 1".into()));
        }
        Ok(n)
    }
}

/// What an oracle sees at iteration `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationState {
    pub k: usize,
    /// `x^{k-2}`
    pub x_prev2: Vector,
    /// `x^{k-1}`
    pub x_prev: Vector,
    /// `x^k`
    pub x_curr: Vector,
    pub y_prev: Vector,
    pub v_prev: Vector,
    pub c_prev: f64,
    pub alpha_prev: f64,
    /// `c_{k-1} v^{k-1} + y^{k-1} - x^{k-1} - alpha_{k-1} (x^{k-1} - x^{k-2})`
    pub r_prev: Vector,
}

impl IterationState {
    pub fn initial(init: &InitialPoints, cfg: &HpeConfig) -> Self {
        let c1 = cfg.c_schedule.at(1);
        let a1 = cfg.alpha_schedule.at(1);
        let r1 = &init.v1 * c1 + &init.y1 - &init.x1 - (&init.x1 - &init.x0) * a1;
        IterationState {
            k: 2,
            x_prev2: init.x0.clone(),
            x_prev: init.x1.clone(),
            x_curr: init.x2.clone(),
            y_prev: init.y1.clone(),
            v_prev: init.v1.clone(),
            c_prev: c1,
            alpha_prev: a1,
            r_prev: r1,
        }
    }

    /// `x^k + alpha_k (x^k - x^{k-1})`
    pub fn extrapolated(&self, alpha_k: f64) -> Vector {
        &self.x_curr + (&self.x_curr - &self.x_prev) * alpha_k
    }

    /// Recomputes `r^{k-1}` from the stored history.
    pub fn recompute_r_prev(&self) -> Vector {
        &self.v_prev * self.c_prev + &self.y_prev - &self.x_prev - (&self.x_prev - &self.x_prev2) * self.alpha_prev
    }
}

/// `r^k = c_k v^k + y^k - x^k - alpha_k (x^k - x^{k-1})`
pub fn residual_vector(state: &IterationState, cert: &Certificate, c_k: f64, alpha_k: f64) -> Vector {
    cert.v() * c_k + cert.y() - &state.x_curr - (&state.x_curr - &state.x_prev) * alpha_k
}

/// Both sides of the relative-error inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepTerms {
    pub lhs: f64,
    pub rhs: f64,
}

impl StepTerms {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// Floating-point allowance for an inequality that is exact in real arithmetic.
    pub fn tolerance(&self) -> f64 {
        1e-9 * (1.0 + self.rhs)
    }

    pub fn holds(&self) -> bool {
        self.slack() >= -self.tolerance()
    }
}

pub fn step_inequality_terms(
    state: &IterationState,
    cert: &Certificate,
    c_k: f64,
    alpha_k: f64,
    sigma: f64,
    variant: Variant,
) -> StepTerms {
    let r = residual_vector(state, cert, c_k, alpha_k);
    let lhs = 2.0 * c_k * cert.eps() + r.norm_squared() + 4.0 * alpha_k * state.r_prev.norm_squared();
    let s2 = sigma * sigma;
    let gap = space::dist_sq(cert.y(), &state.x_curr);
    let rhs = match variant {
        Variant::Standard => s2 * gap + 4.0 * alpha_k * s2 * space::dist_sq(&state.y_prev, &state.x_prev),
        Variant::Relaxed => s2 * gap,
    };
    StepTerms { lhs, rhs }
}

/// `rhs - lhs` of the relative-error inequality; nonnegative iff it holds.
pub fn step_inequality_slack(
    state: &IterationState,
    cert: &Certificate,
    c_k: f64,
    alpha_k: f64,
    sigma: f64,
    variant: Variant,
) -> f64 {
    step_inequality_terms(state, cert, c_k, alpha_k, sigma, variant).slack()
}

/// `x^{k+1} = x^k + alpha_k (x^k - x^{k-1}) - c_k v^k`
pub fn extragradient_update(state: &IterationState, cert: &Certificate, c_k: f64, alpha_k: f64) -> Vector {
    state.extrapolated(alpha_k) - cert.v() * c_k
}

/// Supplies a certificate for the current iterate.
pub trait CertificateOracle {
    fn certificate(&self, state: &IterationState, c_k: f64, alpha_k: f64) -> Result<Certificate>;
}

impl<F> CertificateOracle for F
where
    F: Fn(&IterationState, f64, f64) -> Result<Certificate>,
{
    fn certificate(&self, state: &IterationState, c_k: f64, alpha_k: f64) -> Result<Certificate> {
        self(state, c_k, alpha_k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max_iterations",
        }
    }
}

/// Quantities at `k = 0, 1` needed to extend the trace backwards.
#[derive(Clone, Debug, PartialEq)]
pub struct StartRecord {
    pub alpha1: f64,
    /// `|x^0 - y^0|^2`
    pub gap0_sq: f64,
    /// `|x^1 - y^1|^2`
    pub gap1_sq: f64,
    pub phi0: Option<f64>,
    pub phi1: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// The last iterate `x^{K+1}`.
    pub x: Vector,
    /// The last approximate zero `y^K`.
    pub y: Vector,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceRecord>,
    pub start: StartRecord,
    /// `phi` at the last iterate, when a reference point was supplied.
    pub phi_final: Option<f64>,
}

/// Bound on `|r^k - (y^k - x^{k+1})|`, scaled by the magnitudes involved.
fn update_identity_tolerance(state: &IterationState, cert: &Certificate, c_k: f64) -> f64 {
    1e-12 * (1.0 + state.x_curr.norm() + cert.y().norm() + c_k * cert.v().norm())
}

/// Runs the inertial iteration from `k = 2`. When `reference` is a zero of
/// `T`, the trace carries the Fejer-type quantities `phi_k` and `mu_k`.
pub fn run(
    oracle: &dyn CertificateOracle,
    cfg: &HpeConfig,
    init: InitialPoints,
    reference: Option<&Vector>,
) -> Result<SolveResult> {
    validate_config(cfg).map_err(|v| HpeError::InvalidConfig(v.to_string()))?;
    let n = init.dim()?;
    if let Some(z) = reference {
        if z.len() != n {
            return Err(HpeError::DimensionMismatch { expected: n, found: z.len() });
        }
    }
    let alpha1 = cfg.alpha_schedule.at(1);
    if alpha1 != 0.0 && init.x1 != init.x0 {
        return Err(HpeError::InvalidConfig("need alpha_1 = 0 or x^1 = x^0".into()));
    }

    let phi = |x: &Vector| reference.map(|z| 0.5 * space::dist_sq(x, z));
    let start = StartRecord {
        alpha1,
        gap0_sq: space::dist_sq(&init.x0, &init.y0),
        gap1_sq: space::dist_sq(&init.x1, &init.y1),
        phi0: phi(&init.x0),
        phi1: phi(&init.x1),
    };

    let mut state = IterationState::initial(&init, cfg);
    let mut phi_prev = start.phi1;
    let mut trace = Vec::with_capacity(cfg.max_iters.min(1 << 16));
    let mut stop_reason = StopReason::MaxIterations;
    let mut last_y = init.y1.clone();

    for k in 2..cfg.max_iters + 2 {
        state.k = k;
        let c_k = cfg.c_schedule.at(k);
        let alpha_k = cfg.alpha_schedule.at(k);
        let cert = oracle.certificate(&state, c_k, alpha_k)?;
        if cert.y().len() != n {
            return Err(HpeError::DimensionMismatch { expected: n, found: cert.y().len() });
        }
        if !space::is_finite(cert.y()) || !space::is_finite(cert.v()) || !cert.eps().is_finite() {
            return Err(HpeError::NonFinite { k });
        }

        let terms = step_inequality_terms(&state, &cert, c_k, alpha_k, cfg.sigma, cfg.variant);
        if cfg.enforce_step_inequality && !terms.holds() {
            return Err(HpeError::StepViolation { k, slack: terms.slack(), rhs: terms.rhs });
        }

        let r = residual_vector(&state, &cert, c_k, alpha_k);
        let x_next = extragradient_update(&state, &cert, c_k, alpha_k);
        if !space::is_finite(&x_next) {
            return Err(HpeError::NonFinite { k });
        }
        let identity_gap = (&r - (cert.y() - &x_next)).norm();
        if identity_gap > update_identity_tolerance(&state, &cert, c_k) {
            return Err(HpeError::IdentityViolation { k, what: "r^k = y^k - x^{k+1}", gap: identity_gap });
        }

        let phi_k = phi(&state.x_curr);
        let mu = match (phi_k, phi_prev) {
            (Some(p), Some(pp)) => {
                Some(compute_mu(p, pp, alpha_k, cfg.sigma, space::dist_sq(&state.x_prev, &state.y_prev)))
            }
            _ => None,
        };
        let v_norm = cert.v().norm();
        trace.push(TraceRecord {
            k,
            step_sq: space::dist_sq(&x_next, &state.x_curr),
            gap_sq: space::dist_sq(&state.x_curr, cert.y()),
            v_sq: v_norm * v_norm,
            eps: cert.eps(),
            r_norm: r.norm(),
            slack: terms.slack(),
            rhs: terms.rhs,
            c: c_k,
            alpha: alpha_k,
            phi: phi_k,
            mu,
            identity_gap,
        });

        let converged = v_norm <= cfg.residual_tol && cert.eps() <= cfg.residual_tol;
        phi_prev = phi_k;
        last_y = cert.y().clone();
        state.x_prev2 = std::mem::replace(&mut state.x_prev, std::mem::replace(&mut state.x_curr, x_next));
        state.y_prev = cert.y().clone();
        state.v_prev = cert.v().clone();
        state.c_prev = c_k;
        state.alpha_prev = alpha_k;
        state.r_prev = r;
        if converged {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    Ok(SolveResult {
        phi_final: phi(&state.x_curr),
        x: state.x_curr,
        y: last_y,
        iterations: trace.len(),
        stop_reason,
        trace,
        start,
    })
}
