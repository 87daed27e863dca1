//! Seeded generators of monotone inclusions with known zeros.
//!
//! Reference solutions come from dense solves or from plain, non-inertial
//! methods implemented here from scratch, so they do not depend on the
//! resolvent code under test.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::linalg::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{usage, HpeError, Result};
use crate::operators::OperatorSpec;
use crate::space::{self, seeded_rng, Matrix, Vector};

/// Inclusion residual a generated solution must meet.
pub const SOLUTION_RESIDUAL_TOL: f64 = 1e-8;
const REFERENCE_TOL: f64 = 1e-12;
const REFERENCE_MAX_ITERS: usize = 2_000_000;

#[derive(Clone, Debug)]
pub enum ProblemOperator {
    /// Find `x` with `0 in T x`.
    Single(OperatorSpec),
    /// Find `x` with `0 in A x + B x`, `A` single-valued.
    Split { a: OperatorSpec, b: OperatorSpec },
}

impl ProblemOperator {
    /// `T` itself, or `A + B`.
    pub fn combined(&self) -> Result<OperatorSpec> {
        match self {
            ProblemOperator::Single(t) => Ok(t.clone()),
            ProblemOperator::Split { a, b } => OperatorSpec::sum(a.clone(), b.clone()),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            ProblemOperator::Single(t) => t.dim(),
            ProblemOperator::Split { a, b } => a.dim().or(b.dim()),
        }
    }

    /// Distance from `x` to its own resolvent or forward-backward image,
    /// zero exactly on the solution set.
    pub fn inclusion_residual(&self, x: &Vector) -> Result<f64> {
        match self {
            ProblemOperator::Single(t) if t.is_single_valued() => Ok(t.apply(x)?.norm()),
            ProblemOperator::Single(t) => Ok((x - t.resolvent(1.0, x)?).norm()),
            ProblemOperator::Split { a, b } => {
                let fb = b.resolvent(1.0, &(x - a.apply(x)?))?;
                Ok((x - fb).norm())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemMetadata {
    pub name: String,
    pub dimension: usize,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub operator: ProblemOperator,
    pub known_solution: Option<Vector>,
    pub start: Vector,
    pub metadata: ProblemMetadata,
}

impl ProblemInstance {
    pub fn new(
        name: &str,
        operator: ProblemOperator,
        known_solution: Option<Vector>,
        start: Option<Vector>,
    ) -> Result<Self> {
        let dimension = operator
            .dim()
            .or(known_solution.as_ref().map(|z| z.len()))
            .or(start.as_ref().map(|s| s.len()))
            .ok_or_else(|| usage("problem dimension cannot be inferred; give a start point"))?;
        let start = start.unwrap_or_else(|| Vector::zeros(dimension));
        for (what, v) in [("start", Some(&start)), ("known_solution", known_solution.as_ref())] {
            if let Some(v) = v {
                if v.len() != dimension {
                    return Err(HpeError::DimensionMismatch { expected: dimension, found: v.len() });
                }
                if !space::is_finite(v) {
                    return Err(usage(format!("{what} has non-finite entries")));
                }
            }
        }
        let instance = ProblemInstance {
            operator,
            known_solution,
            start,
            metadata: ProblemMetadata { name: name.to_string(), dimension, seed: None, params: BTreeMap::new() },
        };
        instance.verify_solution()?;
        Ok(instance)
    }

    fn with_meta(mut self, seed: Option<u64>, params: &[(&str, f64)]) -> Self {
        self.metadata.seed = seed;
        self.metadata.params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        self
    }

    pub fn inclusion_residual(&self, x: &Vector) -> Result<f64> {
        self.operator.inclusion_residual(x)
    }

    /// Fails when the stored solution misses the inclusion by more than
    /// [`SOLUTION_RESIDUAL_TOL`].
    pub fn verify_solution(&self) -> Result<()> {
        if let Some(z) = &self.known_solution {
            let res = self.inclusion_residual(z)?;
            if !(res <= SOLUTION_RESIDUAL_TOL) {
                return Err(HpeError::InvalidConfig(format!(
                    "{}: known solution has inclusion residual {res:e}",
                    self.metadata.name
                )));
            }
        }
        Ok(())
    }
}

fn gaussian_vector(rng: &mut impl Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn lambda_max(sym: &Matrix) -> f64 {
    SymmetricEigen::new(sym.clone()).eigenvalues.max()
}

/// Strongly convex quadratic: `T x = Q x - b` with a log-spaced spectrum in
/// `[1 / cond, 1]` and a random orthogonal eigenbasis.
pub fn gen_quadratic(n: usize, condition_number: f64, seed: u64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(usage("quadratic: n must be >= 1"));
    }
    if !(condition_number >= 1.0 && condition_number.is_finite()) {
        return Err(usage(format!("quadratic: condition number must be >= 1, got {condition_number}")));
    }
    let mut rng = seeded_rng(seed);
    let basis = gaussian_matrix(&mut rng, n, n).qr().q();
    let spectrum =
        Vector::from_fn(n, |i, _| if n == 1 { 1.0 } else { condition_number.powf(-(i as f64) / (n - 1) as f64) });
    let q = &basis * Matrix::from_diagonal(&spectrum) * basis.transpose();
    let q = (&q + q.transpose()) * 0.5;
    let b = gaussian_vector(&mut rng, n);
    quadratic_from(q, b).map(|p| p.with_meta(Some(seed), &[("n", n as f64), ("cond", condition_number)]))
}

/// `T x = Q x - b` for a given symmetric positive definite `Q`.
pub fn quadratic_from(q: Matrix, b: Vector) -> Result<ProblemInstance> {
    let solution = q.clone().cholesky().ok_or_else(|| usage("quadratic: Q is not positive definite"))?.solve(&b);
    let op = OperatorSpec::quadratic_gradient(q, b)?;
    let lmax = op.quadratic_lambda_max().unwrap_or(0.0);
    let op = op.with_gamma(1.0 / lmax)?;
    ProblemInstance::new("quadratic", ProblemOperator::Single(op), Some(solution), None)
}

/// Sparse regression `min |Mx - d|^2 / 2 + lambda_1 |x|_1` as `0 in A x + B x`.
/// `sparsity` is the fraction of zero entries in the planted signal.
pub fn gen_composite(n: usize, sparsity: f64, seed: u64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(usage("composite: n must be >= 1"));
    }
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(usage(format!("composite: sparsity must lie in [0, 1], got {sparsity}")));
    }
    let m = 2 * n;
    let mut rng = seeded_rng(seed);
    let mat = gaussian_matrix(&mut rng, m, n) / (m as f64).sqrt();
    let zeros = (sparsity * n as f64).round() as usize;
    let mut x_true = gaussian_vector(&mut rng, n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for &i in &order[..zeros] {
        x_true[i] = 0.0;
    }
    let noise = gaussian_vector(&mut rng, m) * 0.01;
    let d = &mat * &x_true + noise;
    let lambda1 = 0.1 * (mat.transpose() * &d).amax();
    composite_from_data(mat, d, lambda1)
        .map(|p| p.with_meta(Some(seed), &[("n", n as f64), ("sparsity", sparsity), ("lambda1", lambda1)]))
}

/// `A x = M^T (M x - d)`, `B = lambda_1 d|.|`, solved by plain proximal
/// gradient for the reference solution.
pub fn composite_from_data(mat: Matrix, d: Vector, lambda1: f64) -> Result<ProblemInstance> {
    if mat.nrows() != d.len() {
        return Err(HpeError::DimensionMismatch { expected: mat.nrows(), found: d.len() });
    }
    let gram = mat.transpose() * &mat;
    let gram = (&gram + gram.transpose()) * 0.5;
    let rhs = mat.transpose() * &d;
    let solution = ista(&gram, &rhs, lambda1)?;
    let a = OperatorSpec::quadratic_gradient(gram, rhs)?;
    let lmax = a.quadratic_lambda_max().unwrap_or(0.0);
    let a = a.with_gamma(if lmax > 0.0 { 1.0 / lmax } else { f64::INFINITY })?;
    let b = OperatorSpec::abs_subdifferential(lambda1)?;
    ProblemInstance::new("composite", ProblemOperator::Split { a, b }, Some(solution), None)
}

fn soft_threshold(x: &Vector, t: f64) -> Vector {
    x.map(|xi| xi.signum() * (xi.abs() - t).max(0.0))
}

fn ista(gram: &Matrix, rhs: &Vector, lambda1: f64) -> Result<Vector> {
    let n = rhs.len();
    let lmax = lambda_max(gram);
    if !(lmax > 0.0) {
        return Ok(Vector::zeros(n));
    }
    let step = 1.0 / lmax;
    let mut x = Vector::zeros(n);
    for _ in 0..REFERENCE_MAX_ITERS {
        let grad = gram * &x - rhs;
        let next = soft_threshold(&(&x - grad * step), lambda1 * step);
        let res = (&next - &x).norm();
        x = next;
        if res <= REFERENCE_TOL {
            return Ok(x);
        }
    }
    Err(HpeError::InvalidConfig("composite: reference proximal gradient did not converge".into()))
}

/// Options for [`gen_saddle_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaddleOptions {
    /// Strong monotonicity of `B = lambda I`.
    pub lambda: f64,
    /// Adds the normal cone of `[-r, r]^n` to `B`.
    pub box_radius: Option<f64>,
    /// Draws a random right-hand side; otherwise the zero is the origin.
    pub shifted: bool,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions { lambda: 1.0, box_radius: None, shifted: true }
    }
}

/// Bilinear saddle problem: `A x = S x - rhs` with `S = [[0, K], [-K^T, 0]]`,
/// `B = lambda I` (optionally plus a box normal cone).
pub fn gen_saddle(n: usize, seed: u64) -> Result<ProblemInstance> {
    gen_saddle_with(n, seed, SaddleOptions::default())
}

pub fn gen_saddle_with(n: usize, seed: u64, opts: SaddleOptions) -> Result<ProblemInstance> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(usage(format!("saddle: n must be even and positive, got {n}")));
    }
    let h = n / 2;
    let mut rng = seeded_rng(seed);
    let coupling = gaussian_matrix(&mut rng, h, h) / (h as f64).sqrt();
    let rhs = if opts.shifted { gaussian_vector(&mut rng, n) } else { Vector::zeros(n) };
    let mut params = vec![("n", n as f64), ("lambda", opts.lambda)];
    if let Some(r) = opts.box_radius {
        params.push(("box", r));
    }
    saddle_from_coupling(&coupling, rhs, opts.lambda, opts.box_radius).map(|p| p.with_meta(Some(seed), &params))
}

pub fn saddle_matrix(coupling: &Matrix) -> Matrix {
    let (p, q) = coupling.shape();
    let mut s = Matrix::zeros(p + q, p + q);
    s.view_mut((0, p), (p, q)).copy_from(coupling);
    s.view_mut((p, 0), (q, p)).copy_from(&(-coupling.transpose()));
    s
}

pub fn saddle_from_coupling(
    coupling: &Matrix,
    rhs: Vector,
    lambda: f64,
    box_radius: Option<f64>,
) -> Result<ProblemInstance> {
    if !(lambda > 0.0) {
        return Err(usage(format!("saddle: lambda must be > 0, got {lambda}")));
    }
    let s = saddle_matrix(coupling);
    let n = s.nrows();
    if rhs.len() != n {
        return Err(HpeError::DimensionMismatch { expected: n, found: rhs.len() });
    }
    let beta = space::spectral_norm(&s);
    let a = if rhs.iter().all(|v| *v == 0.0) {
        OperatorSpec::skew(s.clone())?
    } else {
        OperatorSpec::affine_monotone(s.clone(), -&rhs)?
    }
    .with_beta(beta)?;
    let system = Matrix::identity(n, n) * lambda + &s;
    let (b, solution) = match box_radius {
        None => {
            let sol = system.clone().lu().solve(&rhs).ok_or_else(|| usage("saddle: singular system"))?;
            (OperatorSpec::scaled_identity(lambda)?, sol)
        }
        Some(r) => {
            if !(r > 0.0) {
                return Err(usage(format!("saddle: box radius must be > 0, got {r}")));
            }
            let cone = OperatorSpec::box_normal_cone(Vector::from_element(n, -r), Vector::from_element(n, r))?;
            let b = OperatorSpec::sum(OperatorSpec::scaled_identity(lambda)?, cone)?;
            (b, projected_extragradient(&system, &rhs, r, lambda + beta)?)
        }
    };
    ProblemInstance::new("saddle", ProblemOperator::Split { a, b }, Some(solution), None)
}

/// Korpelevich's method for the box-constrained affine variational inequality.
fn projected_extragradient(system: &Matrix, rhs: &Vector, radius: f64, lipschitz: f64) -> Result<Vector> {
    let project = |x: Vector| x.map(|xi| xi.clamp(-radius, radius));
    let field = |x: &Vector| system * x - rhs;
    let tau = 0.5 / lipschitz;
    let mut x = Vector::zeros(rhs.len());
    for _ in 0..REFERENCE_MAX_ITERS {
        let half = project(&x - field(&x) * tau);
        let next = project(&x - field(&half) * tau);
        let res = (&half - &x).norm();
        x = next;
        if res <= REFERENCE_TOL * tau {
            return Ok(x);
        }
    }
    Err(HpeError::InvalidConfig("saddle: reference extragradient did not converge".into()))
}

/// Generator family selected by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Quadratic,
    Composite,
    Saddle,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Quadratic => "quadratic",
            Family::Composite => "composite",
            Family::Saddle => "saddle",
        }
    }

    fn keys(&self) -> &'static [&'static str] {
        match self {
            Family::Quadratic => &["n", "cond"],
            Family::Composite => &["n", "sparsity"],
            Family::Saddle => &["n", "lambda", "box", "shift"],
        }
    }
}

impl FromStr for Family {
    type Err = HpeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "quadratic" => Ok(Family::Quadratic),
            "composite" => Ok(Family::Composite),
            "saddle" => Ok(Family::Saddle),
            other => Err(HpeError::Parse(format!("unknown generator '{other}' (quadratic, composite, saddle)"))),
        }
    }
}

/// Parsed form of `name,key=value,...,seed=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl GeneratorSpec {
    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.get(key, default as f64);
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(usage(format!("{key} must be a nonnegative integer, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn generate(&self) -> Result<ProblemInstance> {
        match self.family {
            Family::Quadratic => gen_quadratic(self.get_usize("n", 10)?, self.get("cond", 100.0), self.seed),
            Family::Composite => gen_composite(self.get_usize("n", 20)?, self.get("sparsity", 0.8), self.seed),
            Family::Saddle => {
                let opts = SaddleOptions {
                    lambda: self.get("lambda", 1.0),
                    box_radius: self.params.get("box").copied(),
                    shifted: self.get("shift", 1.0) != 0.0,
                };
                gen_saddle_with(self.get_usize("n", 4)?, self.seed, opts)
            }
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = HpeError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(',');
        let family: Family = parts.next().unwrap_or_default().parse()?;
        let mut params = BTreeMap::new();
        let mut seed = 0;
        for part in parts.map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) =
                part.split_once('=').ok_or_else(|| HpeError::Parse(format!("expected key=value, got '{part}'")))?;
            let key = key.trim();
            if key == "seed" {
                seed = value.trim().parse().map_err(|_| HpeError::Parse(format!("bad seed '{value}'")))?;
                continue;
            }
            if !family.keys().contains(&key) {
                return Err(HpeError::Parse(format!(
                    "unknown parameter '{key}' for {} (expected one of {:?})",
                    family.as_str(),
                    family.keys()
                )));
            }
            let value: f64 =
                value.trim().parse().map_err(|_| HpeError::Parse(format!("bad value for {key}: '{value}'")))?;
            params.insert(key.to_string(), value);
        }
        Ok(GeneratorSpec { family, params, seed })
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family.as_str())?;
        for (k, v) in &self.params {
            write!(f, ",{k}={v}")?;
        }
        write!(f, ",seed={}", self.seed)
    }
}
