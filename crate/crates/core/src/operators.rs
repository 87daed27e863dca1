//! Catalog of maximally monotone operators with exact resolvents, plus the
//! enlargement certificate calculus consumed by the driver.
//!
//! The catalog is closed: every kind knows how to evaluate itself (when
//! single-valued), how to invert `I + cT`, and how to describe its graph at a
//! point. Separable kinds (scaled identity, weighted `|.|` subdifferential and
//! box normal cone) act componentwise, so any sum of them has a closed-form
//! resolvent.

use std::sync::{Arc, Mutex};

use nalgebra::linalg::{SymmetricEigen, LU};
use nalgebra::Dyn;
use rand::Rng;

use crate::error::{usage, HpeError, Result};
use crate::space::{self, seeded_rng, Matrix, Vector};

const PSD_FLOOR: f64 = -1e-10;
const SKEW_TOL: f64 = 1e-12;
const MEMBERSHIP_TOL: f64 = 1e-10;
/// Half-width of the box that graph samples are drawn from.
pub const SAMPLE_RADIUS: f64 = 10.0;
pub const DEFAULT_GRAPH_SAMPLES: usize = 200;
const MODULUS_PROBE_PAIRS: usize = 100;
const MODULUS_PROBE_SEED: u64 = 0x006d_6f64_756c_7573;
/// Dimension used to probe moduli of dimension-free kinds.
const PROBE_DIM: usize = 4;

#[derive(Clone, Debug)]
pub enum OperatorKind {
    /// `x -> Mx` with `M + M^T` positive semidefinite.
    LinearPsd(Matrix),
    /// `x -> Sx` with `S = -S^T`.
    Skew(Matrix),
    /// `x -> lambda x`, `lambda >= 0`. Dimension-free.
    ScaledIdentity(f64),
    /// Componentwise `weight * d|.|`. Dimension-free.
    AbsSubdifferential {
        weight: f64,
    },
    /// Normal cone of `[lower, upper]`; infinite bounds are allowed.
    BoxNormalCone {
        lower: Vector,
        upper: Vector,
    },
    /// `x -> Mx + shift`, `M + M^T` positive semidefinite.
    AffineMonotone {
        matrix: Matrix,
        shift: Vector,
    },
    /// `x -> Qx - shift`, the gradient of `x^T Q x / 2 - shift^T x`.
    QuadraticGradient {
        matrix: Matrix,
        shift: Vector,
    },
    Sum(Box<OperatorSpec>, Box<OperatorSpec>),
}

#[derive(Clone, Debug)]
pub struct OperatorSpec {
    kind: OperatorKind,
    gamma: Option<f64>,
    beta: Option<f64>,
    dim: Option<usize>,
    eigen: Option<Arc<SymmetricEigen<f64, Dyn>>>,
    lu_cache: LuCache,
}

/// Memo of `I + cM` factorizations keyed by the bit pattern of `c`.
#[derive(Clone, Debug, Default)]
struct LuCache(Arc<Mutex<Vec<CacheSlot>>>);

type Factor = LU<f64, Dyn, Dyn>;
type CacheSlot = (u64, Arc<Factor>);

const LU_CACHE_SLOTS: usize = 8;

impl LuCache {
    fn factor(&self, m: &Matrix, c: f64) -> Arc<Factor> {
        let key = c.to_bits();
        let mut slots = self.0.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((_, lu)) = slots.iter().find(|(k, _)| *k == key) {
            return lu.clone();
        }
        let n = m.nrows();
        let lu = Arc::new((Matrix::identity(n, n) + m * c).lu());
        if slots.len() == LU_CACHE_SLOTS {
            slots.remove(0);
        }
        slots.push((key, lu.clone()));
        lu
    }
}

fn square_dim(m: &Matrix, what: &str) -> Result<usize> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(usage(format!("{what} matrix must be square and nonempty, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(usage(format!("{what} matrix has non-finite entries")));
    }
    Ok(m.nrows())
}

fn check_psd_part(m: &Matrix, what: &str) -> Result<()> {
    let floor = space::sym_part_min_eigenvalue(m);
    if floor < PSD_FLOOR {
        return Err(usage(format!("{what}: symmetric part has eigenvalue {floor:e} below {PSD_FLOOR:e}")));
    }
    Ok(())
}

fn check_shift(shift: &Vector, n: usize) -> Result<()> {
    if shift.len() != n {
        return Err(HpeError::DimensionMismatch { expected: n, found: shift.len() });
    }
    if !space::is_finite(shift) {
        return Err(usage("shift vector has non-finite entries"));
    }
    Ok(())
}

impl OperatorSpec {
    fn from_kind(kind: OperatorKind, dim: Option<usize>) -> Self {
        OperatorSpec { kind, gamma: None, beta: None, dim, eigen: None, lu_cache: LuCache::default() }
    }

    pub fn linear_psd(m: Matrix) -> Result<Self> {
        let n = square_dim(&m, "LinearPSD")?;
        check_psd_part(&m, "LinearPSD")?;
        Ok(Self::from_kind(OperatorKind::LinearPsd(m), Some(n)))
    }

    pub fn skew(s: Matrix) -> Result<Self> {
        let n = square_dim(&s, "Skew")?;
        let defect = space::max_abs_skew_defect(&s);
        if defect > SKEW_TOL {
            return Err(usage(format!("Skew: S + S^T has entry {defect:e}")));
        }
        Ok(Self::from_kind(OperatorKind::Skew(s), Some(n)))
    }

    pub fn scaled_identity(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(usage(format!("ScaledIdentity needs a finite lambda >= 0, got {lambda}")));
        }
        Ok(Self::from_kind(OperatorKind::ScaledIdentity(lambda), None))
    }

    pub fn abs_subdifferential(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(usage(format!("AbsSubdifferential needs a finite weight >= 0, got {weight}")));
        }
        Ok(Self::from_kind(OperatorKind::AbsSubdifferential { weight }, None))
    }

    pub fn box_normal_cone(lower: Vector, upper: Vector) -> Result<Self> {
        space::ensure_same_dim(&lower, &upper)?;
        if lower.is_empty() {
            return Err(usage("BoxNormalCone needs at least one component"));
        }
        for i in 0..lower.len() {
            let (l, u) = (lower[i], upper[i]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(usage(format!("BoxNormalCone: empty interval [{l}, {u}] at component {i}")));
            }
        }
        let n = lower.len();
        Ok(Self::from_kind(OperatorKind::BoxNormalCone { lower, upper }, Some(n)))
    }

    pub fn affine_monotone(matrix: Matrix, shift: Vector) -> Result<Self> {
        let n = square_dim(&matrix, "AffineMonotone")?;
        check_shift(&shift, n)?;
        check_psd_part(&matrix, "AffineMonotone")?;
        Ok(Self::from_kind(OperatorKind::AffineMonotone { matrix, shift }, Some(n)))
    }

    pub fn quadratic_gradient(matrix: Matrix, shift: Vector) -> Result<Self> {
        let n = square_dim(&matrix, "QuadraticGradient")?;
        check_shift(&shift, n)?;
        let asym = space::max_abs_asymmetry(&matrix);
        if asym > SKEW_TOL * matrix.amax().max(1.0) {
            return Err(usage(format!("QuadraticGradient: Q is not symmetric (defect {asym:e})")));
        }
        let eigen = SymmetricEigen::new((&matrix + matrix.transpose()) * 0.5);
        let floor = eigen.eigenvalues.min();
        if floor < PSD_FLOOR {
            return Err(usage(format!("QuadraticGradient: Q has eigenvalue {floor:e}")));
        }
        let mut op = Self::from_kind(OperatorKind::QuadraticGradient { matrix, shift }, Some(n));
        op.eigen = Some(Arc::new(eigen));
        Ok(op)
    }

    pub fn sum(left: OperatorSpec, right: OperatorSpec) -> Result<Self> {
        let dim = match (left.dim, right.dim) {
            (Some(a), Some(b)) if a != b => return Err(HpeError::DimensionMismatch { expected: a, found: b }),
            (a, b) => a.or(b),
        };
        let op = Self::from_kind(OperatorKind::Sum(Box::new(left), Box::new(right)), dim);
        let boxes: Vec<&OperatorSpec> =
            op.leaves().into_iter().filter(|l| matches!(l.kind, OperatorKind::BoxNormalCone { .. })).collect();
        if let (Some(l), Some(u)) = SeparableProx::from_leaves(&boxes).bounds() {
            if let Some(i) = (0..l.len()).find(|&i| l[i] > u[i]) {
                return Err(usage(format!("sum of box constraints is empty at component {i}")));
            }
        }
        Ok(op)
    }

    /// Declares a cocoercivity modulus. For quadratic gradients it must equal
    /// `1 / lambda_max(Q)`; other kinds are probed on sampled pairs.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || gamma.is_nan() {
            return Err(usage(format!("gamma must be > 0, got {gamma}")));
        }
        if !self.is_single_valued() {
            return Err(usage("gamma declared on a set-valued operator"));
        }
        if let OperatorKind::QuadraticGradient { .. } = self.kind {
            let lmax = self.eigen.as_ref().map(|e| e.eigenvalues.max()).unwrap_or(0.0);
            let expected = if lmax > 0.0 { 1.0 / lmax } else { f64::INFINITY };
            let ok = if expected.is_infinite() {
                gamma.is_infinite() || lmax <= 0.0
            } else {
                (gamma - expected).abs() <= 1e-9 * expected
            };
            if !ok {
                return Err(usage(format!("gamma {gamma} differs from 1/lambda_max(Q) = {expected}")));
            }
        } else {
            self.probe_pairs(|dx, da| {
                let lhs = dx.dot(da);
                let rhs = gamma * da.norm_squared();
                lhs >= rhs * (1.0 - 1e-9) - 1e-12 * (1.0 + dx.norm_squared())
            })
            .map_err(|_| usage(format!("operator is not {gamma}-cocoercive on sampled pairs")))?;
        }
        self.gamma = Some(gamma);
        Ok(self)
    }

    /// Declares a Lipschitz modulus, verified on sampled pairs.
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(usage(format!("beta must be finite and >= 0, got {beta}")));
        }
        if !self.is_single_valued() {
            return Err(usage("beta declared on a set-valued operator"));
        }
        self.probe_pairs(|dx, da| da.norm() <= beta * dx.norm() * (1.0 + 1e-12) + 1e-12)
            .map_err(|_| usage(format!("operator is not {beta}-Lipschitz on sampled pairs")))?;
        self.beta = Some(beta);
        Ok(self)
    }

    fn probe_pairs(&self, accept: impl Fn(&Vector, &Vector) -> bool) -> Result<()> {
        let n = self.dim.unwrap_or(PROBE_DIM);
        let mut rng = seeded_rng(MODULUS_PROBE_SEED);
        for _ in 0..MODULUS_PROBE_PAIRS {
            let x = Vector::from_fn(n, |_, _| rng.random_range(-SAMPLE_RADIUS..SAMPLE_RADIUS));
            let y = Vector::from_fn(n, |_, _| rng.random_range(-SAMPLE_RADIUS..SAMPLE_RADIUS));
            let da = self.apply(&x)? - self.apply(&y)?;
            if !accept(&(x - y), &da) {
                return Err(usage("modulus probe failed"));
            }
        }
        Ok(())
    }

    /// Largest eigenvalue of `Q` for quadratic gradients.
    pub fn quadratic_lambda_max(&self) -> Option<f64> {
        self.eigen.as_ref().map(|e| e.eigenvalues.max())
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// `None` for dimension-free kinds (and sums made only of them).
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn is_single_valued(&self) -> bool {
        match &self.kind {
            OperatorKind::AbsSubdifferential { .. } | OperatorKind::BoxNormalCone { .. } => false,
            OperatorKind::Sum(l, r) => l.is_single_valued() && r.is_single_valued(),
            _ => true,
        }
    }

    fn is_separable_leaf(&self) -> bool {
        matches!(
            self.kind,
            OperatorKind::ScaledIdentity(_)
                | OperatorKind::AbsSubdifferential { .. }
                | OperatorKind::BoxNormalCone { .. }
        )
    }

    fn leaves(&self) -> Vec<&OperatorSpec> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(op) = stack.pop() {
            match &op.kind {
                OperatorKind::Sum(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
                _ => out.push(op),
            }
        }
        out
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        match self.dim {
            Some(n) if n != x.len() => Err(HpeError::DimensionMismatch { expected: n, found: x.len() }),
            _ => Ok(()),
        }
    }

    /// Single-valued evaluation `Ax`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        if !self.is_single_valued() {
            return Err(usage("apply called on a set-valued operator"));
        }
        self.check_dim(x)?;
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &Vector) -> Vector {
        match &self.kind {
            OperatorKind::LinearPsd(m) | OperatorKind::Skew(m) => m * x,
            OperatorKind::ScaledIdentity(lambda) => x * *lambda,
            OperatorKind::AffineMonotone { matrix, shift } => matrix * x + shift,
            OperatorKind::QuadraticGradient { matrix, shift } => matrix * x - shift,
            OperatorKind::Sum(l, r) => l.apply_unchecked(x) + r.apply_unchecked(x),
            OperatorKind::AbsSubdifferential { .. } | OperatorKind::BoxNormalCone { .. } => {
                unreachable!("set-valued kinds are filtered by apply")
            }
        }
    }

    /// The resolvent `J_{cT} x`, i.e. the unique `p` with `x - p` in `c T(p)`.
    pub fn resolvent(&self, c: f64, x: &Vector) -> Result<Vector> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(usage(format!("resolvent step must be finite and > 0, got {c}")));
        }
        self.check_dim(x)?;
        let leaves = self.leaves();
        if leaves.iter().all(|l| l.is_separable_leaf()) {
            return Ok(SeparableProx::from_leaves(&leaves).prox(c, x));
        }
        let (others, rest): (Vec<&OperatorSpec>, Vec<&OperatorSpec>) =
            leaves.into_iter().partition(|l| !l.is_separable_leaf());
        let lambda: Option<f64> = rest.iter().try_fold(0.0, |acc, l| match l.kind {
            OperatorKind::ScaledIdentity(v) => Some(acc + v),
            _ => None,
        });
        match (others.as_slice(), lambda) {
            // x - p in c(lambda p + T p)  <=>  p = J_{c' T}(x / s), s = 1 + c lambda, c' = c / s
            ([single], Some(lambda)) => {
                let s = 1.0 + c * lambda;
                Ok(single.leaf_resolvent(c / s, &(x / s)))
            }
            _ => Err(HpeError::UnsupportedOperator(
                "resolvent of a sum needs all-separable terms or one term plus scaled identities".into(),
            )),
        }
    }

    fn leaf_resolvent(&self, c: f64, x: &Vector) -> Vector {
        match &self.kind {
            OperatorKind::LinearPsd(m) | OperatorKind::Skew(m) => {
                self.lu_cache.factor(m, c).solve(x).expect("I + cM is nonsingular for monotone M")
            }
            OperatorKind::AffineMonotone { matrix, shift } => {
                self.lu_cache.factor(matrix, c).solve(&(x - shift * c)).expect("I + cM is nonsingular for monotone M")
            }
            OperatorKind::QuadraticGradient { shift, .. } => {
                let eig = self.eigen.as_ref().expect("quadratic kinds carry an eigendecomposition");
                let rhs = x + shift * c;
                let mut coords = eig.eigenvectors.tr_mul(&rhs);
                for (ci, lambda) in coords.iter_mut().zip(eig.eigenvalues.iter()) {
                    *ci /= 1.0 + c * lambda.max(0.0);
                }
                &eig.eigenvectors * coords
            }
            _ => SeparableProx::from_leaves(&[self]).prox(c, x),
        }
    }

    /// How far `p` is from satisfying the resolvent inclusion `x - p in cT(p)`.
    ///
    /// Single-valued operators report `|x - p - c T p|`; set-valued ones report
    /// the distance from `(x - p)/c` to `T(p)` (infinite outside the domain).
    pub fn resolvent_residual(&self, c: f64, x: &Vector, p: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        space::ensure_same_dim(x, p)?;
        if self.is_single_valued() {
            return Ok((x - p - self.apply_unchecked(p) * c).norm());
        }
        if !(c > 0.0) {
            return Err(usage("resolvent residual of a set-valued operator needs c > 0"));
        }
        let leaves = self.leaves();
        let (set_valued, single): (Vec<&OperatorSpec>, Vec<&OperatorSpec>) =
            leaves.into_iter().partition(|l| !l.is_single_valued());
        let mut target = (x - p) / c;
        for s in single {
            target -= s.apply_unchecked(p);
        }
        let mut total = 0.0;
        for i in 0..p.len() {
            let (lo, hi) = set_valued.iter().fold((0.0, 0.0), |(lo, hi), leaf| {
                let (a, b) = leaf.component_interval(i, p[i]);
                (lo + a, hi + b)
            });
            let d = if lo.is_nan() || hi.is_nan() || lo > hi {
                f64::INFINITY
            } else if target[i] < lo {
                lo - target[i]
            } else if target[i] > hi {
                target[i] - hi
            } else {
                0.0
            };
            total += d * d;
        }
        Ok(total.sqrt())
    }

    /// `T(p)_i` as a closed interval; `(inf, -inf)` encodes the empty set.
    fn component_interval(&self, i: usize, p: f64) -> (f64, f64) {
        match &self.kind {
            OperatorKind::AbsSubdifferential { weight } => {
                if p > 0.0 {
                    (*weight, *weight)
                } else if p < 0.0 {
                    (-weight, -weight)
                } else {
                    (-weight, *weight)
                }
            }
            OperatorKind::BoxNormalCone { lower, upper } => {
                let (l, u) = (lower[i], upper[i]);
                if p < l || p > u {
                    (f64::INFINITY, f64::NEG_INFINITY)
                } else if l == u {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else if p == l {
                    (f64::NEG_INFINITY, 0.0)
                } else if p == u {
                    (0.0, f64::INFINITY)
                } else {
                    (0.0, 0.0)
                }
            }
            _ => unreachable!("only set-valued leaves describe intervals"),
        }
    }

    /// Seeded graph points `(w, u)` with `u in T(w)`, drawn around `center`.
    ///
    /// Single-valued operators are evaluated at uniform points of the box of
    /// half-width [`SAMPLE_RADIUS`]. Otherwise a uniform point `q` is pushed
    /// through the resolvent of the set-valued part (`w = J q`, `q - w` lies in
    /// its graph) and the single-valued part is added at `w`.
    pub fn sample_graph(&self, center: &Vector, count: usize, seed: u64) -> Result<Vec<(Vector, Vector)>> {
        self.check_dim(center)?;
        let n = center.len();
        let leaves = self.leaves();
        let (set_valued, single): (Vec<&OperatorSpec>, Vec<&OperatorSpec>) =
            leaves.into_iter().partition(|l| !l.is_single_valued());
        let prox = (!set_valued.is_empty()).then(|| SeparableProx::from_leaves(&set_valued));
        let mut rng = seeded_rng(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let q = Vector::from_fn(n, |i, _| center[i] + rng.random_range(-SAMPLE_RADIUS..SAMPLE_RADIUS));
            let (w, mut u) = match &prox {
                Some(prox) => {
                    let w = prox.prox(1.0, &q);
                    let u = &q - &w;
                    (w, u)
                }
                None => (q, Vector::zeros(n)),
            };
            for s in &single {
                u += s.apply_unchecked(&w);
            }
            out.push((w, u));
        }
        Ok(out)
    }

    /// Necessary-condition test for `cert.v` in `T^[eps](cert.y)` over the
    /// supplied graph points. `false` refutes membership; `true` is evidence.
    pub fn enlargement_membership(&self, cert: &Certificate, samples: &[(Vector, Vector)]) -> Result<bool> {
        self.check_dim(&cert.y)?;
        for (w, u) in samples {
            space::ensure_same_dim(&cert.y, w)?;
            space::ensure_same_dim(&cert.v, u)?;
            let pairing = (&cert.y - w).dot(&(&cert.v - u));
            if pairing < -cert.eps - MEMBERSHIP_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// [`Self::enlargement_membership`] against [`DEFAULT_GRAPH_SAMPLES`] seeded samples.
    pub fn enlargement_membership_sampled(&self, cert: &Certificate, seed: u64) -> Result<bool> {
        let samples = self.sample_graph(&cert.y, DEFAULT_GRAPH_SAMPLES, seed)?;
        self.enlargement_membership(cert, &samples)
    }
}

/// Componentwise prox of `lambda/2 p^2 + weight |p| + indicator([lower, upper])`.
#[derive(Debug)]
struct SeparableProx {
    lambda: f64,
    weight: f64,
    lower: Option<Vector>,
    upper: Option<Vector>,
}

impl SeparableProx {
    fn bounds(&self) -> (Option<&Vector>, Option<&Vector>) {
        (self.lower.as_ref(), self.upper.as_ref())
    }

    fn from_leaves(leaves: &[&OperatorSpec]) -> Self {
        let mut prox = SeparableProx { lambda: 0.0, weight: 0.0, lower: None, upper: None };
        for leaf in leaves {
            match &leaf.kind {
                OperatorKind::ScaledIdentity(l) => prox.lambda += l,
                OperatorKind::AbsSubdifferential { weight } => prox.weight += weight,
                OperatorKind::BoxNormalCone { lower, upper } => {
                    prox.lower = Some(match prox.lower.take() {
                        Some(cur) => cur.zip_map(lower, f64::max),
                        None => lower.clone(),
                    });
                    prox.upper = Some(match prox.upper.take() {
                        Some(cur) => cur.zip_map(upper, f64::min),
                        None => upper.clone(),
                    });
                }
                _ => unreachable!("non-separable leaf"),
            }
        }
        prox
    }

    // The 1-D objective is convex, so clamping the unconstrained minimizer
    // onto the interval gives the constrained one.
    fn prox(&self, c: f64, x: &Vector) -> Vector {
        let threshold = c * self.weight;
        let scale = 1.0 + c * self.lambda;
        Vector::from_fn(x.len(), |i, _| {
            let xi = x[i];
            let shrunk = if xi > threshold {
                xi - threshold
            } else if xi < -threshold {
                xi + threshold
            } else {
                0.0
            };
            let mut p = shrunk / scale;
            if let Some(l) = &self.lower {
                p = p.max(l[i]);
            }
            if let Some(u) = &self.upper {
                p = p.min(u[i]);
            }
            p
        })
    }
}

/// Which enlargement rule guarantees a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ExactGraph,
    CocoerciveRule,
    SumRule,
    Composite,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::ExactGraph => "exact_graph",
            Provenance::CocoerciveRule => "cocoercive_rule",
            Provenance::SumRule => "sum_rule",
            Provenance::Composite => "composite",
        }
    }
}

/// A triple `(y, v, eps)` with `v` in the `eps`-enlargement of `T` at `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    y: Vector,
    v: Vector,
    eps: f64,
    provenance: Provenance,
}

impl Certificate {
    pub fn new(y: Vector, v: Vector, eps: f64, provenance: Provenance) -> Result<Self> {
        space::ensure_same_dim(&y, &v)?;
        if !(eps >= 0.0) {
            return Err(usage(format!("certificate eps must be >= 0, got {eps}")));
        }
        Ok(Certificate { y, v, eps, provenance })
    }

    /// A point on the graph itself (`eps = 0`).
    pub fn exact(y: Vector, v: Vector) -> Result<Self> {
        Self::new(y, v, 0.0, Provenance::ExactGraph)
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn v(&self) -> &Vector {
        &self.v
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Enlarges the tolerance; enlargements are nested in `eps`.
    pub fn relaxed(&self, eps: f64) -> Result<Self> {
        if eps < self.eps {
            return Err(usage(format!("cannot shrink eps from {} to {eps}", self.eps)));
        }
        Ok(Certificate { eps, ..self.clone() })
    }
}

/// `Az` lies in the enlargement of `A` at `x` with `eps = |x - z|^2 / (4 gamma)`.
pub fn cocoercive_certificate(op: &OperatorSpec, x: &Vector, z: &Vector) -> Result<Certificate> {
    let gamma = op.gamma().ok_or_else(|| usage("cocoercive certificate needs a declared gamma"))?;
    space::ensure_same_dim(x, z)?;
    let v = op.apply(z)?;
    let eps = space::dist_sq(x, z) / (4.0 * gamma);
    Certificate::new(x.clone(), v, eps, Provenance::CocoerciveRule)
}

/// Certificates for `T1` and `T2` at the same point add up to one for `T1 + T2`.
pub fn sum_certificate(c1: &Certificate, c2: &Certificate) -> Result<Certificate> {
    space::ensure_same_dim(&c1.y, &c2.y)?;
    let gap = (&c1.y - &c2.y).norm();
    if gap > 1e-12 * (1.0 + c1.y.norm()) {
        return Err(usage(format!("certificates have different base points (gap {gap:e})")));
    }
    Certificate::new(c1.y.clone(), &c1.v + &c2.v, c1.eps + c2.eps, Provenance::SumRule)
}
