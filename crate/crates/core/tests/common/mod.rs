#![allow(dead_code)]

use std::cell::RefCell;

use inertial_hpe::error::Result;
use inertial_hpe::hpe::{CertificateOracle, IterationState};
use inertial_hpe::operators::{Certificate, OperatorSpec};
use inertial_hpe::space::{seeded_rng, Matrix, Vector};
use nalgebra::DMatrix;
use rand::Rng;

pub fn uniform_vector(rng: &mut impl Rng, n: usize, radius: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-radius..radius))
}

pub fn uniform_matrix(rng: &mut impl Rng, n: usize) -> Matrix {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

/// One operator of every catalog kind (plus two sums), all of dimension `n`.
pub fn catalog(n: usize, seed: u64) -> Vec<(&'static str, OperatorSpec)> {
    let mut rng = seeded_rng(seed);
    let g = uniform_matrix(&mut rng, n);
    let psd = &g * g.transpose();
    let raw = uniform_matrix(&mut rng, n);
    let skew = (&raw - raw.transpose()) * 0.5;
    // nonsymmetric with positive semidefinite symmetric part
    let affine = &psd + &skew;
    let shift = uniform_vector(&mut rng, n, 1.0);
    let lower = Vector::from_fn(n, |i, _| if i % 3 == 0 { f64::NEG_INFINITY } else { -1.0 });
    let upper = Vector::from_fn(n, |i, _| if i % 3 == 1 { f64::INFINITY } else { 0.5 });
    let boxed = || OperatorSpec::box_normal_cone(lower.clone(), upper.clone()).unwrap();
    let quad = || OperatorSpec::quadratic_gradient(psd.clone(), shift.clone()).unwrap();
    vec![
        ("linear_psd", OperatorSpec::linear_psd(psd.clone()).unwrap()),
        ("skew", OperatorSpec::skew(skew.clone()).unwrap()),
        ("scaled_identity", OperatorSpec::scaled_identity(0.7).unwrap()),
        ("abs_subdifferential", OperatorSpec::abs_subdifferential(0.4).unwrap()),
        ("box_normal_cone", boxed()),
        ("affine_monotone", OperatorSpec::affine_monotone(affine, shift.clone()).unwrap()),
        ("quadratic_gradient", quad()),
        (
            "sum_separable",
            OperatorSpec::sum(
                OperatorSpec::scaled_identity(0.3).unwrap(),
                OperatorSpec::sum(OperatorSpec::abs_subdifferential(0.2).unwrap(), boxed()).unwrap(),
            )
            .unwrap(),
        ),
        ("sum_quadratic_identity", OperatorSpec::sum(quad(), OperatorSpec::scaled_identity(0.5).unwrap()).unwrap()),
    ]
}

/// What the driver handed to the oracle and what came back.
#[derive(Clone, Debug)]
pub struct Step {
    pub k: usize,
    pub x_prev: Vector,
    pub x: Vector,
    pub y_prev: Vector,
    pub cert: Certificate,
    pub c: f64,
    pub alpha: f64,
}

/// Wraps an oracle and logs every exchange.
pub struct Recorder<'a> {
    inner: &'a dyn CertificateOracle,
    pub log: RefCell<Vec<Step>>,
}

impl<'a> Recorder<'a> {
    pub fn new(inner: &'a dyn CertificateOracle) -> Self {
        Recorder { inner, log: RefCell::new(Vec::new()) }
    }

    /// The driver's iterates `x^2, x^3, ...` as seen by the oracle.
    pub fn iterates(&self) -> Vec<Vector> {
        self.log.borrow().iter().map(|s| s.x.clone()).collect()
    }
}

impl CertificateOracle for Recorder<'_> {
    fn certificate(&self, state: &IterationState, c_k: f64, alpha_k: f64) -> Result<Certificate> {
        let cert = self.inner.certificate(state, c_k, alpha_k)?;
        self.log.borrow_mut().push(Step {
            k: state.k,
            x_prev: state.x_prev.clone(),
            x: state.x_curr.clone(),
            y_prev: state.y_prev.clone(),
            cert: cert.clone(),
            c: c_k,
            alpha: alpha_k,
        });
        Ok(cert)
    }
}

/// Reference resolvents written independently of the library.
pub mod reference {
    use super::*;

    /// `(I + cQ)^{-1} (x + c b)` for `T = Qx - b`.
    pub fn quadratic(q: &Matrix, b: &Vector, c: f64, x: &Vector) -> Vector {
        let n = x.len();
        let m = Matrix::identity(n, n) + q * c;
        m.lu().solve(&(x + b * c)).expect("I + cQ is invertible")
    }

    pub fn soft_threshold(x: &Vector, t: f64) -> Vector {
        x.map(|v| {
            if v > t {
                v - t
            } else if v < -t {
                v + t
            } else {
                0.0
            }
        })
    }

    /// Resolvent of `lambda I + N_[lo, hi]`.
    pub fn shrink_clamp(x: &Vector, c: f64, lambda: f64, lo: f64, hi: f64) -> Vector {
        x.map(|v| (v / (1.0 + c * lambda)).max(lo).min(hi))
    }
}

pub mod embedding {
    use super::reference;
    use super::Recorder;
    use inertial_hpe::hpe::{self, InitialPoints};
    use inertial_hpe::operators::{OperatorKind, OperatorSpec};
    use inertial_hpe::problems::{
        gen_composite, gen_quadratic, gen_saddle_with, ProblemInstance, ProblemOperator, SaddleOptions,
    };
    use inertial_hpe::runner::{self, OracleKind, Overrides};
    use inertial_hpe::space::{seeded_rng, Matrix, Vector};

    pub const ITERATIONS: usize = 100;

    pub struct Comparison {
        /// Largest componentwise gap between driver and dedicated iterates.
        pub max_deviation: f64,
        /// Smallest `slack / (1 + rhs)` seen by the driver.
        pub min_slack_ratio: f64,
        /// Certificates refuted by sampled membership in `A + B`.
        pub membership_failures: usize,
    }

    fn matrix_and_shift(op: &OperatorSpec) -> (Matrix, Vector) {
        match op.kind() {
            OperatorKind::QuadraticGradient { matrix, shift } => (matrix.clone(), shift.clone()),
            OperatorKind::AffineMonotone { matrix, shift } => (matrix.clone(), shift.clone()),
            OperatorKind::Skew(m) => (m.clone(), Vector::zeros(m.nrows())),
            other => panic!("unexpected kind {other:?}"),
        }
    }

    fn instance(oracle: OracleKind, seed: u64) -> ProblemInstance {
        let mut p = match oracle {
            OracleKind::Ipp => gen_quadratic(6, 20.0, seed).unwrap(),
            OracleKind::Fb => gen_composite(8, 0.5, seed).unwrap(),
            OracleKind::Fbf => {
                gen_saddle_with(6, seed, SaddleOptions { box_radius: Some(0.5), ..Default::default() }).unwrap()
            }
        };
        let mut rng = seeded_rng(seed ^ 0x5eed);
        p.start = super::uniform_vector(&mut rng, p.metadata.dimension, 3.0);
        p
    }

    /// The method's own recursion, from `x^1 = x^2 = start`.
    fn dedicated(oracle: OracleKind, p: &ProblemInstance, alpha: f64, c: f64) -> Vec<Vector> {
        let mut prev = p.start.clone();
        let mut x = p.start.clone();
        let mut out = vec![x.clone()];
        for _ in 0..ITERATIONS {
            let inertia = &x - &prev;
            let next = match (&p.operator, oracle) {
                (ProblemOperator::Single(t), OracleKind::Ipp) => {
                    let (q, b) = matrix_and_shift(t);
                    reference::quadratic(&q, &b, c, &(&x + &inertia * alpha))
                }
                (ProblemOperator::Split { a, b }, OracleKind::Fb) => {
                    let (g, r) = matrix_and_shift(a);
                    let OperatorKind::AbsSubdifferential { weight } = b.kind() else { panic!() };
                    let grad = &g * &x - &r;
                    reference::soft_threshold(&(&x - grad * c + &inertia * alpha), c * weight)
                }
                (ProblemOperator::Split { a, .. }, OracleKind::Fbf) => {
                    let (s, shift) = matrix_and_shift(a);
                    let lambda = p.metadata.params["lambda"];
                    let radius = p.metadata.params["box"];
                    let ax = &s * &x + &shift;
                    let y = reference::shrink_clamp(&(&x - &ax * c + &inertia * alpha), c, lambda, -radius, radius);
                    let ay = &s * &y + &shift;
                    &y + (ax - ay) * c
                }
                _ => unreachable!(),
            };
            prev = std::mem::replace(&mut x, next);
            out.push(x.clone());
        }
        out
    }

    /// Runs the driver and the dedicated recursion side by side for
    /// [`ITERATIONS`] steps with the oracle's default parameters.
    pub fn compare(oracle: OracleKind, seed: u64) -> Comparison {
        let p = instance(oracle, seed);
        let ov = Overrides { max_iters: Some(ITERATIONS), tol: Some(f64::MIN_POSITIVE), ..Default::default() };
        let plan = runner::plan(&p.operator, oracle, &ov).unwrap();
        let built = runner::build_oracle(&p.operator, &plan).unwrap();
        let rec = Recorder::new(built.as_ref());
        let result = hpe::run(&rec, &plan.config, InitialPoints::from_start(p.start.clone()), None).unwrap();
        // An exact fixed point (v = 0, eps = 0) stops the driver early; the
        // dedicated recursion must then stay put.
        let mut driver = rec.iterates();
        driver.resize(ITERATIONS + 1, result.x.clone());
        let reference = dedicated(oracle, &p, plan.config.alpha, plan.config.c_lower);
        assert_eq!(driver.len(), reference.len());
        let max_deviation = driver.iter().zip(&reference).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);

        let min_slack_ratio = result.trace.iter().map(|r| r.slack / (1.0 + r.rhs)).fold(f64::INFINITY, f64::min);
        let combined = p.operator.combined().unwrap();
        let membership_failures = rec
            .log
            .borrow()
            .iter()
            .step_by(10)
            .filter(|s| !combined.enlargement_membership_sampled(&s.cert, s.k as u64).unwrap())
            .count();
        Comparison { max_deviation, min_slack_ratio, membership_failures }
    }
}
