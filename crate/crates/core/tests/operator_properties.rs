mod common;

use common::{catalog, uniform_vector};
use inertial_hpe::operators::{cocoercive_certificate, Certificate, OperatorSpec};
use inertial_hpe::space::{seeded_rng, Vector};
use proptest::prelude::*;

const N: usize = 5;
const PAIRS: usize = 1000;

#[test]
fn resolvent_residual_is_tiny_for_every_kind() {
    let steps = [0.1, 1.0, 10.0];
    for (name, op) in catalog(N, 21) {
        let mut rng = seeded_rng(1);
        let mut worst: f64 = 0.0;
        for i in 0..PAIRS {
            let c = steps[i % steps.len()];
            let x = uniform_vector(&mut rng, N, 10.0);
            let p = op.resolvent(c, &x).unwrap();
            worst = worst.max(op.resolvent_residual(c, &x, &p).unwrap());
        }
        assert!(worst <= 1e-9, "{name}: worst residual {worst:e}");
    }
}

#[test]
fn resolvents_are_firmly_nonexpansive() {
    for (name, op) in catalog(N, 22) {
        let mut rng = seeded_rng(2);
        for i in 0..PAIRS {
            let c = [0.1, 1.0, 10.0][i % 3];
            let x1 = uniform_vector(&mut rng, N, 10.0);
            let x2 = uniform_vector(&mut rng, N, 10.0);
            let d = op.resolvent(c, &x1).unwrap() - op.resolvent(c, &x2).unwrap();
            let lhs = d.norm_squared();
            let rhs = (&x1 - &x2).dot(&d);
            assert!(lhs <= rhs + 1e-10, "{name}: {lhs} > {rhs}");
        }
    }
}

#[test]
fn single_valued_kinds_are_monotone() {
    for (name, op) in catalog(N, 23).into_iter().filter(|(_, op)| op.is_single_valued()) {
        let mut rng = seeded_rng(3);
        for _ in 0..PAIRS {
            let x = uniform_vector(&mut rng, N, 10.0);
            let y = uniform_vector(&mut rng, N, 10.0);
            let pairing = (&x - &y).dot(&(op.apply(&x).unwrap() - op.apply(&y).unwrap()));
            assert!(pairing >= -1e-10, "{name}: pairing {pairing}");
        }
    }
}

fn cocoercive_quadratic() -> OperatorSpec {
    let q = nalgebra::dmatrix![2.0, 0.5, 0.0; 0.5, 1.0, 0.2; 0.0, 0.2, 0.5];
    let op = OperatorSpec::quadratic_gradient(q, Vector::from_column_slice(&[1.0, -1.0, 0.5])).unwrap();
    let lmax = op.quadratic_lambda_max().unwrap();
    op.with_gamma(1.0 / lmax).unwrap()
}

#[test]
fn limits_of_certificates_stay_in_the_enlargement() {
    let op = cocoercive_quadratic();
    let x = Vector::from_column_slice(&[0.3, -0.2, 1.0]);
    let z = Vector::from_column_slice(&[1.0, 1.0, -1.0]);
    let samples = op.sample_graph(&x, 200, 99).unwrap();
    for k in 1..=50 {
        let zk = &z + Vector::from_element(3, 1.0 / k as f64);
        let cert = cocoercive_certificate(&op, &x, &zk).unwrap();
        assert!(op.enlargement_membership(&cert, &samples).unwrap(), "k = {k}");
    }
    let limit = cocoercive_certificate(&op, &x, &z).unwrap();
    assert!(op.enlargement_membership(&limit, &samples).unwrap());
}

#[test]
fn exact_resolvent_certificates_pass_membership() {
    for (name, op) in catalog(N, 24) {
        let mut rng = seeded_rng(4);
        for i in 0..20 {
            let x = uniform_vector(&mut rng, N, 5.0);
            let c = 0.5 + i as f64 * 0.1;
            let y = op.resolvent(c, &x).unwrap();
            let cert = Certificate::exact(y.clone(), (&x - &y) / c).unwrap();
            assert!(op.enlargement_membership_sampled(&cert, i).unwrap(), "{name}, sample {i}");
        }
    }
}

proptest! {
    #[test]
    fn membership_is_monotone_in_eps(
        x in proptest::collection::vec(-5.0..5.0f64, 3),
        z in proptest::collection::vec(-5.0..5.0f64, 3),
        extra in 0.0..10.0f64,
        seed in 0u64..1000,
    ) {
        let op = cocoercive_quadratic();
        let cert = cocoercive_certificate(&op, &Vector::from_vec(x), &Vector::from_vec(z)).unwrap();
        let samples = op.sample_graph(cert.y(), 100, seed).unwrap();
        if op.enlargement_membership(&cert, &samples).unwrap() {
            let looser = cert.relaxed(cert.eps() + extra).unwrap();
            prop_assert!(op.enlargement_membership(&looser, &samples).unwrap());
        }
    }

    #[test]
    fn shrinking_eps_can_only_fail_more(
        v in proptest::collection::vec(-5.0..5.0f64, 3),
        eps in 0.0..50.0f64,
        seed in 0u64..1000,
    ) {
        let op = OperatorSpec::abs_subdifferential(1.0).unwrap();
        let y = Vector::from_column_slice(&[0.5, -0.25, 0.0]);
        let tight = Certificate::new(y.clone(), Vector::from_vec(v), eps, inertial_hpe::operators::Provenance::Composite).unwrap();
        let samples = op.sample_graph(&y, 100, seed).unwrap();
        let passes = op.enlargement_membership(&tight, &samples).unwrap();
        let loose = tight.relaxed(eps * 2.0 + 1.0).unwrap();
        prop_assert!(!passes || op.enlargement_membership(&loose, &samples).unwrap());
    }
}
