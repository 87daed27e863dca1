mod common;

use common::embedding::compare;
use inertial_hpe::runner::OracleKind;

fn check(oracle: OracleKind) {
    for seed in 0..10 {
        let cmp = compare(oracle, seed);
        assert!(cmp.max_deviation <= 1e-12, "{oracle} seed {seed}: deviation {:e}", cmp.max_deviation);
        assert!(cmp.min_slack_ratio >= -1e-9, "{oracle} seed {seed}: slack ratio {:e}", cmp.min_slack_ratio);
        assert_eq!(cmp.membership_failures, 0, "{oracle} seed {seed}");
    }
}

#[test]
fn proximal_point_embedding_matches_its_recursion() {
    check(OracleKind::Ipp);
}

#[test]
fn forward_backward_embedding_matches_its_recursion() {
    check(OracleKind::Fb);
}

#[test]
fn forward_backward_forward_embedding_matches_its_recursion() {
    check(OracleKind::Fbf);
}
