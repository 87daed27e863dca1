use std::ffi::{CStr, CString};
use std::ptr;

use inertial_hpe_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = hpe_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(spec: &str) -> *mut HpeProblem {
    let mut p = ptr::null_mut();
    let status = unsafe { hpe_problem_generate(cstr(spec).as_ptr(), &mut p) };
    assert_eq!(status, HpeStatus::Ok, "{}", spec);
    p
}

#[test]
fn solve_each_oracle_through_the_abi() {
    for (spec, oracle) in [
        ("quadratic,n=10,cond=100,seed=1", HpeOracle::Ipp),
        ("composite,n=20,seed=3", HpeOracle::Fb),
        ("saddle,n=4,seed=11", HpeOracle::Fbf),
    ] {
        let problem = generate(spec);
        let opts = hpe_solve_options_default(oracle);
        let mut result = ptr::null_mut();
        let status = unsafe { hpe_solve(problem, &opts, &mut result) };
        assert_eq!(status, HpeStatus::Ok, "{spec}");
        unsafe {
            assert_eq!(hpe_result_converged(result), 1);
            assert!(hpe_result_distance_to_known(result) <= 1e-6);
            assert_eq!(hpe_result_mu_violations(result), 0);
            let n = hpe_result_dimension(result);
            assert_eq!(n, hpe_problem_dimension(problem));
            let mut x = vec![0.0; n];
            assert_eq!(hpe_result_copy_x(result, x.as_mut_ptr(), n), HpeStatus::Ok);
            assert!(x.iter().all(|v| v.is_finite()));

            let len = hpe_result_trace_len(result);
            assert_eq!(len, hpe_result_iterations(result));
            let mut rec = HpeTraceRecord::default();
            assert_eq!(hpe_result_trace_record(result, 0, &mut rec), HpeStatus::Ok);
            assert_eq!(rec.k, 2);
            assert_eq!(rec.has_phi, 1);
            assert_eq!(hpe_result_trace_record(result, len, &mut rec), HpeStatus::OutOfRange);
            hpe_result_free(result);
            hpe_problem_free(problem);
        }
    }
}

#[test]
fn small_buffer_and_null_handles() {
    let problem = generate("quadratic,n=3,seed=2");
    let mut result = ptr::null_mut();
    unsafe {
        assert_eq!(hpe_solve(problem, ptr::null(), &mut result), HpeStatus::Ok);
        let mut x = [0.0; 2];
        assert_eq!(hpe_result_copy_x(result, x.as_mut_ptr(), 2), HpeStatus::BufferTooSmall);
        assert!(last_error().contains("need 3"));
        assert_eq!(hpe_solve(ptr::null(), ptr::null(), &mut result), HpeStatus::NullPointer);
        assert_eq!(hpe_problem_dimension(ptr::null()), 0);
        hpe_result_free(ptr::null_mut());
        hpe_problem_free(problem);
    }
}

#[test]
fn invalid_configuration_reports_status_4() {
    let problem = generate("saddle,n=4,seed=11");
    let mut opts = hpe_solve_options_default(HpeOracle::Fbf);
    opts.c = 100.0;
    let mut result = ptr::null_mut();
    unsafe {
        assert_eq!(hpe_solve(problem, &opts, &mut result), HpeStatus::InvalidConfig);
        assert!(result.is_null());
        assert!(last_error().contains("exceeds"));
        opts = hpe_solve_options_default(HpeOracle::Ipp);
        opts.alpha = 0.2;
        opts.sigma = 0.0;
        assert_eq!(hpe_solve(problem, &opts, &mut result), HpeStatus::InvalidConfig);
        hpe_problem_free(problem);
    }
    let mut p = ptr::null_mut();
    let status = unsafe { hpe_problem_generate(cstr("cubic,n=3").as_ptr(), &mut p) };
    assert_eq!(status, HpeStatus::InvalidConfig);
    assert!(last_error().contains("cubic"));
}

#[test]
fn step_violation_reports_status_3() {
    // The oracle's step is sized for the induced sigma; a driver sigma far
    // below it cannot accept the certificate.
    let problem = generate("saddle,n=4,seed=11");
    let mut opts = hpe_solve_options_default(HpeOracle::Fbf);
    opts.sigma = 0.01;
    let mut result = ptr::null_mut();
    unsafe {
        assert_eq!(hpe_solve(problem, &opts, &mut result), HpeStatus::StepViolation);
        assert!(result.is_null());
        opts.enforce_step_inequality = 0;
        assert_eq!(hpe_solve(problem, &opts, &mut result), HpeStatus::Ok);
        assert!(!result.is_null());
        hpe_result_free(result);
        hpe_problem_free(problem);
    }
}

#[test]
fn parameter_helpers() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(hpe_check_parameters(0.0, 0.9, HpeVariant::Standard, &mut v), HpeStatus::Ok);
        assert!((v - 0.81).abs() < 1e-15);
        assert_eq!(hpe_check_parameters(0.2, 0.0, HpeVariant::Standard, &mut v), HpeStatus::InvalidConfig);
        assert_eq!(hpe_check_parameters(0.1, 0.5, HpeVariant::Relaxed, &mut v), HpeStatus::Ok);
        assert!((v - 0.75).abs() < 1e-15);

        let mut p = HpeFbfParams::default();
        assert_eq!(hpe_derive_fbf_params(0.0, 2.0, f64::NAN, &mut p), HpeStatus::Ok);
        assert!((p.sigma - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((p.c_max - p.sigma / 2.0).abs() < 1e-15);
        assert_eq!(p.window_upper, 0.5);
        assert_eq!(hpe_derive_fbf_params(0.25, 1.0, f64::NAN, &mut p), HpeStatus::InvalidConfig);
        assert_eq!(hpe_derive_fbf_params(0.0, 1.0, 0.7, &mut p), HpeStatus::InvalidConfig);
    }
}

#[test]
fn problem_files_and_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let toml = dir.path().join("p.toml");
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let problem = generate("composite,n=8,sparsity=0.5,seed=5");
    unsafe {
        assert_eq!(hpe_problem_save(problem, cstr(toml.to_str().unwrap()).as_ptr()), HpeStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(hpe_problem_load(cstr(toml.to_str().unwrap()).as_ptr(), &mut loaded), HpeStatus::Ok);

        let opts = hpe_solve_options_default(HpeOracle::Fb);
        for (p, path) in [(problem, &csv_a), (loaded, &csv_b)] {
            let mut r = ptr::null_mut();
            assert_eq!(hpe_solve(p, &opts, &mut r), HpeStatus::Ok);
            assert_eq!(hpe_result_write_csv(r, cstr(path.to_str().unwrap()).as_ptr()), HpeStatus::Ok);
            hpe_result_free(r);
        }
        hpe_problem_free(problem);
        hpe_problem_free(loaded);
    }
    assert_eq!(std::fs::read(&csv_a).unwrap(), std::fs::read(&csv_b).unwrap());

    let mut p = ptr::null_mut();
    let status = unsafe { hpe_problem_from_toml(cstr("name = 1").as_ptr(), &mut p) };
    assert_eq!(status, HpeStatus::InvalidConfig);
    let status = unsafe { hpe_problem_load(cstr("/nonexistent/p.toml").as_ptr(), &mut p) };
    assert_eq!(status, HpeStatus::Io);
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/inertial_hpe.h")).unwrap();
    for name in [
        "typedef struct HpeProblem HpeProblem;",
        "typedef struct HpeResult HpeResult;",
        "HPE_STATUS_STEP_VIOLATION = 3",
        "hpe_solve(",
        "hpe_result_trace_record(",
        "hpe_derive_fbf_params(",
        "hpe_last_error(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
