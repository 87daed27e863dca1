//! Finite-dimensional real inner-product space primitives.
//!
//! Vectors are dense `f64` columns. The checked helpers here return a
//! dimension error instead of panicking, so they are safe to call on
//! caller-supplied data; internal hot loops use nalgebra arithmetic directly
//! once dimensions have been validated.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HpeError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn ensure_same_dim(a: &Vector, b: &Vector) -> Result<()> {
    if a.len() != b.len() {
        return Err(HpeError::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    Ok(())
}

/// Builds a vector, rejecting empty input and non-finite entries.
pub fn vector(entries: &[f64]) -> Result<Vector> {
    if entries.is_empty() {
        return Err(HpeError::InvalidArgument("vector dimension must be at least 1".into()));
    }
    if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
        return Err(HpeError::InvalidArgument(format!("entry {i} is not finite")));
    }
    Ok(Vector::from_column_slice(entries))
}

pub fn is_finite(a: &Vector) -> bool {
    a.iter().all(|v| v.is_finite())
}

pub fn inner(a: &Vector, b: &Vector) -> Result<f64> {
    ensure_same_dim(a, b)?;
    Ok(a.dot(b))
}

pub fn norm(a: &Vector) -> f64 {
    a.norm()
}

pub fn norm_sq(a: &Vector) -> f64 {
    a.norm_squared()
}

/// `alpha * a + beta * b`.
pub fn axpby(alpha: f64, a: &Vector, beta: f64, b: &Vector) -> Result<Vector> {
    ensure_same_dim(a, b)?;
    Ok(a * alpha + b * beta)
}

pub fn dist_sq(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Smallest eigenvalue of the symmetric part `(M + M^T) / 2`.
pub fn sym_part_min_eigenvalue(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn max_abs_asymmetry(m: &Matrix) -> f64 {
    (m - m.transpose()).amax()
}

pub fn max_abs_skew_defect(s: &Matrix) -> f64 {
    (s + s.transpose()).amax()
}

/// Deterministic generator used for every seeded sampling in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
