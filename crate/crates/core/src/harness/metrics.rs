//! Scalar error metrics shared by the experiment reports.
//!
//! The unqualified vector norm throughout the harness is the max-abs
//! (infinity) norm — the strictest choice for round-off-level equality
//! claims — and every report that uses it says so in its metadata.

use crate::error::{Error, Result};
use crate::matrixcore::Vector;

fn check_same_len(a: &Vector, b: &Vector) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "metric operands have lengths {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(())
}

/// Root-mean-square error between two equal-length vectors:
/// `√(Σ_i (a_i − b_i)² / n)`.
pub fn rmse(a: &Vector, b: &Vector) -> Result<f64> {
    check_same_len(a, b)?;
    let n = a.nrows();
    let sum: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / n as f64).sqrt())
}

/// Max-abs (infinity-norm) deviation between two equal-length vectors.
pub fn max_abs_dev(a: &Vector, b: &Vector) -> Result<f64> {
    check_same_len(a, b)?;
    Ok(a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Per-index RMSE of an estimate sequence against a truth sequence.
pub fn rmse_series(truth: &[Vector], estimates: &[Vector]) -> Result<Vec<f64>> {
    if truth.len() != estimates.len() {
        return Err(Error::DimensionMismatch(format!(
            "rmse series over {} truth states but {} estimates",
            truth.len(),
            estimates.len()
        )));
    }
    truth
        .iter()
        .zip(estimates.iter())
        .map(|(t, e)| rmse(t, e))
        .collect()
}
