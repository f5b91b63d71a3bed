use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::gaussian::symmetrize;
use crate::error::{Error, Result};

/// Relative tolerance on negative covariance eigenvalues.
pub const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-10;

/// Outcome of the trace-of-square-root computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtmTrace {
    /// `tr((A B)^{1/2})`.
    pub value: f64,
    /// Smallest eigenvalue seen across `A`, `B` and the congruence matrix,
    /// before clamping.
    pub min_eigenvalue: f64,
}

#[derive(Debug)]
pub(crate) enum SqrtmError {
    /// The symmetric QR iteration ran out of iterations.
    NotConverged,
    Other(Error),
}

impl From<SqrtmError> for Error {
    fn from(e: SqrtmError) -> Self {
        match e {
            SqrtmError::NotConverged => {
                Error::Numerical("symmetric eigensolve did not converge".into())
            }
            SqrtmError::Other(e) => e,
        }
    }
}

fn eigen(m: DMatrix<f64>, max_iterations: usize) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, SqrtmError> {
    SymmetricEigen::try_new(m, f64::EPSILON, max_iterations).ok_or(SqrtmError::NotConverged)
}

pub(crate) fn default_iterations(d: usize) -> usize {
    1_000 + 100 * d
}

/// Eigenvalues below `-tol * max|λ|` mean the matrix is not a covariance.
fn check_psd(which: &str, eigenvalues: &DVector<f64>) -> Result<f64, SqrtmError> {
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVE_EIGEN_TOLERANCE * scale {
        return Err(SqrtmError::Other(Error::Numerical(format!(
            "{which} has eigenvalue {min:e} below -{NEGATIVE_EIGEN_TOLERANCE:e} x {scale:e}; not a valid covariance"
        ))));
    }
    Ok(min)
}

pub(crate) fn sqrtm_trace_with(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    max_iterations: usize,
) -> Result<SqrtmTrace, SqrtmError> {
    let d = a.nrows();
    if a.shape() != (d, d) || b.shape() != (d, d) {
        return Err(SqrtmError::Other(Error::Shape(format!(
            "sqrtm_trace needs two square matrices of equal size, got {:?} and {:?}",
            a.shape(),
            b.shape()
        ))));
    }
    if d == 0 {
        return Ok(SqrtmTrace {
            value: 0.0,
            min_eigenvalue: 0.0,
        });
    }

    let ea = eigen(a.clone(), max_iterations)?;
    let min_a = check_psd("first covariance", &ea.eigenvalues)?;
    let eb_values = eigen(b.clone(), max_iterations)?.eigenvalues;
    let min_b = check_psd("second covariance", &eb_values)?;

    // S = Λ^{1/2} Qᵀ B Q Λ^{1/2} shares its spectrum with A B.
    let root: Vec<f64> = ea.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    let q = &ea.eigenvectors;
    let mut s = q.tr_mul(&(b * q));
    for i in 0..d {
        for j in 0..d {
            s[(i, j)] *= root[i] * root[j];
        }
    }
    let es = eigen(symmetrize(s), max_iterations)?;
    let min_s = es.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let value = es.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(SqrtmTrace {
        value,
        min_eigenvalue: min_a.min(min_b).min(min_s),
    })
}

/// `tr((A B)^{1/2})` for symmetric positive semi-definite `A`, `B`, computed
/// through the symmetric congruence `Λ^{1/2} Qᵀ B Q Λ^{1/2}` with `A = Q Λ Qᵀ`.
pub fn sqrtm_trace(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    Ok(sqrtm_trace_detailed(a, b)?.value)
}

/// Like [`sqrtm_trace`], also reporting the smallest eigenvalue encountered.
pub fn sqrtm_trace_detailed(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SqrtmTrace> {
    Ok(sqrtm_trace_with(a, b, default_iterations(a.nrows()))?)
}
