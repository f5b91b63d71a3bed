//! Fréchet distance between Gaussians fitted to feature embeddings, and the
//! relative variant normalized by a split of the real features.
//!
//! `d² = ‖μ₁ − μ₂‖² + tr(Σ₁) + tr(Σ₂) − 2 tr((Σ₁Σ₂)^{1/2})`

mod batch;
mod gaussian;
mod sqrtm;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding::{split_real, EmbeddingSet};
use crate::error::{Error, Result};

pub use batch::{batch_fd, metric_id};
pub use gaussian::{fit_gaussian, GaussianSummary};
pub use sqrtm::{sqrtm_trace, sqrtm_trace_detailed, SqrtmTrace, NEGATIVE_EIGEN_TOLERANCE};

use sqrtm::{default_iterations, sqrtm_trace_with, SqrtmError};

/// Negative results down to `-NEGATIVE_CLAMP * max(1, scale)` are roundoff and clamp to 0.
pub const NEGATIVE_CLAMP: f64 = 1e-8;
/// Positive results up to `ROUNDOFF_FLOOR * scale` are indistinguishable from 0.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;
/// An rFD denominator at or below this value means the real set is degenerate.
pub const MIN_DENOMINATOR: f64 = 1e-12;
/// Ridge added to both covariances after a failed eigensolve, relative to the mean diagonal.
pub const REGULARIZATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetDiagnostics {
    pub min_eigenvalue: f64,
    pub regularization_applied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetResult {
    /// The squared distance d².
    pub value: f64,
    /// (reference, candidate) labels.
    pub pair: (String, String),
    pub extractor: String,
    pub diagnostics: FrechetDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeFrechetResult {
    pub value: f64,
    pub numerator: FrechetResult,
    pub denominator: FrechetResult,
    pub split_seed: u64,
}

/// Fréchet distance between two fitted Gaussians.
///
/// If the eigensolve fails to converge, the computation is retried once with
/// `ε I` added to both covariances (`ε = 1e-6 × mean diagonal`) and the retry
/// is reported in the diagnostics.
pub fn frechet_distance(g1: &GaussianSummary, g2: &GaussianSummary) -> Result<FrechetResult> {
    let iterations = default_iterations(g1.dim());
    frechet_distance_with(g1, g2, |a, b| sqrtm_trace_with(a, b, iterations))
}

fn frechet_distance_with(
    g1: &GaussianSummary,
    g2: &GaussianSummary,
    mut solve: impl FnMut(&DMatrix<f64>, &DMatrix<f64>) -> Result<SqrtmTrace, SqrtmError>,
) -> Result<FrechetResult> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            left: g1.dim(),
            right: g2.dim(),
        });
    }
    let d = g1.dim();
    let mean_term = (g1.mean() - g2.mean()).norm_squared();

    let (c1, c2, root, regularized) = match solve(g1.cov(), g2.cov()) {
        Ok(root) => (g1.cov().clone(), g2.cov().clone(), root, false),
        Err(SqrtmError::NotConverged) => {
            let mean_diag = (g1.cov().trace() + g2.cov().trace()) / (2 * d.max(1)) as f64;
            let eps = REGULARIZATION * mean_diag.max(f64::MIN_POSITIVE);
            log::warn!(
                "eigensolve failed for {} vs {}; retrying with {eps:e} I",
                g1.source().label(),
                g2.source().label()
            );
            let ridge = DMatrix::<f64>::identity(d, d) * eps;
            let (c1, c2) = (g1.cov() + &ridge, g2.cov() + &ridge);
            let root = solve(&c1, &c2).map_err(|e| match e {
                SqrtmError::NotConverged => Error::Numerical(
                    "eigensolve did not converge even after regularization".into(),
                ),
                SqrtmError::Other(e) => e,
            })?;
            (c1, c2, root, true)
        }
        Err(SqrtmError::Other(e)) => return Err(e),
    };

    let traces = c1.trace() + c2.trace();
    let raw = mean_term + traces - 2.0 * root.value;
    let value = clamp_distance(raw, mean_term + traces)?;
    Ok(FrechetResult {
        value,
        pair: (g1.source().label(), g2.source().label()),
        extractor: g1.source().extractor.clone(),
        diagnostics: FrechetDiagnostics {
            min_eigenvalue: root.min_eigenvalue,
            regularization_applied: regularized,
        },
    })
}

/// Maps roundoff-level results to exactly zero. `scale` is the sum of the
/// nonnegative terms, which bounds the cancellation error.
fn clamp_distance(raw: f64, scale: f64) -> Result<f64> {
    if raw < -NEGATIVE_CLAMP * scale.max(1.0) {
        return Err(Error::Numerical(format!(
            "Fréchet distance evaluated to {raw:e}, below the roundoff tolerance"
        )));
    }
    if raw <= ROUNDOFF_FLOOR * scale {
        return Ok(0.0);
    }
    Ok(raw)
}

/// `FD(real, gen) / FD(real half 1, real half 2)` with a seeded row split.
pub fn relative_fd(
    real: &EmbeddingSet,
    gen: &EmbeddingSet,
    seed: u64,
) -> Result<RelativeFrechetResult> {
    if real.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            left: real.dim(),
            right: gen.dim(),
        });
    }
    let real_fit = fit_gaussian(real)?;
    let gen_fit = fit_gaussian(gen)?;
    let (h1, h2) = split_real(real, seed)?;
    relative_from_fits(&real_fit, &gen_fit, &fit_gaussian(&h1)?, &fit_gaussian(&h2)?, seed)
}

pub(crate) fn relative_from_fits(
    real: &GaussianSummary,
    gen: &GaussianSummary,
    half1: &GaussianSummary,
    half2: &GaussianSummary,
    seed: u64,
) -> Result<RelativeFrechetResult> {
    let denominator = frechet_distance(half1, half2)?;
    if denominator.value <= MIN_DENOMINATOR {
        return Err(Error::Degenerate(format!(
            "real-split baseline distance is {:e}; the real set of {} has no spread",
            denominator.value,
            real.source().label()
        )));
    }
    let numerator = frechet_distance(real, gen)?;
    Ok(RelativeFrechetResult {
        value: numerator.value / denominator.value,
        numerator,
        denominator,
        split_seed: seed,
    })
}
