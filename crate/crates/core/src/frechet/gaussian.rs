use nalgebra::{DMatrix, DVector};

use crate::embedding::{EmbeddingMeta, EmbeddingSet};
use crate::error::{Error, Result};

/// Mean and unbiased covariance fitted to an embedding set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    n: usize,
    source: EmbeddingMeta,
}

impl GaussianSummary {
    /// Builds a summary from explicit moments. `cov` is symmetrized.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, n: usize) -> Result<Self> {
        let d = mean.len();
        if cov.shape() != (d, d) {
            return Err(Error::Shape(format!(
                "covariance is {}x{}, mean has length {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite Gaussian parameters".into()));
        }
        Ok(GaussianSummary {
            mean,
            cov: symmetrize(cov),
            n,
            source: EmbeddingMeta::default(),
        })
    }

    pub fn with_source(mut self, source: EmbeddingMeta) -> Self {
        self.source = source;
        self
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn source(&self) -> &EmbeddingMeta {
        &self.source
    }
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Column means and the unbiased (n - 1) sample covariance.
pub fn fit_gaussian(set: &EmbeddingSet) -> Result<GaussianSummary> {
    let x = set.data();
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::Shape(format!(
            "a covariance needs at least 2 samples, got {n}"
        )));
    }
    if n < d {
        log::warn!(
            "{}: {n} samples for {d} features, covariance is rank-deficient",
            set.meta().label()
        );
    }
    let mean = x.row_mean().transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    Ok(GaussianSummary {
        mean,
        cov: symmetrize(cov),
        n,
        source: set.meta().clone(),
    })
}
