//! Hypothesis tests and correlation with p-values.
//!
//! Every test returns a [`TestResult`] whose `reject` flag is always
//! `p_value < alpha`. Zero-variance inputs that make a statistic undefined
//! produce a flagged result (`degenerate == true`) instead of an error so
//! that pipelines over real study data can keep going.

mod ks;
mod pearson;
mod student;
mod ttest;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ks::{kolmogorov_q, ks_statistic, ks_two_sample, ks_two_sample_exact, EXACT_KS_MAX_PRODUCT};
pub use pearson::{pearson, CorrelationResult};
pub use student::{student_t_cdf, student_t_sf};
pub use ttest::{paired_t_test, two_sample_t_test};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

impl Alternative {
    /// The alternative obtained by swapping the two samples.
    pub fn mirrored(self) -> Self {
        match self {
            Alternative::TwoSided => Alternative::TwoSided,
            Alternative::Greater => Alternative::Less,
            Alternative::Less => Alternative::Greater,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Greater => "greater",
            Alternative::Less => "less",
        }
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" => Ok(Alternative::TwoSided),
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            other => Err(Error::InvalidInput(format!(
                "unknown alternative {other:?} (expected two-sided, greater or less)"
            ))),
        }
    }
}

/// Variance treatment for the two-sample t-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TTestVariant {
    /// Equal-variance Student test.
    #[default]
    Pooled,
    Welch,
}

impl TTestVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            TTestVariant::Pooled => "pooled",
            TTestVariant::Welch => "welch",
        }
    }
}

impl fmt::Display for TTestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TTestVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" | "student" => Ok(TTestVariant::Pooled),
            "welch" => Ok(TTestVariant::Welch),
            other => Err(Error::InvalidInput(format!(
                "unknown t-test variant {other:?} (expected pooled or welch)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    #[serde(with = "crate::float_serde")]
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom; `None` for tests without one (KS).
    pub df: Option<f64>,
    pub alternative: Alternative,
    pub alpha: f64,
    pub reject: bool,
    /// Set when the statistic is undefined (zero variance) and the p-value was
    /// assigned by convention.
    #[serde(default)]
    pub degenerate: bool,
}

impl TestResult {
    pub(crate) fn new(
        statistic: f64,
        p_value: f64,
        df: Option<f64>,
        alternative: Alternative,
        alpha: f64,
    ) -> Self {
        let p_value = clamp_p(p_value);
        TestResult {
            statistic,
            p_value,
            df,
            alternative,
            alpha,
            reject: p_value < alpha,
            degenerate: false,
        }
    }

    pub(crate) fn degenerate(
        statistic: f64,
        p_value: f64,
        df: Option<f64>,
        alternative: Alternative,
        alpha: f64,
    ) -> Self {
        TestResult {
            degenerate: true,
            ..TestResult::new(statistic, p_value, df, alternative, alpha)
        }
    }
}

pub(crate) fn clamp_p(p: f64) -> f64 {
    if p.is_nan() {
        1.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

pub(crate) fn check_finite(name: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::InvalidInput(format!(
            "{name}[{i}] is not finite"
        ))),
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (divisor n - 1), two-pass.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub(crate) fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}
