use serde::{Deserialize, Serialize};

use super::student::two_sided_p;
use super::{check_alpha, check_finite, clamp_p, is_constant, mean};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    /// Two-sided p-value for `r = 0`.
    pub p_value: f64,
    pub n: usize,
    pub alpha: f64,
    pub reject: bool,
}

/// Pearson product-moment correlation with a two-sided t-based p-value
/// (`t = r √(n-2) / √(1-r²)`, `n - 2` degrees of freedom).
pub fn pearson(x: &[f64], y: &[f64], alpha: f64) -> Result<CorrelationResult> {
    check_alpha(alpha)?;
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "correlation inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "correlation needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    check_finite("x", x)?;
    check_finite("y", y)?;
    if is_constant(x) || is_constant(y) {
        return Err(Error::InvalidInput(
            "correlation is undefined for a constant vector".into(),
        ));
    }

    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);

    let n = x.len();
    let df = (n - 2) as f64;
    let p_value = if (1.0 - r.abs()) <= 4.0 * f64::EPSILON {
        0.0
    } else {
        let t = r * df.sqrt() / (1.0 - r * r).sqrt();
        clamp_p(two_sided_p(t, df))
    };
    Ok(CorrelationResult {
        r,
        p_value,
        n,
        alpha,
        reject: p_value < alpha,
    })
}
