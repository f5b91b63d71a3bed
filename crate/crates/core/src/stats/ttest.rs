use super::student::{student_t_sf, two_sided_p};
use super::{
    check_alpha, check_finite, is_constant, mean, variance, Alternative, TTestVariant, TestResult,
};
use crate::error::{Error, Result};

fn tail_p(t: f64, df: f64, alternative: Alternative) -> f64 {
    match alternative {
        Alternative::TwoSided => two_sided_p(t, df),
        Alternative::Greater => student_t_sf(t, df),
        Alternative::Less => student_t_sf(-t, df),
    }
}

/// Result for a zero-variance comparison. A zero effect yields t = 0 with the
/// null p-value; a nonzero effect yields an infinite statistic.
fn zero_variance(effect: f64, df: f64, alternative: Alternative, alpha: f64) -> TestResult {
    if effect == 0.0 {
        let p = match alternative {
            Alternative::TwoSided => 1.0,
            _ => 0.5,
        };
        return TestResult::degenerate(0.0, p, Some(df), alternative, alpha);
    }
    let t = effect.signum() * f64::INFINITY;
    let p = match alternative {
        Alternative::TwoSided => 0.0,
        Alternative::Greater => {
            if t > 0.0 {
                0.0
            } else {
                1.0
            }
        }
        Alternative::Less => {
            if t < 0.0 {
                0.0
            } else {
                1.0
            }
        }
    };
    TestResult::degenerate(t, p, Some(df), alternative, alpha)
}

/// Paired t-test on `x - y`.
///
/// `Greater` tests `mean(x - y) > 0`.
pub fn paired_t_test(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput(
            "paired t-test needs at least 2 pairs".into(),
        ));
    }
    check_finite("x", x)?;
    check_finite("y", y)?;

    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = diffs.len() as f64;
    let df = n - 1.0;
    let m = mean(&diffs);
    if is_constant(&diffs) {
        return Ok(zero_variance(diffs[0], df, alternative, alpha));
    }
    let sd = variance(&diffs).sqrt();
    let t = m / (sd / n.sqrt());
    Ok(TestResult::new(
        t,
        tail_p(t, df, alternative),
        Some(df),
        alternative,
        alpha,
    ))
}

/// Independent two-sample t-test of `mean(a)` against `mean(b)`.
pub fn two_sample_t_test(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    alpha: f64,
    variant: TTestVariant,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "two-sample t-test needs at least 2 observations per sample (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    check_finite("a", a)?;
    check_finite("b", b)?;

    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let pooled_df = na + nb - 2.0;

    if is_constant(a) && is_constant(b) {
        return Ok(zero_variance(a[0] - b[0], pooled_df, alternative, alpha));
    }

    let (va, vb) = (variance(a), variance(b));
    let (t, df) = match variant {
        TTestVariant::Pooled => {
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / pooled_df;
            ((ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt(), pooled_df)
        }
        TTestVariant::Welch => {
            let (sa, sb) = (va / na, vb / nb);
            let se2 = sa + sb;
            let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
            ((ma - mb) / se2.sqrt(), df)
        }
    };
    Ok(TestResult::new(
        t,
        tail_p(t, df, alternative),
        Some(df),
        alternative,
        alpha,
    ))
}
