use super::{check_alpha, check_finite, Alternative, TestResult};
use crate::error::{Error, Result};

/// Largest `|a| * |b|` accepted by [`ks_two_sample_exact`].
pub const EXACT_KS_MAX_PRODUCT: usize = 400;

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
///
/// Both empirical CDFs are right-continuous, so tied values are consumed from
/// both samples before the gap is measured.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // Once either sample is exhausted the gap only shrinks towards zero.
    d
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² λ²)`.
///
/// For small λ the alternating series converges slowly, so the equivalent
/// theta-function form `1 - (√(2π)/λ) Σ exp(-(2k-1)² π² / (8λ²))` is used.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut sum = 0.0;
        for k in 1..=64u32 {
            let odd = f64::from(2 * k - 1);
            let term = (-odd * odd * pi2 / (8.0 * lambda * lambda)).exp();
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * sum;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..=100u32 {
            let k = f64::from(k);
            let term = (-2.0 * k * k * lambda * lambda).exp();
            sum += sign * term;
            if term <= sum.abs() * 1e-17 {
                break;
            }
            sign = -sign;
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput(
            "KS test needs at least one observation per sample".into(),
        ));
    }
    check_finite("a", a)?;
    check_finite("b", b)
}

/// Two-sample KS test with the asymptotic p-value
/// `Q((√m + 0.12 + 0.11/√m) D)`, `m = |a||b| / (|a| + |b|)`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_samples(a, b)?;
    let d = ks_statistic(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let m = (na * nb / (na + nb)).sqrt();
    let lambda = (m + 0.12 + 0.11 / m) * d;
    Ok(TestResult::new(
        d,
        kolmogorov_q(lambda),
        None,
        Alternative::TwoSided,
        alpha,
    ))
}

/// Two-sample KS test with the exact permutation p-value, for small samples
/// without ties (`|a| * |b| <= 400`).
///
/// Counts the monotone lattice paths from `(0, 0)` to `(|a|, |b|)` that stay
/// strictly inside the band `|i/|a| - j/|b|| < D`; `p = 1 - inside / total`.
pub fn ks_two_sample_exact(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_samples(a, b)?;
    let (m, n) = (a.len(), b.len());
    if m * n > EXACT_KS_MAX_PRODUCT {
        return Err(Error::InvalidInput(format!(
            "exact KS enumeration limited to |a|*|b| <= {EXACT_KS_MAX_PRODUCT}, got {}",
            m * n
        )));
    }
    let d = ks_statistic(a, b);
    // Work in integer units of 1/(m n): the statistic is |i n - j m| / (m n).
    let bound = (d * (m * n) as f64).round() as i64;
    let (mi, ni) = (m as i64, n as i64);
    let inside = |i: usize, j: usize| (i as i64 * ni - j as i64 * mi).abs() < bound;

    let mut row = vec![0u128; n + 1];
    for i in 0..=m {
        for j in 0..=n {
            row[j] = if !inside(i, j) {
                0
            } else if i == 0 && j == 0 {
                1
            } else {
                let up = if i > 0 { row[j] } else { 0 };
                let left = if j > 0 { row[j - 1] } else { 0 };
                up + left
            };
        }
    }
    let total = binomial(m + n, m);
    let p = (total - row[n]) as f64 / total as f64;
    Ok(TestResult::new(d, p, None, Alternative::TwoSided, alpha))
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 2.0, 3.0];
        let r = ks_two_sample(&a, &a, 0.1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn disjoint_supports() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], 0.1).unwrap();
        assert_eq!(r.statistic, 1.0);
        let e = ks_two_sample_exact(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], 0.1).unwrap();
        // only 2 of the C(6,3) = 20 orderings reach D = 1
        assert!((e.p_value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ties_are_consumed_together() {
        // At t = 2 both CDFs jump; the gap must be measured after both jumps.
        let d = ks_statistic(&[1.0, 2.0], &[2.0, 2.0]);
        assert_eq!(d, 0.5);
    }

    #[test]
    fn q_is_continuous_across_the_switch() {
        let below = kolmogorov_q(1.18 - 1e-12);
        let above = kolmogorov_q(1.18);
        assert!((below - above).abs() < 1e-12);
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!(kolmogorov_q(10.0) < 1e-80);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(ks_two_sample(&[], &[1.0], 0.1).is_err());
    }

    #[test]
    fn exact_mode_size_limit() {
        let a: Vec<f64> = (0..21).map(f64::from).collect();
        assert!(ks_two_sample_exact(&a, &a, 0.1).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(40, 20), 137_846_528_820);
    }
}
