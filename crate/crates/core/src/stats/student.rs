use statrs::function::beta::beta_reg;

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
///
/// Uses the regularized incomplete beta function, choosing whichever of the
/// two complementary forms keeps its argument away from 1.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let t2 = t * t;
    // P(|T| > |t|)
    let two_tail = if t2 < df {
        1.0 - beta_reg(0.5, 0.5 * df, t2 / (df + t2))
    } else {
        beta_reg(0.5 * df, 0.5, df / (df + t2))
    };
    if t >= 0.0 {
        0.5 * two_tail
    } else {
        1.0 - 0.5 * two_tail
    }
}

/// `P(T <= t)`.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    student_t_sf(-t, df)
}

/// Two-sided p-value `P(|T| >= |t|)`.
pub(crate) fn two_sided_p(t: f64, df: f64) -> f64 {
    (2.0 * student_t_sf(t.abs(), df)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_about_zero() {
        assert_eq!(student_t_sf(0.0, 7.0), 0.5);
        for &t in &[0.1, 0.7, 2.3, 9.0] {
            for &df in &[1.0, 3.5, 30.0] {
                assert_relative_eq!(student_t_sf(t, df) + student_t_sf(-t, df), 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn cauchy_closed_form() {
        // df = 1 is the Cauchy distribution: P(T > t) = 1/2 - atan(t)/pi
        for &t in &[0.01f64, 0.5, 1.0, 4.0, 100.0] {
            let expected = 0.5 - t.atan() / std::f64::consts::PI;
            assert_relative_eq!(student_t_sf(t, 1.0), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn df_two_closed_form() {
        // df = 2: P(T > t) = 1/2 - t / (2 sqrt(t^2 + 2))
        for &t in &[0.05f64, 0.9, 3.0, 25.0] {
            let expected = 0.5 - t / (2.0 * (t * t + 2.0).sqrt());
            assert_relative_eq!(student_t_sf(t, 2.0), expected, max_relative = 1e-11);
        }
    }
}
