//! Student-t distribution function and quantiles.
//!
//! The CDF goes through the regularized incomplete beta function, evaluated
//! with Lentz's continued fraction; quantiles invert the CDF by bracketing and
//! bisection, which is slow but deterministic to the last bit on every
//! platform.

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// `P(T ≤ t)` for Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if t.is_nan() {
        return f64::NAN;
    }
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_beta(x, 0.5 * df, 0.5);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Quantile `t_{df, p}`: the `t` with `P(T ≤ t) = p`.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must lie in (0, 1)");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -student_t_quantile(1.0 - p, df);
    }
    // Work with the upper tail mass, which keeps precision for p near 1.
    let tail = 1.0 - p;
    let upper = |t: f64| 0.5 * regularized_beta(df / (df + t * t), 0.5 * df, 0.5);
    let mut hi = 1.0;
    while upper(hi) > tail {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..2_000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if upper(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(0.5), PI.sqrt().ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(10.0), 362_880f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn closed_forms_for_one_and_two_degrees() {
        for p in [0.6, 0.75, 0.9, 0.95, 0.99, 0.999] {
            // Cauchy
            let cauchy = (PI * (p - 0.5)).tan();
            assert_abs_diff_eq!(student_t_quantile(p, 1.0), cauchy, epsilon = 1e-10 * cauchy.max(1.0));
            let two = (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
            assert_abs_diff_eq!(student_t_quantile(p, 2.0), two, epsilon = 1e-10 * two.max(1.0));
        }
        assert_abs_diff_eq!(student_t_quantile(0.9, 1.0), 3.077_683_537_175_253, epsilon = 1e-10);
    }

    #[test]
    fn agrees_with_statrs() {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        for df in [1.0, 3.0, 7.0, 29.0, 98.0, 500.0] {
            let d = StudentsT::new(0.0, 1.0, df).unwrap();
            for t in [-4.0, -1.3, 0.0, 0.7, 2.2, 6.0] {
                assert_abs_diff_eq!(student_t_cdf(t, df), d.cdf(t), epsilon = 1e-12);
            }
            for p in [0.8, 0.9, 0.95, 0.975] {
                let q = student_t_quantile(p, df);
                assert_abs_diff_eq!(d.cdf(q), p, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn table_values() {
        // one-sided 0.90 and 0.95 quantiles from the standard t-table
        assert_abs_diff_eq!(student_t_quantile(0.90, 29.0), 1.311, epsilon = 5e-4);
        assert_abs_diff_eq!(student_t_quantile(0.95, 29.0), 1.699, epsilon = 5e-4);
        assert_abs_diff_eq!(student_t_quantile(0.95, 10.0), 1.812, epsilon = 5e-4);
        assert_abs_diff_eq!(student_t_quantile(0.10, 4.0), -1.533, epsilon = 5e-4);
    }

    #[test]
    fn quantile_is_monotone() {
        let mut last = f64::NEG_INFINITY;
        for i in 1..100 {
            let q = student_t_quantile(i as f64 / 100.0, 5.0);
            assert!(q > last);
            last = q;
        }
    }
}
