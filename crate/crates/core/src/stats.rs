//! Student's t distribution via the regularized incomplete beta function and
//! the pooled-variance two-sample t-test.

use serde::{Deserialize, Serialize};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos approximation, reflection below 0.5).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for I_x(a, b), modified Lentz evaluation.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
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
    for m in 1..=100_000 {
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

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x ∈ [0, 1].
pub fn inc_beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability P(|T| ≥ |t|) for Student's t with `df` degrees
/// of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    inc_beta_reg(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// CDF of Student's t.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Why a t-test could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotApplicable {
    TooFewSamples,
    ZeroVariance,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Pooled-variance two-sample Student's t-test of mean(a) − mean(b).
pub fn students_t_test(a: &[f64], b: &[f64]) -> Result<TTest, NotApplicable> {
    if a.len() < 2 || b.len() < 2 {
        return Err(NotApplicable::TooFewSamples);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    if !(pooled > 0.0) {
        return Err(NotApplicable::ZeroVariance);
    }
    let t = (ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(TTest {
        t,
        df,
        p: t_two_sided_p(t, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        // ln(9!) = ln 362880
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn inc_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a
        for x in [0.1, 0.5, 0.9] {
            assert!((inc_beta_reg(1.0, 1.0, x) - x).abs() < 1e-14);
            assert!((inc_beta_reg(3.0, 1.0, x) - x.powi(3)).abs() < 1e-14);
        }
        assert_eq!(inc_beta_reg(2.0, 3.0, 0.0), 0.0);
        assert_eq!(inc_beta_reg(2.0, 3.0, 1.0), 1.0);
    }

    #[test]
    fn hand_computed_pooled_t() {
        let r = students_t_test(&[1.0, 1.0, -1.0, -1.0], &[1.0, 1.0, 1.0, -1.0]).unwrap();
        // -0.5 / sqrt(7/6 * 1/2)
        assert!((r.t - (-0.5 / (7.0f64 / 12.0).sqrt())).abs() < 1e-15);
        assert!((r.t + 0.6547).abs() < 1e-4);
        assert_eq!(r.df, 6.0);
    }

    #[test]
    fn identical_samples() {
        let r = students_t_test(&[1.0, -1.0, 1.0], &[1.0, -1.0, 1.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn reference_table_value() {
        assert!((t_two_sided_p(2.0, 10.0) - 0.0734).abs() < 5e-5);
    }

    #[test]
    fn degenerate_inputs_are_not_applicable() {
        assert_eq!(students_t_test(&[1.0, 1.0], &[1.0, 1.0, 1.0]), Err(NotApplicable::ZeroVariance));
        assert_eq!(students_t_test(&[1.0], &[1.0, -1.0]), Err(NotApplicable::TooFewSamples));
    }

    #[test]
    fn antisymmetric() {
        let a = [1.0, 1.0, -1.0, 1.0, 1.0];
        let b = [-1.0, -1.0, 1.0, -1.0];
        let ab = students_t_test(&a, &b).unwrap();
        let ba = students_t_test(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.p, ba.p);
    }

    #[test]
    fn cdf_is_symmetric() {
        for t in [0.3, 1.7, 4.0] {
            assert!((t_cdf(t, 7.0) + t_cdf(-t, 7.0) - 1.0).abs() < 1e-14);
        }
        assert_eq!(t_cdf(0.0, 3.0), 0.5);
    }
}
