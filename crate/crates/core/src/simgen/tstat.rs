//! Two-group t statistics and their probit transform y = Φ⁻¹(F_ν(t)).

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{GcarError, Result};
use crate::stats::LN_2PI;

/// Pooled two-sample t statistic of `treat` against `control`.
pub fn pooled_t(control: &[f64], treat: &[f64]) -> f64 {
    let (n1, n2) = (control.len() as f64, treat.len() as f64);
    let m1 = control.iter().sum::<f64>() / n1;
    let m2 = treat.iter().sum::<f64>() / n2;
    let ss = control.iter().map(|x| (x - m1).powi(2)).sum::<f64>() + treat.iter().map(|x| (x - m2).powi(2)).sum::<f64>();
    let sp2 = ss / (n1 + n2 - 2.0);
    (m2 - m1) / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
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
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

/// log P(T_ν ≤ −|t|).
pub fn ln_t_lower_tail(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let (a, b) = (df / 2.0, 0.5);
    if x > (a + 1.0) / (a + b + 2.0) {
        return (0.5 * beta_reg(a, b, x)).ln();
    }
    let ln_i = a * x.ln() + b * (1.0 - x).ln() - a.ln() - ln_beta(a, b) + beta_cf(a, b, x).ln();
    ln_i - std::f64::consts::LN_2
}

/// log Φ(z) for z ≤ −30 from the asymptotic tail series.
fn ln_phi_far_tail(z: f64) -> f64 {
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    -0.5 * z2 - 0.5 * LN_2PI - (-z).ln() + series.ln()
}

/// Φ⁻¹(exp(ln_p)) for a lower-tail probability given on the log scale.
pub fn probit_from_ln(ln_p: f64) -> f64 {
    if ln_p > -700.0 {
        let std = Normal::standard();
        return std.inverse_cdf(ln_p.exp());
    }
    let mut z = -(-2.0 * ln_p).sqrt();
    for _ in 0..50 {
        let f = ln_phi_far_tail(z) - ln_p;
        // d/dz log Φ(z) = φ(z)/Φ(z)
        let slope = (-0.5 * z * z - 0.5 * LN_2PI - ln_phi_far_tail(z)).exp();
        let step = f / slope;
        z -= step;
        if step.abs() < 1e-12 * z.abs() {
            break;
        }
    }
    z
}

/// y = Φ⁻¹(F_ν(t)), evaluated through the lower tail on the log scale so
/// large |t| does not saturate.
pub fn t_to_z(t: &[f64], df: f64) -> Result<Vec<f64>> {
    if !(df >= 1.0) {
        return Err(GcarError::InvalidParameter(format!("degrees of freedom {df} < 1")));
    }
    t.iter()
        .map(|&v| {
            if !v.is_finite() {
                return Err(GcarError::InvalidParameter(format!("non-finite t statistic {v}")));
            }
            if v == 0.0 {
                return Ok(0.0);
            }
            let z = -probit_from_ln(ln_t_lower_tail(v, df));
            Ok(z.copysign(v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::StudentsT;

    #[test]
    fn zero_maps_to_zero() {
        for df in [1.0, 8.0, 100.0] {
            assert_eq!(t_to_z(&[0.0], df).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn large_df_is_identity() {
        let ts: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.1).collect();
        for (t, z) in ts.iter().zip(t_to_z(&ts, 1e6).unwrap()) {
            assert!((t - z).abs() < 1e-3, "{t} {z}");
        }
    }

    #[test]
    fn matches_direct_cdf_in_the_body() {
        let dist = StudentsT::new(0.0, 1.0, 8.0).unwrap();
        let std = Normal::standard();
        for t in [-6.0, -2.5, -0.3, 0.7, 3.1, 7.9] {
            let direct = std.inverse_cdf(dist.cdf(t));
            let z = t_to_z(&[t], 8.0).unwrap()[0];
            assert!((direct - z).abs() < 1e-8, "{t}: {direct} vs {z}");
        }
    }

    #[test]
    fn extreme_tails_stay_finite_and_ordered() {
        let ts = [50.0, 1e3, 1e6, 1e30, 1e100];
        let z = t_to_z(&ts, 1e6).unwrap();
        assert!(z.iter().all(|v| v.is_finite()));
        assert!(z.windows(2).all(|w| w[0] < w[1]));
        // normal limit at t = 50: z ≈ 50
        assert!((z[0] - 50.0).abs() < 0.1);
        let z8 = t_to_z(&[-1e40], 8.0).unwrap()[0];
        assert!(z8.is_finite() && z8 < -30.0);
    }

    #[test]
    fn lower_tail_continuity_across_branches() {
        let df: f64 = 8.0;
        let x_switch = (df / 2.0 + 1.0) / (df / 2.0 + 2.5);
        let t_switch = (df / x_switch - df).sqrt();
        let a = ln_t_lower_tail(t_switch * (1.0 - 1e-9), df);
        let b = ln_t_lower_tail(t_switch * (1.0 + 1e-9), df);
        assert!((a - b).abs() < 1e-7);
    }

    #[test]
    fn pooled_t_textbook() {
        let c = [1.0, 2.0, 3.0, 4.0, 5.0];
        let t = [3.0, 4.0, 5.0, 6.0, 7.0];
        // means differ by 2; pooled variance 2.5; se = sqrt(2.5 * 0.4) = 1
        assert!((pooled_t(&c, &t) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(t_to_z(&[f64::NAN], 8.0).is_err());
        assert!(t_to_z(&[1.0], 0.5).is_err());
    }
}
