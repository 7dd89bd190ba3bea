//! Univariate slice sampling with the doubling procedure and shrinkage
//! (Neal, 2003), used for the propriety parameter ρ.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceTuning {
    pub width: f64,
    pub max_doublings: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceDraw {
    pub value: f64,
    pub evaluations: u64,
    /// Doubling stopped at the cap with an endpoint still inside the slice.
    pub hit_cap: bool,
}

/// One slice-sampling transition from `x0` targeting `exp(log_f)`.
///
/// `bounds` is an open interval known to contain the support; proposals in
/// the shrinkage stage are drawn from the bracket intersected with it. The
/// doubling acceptance test always runs on the unclipped bracket.
pub fn slice_sample_doubling<F, R>(
    x0: f64,
    mut log_f: F,
    tuning: SliceTuning,
    bounds: Option<(f64, f64)>,
    rng: &mut R,
) -> SliceDraw
where
    F: FnMut(f64) -> f64,
    R: Rng + ?Sized,
{
    let w = tuning.width.max(f64::MIN_POSITIVE);
    let mut evals = 0u64;
    let mut f = |x: f64| {
        evals += 1;
        log_f(x)
    };
    let e: f64 = Exp1.sample(rng);
    let level = f(x0) - e;

    let mut left = x0 - w * rng.random::<f64>();
    let mut right = left + w;
    let mut f_left = f(left);
    let mut f_right = f(right);
    let mut k = tuning.max_doublings;
    while k > 0 && (level < f_left || level < f_right) {
        let span = right - left;
        if rng.random::<f64>() < 0.5 {
            left -= span;
            f_left = f(left);
        } else {
            right += span;
            f_right = f(right);
        }
        k -= 1;
    }
    let hit_cap = level < f_left || level < f_right;

    let (lo_b, hi_b) = bounds.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut lbar = left;
    let mut rbar = right;
    loop {
        let a = lbar.max(lo_b);
        let b = rbar.min(hi_b);
        let x1 = a + rng.random::<f64>() * (b - a);
        if x1 > lo_b && x1 < hi_b {
            let fx1 = f(x1);
            if level < fx1 && doubling_accepts(x0, x1, level, left, right, w, &mut f) {
                return SliceDraw {
                    value: x1,
                    evaluations: evals,
                    hit_cap,
                };
            }
        }
        if x1 < x0 {
            lbar = x1;
        } else {
            rbar = x1;
        }
        if rbar - lbar <= f64::EPSILON * x0.abs().max(1.0) {
            return SliceDraw {
                value: x0,
                evaluations: evals,
                hit_cap,
            };
        }
    }
}

/// Neal's test that the doubling procedure started from `x1` could have
/// produced the bracket `(left, right)`.
fn doubling_accepts<F: FnMut(f64) -> f64>(
    x0: f64,
    x1: f64,
    level: f64,
    left: f64,
    right: f64,
    w: f64,
    f: &mut F,
) -> bool {
    let (mut l, mut r) = (left, right);
    let mut differ = false;
    while r - l > 1.1 * w {
        let m = 0.5 * (l + r);
        if (x0 < m && x1 >= m) || (x0 >= m && x1 < m) {
            differ = true;
        }
        if x1 < m {
            r = m;
        } else {
            l = m;
        }
        if differ && level >= f(l) && level >= f(r) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triangle_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tuning = SliceTuning {
            width: 0.1,
            max_doublings: 16,
        };
        let log_f = |x: f64| if x > 0.0 && x < 1.0 { x.ln() } else { f64::NEG_INFINITY };
        let mut x = 0.5;
        let mut sum = 0.0;
        let n = 100_000;
        for _ in 0..n {
            x = slice_sample_doubling(x, log_f, tuning, Some((0.0, 1.0)), &mut rng).value;
            assert!(x > 0.0 && x < 1.0);
            sum += x;
        }
        assert!((sum / n as f64 - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn standard_normal_moments_with_small_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tuning = SliceTuning {
            width: 0.05,
            max_doublings: 16,
        };
        let mut x = 3.0;
        let (mut s1, mut s2) = (0.0, 0.0);
        let n = 50_000;
        for _ in 0..n {
            x = slice_sample_doubling(x, |v: f64| -0.5 * v * v, tuning, None, &mut rng).value;
            s1 += x;
            s2 += x * x;
        }
        let m = s1 / n as f64;
        assert!(m.abs() < 0.05);
        assert!((s2 / n as f64 - m * m - 1.0).abs() < 0.05);
    }

    #[test]
    fn reports_cap_hits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tuning = SliceTuning {
            width: 1e-6,
            max_doublings: 2,
        };
        let d = slice_sample_doubling(0.0, |v: f64| -0.5 * v * v, tuning, None, &mut rng);
        assert!(d.hit_cap);
        assert!(d.value.abs() < 1e-5);
    }
}
