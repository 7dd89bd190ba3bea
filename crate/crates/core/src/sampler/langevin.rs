//! Metropolis-adjusted Langevin update for the null proportion on the logit
//! scale, with occasional plain random-walk proposals.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::stats::{inv_logit, logit};

/// log density of π = logit(p) when p ~ Beta(a, b), Jacobian included:
/// a·log p + b·log(1 - p).
#[inline]
pub fn logit_beta_log_density(pi: f64, a: f64, b: f64) -> f64 {
    // log p = -log(1 + e^{-π}),  log(1 - p) = -log(1 + e^{π})
    -a * softplus(-pi) - b * softplus(pi)
}

#[inline]
pub fn logit_beta_grad(pi: f64, a: f64, b: f64) -> f64 {
    let p = inv_logit(pi);
    a * (1.0 - p) - b * p
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn langevin_mean(pi: f64, a: f64, b: f64, step: f64) -> f64 {
    pi + 0.5 * step * step * logit_beta_grad(pi, a, b)
}

/// Log Metropolis–Hastings ratio of a Langevin proposal `from → to`.
pub fn langevin_log_acceptance(from: f64, to: f64, a: f64, b: f64, step: f64) -> f64 {
    let s2 = step * step;
    let fwd = to - langevin_mean(from, a, b, step);
    let rev = from - langevin_mean(to, a, b, step);
    logit_beta_log_density(to, a, b) - logit_beta_log_density(from, a, b) - (rev * rev - fwd * fwd) / (2.0 * s2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PDraw {
    pub value: f64,
    pub accepted: bool,
}

/// One update of p targeting Beta(a, b) through π = logit(p).
pub fn sample_p_langevin<R: Rng + ?Sized>(p: f64, a: f64, b: f64, step: f64, mix_prob: f64, rng: &mut R) -> PDraw {
    let pi = logit(p);
    let z: f64 = StandardNormal.sample(rng);
    let use_rw = rng.random::<f64>() < mix_prob;
    let (prop, log_ratio) = if use_rw {
        let prop = pi + step * z;
        (prop, logit_beta_log_density(prop, a, b) - logit_beta_log_density(pi, a, b))
    } else {
        let prop = langevin_mean(pi, a, b, step) + step * z;
        (prop, langevin_log_acceptance(pi, prop, a, b, step))
    };
    let q = inv_logit(prop);
    let u: f64 = rng.random();
    if q > 0.0 && q < 1.0 && u.ln() < log_ratio {
        PDraw { value: q, accepted: true }
    } else {
        PDraw { value: p, accepted: false }
    }
}
