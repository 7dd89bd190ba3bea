//! Scott–Berger independence baseline: y_j ~ p N(0, σ²) + (1-p) N(0, σ² + τ²)
//! with prior (σ² + τ²)^{-2} on the variances and Beta(α, 1) on p.
//!
//! The sampler runs random-walk Metropolis on (log σ², log τ², logit p), one
//! coordinate at a time, with step sizes adapted during burn-in only. Every
//! retained draw also imputes (γ, μ) from their exact conditional so the
//! same downstream summaries apply to both models.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GcarError, Result};
use crate::model::{sb_log_joint, ChainState, ModelSpec, Variant};
use crate::sampler::{chain_rng, run_parallel, ChainStats, Recorder, SampleStore, SamplerConfig, StoreMeta};
use crate::stats::{gauss_legendre_on, inv_logit, log_sum_exp, logit};

/// Posterior probability that case `y` is non-null given (σ², τ², p).
#[inline]
pub fn sb_inclusion_term(y: f64, sigma2: f64, tau2: f64, p: f64) -> f64 {
    let s = sigma2 + tau2;
    let log_odds = (1.0 - p).ln() - p.ln() + 0.5 * (sigma2 / s).ln() + y * y * tau2 / (2.0 * sigma2 * s);
    inv_logit(log_odds)
}

/// Log target on the unconstrained scale (Jacobian included).
fn log_target(x: &[f64; 3], alpha: f64, y: &[f64]) -> f64 {
    let (s2, t2, p) = (x[0].exp(), x[1].exp(), inv_logit(x[2]));
    if !(p > 0.0 && p < 1.0) {
        return f64::NEG_INFINITY;
    }
    sb_log_joint(s2, t2, p, alpha, y) + x[0] + x[1] + p.ln() + (1.0 - p).ln()
}

const ADAPT_EVERY: usize = 50;
const TARGET_ACCEPT: f64 = 0.35;

fn run_chain(y: &[f64], alpha: f64, config: &SamplerConfig, chain: usize) -> Result<crate::sampler::ChainDraws> {
    let n = y.len();
    let mut rng = chain_rng(config.seed, chain);
    let v = if n >= 2 { crate::stats::variance(y) } else { 1.0 }.max(0.1);
    let mut x = [v.ln(), 0.0, logit(alpha / (alpha + 1.0))];
    if chain > 0 {
        for xi in x.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *xi += 0.5 * z;
        }
    }
    let mut cur = log_target(&x, alpha, y);
    if !cur.is_finite() {
        return Err(GcarError::Numerical("independence model: non-finite initial target".into()));
    }
    let mut steps = [0.3f64; 3];
    let mut window = [0u32; 3];
    let mut total = [0u64; 3];
    let mut rec = Recorder::new(
        n,
        config,
        ChainStats {
            seed: config.seed,
            stream: chain as u64,
            ..Default::default()
        },
    );
    let mut state = ChainState {
        mu: vec![0.0; n],
        gamma: vec![false; n],
        sigma2: 1.0,
        eta: 1.0,
        rho: 0.0,
        p: 0.5,
    };
    let n_total = config.burn_in + config.n_iter;
    for it in 0..n_total {
        for k in 0..3 {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut prop = x;
            prop[k] += steps[k] * z;
            let lp = log_target(&prop, alpha, y);
            if rng.random::<f64>().ln() < lp - cur {
                x = prop;
                cur = lp;
                window[k] += 1;
                if it >= config.burn_in {
                    total[k] += 1;
                }
            }
        }
        if it < config.burn_in && (it + 1) % ADAPT_EVERY == 0 {
            for k in 0..3 {
                let rate = window[k] as f64 / ADAPT_EVERY as f64;
                steps[k] *= ((rate - TARGET_ACCEPT) * 2.0).exp();
                steps[k] = steps[k].clamp(1e-4, 10.0);
                window[k] = 0;
            }
        }
        if it >= config.burn_in && (it + 1 - config.burn_in) % config.thin == 0 {
            let (s2, t2, p) = (x[0].exp(), x[1].exp(), inv_logit(x[2]));
            impute(&mut state, y, s2, t2, p, &mut rng);
            rec.record(&state, y, |j| sb_inclusion_term(y[j], s2, t2, p));
        }
    }
    let stats = rec.stats_mut();
    stats.rw_steps = steps;
    let kept = config.n_iter.max(1) as f64;
    stats.rw_accept = total.map(|t| t as f64 / kept);
    Ok(rec.finish())
}

/// Draw (γ, μ) given the variance parameters and p.
fn impute<R: Rng + ?Sized>(state: &mut ChainState, y: &[f64], s2: f64, t2: f64, p: f64, rng: &mut R) {
    let shrink = t2 / (s2 + t2);
    for (j, &v) in y.iter().enumerate() {
        let g = rng.random::<f64>() < sb_inclusion_term(v, s2, t2, p);
        let z: f64 = StandardNormal.sample(rng);
        state.gamma[j] = g;
        state.mu[j] = if g {
            shrink * v + (s2 * shrink).sqrt() * z
        } else {
            t2.sqrt() * z
        };
    }
    state.sigma2 = s2;
    state.eta = t2 / s2;
    state.p = p;
}

/// Sample the independence-model posterior.
pub fn sb_run(y: &[f64], alpha: f64, config: &SamplerConfig) -> Result<SampleStore> {
    let spec = ModelSpec::sb(alpha);
    spec.validate()?;
    config.validate()?;
    if y.is_empty() {
        return Err(GcarError::InvalidParameter("no cases".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GcarError::InvalidParameter("non-finite statistic".into()));
    }
    let start = Instant::now();
    let chains = run_parallel(config.n_chains, config.worker_count(), |c| run_chain(y, alpha, config, c))?;
    Ok(SampleStore {
        variant: Variant::SbIndependence,
        n_cases: y.len(),
        chains,
        meta: StoreMeta {
            spec,
            config: config.clone(),
            wall_clock_secs: start.elapsed().as_secs_f64(),
            rho_support: None,
        },
    })
}

/// Quadrature posterior of the independence model for small inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SbExact {
    pub inclusion: Vec<f64>,
    pub p_mean: f64,
    pub sigma2_mean: f64,
    pub tau2_mean: f64,
}

/// Inclusion probabilities by tensor quadrature: Gauss–Legendre in p and in
/// log σ², log τ² over [-14, 10].
pub fn sb_exact_small(y: &[f64], alpha: f64) -> Result<SbExact> {
    if y.is_empty() || y.len() > 20 {
        return Err(GcarError::TooLarge(y.len(), 20));
    }
    let (pn, pw) = gauss_legendre_on(41, 0.0, 1.0);
    let (ln, lw) = gauss_legendre_on(120, -14.0, 10.0);
    let mut logw = Vec::with_capacity(pn.len() * ln.len() * ln.len());
    let mut pts = Vec::with_capacity(logw.capacity());
    for (i, &p) in pn.iter().enumerate() {
        for (a, &ls) in ln.iter().enumerate() {
            for (b, &lt) in ln.iter().enumerate() {
                let (s2, t2) = (ls.exp(), lt.exp());
                let l = sb_log_joint(s2, t2, p, alpha, y) + ls + lt + (pw[i] * lw[a] * lw[b]).ln();
                logw.push(l);
                pts.push((s2, t2, p));
            }
        }
    }
    let z = log_sum_exp(&logw);
    let mut incl = vec![0.0; y.len()];
    let (mut pm, mut sm, mut tm) = (0.0, 0.0, 0.0);
    for (l, &(s2, t2, p)) in logw.iter().zip(&pts) {
        let w = (l - z).exp();
        if w == 0.0 {
            continue;
        }
        pm += w * p;
        sm += w * s2;
        tm += w * t2;
        for (j, &v) in y.iter().enumerate() {
            incl[j] += w * sb_inclusion_term(v, s2, t2, p);
        }
    }
    Ok(SbExact {
        inclusion: incl,
        p_mean: pm,
        sigma2_mean: sm,
        tau2_mean: tm,
    })
}
