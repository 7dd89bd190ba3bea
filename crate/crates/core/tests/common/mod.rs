//! Oracles shared by the integration targets: grid CDFs built from densities
//! written out independently of the library, and frozen-conditional runs.

#![allow(dead_code)]

use gcar::graph::{spectral_summary, NeighborhoodGraph};
use gcar::model::ChainState;
use gcar::sampler::{chain_rng, sample_eta_rejection, sample_p_langevin, sample_rho_slice, sample_sigma2, SliceTuning};
use gcar::stats::{ks_pvalue, ks_statistic};
use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{Beta as BetaDist, ContinuousCDF};

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

/// Normalized CDF of an unnormalized log density in `u` on [lo, hi]
/// (trapezoid rule), returned as sorted knots.
pub struct GridCdf {
    u: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridCdf {
    pub fn new<F: Fn(f64) -> f64>(log_f: F, lo: f64, hi: f64, n: usize) -> Self {
        let u: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let lf: Vec<f64> = u.iter().map(|&x| log_f(x)).collect();
        let m = lf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let f: Vec<f64> = lf.iter().map(|v| (v - m).exp()).collect();
        let mut cdf = vec![0.0; n];
        for k in 1..n {
            cdf[k] = cdf[k - 1] + 0.5 * (f[k] + f[k - 1]) * (u[k] - u[k - 1]);
        }
        let total = cdf[n - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        GridCdf { u, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.u[0] {
            return 0.0;
        }
        if x >= *self.u.last().unwrap() {
            return 1.0;
        }
        let k = self.u.partition_point(|&v| v <= x);
        let (u0, u1) = (self.u[k - 1], self.u[k]);
        let t = (x - u0) / (u1 - u0);
        self.cdf[k - 1] + t * (self.cdf[k] - self.cdf[k - 1])
    }
}

pub struct KsOutcome {
    pub name: &'static str,
    pub n: usize,
    pub d: f64,
    pub pvalue: f64,
}

fn ks(name: &'static str, draws: &[f64], cdf: impl Fn(f64) -> f64) -> KsOutcome {
    let d = ks_statistic(draws, cdf);
    KsOutcome {
        name,
        n: draws.len(),
        d,
        pvalue: ks_pvalue(d, draws.len()),
    }
}

/// η given a = 10, J = 50 against η^{-J/2-2} e^{-a/η} (η/(1+η))², compared
/// on the log scale.
pub fn eta_check(n: usize, seed: u64) -> KsOutcome {
    let (a, j) = (10.0, 50usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..n)
        .map(|_| sample_eta_rejection(a, j, &mut rng).unwrap().value.ln())
        .collect();
    let jf = j as f64;
    let grid = GridCdf::new(
        |u| {
            let e = u.exp();
            -(jf / 2.0 + 2.0) * u - a / e + 2.0 * (e / (1.0 + e)).ln() + u
        },
        -10.0,
        8.0,
        200_001,
    );
    ks("eta rejection", &draws, |x| grid.eval(x))
}

/// Small weighted graph with two components and an isolated node.
pub fn test_graph(d: f64) -> NeighborhoodGraph {
    let e = [
        (0, 1, 1.0),
        (1, 2, 1.0),
        (2, 3, 0.5),
        (3, 0, 1.0),
        (1, 3, 2.0),
        (4, 5, 1.0),
        (5, 6, 1.0),
        (6, 7, 1.0),
        (7, 8, 1.0),
    ];
    NeighborhoodGraph::from_indexed(ids(10), &e, d).unwrap()
}

pub fn frozen_state(n: usize, seed: u64) -> (ChainState, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
    let y: Vec<f64> = (0..n).map(|k| if k % 3 == 0 { 2.5 + z() } else { z() }).collect();
    let mu: Vec<f64> = y.iter().map(|v| 0.6 * v + 0.3 * z()).collect();
    let gamma: Vec<bool> = (0..n).map(|k| k % 2 == 0).collect();
    (
        ChainState {
            mu,
            gamma,
            sigma2: 0.9,
            eta: 0.7,
            rho: 0.0,
            p: 0.6,
        },
        y,
    )
}

/// Dense log|D*_w - ρW|, or None outside the positive-definite cone.
fn dense_log_det(g: &NeighborhoodGraph, rho: f64) -> Option<f64> {
    let ch = Cholesky::new(g.dense_precision(rho))?;
    Some(2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// ρ slice sampler (25 slice steps from ρ = 0 per replicate) against the
/// conditional ∝ |D*_w - ρW|^{1/2} exp(-μ'(D*_w - ρW)μ / (2ησ²)).
pub fn rho_check(n: usize, seed: u64) -> KsOutcome {
    let g = test_graph(1.0);
    let sp = spectral_summary(&g).unwrap();
    let s = sp.support.unwrap();
    let (mut st, _) = frozen_state(g.len(), 11);
    let mu = nalgebra::DVector::from_vec(st.mu.clone());
    let (eta, sigma2) = (st.eta, st.sigma2);
    let grid = GridCdf::new(
        |r| match dense_log_det(&g, r) {
            Some(ld) => 0.5 * ld - (mu.transpose() * g.dense_precision(r) * &mu)[(0, 0)] / (2.0 * eta * sigma2),
            None => f64::NEG_INFINITY,
        },
        s.lower,
        s.upper,
        20_001,
    );
    let tuning = SliceTuning {
        width: 0.1,
        max_doublings: 16,
    };
    let mut rng = chain_rng(seed, 0);
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            st.rho = 0.0;
            for _ in 0..25 {
                st.rho = sample_rho_slice(&st, &g, &sp, tuning, &mut rng).unwrap().value;
            }
            st.rho
        })
        .collect();
    ks("rho slice", &draws, |x| grid.eval(x))
}

/// Langevin/Metropolis p kernel (400 steps from p = 0.5 per replicate)
/// against Beta(80, 20).
pub fn p_langevin_check(n: usize, seed: u64) -> KsOutcome {
    let (a, b) = (80.0, 20.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let mut p = 0.5;
            for _ in 0..400 {
                p = sample_p_langevin(p, a, b, 0.05, 0.1, &mut rng).value;
            }
            p
        })
        .collect();
    let beta = BetaDist::new(a, b).unwrap();
    ks("p Langevin", &draws, |x| beta.cdf(x))
}

/// σ² draw against (σ²)^{-J-1} exp(-[Σ(y-γμ)² + μ'(D*_w-ρW)μ/η] / (2σ²)),
/// compared on the log scale.
pub fn sigma2_check(n: usize, seed: u64) -> KsOutcome {
    let g = test_graph(1.0);
    let (mut st, y) = frozen_state(g.len(), 12);
    st.rho = 0.4;
    let mu = nalgebra::DVector::from_vec(st.mu.clone());
    let rss: f64 = y
        .iter()
        .zip(st.mu.iter().zip(&st.gamma))
        .map(|(v, (m, &on))| {
            let r = v - if on { *m } else { 0.0 };
            r * r
        })
        .sum();
    let c = rss + (mu.transpose() * g.dense_precision(st.rho) * &mu)[(0, 0)] / st.eta;
    let jf = g.len() as f64;
    let grid = GridCdf::new(|u| -(jf + 1.0) * u - c / (2.0 * u.exp()) + u, -8.0, 6.0, 200_001);
    let mut rng: rand_chacha::ChaCha8Rng = chain_rng(seed, 0);
    let draws: Vec<f64> = (0..n).map(|_| sample_sigma2(&st, &g, &y, &mut rng).unwrap().ln()).collect();
    ks("sigma2 conjugate", &draws, |x| grid.eval(x))
}

pub fn uniform_seed<R: Rng>(rng: &mut R) -> u64 {
    rng.random()
}
