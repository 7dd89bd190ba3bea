//! MCMC engine for the gCAR model: one Gibbs scan per iteration with
//! element-wise μ updates, conjugate γ/σ²/p steps, rejection sampling for η
//! and slice sampling for ρ; multiple independent chains with burn-in and
//! thinning.
//!
//! Scan order is fixed: μ → γ → σ² → p → η → ρ.

pub mod eta;
pub mod langevin;
pub mod slice;
pub mod store;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GcarError, Result};
use crate::graph::{quadforms_unchecked, spectral_summary, NeighborhoodGraph, QuadForms, SpectralSummary};
use crate::model::{
    gamma_full_conditional_prob, inclusion_weight, mu_full_conditional_params, p_full_conditional_params,
    rho_log_density, sigma2_params_from, ChainState, ModelSpec, PUpdate, Variant,
};
use crate::stats::{inv_logit, ln_normal_pdf, log_add_exp, logit};

pub use eta::{sample_eta_rejection, EtaDraw};
pub use langevin::sample_p_langevin;
pub use slice::{slice_sample_doubling, SliceDraw, SliceTuning};
pub use store::{CaseAccumulators, ChainDraws, ChainStats, QuantileSketch, SampleStore, Scalar, StoreMeta};

pub type ChainRng = ChaCha8Rng;

/// Above this many cases μ is summarized instead of stored draw by draw.
pub const FULL_STORAGE_MAX_CASES: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StorageMode {
    /// Full draws when J ≤ 5,000, sketches otherwise.
    Auto,
    Full,
    Sketch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub burn_in: usize,
    /// Post-burn-in iterations per chain; every `thin`-th is retained.
    pub n_iter: usize,
    pub thin: usize,
    pub seed: u64,
    /// Initial slice bracket width, in ρ units.
    pub slice_width: f64,
    pub slice_max_doublings: u32,
    /// Langevin step size on the logit scale.
    pub langevin_step: f64,
    pub metropolis_mix_prob: f64,
    pub storage: StorageMode,
    /// Coordinates whose full μ traces are kept in sketch mode.
    pub track: Vec<usize>,
    /// Draws kept for posterior-predictive checks in sketch mode.
    pub ppd_keep: usize,
    /// Worker cap; `None` reads `GCAR_THREADS`, else one worker per chain.
    pub threads: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_chains: 3,
            burn_in: 5_000,
            n_iter: 10_000,
            thin: 5,
            seed: 1,
            slice_width: 0.1,
            slice_max_doublings: 16,
            langevin_step: 0.05,
            metropolis_mix_prob: 0.1,
            storage: StorageMode::Auto,
            track: Vec::new(),
            ppd_keep: 200,
            threads: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GcarError::InvalidParameter(m.to_string()));
        if self.n_chains == 0 {
            return bad("n_chains must be positive");
        }
        if self.n_iter == 0 || self.thin == 0 {
            return bad("n_iter and thin must be positive");
        }
        if self.n_iter % self.thin != 0 {
            return bad("thin must divide n_iter");
        }
        if !(self.slice_width > 0.0) || self.slice_max_doublings == 0 {
            return bad("slice width and doubling cap must be positive");
        }
        if !(self.langevin_step > 0.0) || !(0.0..=1.0).contains(&self.metropolis_mix_prob) {
            return bad("langevin_step must be positive and metropolis_mix_prob in [0, 1]");
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn retained_per_chain(&self) -> usize {
        self.n_iter / self.thin
    }

    pub fn full_storage(&self, n_cases: usize) -> bool {
        match self.storage {
            StorageMode::Full => true,
            StorageMode::Sketch => false,
            StorageMode::Auto => n_cases <= FULL_STORAGE_MAX_CASES,
        }
    }

    pub fn worker_count(&self) -> usize {
        let cap = self
            .threads
            .or_else(|| std::env::var("GCAR_THREADS").ok().and_then(|v| v.parse().ok()))
            .unwrap_or(self.n_chains);
        cap.clamp(1, self.n_chains)
    }
}

/// Deterministic RNG for chain `chain` under master seed `seed`.
pub fn chain_rng(seed: u64, chain: usize) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Indices of the `k` largest |y_j| (ties broken by index).
pub fn top_abs_indices(y: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| y[b].abs().total_cmp(&y[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Starting point of chain `chain`. Chains after the first jitter μ and
/// logit(p) for overdispersion.
pub fn initial_state<R: Rng + ?Sized>(
    y: &[f64],
    spectral: Option<&SpectralSummary>,
    spec: &ModelSpec,
    chain: usize,
    rng: &mut R,
) -> ChainState {
    let gamma: Vec<bool> = y.iter().map(|v| v.abs() > 1.64).collect();
    let mut mu: Vec<f64> = y.iter().zip(&gamma).map(|(&v, &g)| if g { v } else { 0.0 }).collect();
    let sigma2 = if y.len() >= 2 { crate::stats::variance(y) } else { 1.0 }.max(0.1);
    let rho = spectral.and_then(|s| s.rho_upper()).map_or(0.0, |u| 0.9 * u);
    let mut p = spec.alpha / (spec.alpha + 1.0);
    if chain > 0 {
        for m in mu.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *m += z;
        }
        let z: f64 = StandardNormal.sample(rng);
        p = inv_logit(logit(p) + z).clamp(1e-6, 1.0 - 1e-6);
    }
    ChainState {
        mu,
        gamma,
        sigma2,
        eta: 1.0,
        rho,
        p,
    }
}

/// Everything a sweep needs besides the state and the RNG.
#[derive(Debug, Clone, Copy)]
pub struct SweepContext<'a> {
    pub graph: &'a NeighborhoodGraph,
    pub spectral: &'a SpectralSummary,
    pub spec: &'a ModelSpec,
    pub y: &'a [f64],
    pub slice: SliceTuning,
    pub langevin_step: f64,
    pub mix_prob: f64,
}

impl<'a> SweepContext<'a> {
    pub fn new(
        graph: &'a NeighborhoodGraph,
        spectral: &'a SpectralSummary,
        spec: &'a ModelSpec,
        y: &'a [f64],
        config: &SamplerConfig,
    ) -> Self {
        SweepContext {
            graph,
            spectral,
            spec,
            y,
            slice: SliceTuning {
                width: config.slice_width,
                max_doublings: config.slice_max_doublings,
            },
            langevin_step: config.langevin_step,
            mix_prob: config.metropolis_mix_prob,
        }
    }

    fn spatial(&self) -> bool {
        self.spectral.support.is_some()
    }
}

/// Element-wise μ scan; `draw(mean, var)` produces each new value.
pub fn update_mu<F: FnMut(f64, f64) -> f64>(state: &mut ChainState, g: &NeighborhoodGraph, y: &[f64], mut draw: F) {
    for j in 0..state.len() {
        let (m, v) = mu_full_conditional_params(j, state, g, y);
        state.mu[j] = draw(m, v);
    }
}

/// ρ update by slice sampling on its full conditional.
pub fn sample_rho_slice<R: Rng + ?Sized>(
    state: &ChainState,
    g: &NeighborhoodGraph,
    spectral: &SpectralSummary,
    tuning: SliceTuning,
    rng: &mut R,
) -> Result<SliceDraw> {
    let support = spectral
        .support
        .ok_or_else(|| GcarError::InvalidParameter("no spatial term: rho is fixed at 0".into()))?;
    let q = quadforms_unchecked(g, &state.mu);
    let (eta, sigma2) = (state.eta, state.sigma2);
    let draw = slice_sample_doubling(
        state.rho,
        |r| rho_log_density(r, &q, eta, sigma2, spectral),
        tuning,
        Some((support.lower, support.upper)),
        rng,
    );
    Ok(draw)
}

fn draw_sigma2<R: Rng + ?Sized>(state: &ChainState, y: &[f64], q: &QuadForms, rng: &mut R) -> Result<f64> {
    let (shape, rate) = sigma2_params_from(state, y, q)?;
    let gam = Gamma::new(shape, 1.0).map_err(|e| GcarError::Numerical(e.to_string()))?;
    Ok(rate / gam.sample(rng))
}

/// σ² draw from its inverse gamma full conditional.
pub fn sample_sigma2<R: Rng + ?Sized>(state: &ChainState, g: &NeighborhoodGraph, y: &[f64], rng: &mut R) -> Result<f64> {
    draw_sigma2(state, y, &quadforms_unchecked(g, &state.mu), rng)
}

/// One full Gibbs scan, in place.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &SweepContext<'_>,
    rng: &mut R,
    stats: &mut ChainStats,
) -> Result<()> {
    let (g, y) = (ctx.graph, ctx.y);
    update_mu(state, g, y, |m, v| {
        let z: f64 = StandardNormal.sample(rng);
        m + v.sqrt() * z
    });

    for j in 0..state.len() {
        let pr = gamma_full_conditional_prob(j, state, y);
        state.gamma[j] = rng.random::<f64>() < pr;
    }

    let q = quadforms_unchecked(g, &state.mu);
    state.sigma2 = draw_sigma2(state, y, &q, rng)?;

    let (a, b) = p_full_conditional_params(state, ctx.spec.alpha);
    match ctx.spec.p_update {
        PUpdate::ConjugateBeta => {
            let beta = Beta::new(a, b).map_err(|e| GcarError::Numerical(e.to_string()))?;
            let p: f64 = beta.sample(rng);
            state.p = p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        }
        PUpdate::LangevinLogit => {
            let d = sample_p_langevin(state.p, a, b, ctx.langevin_step, ctx.mix_prob, rng);
            stats.p_proposals += 1;
            stats.p_accepted += d.accepted as u64;
            state.p = d.value;
        }
    }

    let scale = q.combined(state.rho) / (2.0 * state.sigma2);
    let e = sample_eta_rejection(scale.max(0.0), state.len(), rng)?;
    stats.eta_proposals += e.proposals as u64;
    stats.eta_fallbacks += e.fallback as u64;
    state.eta = e.value;

    if ctx.spatial() {
        let support = ctx.spectral.support.expect("spatial");
        let (eta, sigma2) = (state.eta, state.sigma2);
        let d = slice_sample_doubling(
            state.rho,
            |r| rho_log_density(r, &q, eta, sigma2, ctx.spectral),
            ctx.slice,
            Some((support.lower, support.upper)),
            rng,
        );
        stats.slice_evaluations += d.evaluations;
        if d.hit_cap {
            stats.slice_cap_hits += 1;
            log::debug!("slice doubling cap reached at rho = {}", state.rho);
        }
        state.rho = d.value;
    }
    Ok(())
}

/// Collects retained draws of one chain.
pub(crate) struct Recorder {
    n: usize,
    full: bool,
    expected: usize,
    ppd_keep: usize,
    draws: ChainDraws,
}

impl Recorder {
    pub(crate) fn new(n: usize, config: &SamplerConfig, stats: ChainStats) -> Self {
        let full = config.full_storage(n);
        let expected = config.retained_per_chain();
        let draws = ChainDraws {
            sigma2: Vec::with_capacity(expected),
            eta: Vec::with_capacity(expected),
            rho: Vec::with_capacity(expected),
            p: Vec::with_capacity(expected),
            mu: full.then(|| Vec::with_capacity(expected * n)),
            gamma: full.then(|| Vec::with_capacity(expected * n)),
            tracked: if full {
                Vec::new()
            } else {
                config.track.iter().map(|&j| (j, Vec::with_capacity(expected))).collect()
            },
            ppd: Vec::new(),
            cases: CaseAccumulators::new(n, !full),
            stats,
        };
        Recorder {
            n,
            full,
            expected,
            ppd_keep: config.ppd_keep,
            draws,
        }
    }

    /// Record one retained state; `incl` is the per-case inclusion term.
    pub(crate) fn record<F: Fn(usize) -> f64>(&mut self, state: &ChainState, y: &[f64], incl: F) {
        let i = self.draws.len();
        let d = &mut self.draws;
        d.sigma2.push(state.sigma2);
        d.eta.push(state.eta);
        d.rho.push(state.rho);
        d.p.push(state.p);
        if self.full {
            d.mu.as_mut().expect("full").extend_from_slice(&state.mu);
            d.gamma.as_mut().expect("full").extend_from_slice(&state.gamma);
        } else {
            for (j, trace) in d.tracked.iter_mut() {
                trace.push(state.mu[*j]);
            }
            let k = self.ppd_keep;
            let n_ret = self.expected.max(1);
            if k > 0 && ((i + 1) * k / n_ret > i * k / n_ret) {
                d.ppd.push((state.sigma2, (0..self.n).map(|j| state.theta(j)).collect()));
            }
        }
        let c = &mut d.cases;
        c.n_draws += 1;
        for j in 0..self.n {
            let theta = state.theta(j);
            let r = y[j] - theta;
            c.rb_sum[j] += incl(j);
            c.gamma_count[j] += state.gamma[j] as u64;
            c.mu[j].push(state.mu[j]);
            let ll = ln_normal_pdf(r, state.sigma2);
            c.loglik_lse[j] = log_add_exp(c.loglik_lse[j], ll);
            c.loglik[j].push(ll);
            c.sq_err[j] += r * r;
            if let Some(s) = c.sketches.as_mut() {
                s[j].push(state.mu[j]);
            }
        }
    }

    pub(crate) fn stats_mut(&mut self) -> &mut ChainStats {
        &mut self.draws.stats
    }

    pub(crate) fn finish(self) -> ChainDraws {
        self.draws
    }
}

/// Run `n` chain closures on a bounded worker pool, returning results in
/// chain order.
pub(crate) fn run_parallel<F>(n_chains: usize, workers: usize, f: F) -> Result<Vec<ChainDraws>>
where
    F: Fn(usize) -> Result<ChainDraws> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| GcarError::Numerical(format!("thread pool: {e}")))?;
    let results: Vec<Result<ChainDraws>> = pool.install(|| (0..n_chains).into_par_iter().map(&f).collect());
    results
        .into_iter()
        .enumerate()
        .map(|(chain, r)| {
            r.map_err(|e| GcarError::ChainAborted {
                chain,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Sample the posterior of the configured model.
///
/// The independence variant ignores the graph and dispatches to the
/// Scott–Berger sampler.
pub fn run_chains(y: &[f64], g: &NeighborhoodGraph, spec: &ModelSpec, config: &SamplerConfig) -> Result<SampleStore> {
    if spec.variant == Variant::SbIndependence {
        return crate::sb::sb_run(y, spec.alpha, config);
    }
    let spectral = spectral_summary(g)?;
    run_chains_with(y, g, &spectral, spec, config)
}

/// As [`run_chains`] with a precomputed spectral summary.
pub fn run_chains_with(
    y: &[f64],
    g: &NeighborhoodGraph,
    spectral: &SpectralSummary,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> Result<SampleStore> {
    spec.validate()?;
    config.validate()?;
    if spec.variant != Variant::Gcar {
        return Err(GcarError::InvalidParameter("run_chains_with expects the gCAR variant".into()));
    }
    if y.len() != g.len() {
        return Err(GcarError::DimensionMismatch {
            expected: g.len(),
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GcarError::InvalidParameter("non-finite statistic".into()));
    }
    if (spec.d - g.d()).abs() > 0.0 {
        return Err(GcarError::InvalidParameter(format!(
            "model d = {} differs from graph d = {}",
            spec.d,
            g.d()
        )));
    }
    let start = Instant::now();
    let n = y.len();
    let chains = run_parallel(config.n_chains, config.worker_count(), |chain| {
        let mut rng = chain_rng(config.seed, chain);
        let mut state = initial_state(y, Some(spectral), spec, chain, &mut rng);
        let ctx = SweepContext::new(g, spectral, spec, y, config);
        let mut rec = Recorder::new(
            n,
            config,
            ChainStats {
                seed: config.seed,
                stream: chain as u64,
                ..Default::default()
            },
        );
        let mut scratch = ChainStats::default();
        for _ in 0..config.burn_in {
            gibbs_sweep(&mut state, &ctx, &mut rng, &mut scratch)?;
        }
        for it in 0..config.n_iter {
            gibbs_sweep(&mut state, &ctx, &mut rng, rec.stats_mut())?;
            if (it + 1) % config.thin == 0 {
                rec.record(&state, y, |j| inclusion_weight(y[j], state.mu[j], state.sigma2, state.p));
            }
        }
        let draws = rec.finish();
        if draws.stats.slice_cap_hits > 0 {
            log::warn!(
                "chain {chain}: slice doubling cap reached {} times",
                draws.stats.slice_cap_hits
            );
        }
        Ok(draws)
    })?;
    Ok(SampleStore {
        variant: Variant::Gcar,
        n_cases: n,
        chains,
        meta: StoreMeta {
            spec: *spec,
            config: config.clone(),
            wall_clock_secs: start.elapsed().as_secs_f64(),
            rho_support: spectral.support.map(|s| (s.lower, s.upper)),
        },
    })
}
