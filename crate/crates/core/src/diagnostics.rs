//! Convergence and model-assessment metrics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GcarError, Result};
use crate::graph::NeighborhoodGraph;
use crate::model::Variant;
use crate::sampler::{top_abs_indices, SampleStore, Scalar};
use crate::stats::{log_sum_exp, mean, RunningMoments};

/// Moran's I with the double sum over ordered neighbor pairs:
/// n·ΣΣ w_ij (y_i − ȳ)(y_j − ȳ) / [(Σ_{i≠j} w_ij)·Σ(y_i − ȳ)²].
pub fn morans_i(y: &[f64], g: &NeighborhoodGraph) -> Result<f64> {
    if y.len() != g.len() {
        return Err(GcarError::DimensionMismatch {
            expected: g.len(),
            got: y.len(),
        });
    }
    if !g.has_edges() {
        return Err(GcarError::InvalidParameter("Moran's I needs at least one edge".into()));
    }
    let ybar = mean(y);
    let ss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    if !(ss > 0.0) {
        return Err(GcarError::ZeroVariance("Moran's I of a constant vector".into()));
    }
    let (mut num, mut s0) = (0.0, 0.0);
    for &(i, j, w) in g.edges() {
        num += 2.0 * w * (y[i] - ybar) * (y[j] - ybar);
        s0 += 2.0 * w;
    }
    Ok(y.len() as f64 * num / (s0 * ss))
}

/// Moran's I of replicated data y* ~ N(Γμ, σ²I) over `n_rep` retained draws,
/// with the posterior-predictive p-value P(I(y*) ≥ I(y) | y).
///
/// Draws are taken evenly spaced over the store (cycling if `n_rep` exceeds
/// what the store holds).
pub fn posterior_predictive_moran(
    store: &SampleStore,
    g: &NeighborhoodGraph,
    y: &[f64],
    n_rep: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    store.ensure_nonempty()?;
    let observed = morans_i(y, g)?;
    let draws = store.theta_draws();
    if draws.is_empty() {
        return Err(GcarError::EmptyStore);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_rep);
    let mut ystar = vec![0.0; y.len()];
    for r in 0..n_rep {
        let (sigma2, theta) = &draws[(r * draws.len() / n_rep.max(1)) % draws.len()];
        let sd = sigma2.sqrt();
        let mut tries = 0;
        loop {
            for (o, t) in ystar.iter_mut().zip(theta) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *o = t + sd * z;
            }
            match morans_i(&ystar, g) {
                Ok(v) => {
                    values.push(v);
                    break;
                }
                Err(GcarError::ZeroVariance(_)) if tries == 0 => tries += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let p = values.iter().filter(|&&v| v >= observed).count() as f64 / values.len().max(1) as f64;
    Ok((values, p))
}

fn check_chains(chains: &[Vec<f64>]) -> Result<usize> {
    if chains.len() < 2 {
        return Err(GcarError::InvalidParameter("PSRF needs at least two chains".into()));
    }
    let n = chains[0].len();
    if n < 10 || chains.iter().any(|c| c.len() != n) {
        return Err(GcarError::InvalidParameter("PSRF needs equal-length chains of at least 10 draws".into()));
    }
    Ok(n)
}

/// Gelman–Rubin potential scale reduction factor, √[((n−1)/n·W + B/n)/W],
/// clamped below at 1.
pub fn psrf(chains: &[Vec<f64>]) -> Result<f64> {
    let n = check_chains(chains)? as f64;
    let m = chains.len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if !(w > 0.0) {
        return if b > 0.0 { Ok(f64::INFINITY) } else { Ok(1.0) };
    }
    let r = (((n - 1.0) / n * w + b / n) / w).sqrt();
    Ok(r.max(1.0))
}

/// PSRF after splitting every chain into halves.
pub fn psrf_split(chains: &[Vec<f64>]) -> Result<f64> {
    check_chains(chains)?;
    let half = chains[0].len() / 2;
    let split: Vec<Vec<f64>> = chains
        .iter()
        .flat_map(|c| [c[..half].to_vec(), c[c.len() - half..].to_vec()])
        .collect();
    psrf(&split)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ess {
    pub value: f64,
    /// Estimated ESS exceeds the number of draws (negative autocorrelation).
    pub superefficient: bool,
}

/// Effective sample size n / (1 + 2Σρ̂_k) with Geyer's initial positive
/// sequence truncation.
pub fn ess(draws: &[f64]) -> Result<Ess> {
    let n = draws.len();
    if n < 10 {
        return Err(GcarError::InvalidParameter("ESS needs at least 10 draws".into()));
    }
    let m = mean(draws);
    let c: Vec<f64> = draws.iter().map(|x| x - m).collect();
    let c0 = c.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if !(c0 > 0.0) {
        return Err(GcarError::ZeroVariance("ESS of a constant sequence".into()));
    }
    let rho = |k: usize| c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * c0);
    // τ = −1 + 2 Σ_{k≥0} (ρ_{2k} + ρ_{2k+1}) over the initial positive pairs
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = if k == 0 { 1.0 } else { rho(2 * k) } + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / (n as f64).ln());
    let value = n as f64 / tau;
    Ok(Ess {
        value,
        superefficient: value > n as f64,
    })
}

/// WAIC on the deviance scale from per-case log-likelihood draws
/// (`loglik[i][j]` for draw i, case j).
pub fn waic_from_loglik(loglik: &[Vec<f64>]) -> Result<f64> {
    if loglik.is_empty() {
        return Err(GcarError::EmptyStore);
    }
    let n_draws = loglik.len() as f64;
    let n_cases = loglik[0].len();
    let mut total = 0.0;
    let mut col = Vec::with_capacity(loglik.len());
    for j in 0..n_cases {
        col.clear();
        col.extend(loglik.iter().map(|r| r[j]));
        let mut mom = RunningMoments::default();
        col.iter().for_each(|&v| mom.push(v));
        total += log_sum_exp(&col) - n_draws.ln() - mom.variance();
    }
    Ok(-2.0 * total)
}

/// WAIC = −2Σ_j [log mean_i f(y_j | θ⁽ⁱ⁾) − var_i log f(y_j | θ⁽ⁱ⁾)] from the
/// store's streaming per-case accumulators.
pub fn waic(store: &SampleStore) -> Result<f64> {
    store.ensure_nonempty()?;
    let acc = store.pooled_cases();
    let ln_n = (acc.n_draws as f64).ln();
    let total: f64 = acc
        .loglik_lse
        .iter()
        .zip(&acc.loglik)
        .map(|(lse, m)| lse - ln_n - m.variance())
        .sum();
    Ok(-2.0 * total)
}

/// √(J⁻¹ Σ_j mean_i (y_j − γ_j⁽ⁱ⁾μ_j⁽ⁱ⁾)²).
pub fn rmspe(store: &SampleStore) -> Result<f64> {
    store.ensure_nonempty()?;
    let acc = store.pooled_cases();
    let n = acc.n_draws as f64;
    let j = acc.sq_err.len() as f64;
    Ok((acc.sq_err.iter().map(|s| s / n).sum::<f64>() / j).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub moran_observed: Option<f64>,
    pub moran_ppd: Vec<f64>,
    pub moran_ppd_pvalue: Option<f64>,
    pub psrf: Vec<(String, f64)>,
    pub ess: Vec<(String, Ess)>,
    pub waic: f64,
    pub rmspe: f64,
}

impl DiagnosticsReport {
    /// Parameters with PSRF above `limit`.
    pub fn unconverged(&self, limit: f64) -> Vec<&str> {
        self.psrf
            .iter()
            .filter(|(_, r)| !(*r <= limit))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    /// `metric,target,value` rows.
    pub fn rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = vec![
            ("waic".to_string(), "model".to_string(), self.waic),
            ("rmspe".to_string(), "model".to_string(), self.rmspe),
        ];
        if let (Some(o), Some(p)) = (self.moran_observed, self.moran_ppd_pvalue) {
            rows.push(("moran_observed".into(), "y".into(), o));
            rows.push(("moran_ppd_pvalue".into(), "y".into(), p));
            rows.push(("moran_ppd_mean".into(), "y".into(), mean(&self.moran_ppd)));
        }
        for (t, v) in &self.psrf {
            rows.push(("psrf".into(), t.clone(), *v));
        }
        for (t, e) in &self.ess {
            rows.push(("ess".into(), t.clone(), e.value));
            if e.superefficient {
                rows.push(("ess_superefficient".into(), t.clone(), 1.0));
            }
        }
        rows
    }
}

/// Names and per-chain traces of the monitored parameters: σ², η (τ² for
/// the independence model), ρ when spatial, p, and μ at the 5 largest |y_j|.
pub fn monitored_traces(store: &SampleStore, y: &[f64], ids: &[String]) -> Vec<(String, Vec<Vec<f64>>)> {
    let mut out = vec![("sigma2".to_string(), store.scalar_chains(Scalar::Sigma2))];
    match store.variant {
        Variant::Gcar => {
            out.push(("eta".into(), store.scalar_chains(Scalar::Eta)));
            if store.meta.rho_support.is_some() {
                out.push(("rho".into(), store.scalar_chains(Scalar::Rho)));
            }
        }
        Variant::SbIndependence => out.push(("tau2".into(), store.scalar_chains(Scalar::Tau2))),
    }
    out.push(("p".into(), store.scalar_chains(Scalar::P)));
    for j in top_abs_indices(y, 5) {
        if let Some(tr) = store.mu_chains(j) {
            out.push((format!("mu[{}]", ids[j]), tr));
        }
    }
    out
}

/// Full diagnostics for a fitted store. Moran's I quantities need a graph
/// with at least one edge.
pub fn diagnose(
    store: &SampleStore,
    y: &[f64],
    ids: &[String],
    g: Option<&NeighborhoodGraph>,
    n_rep: usize,
    seed: u64,
) -> Result<DiagnosticsReport> {
    store.ensure_nonempty()?;
    if y.len() != store.n_cases || ids.len() != store.n_cases {
        return Err(GcarError::DimensionMismatch {
            expected: store.n_cases,
            got: y.len(),
        });
    }
    let mut psrfs = Vec::new();
    let mut esss = Vec::new();
    for (name, chains) in monitored_traces(store, y, ids) {
        if chains.len() >= 2 {
            if let Ok(r) = psrf(&chains) {
                psrfs.push((name.clone(), r));
            }
        }
        if let Ok(e) = ess(&chains.concat()) {
            esss.push((name, e));
        }
    }
    let (moran_observed, moran_ppd, moran_ppd_pvalue) = match g.filter(|g| g.has_edges()) {
        Some(g) => {
            let (v, p) = posterior_predictive_moran(store, g, y, n_rep, seed)?;
            (Some(morans_i(y, g)?), v, Some(p))
        }
        None => (None, Vec::new(), None),
    };
    Ok(DiagnosticsReport {
        moran_observed,
        moran_ppd,
        moran_ppd_pvalue,
        psrf: psrfs,
        ess: esss,
        waic: waic(store)?,
        rmspe: rmspe(store)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    fn cycle(n: usize) -> NeighborhoodGraph {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        NeighborhoodGraph::from_indexed(ids(n), &e, 0.0).unwrap()
    }

    #[test]
    fn moran_alternating_cycle() {
        let y: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((morans_i(&y, &cycle(8)).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn moran_constant_is_error() {
        assert!(matches!(morans_i(&[2.0; 6], &cycle(6)), Err(GcarError::ZeroVariance(_))));
    }

    #[test]
    fn moran_null_expectation() {
        let g = cycle(30);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let vals: Vec<f64> = (0..1000)
            .map(|_| {
                let y: Vec<f64> = (0..30).map(|_| StandardNormal.sample(&mut rng)).collect();
                morans_i(&y, &g).unwrap()
            })
            .collect();
        let m = mean(&vals);
        let se = (crate::stats::variance(&vals) / 1000.0).sqrt();
        assert!((m + 1.0 / 29.0).abs() < 3.0 * se, "{m}");
    }

    #[test]
    fn psrf_cases() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(psrf(&[a.clone(), a.clone()]).unwrap(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n0: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n10: Vec<f64> = (0..500).map(|_| 10.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        assert!(psrf(&[n0.clone(), n10]).unwrap() > 1.2);
        assert!(psrf(&[n0]).is_err());
    }

    #[test]
    fn ess_iid_and_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let iid: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = ess(&iid).unwrap().value;
        assert!((1600.0..=2400.0).contains(&e), "{e}");
        let mut x = 0.0;
        let ar: Vec<f64> = (0..20_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x = 0.9 * x + z;
                x
            })
            .collect();
        let e = ess(&ar).unwrap().value;
        let target = 20_000.0 * 0.1 / 1.9;
        assert!(e > target / 1.5 && e < target * 1.5, "{e}");
    }

    #[test]
    fn ess_alternating_flags_superefficiency() {
        let alt: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let e = ess(&alt).unwrap();
        assert!(e.superefficient && e.value > 100.0);
    }

    #[test]
    fn waic_single_draw_and_shift() {
        let ll = vec![vec![-1.0, -2.0, -0.5]];
        assert!((waic_from_loglik(&ll).unwrap() - 7.0).abs() < 1e-12);
        let ll = vec![vec![-1.0, -2.0], vec![-1.5, -1.2], vec![-0.7, -3.0]];
        let c = 0.8;
        let shifted: Vec<Vec<f64>> = ll.iter().map(|r| r.iter().map(|v| v + c).collect()).collect();
        let d = waic_from_loglik(&shifted).unwrap() - waic_from_loglik(&ll).unwrap();
        assert!((d + 2.0 * 2.0 * c).abs() < 1e-12);
    }
}
