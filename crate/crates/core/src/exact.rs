//! Exact posterior inclusion probabilities for very small problems.
//!
//! Every γ ∈ {0,1}^J is enumerated. Given γ, the signal vector integrates out
//! analytically: y ~ N(0, σ²M) with M = I + ηΓ(D*_w − ρW)^{-1}Γ. The variance
//! σ² (prior 1/σ²) and the null proportion p (prior Beta(α, 1)) then
//! integrate in closed form, leaving a two-dimensional integral over
//! (log η, ρ) evaluated by composite Gauss–Legendre quadrature.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{GcarError, Result};
use crate::graph::{spectral_summary, NeighborhoodGraph};
use crate::model::{ModelSpec, Variant};
use crate::stats::{gauss_legendre_on, log_sum_exp};

pub const MAX_EXACT_CASES: usize = 6;

/// Composite Gauss–Legendre layout for the (log η, ρ) integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub log_eta_range: (f64, f64),
    pub eta_panels: usize,
    pub rho_panels: usize,
    pub points_per_panel: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid {
            log_eta_range: (-20.0, 20.0),
            eta_panels: 40,
            rho_panels: 24,
            points_per_panel: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    /// P(γ_j = 1 | y)
    pub inclusion: Vec<f64>,
    /// Posterior probability of each γ configuration, indexed by bitmask
    /// (bit j set ⇔ γ_j = 1).
    pub config_probs: Vec<f64>,
    pub eta_mean: f64,
    pub rho_mean: f64,
}

fn composite(n_panels: usize, per: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / n_panels as f64;
    let mut x = Vec::with_capacity(n_panels * per);
    let mut w = Vec::with_capacity(n_panels * per);
    for k in 0..n_panels {
        let (xs, ws) = gauss_legendre_on(per, a + h * k as f64, a + h * (k + 1) as f64);
        x.extend(xs);
        w.extend(ws);
    }
    (x, w)
}

/// log of Γ(J/2)(S/2)^{-J/2}|M|^{-1/2}, the Gaussian likelihood with σ²
/// integrated out against 1/σ² (constants in J dropped).
fn collapsed_loglik(y: &DVector<f64>, m: DMatrix<f64>) -> Option<f64> {
    let n = y.len() as f64;
    let chol = m.cholesky()?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let s = y.dot(&chol.solve(y));
    if !(s > 0.0) {
        return None;
    }
    Some(ln_gamma(n / 2.0) - (n / 2.0) * (s / 2.0).ln() - 0.5 * log_det)
}

/// log of α·B(J − k + α, k + 1), the γ prior with p integrated out.
fn ln_gamma_prior(n: usize, k: usize, alpha: f64) -> f64 {
    let a = n as f64 - k as f64 + alpha;
    let b = k as f64 + 1.0;
    alpha.ln() + ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Exact P(γ_j = 1 | y) under the gCAR model for J ≤ 6.
pub fn exact_posterior_small(
    y: &[f64],
    g: &NeighborhoodGraph,
    spec: &ModelSpec,
    grid: &QuadratureGrid,
) -> Result<ExactPosterior> {
    spec.validate()?;
    let n = y.len();
    if n == 0 || n > MAX_EXACT_CASES {
        return Err(GcarError::TooLarge(n, MAX_EXACT_CASES));
    }
    if n != g.len() {
        return Err(GcarError::DimensionMismatch {
            expected: g.len(),
            got: n,
        });
    }
    if spec.variant != Variant::Gcar {
        return Err(GcarError::WrongVariant {
            expected: Variant::Gcar.as_str().into(),
            found: spec.variant.as_str().into(),
        });
    }
    let spectral = spectral_summary(g)?;
    let yv = DVector::from_column_slice(y);
    let (rho_x, rho_w) = match spectral.support {
        Some(s) => {
            // smoothstep map: the integrand vanishes like a square root at
            // the support ends, which this substitution smooths out
            let (t, w) = composite(grid.rho_panels, grid.points_per_panel, 0.0, 1.0);
            let span = s.upper - s.lower;
            let x = t.iter().map(|&t| s.lower + span * t * t * (3.0 - 2.0 * t)).collect();
            let w = t.iter().zip(&w).map(|(&t, &w)| w * 6.0 * t * (1.0 - t) * span).collect();
            (x, w)
        }
        None => (vec![0.0], vec![1.0]),
    };
    let (u_x, u_w) = composite(
        grid.eta_panels,
        grid.points_per_panel,
        grid.log_eta_range.0,
        grid.log_eta_range.1,
    );
    let n_cfg = 1usize << n;
    let prior: Vec<f64> = (0..n_cfg)
        .map(|c| ln_gamma_prior(n, (c as u32).count_ones() as usize, spec.alpha))
        .collect();

    // log weights per (config, ρ node, η node)
    let mut terms: Vec<Vec<f64>> = vec![Vec::with_capacity(rho_x.len() * u_x.len()); n_cfg];
    let mut moments = Vec::with_capacity(rho_x.len() * u_x.len());
    for (&rho, &rw) in rho_x.iter().zip(&rho_w) {
        let q = g.dense_precision(rho);
        let q_inv = q
            .cholesky()
            .ok_or_else(|| GcarError::Numerical(format!("precision not positive definite at rho = {rho}")))?
            .inverse();
        for (&u, &uw) in u_x.iter().zip(&u_w) {
            let eta = u.exp();
            // (1+η)^{-2} prior on η, with dη = η du
            let base = rw.ln() + uw.ln() - 2.0 * eta.ln_1p() + u;
            moments.push((eta, rho));
            for (c, t) in terms.iter_mut().enumerate() {
                let mut m = DMatrix::<f64>::identity(n, n);
                for i in 0..n {
                    if c >> i & 1 == 0 {
                        continue;
                    }
                    for j in 0..n {
                        if c >> j & 1 == 1 {
                            m[(i, j)] += eta * q_inv[(i, j)];
                        }
                    }
                }
                let ll = collapsed_loglik(&yv, m).unwrap_or(f64::NEG_INFINITY);
                t.push(base + prior[c] + ll);
            }
        }
    }
    let flat: Vec<f64> = terms.iter().flatten().copied().collect();
    let z = log_sum_exp(&flat);
    if !z.is_finite() {
        return Err(GcarError::Numerical("quadrature produced a non-finite normalizer".into()));
    }
    let config_probs: Vec<f64> = terms
        .iter()
        .map(|t| t.iter().map(|l| (l - z).exp()).sum())
        .collect();
    let mut inclusion = vec![0.0; n];
    for (c, &pc) in config_probs.iter().enumerate() {
        for (j, v) in inclusion.iter_mut().enumerate() {
            if c >> j & 1 == 1 {
                *v += pc;
            }
        }
    }
    let (mut eta_mean, mut rho_mean) = (0.0, 0.0);
    for (k, &(eta, rho)) in moments.iter().enumerate() {
        let w: f64 = terms.iter().map(|t| (t[k] - z).exp()).sum();
        eta_mean += w * eta;
        rho_mean += w * rho;
    }
    Ok(ExactPosterior {
        inclusion,
        config_probs,
        eta_mean,
        rho_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Beta, Distribution};

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    /// Edgeless graph with d = 1: sample (η, p) from their priors and weight
    /// every γ by its σ²-collapsed likelihood.
    fn importance_estimate(y: &[f64], alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta = Beta::new(alpha, 1.0).unwrap();
        let j = y.len();
        let half = j as f64 / 2.0;
        let mut num = vec![0.0; j];
        let mut den = 0.0;
        for _ in 0..n {
            let u: f64 = rng.random();
            let eta = u / (1.0 - u);
            let p: f64 = beta.sample(&mut rng);
            for c in 0..(1usize << j) {
                let (mut s, mut det, mut prior) = (0.0, 1.0, 1.0);
                for (i, &v) in y.iter().enumerate() {
                    let on = c >> i & 1 == 1;
                    let m = if on { 1.0 + eta } else { 1.0 };
                    s += v * v / m;
                    det *= m;
                    prior *= if on { 1.0 - p } else { p };
                }
                let w = prior * s.powf(-half) * det.powf(-0.5);
                den += w;
                for (i, x) in num.iter_mut().enumerate() {
                    if c >> i & 1 == 1 {
                        *x += w;
                    }
                }
            }
        }
        num.iter().map(|x| x / den).collect()
    }

    #[test]
    fn single_case_matches_importance_sampling() {
        let g = NeighborhoodGraph::edgeless(ids(1), 1.0).unwrap();
        for &(y, alpha) in &[(2.5, 1.0), (0.3, 3.0)] {
            let ex = exact_posterior_small(&[y], &g, &ModelSpec::gcar(alpha, 1.0), &QuadratureGrid::default()).unwrap();
            let is = importance_estimate(&[y], alpha, 1_000_000, 3);
            assert!((ex.inclusion[0] - is[0]).abs() < 0.005, "{} vs {}", ex.inclusion[0], is[0]);
        }
    }

    #[test]
    fn edgeless_pair_matches_importance_sampling() {
        let g = NeighborhoodGraph::edgeless(ids(3), 1.0).unwrap();
        let y = [3.2, 0.1, -1.0];
        let ex = exact_posterior_small(&y, &g, &ModelSpec::gcar(2.0, 1.0), &QuadratureGrid::default()).unwrap();
        let is = importance_estimate(&y, 2.0, 400_000, 4);
        for j in 0..3 {
            assert!((ex.inclusion[j] - is[j]).abs() < 0.005, "{j}: {} vs {}", ex.inclusion[j], is[j]);
        }
    }

    #[test]
    fn exchangeable_pair() {
        let g = NeighborhoodGraph::from_indexed(ids(2), &[(0, 1, 1.0)], 0.0).unwrap();
        let ex = exact_posterior_small(&[1.7, 1.7], &g, &ModelSpec::gcar(1.0, 0.0), &QuadratureGrid::default()).unwrap();
        assert!((ex.inclusion[0] - ex.inclusion[1]).abs() < 1e-12);
        let total: f64 = ex.config_probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn larger_signals_raise_inclusion() {
        // The 1/σ² prior makes the posterior of γ scale-free, so monotonicity
        // is in the size of one case relative to the others.
        let g = NeighborhoodGraph::from_indexed(ids(3), &[(0, 1, 1.0), (1, 2, 1.0)], 0.0).unwrap();
        let spec = ModelSpec::gcar(1.0, 0.0);
        let grid = QuadratureGrid::default();
        let mut last = 0.0;
        for y0 in [0.5, 1.5, 3.0, 5.0] {
            let ex = exact_posterior_small(&[y0, 0.3, -0.4], &g, &spec, &grid).unwrap();
            assert!(ex.inclusion[0] > last);
            last = ex.inclusion[0];
        }
    }

    #[test]
    fn scale_free_in_y() {
        let g = NeighborhoodGraph::from_indexed(ids(3), &[(0, 1, 1.0), (1, 2, 1.0)], 1.0).unwrap();
        let spec = ModelSpec::gcar(1.0, 1.0);
        let grid = QuadratureGrid::default();
        let a = exact_posterior_small(&[3.0, 0.2, 2.8], &g, &spec, &grid).unwrap();
        let b = exact_posterior_small(&[0.3, 0.02, 0.28], &g, &spec, &grid).unwrap();
        for j in 0..3 {
            assert!((a.inclusion[j] - b.inclusion[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_refinement_is_stable() {
        let g = NeighborhoodGraph::from_indexed(ids(3), &[(0, 1, 1.0), (1, 2, 1.0)], 0.0).unwrap();
        let spec = ModelSpec::gcar(1.0, 0.0);
        let y = [3.0, 0.2, 2.8];
        let a = exact_posterior_small(&y, &g, &spec, &QuadratureGrid::default()).unwrap();
        let fine = QuadratureGrid {
            eta_panels: 80,
            rho_panels: 48,
            points_per_panel: 16,
            ..Default::default()
        };
        let b = exact_posterior_small(&y, &g, &spec, &fine).unwrap();
        for j in 0..3 {
            assert!((a.inclusion[j] - b.inclusion[j]).abs() < 1e-4, "{:?} vs {:?}", a.inclusion, b.inclusion);
        }
    }

    #[test]
    fn rejects_large_inputs() {
        let g = NeighborhoodGraph::edgeless(ids(7), 1.0).unwrap();
        assert!(matches!(
            exact_posterior_small(&[0.0; 7], &g, &ModelSpec::gcar(1.0, 1.0), &QuadratureGrid::default()),
            Err(GcarError::TooLarge(7, 6))
        ));
    }
}
