//! Prior structure, reparameterized joint density and full conditionals of
//! the gCAR spike-and-slab model, plus the marginal likelihood of the
//! Scott–Berger independence model.
//!
//! Observations follow `y_j | γ_j, μ_j, σ² ~ N(γ_j μ_j, σ²)` with
//! `γ_j ~ Bern(1 - p)`. The signal field has precision `(D*_w - ρW)/τ²` and
//! τ² is carried as `η = τ²/σ²`. Inverse gamma parameters use the shape–rate
//! convention: density ∝ x^{-shape-1} e^{-rate/x}.

use serde::{Deserialize, Serialize};

use crate::error::{GcarError, Result};
use crate::graph::{quadforms_unchecked, NeighborhoodGraph, QuadForms, SpectralSummary};
use crate::stats::{ln_normal_pdf, log_add_exp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Spatially structured signal prior.
    Gcar,
    /// Independent cases with μ marginalized (Scott–Berger).
    SbIndependence,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Gcar => "gcar",
            Variant::SbIndependence => "sb",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = GcarError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcar" | "car" => Ok(Variant::Gcar),
            "sb" | "sb_independence" | "independence" => Ok(Variant::SbIndependence),
            other => Err(GcarError::InvalidParameter(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PUpdate {
    ConjugateBeta,
    LangevinLogit,
}

impl std::str::FromStr for PUpdate {
    type Err = GcarError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conjugate" | "conjugate_beta" | "beta" => Ok(PUpdate::ConjugateBeta),
            "langevin" | "langevin_logit" | "mala" => Ok(PUpdate::LangevinLogit),
            other => Err(GcarError::InvalidParameter(format!("unknown p update `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    /// Shape of the Beta(α, 1) prior on the null proportion p.
    pub alpha: f64,
    pub d: f64,
    pub p_update: PUpdate,
}

impl ModelSpec {
    pub fn gcar(alpha: f64, d: f64) -> Self {
        ModelSpec {
            variant: Variant::Gcar,
            alpha,
            d,
            p_update: PUpdate::ConjugateBeta,
        }
    }

    pub fn sb(alpha: f64) -> Self {
        ModelSpec {
            variant: Variant::SbIndependence,
            alpha,
            d: 1.0,
            p_update: PUpdate::ConjugateBeta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0) || !self.alpha.is_finite() {
            return Err(GcarError::InvalidParameter(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if !(self.d >= 0.0) || !self.d.is_finite() {
            return Err(GcarError::InvalidD(self.d));
        }
        Ok(())
    }
}

/// Current values of one chain. θ_j = γ_j μ_j is derived on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub mu: Vec<f64>,
    pub gamma: Vec<bool>,
    pub sigma2: f64,
    pub eta: f64,
    /// Exactly 0 when there is no spatial term.
    pub rho: f64,
    pub p: f64,
}

impl ChainState {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn n_active(&self) -> usize {
        self.gamma.iter().filter(|&&g| g).count()
    }

    #[inline]
    pub fn theta(&self, j: usize) -> f64 {
        if self.gamma[j] {
            self.mu[j]
        } else {
            0.0
        }
    }

    /// (y - Γμ)'(y - Γμ)
    pub fn residual_ss(&self, y: &[f64]) -> f64 {
        y.iter()
            .enumerate()
            .map(|(j, &yj)| {
                let r = yj - self.theta(j);
                r * r
            })
            .sum()
    }

    pub fn check(&self, support: Option<crate::graph::RhoSupport>) -> Result<()> {
        if !(self.sigma2 > 0.0) || !(self.eta > 0.0) || !(self.p > 0.0 && self.p < 1.0) {
            return Err(GcarError::InvalidParameter(format!(
                "invalid state: sigma2 = {}, eta = {}, p = {}",
                self.sigma2, self.eta, self.p
            )));
        }
        match support {
            Some(s) if !s.contains(self.rho) => Err(GcarError::InvalidParameter(format!(
                "rho = {} outside ({}, {})",
                self.rho, s.lower, s.upper
            ))),
            None if self.rho != 0.0 => Err(GcarError::InvalidParameter("rho must be 0 without a spatial term".into())),
            _ => Ok(()),
        }
    }
}

/// Mean and variance of the Gaussian full conditional of μ_j.
#[inline]
pub fn mu_full_conditional_params(j: usize, state: &ChainState, g: &NeighborhoodGraph, y: &[f64]) -> (f64, f64) {
    let gj = if state.gamma[j] { 1.0 } else { 0.0 };
    let inv_eta = 1.0 / state.eta;
    let denom = gj + inv_eta * (g.degrees()[j] + g.d());
    let nb = g.weighted_neighbor_sum(j, &state.mu);
    let mean = (gj * y[j] + state.rho * inv_eta * nb) / denom;
    (mean, state.sigma2 / denom)
}

/// P(γ_j = 1 | rest). Also the Rao–Blackwell term p*_j.
#[inline]
pub fn gamma_full_conditional_prob(j: usize, state: &ChainState, y: &[f64]) -> f64 {
    inclusion_weight(y[j], state.mu[j], state.sigma2, state.p)
}

/// (1-p)φ(y-μ; σ²) / [(1-p)φ(y-μ; σ²) + pφ(y; σ²)] evaluated in log space.
#[inline]
pub fn inclusion_weight(y: f64, mu: f64, sigma2: f64, p: f64) -> f64 {
    let r = y - mu;
    let log_on = (1.0 - p).ln() - r * r / (2.0 * sigma2);
    let log_off = p.ln() - y * y / (2.0 * sigma2);
    if log_on == f64::NEG_INFINITY {
        return 0.0;
    }
    (log_on - log_add_exp(log_on, log_off)).exp()
}

/// Inverse gamma (shape, rate) of the σ² full conditional.
pub fn sigma2_full_conditional_params(state: &ChainState, g: &NeighborhoodGraph, y: &[f64]) -> Result<(f64, f64)> {
    let q = quadforms_unchecked(g, &state.mu);
    sigma2_params_from(state, y, &q)
}

pub(crate) fn sigma2_params_from(state: &ChainState, y: &[f64], q: &QuadForms) -> Result<(f64, f64)> {
    let rate = 0.5 * (state.residual_ss(y) + q.combined(state.rho) / state.eta);
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(GcarError::Numerical(format!("sigma2 conditional rate = {rate}")));
    }
    Ok((state.len() as f64, rate))
}

/// Beta parameters of the p full conditional.
pub fn p_full_conditional_params(state: &ChainState, alpha: f64) -> (f64, f64) {
    let k = state.n_active() as f64;
    (state.len() as f64 - k + alpha, k + 1.0)
}

/// The η conditional depends on the state only through
/// `a = μ'(D*_w - ρW)μ / (2σ²)` and J.
pub fn eta_scale(state: &ChainState, g: &NeighborhoodGraph) -> f64 {
    quadforms_unchecked(g, &state.mu).combined(state.rho) / (2.0 * state.sigma2)
}

/// Unnormalized log of η^{-J/2-2} exp(-a/η) (η/(1+η))².
#[inline]
pub fn eta_log_density(eta: f64, a: f64, n: usize) -> f64 {
    if !(eta > 0.0) {
        return f64::NEG_INFINITY;
    }
    -(n as f64 / 2.0 + 2.0) * eta.ln() - a / eta + 2.0 * (eta / (1.0 + eta)).ln()
}

pub fn eta_log_conditional(eta: f64, state: &ChainState, g: &NeighborhoodGraph) -> f64 {
    eta_log_density(eta, eta_scale(state, g), state.len())
}

/// Unnormalized log full conditional of ρ from cached quadratic forms.
#[inline]
pub fn rho_log_density(rho: f64, q: &QuadForms, eta: f64, sigma2: f64, spectral: &SpectralSummary) -> f64 {
    match spectral.support {
        Some(s) if s.contains(rho) => {
            let ld = spectral.log_det(rho);
            if ld == f64::NEG_INFINITY {
                return ld;
            }
            0.5 * ld - q.combined(rho) / (2.0 * eta * sigma2)
        }
        _ => f64::NEG_INFINITY,
    }
}

pub fn rho_log_conditional(rho: f64, state: &ChainState, g: &NeighborhoodGraph, spectral: &SpectralSummary) -> f64 {
    let q = quadforms_unchecked(g, &state.mu);
    rho_log_density(rho, &q, state.eta, state.sigma2, spectral)
}

/// Per-case marginal log likelihood of the independence model:
/// log[p φ(y; σ²) + (1-p) φ(y; σ² + τ²)].
#[inline]
pub fn sb_case_log_lik(y: f64, sigma2: f64, tau2: f64, p: f64) -> f64 {
    log_add_exp(p.ln() + ln_normal_pdf(y, sigma2), (1.0 - p).ln() + ln_normal_pdf(y, sigma2 + tau2))
}

/// Log joint of the independence model with μ integrated out, under the
/// prior (σ² + τ²)^{-2} on the variances and Beta(α, 1) on p.
pub fn sb_log_joint(sigma2: f64, tau2: f64, p: f64, alpha: f64, y: &[f64]) -> f64 {
    if !(sigma2 > 0.0) || !(tau2 >= 0.0) || !(p > 0.0 && p < 1.0) {
        return f64::NEG_INFINITY;
    }
    let lik: f64 = y.iter().map(|&v| sb_case_log_lik(v, sigma2, tau2, p)).sum();
    lik - 2.0 * (sigma2 + tau2).ln() + (alpha - 1.0) * p.ln()
}
