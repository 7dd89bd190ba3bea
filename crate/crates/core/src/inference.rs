//! Posterior summaries: inclusion probabilities, thresholded selection,
//! signal-strength intervals and the per-case report.

use serde::{Deserialize, Serialize};

use crate::error::{GcarError, Result};
use crate::model::Variant;
use crate::sampler::SampleStore;
use crate::stats::{quantile_sorted, sorted_copy};

fn expect_variant(store: &SampleStore, v: Variant) -> Result<()> {
    if store.variant != v {
        return Err(GcarError::WrongVariant {
            expected: v.as_str().into(),
            found: store.variant.as_str().into(),
        });
    }
    Ok(())
}

fn rb_average(store: &SampleStore) -> Result<Vec<f64>> {
    store.ensure_nonempty()?;
    let acc = store.pooled_cases();
    let n = acc.n_draws as f64;
    Ok(acc.rb_sum.iter().map(|s| (s / n).clamp(0.0, 1.0)).collect())
}

/// Rao-Blackwellized inclusion probabilities N⁻¹ Σ_i p*_j⁽ⁱ⁾ for a gCAR store.
pub fn gcar_inclusion_probs(store: &SampleStore) -> Result<Vec<f64>> {
    expect_variant(store, Variant::Gcar)?;
    rb_average(store)
}

/// Independence-model inclusion probabilities: the posterior mean of
/// 1 − (1 + ((1−p)/p)·√(σ²/(σ²+τ²))·exp(y²τ²/(2σ²(σ²+τ²))))⁻¹.
pub fn sb_inclusion_probs(store: &SampleStore) -> Result<Vec<f64>> {
    expect_variant(store, Variant::SbIndependence)?;
    rb_average(store)
}

/// Inclusion probabilities for either variant.
pub fn inclusion_probs(store: &SampleStore) -> Result<Vec<f64>> {
    rb_average(store)
}

/// Fraction of retained draws with γ_j = 1.
pub fn naive_inclusion_freqs(store: &SampleStore) -> Result<Vec<f64>> {
    store.ensure_nonempty()?;
    let acc = store.pooled_cases();
    let n = acc.n_draws as f64;
    Ok(acc.gamma_count.iter().map(|&c| c as f64 / n).collect())
}

/// Cases with probability at or above `threshold`.
pub fn select(probs: &[f64], threshold: f64) -> Vec<bool> {
    probs.iter().map(|&p| p >= threshold).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSummary {
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Posterior mean, sd and equal-tailed `level` interval of each μ_j.
///
/// Without full draws the interval comes from the per-case quantile sketch
/// (quantile error about ±0.01 in probability).
pub fn signal_summaries(store: &SampleStore, level: f64) -> Result<Vec<SignalSummary>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(GcarError::InvalidParameter(format!("credible level {level} outside (0, 1)")));
    }
    store.ensure_nonempty()?;
    let acc = store.pooled_cases();
    let (qlo, qhi) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    let n = store.n_cases;
    let mut out = Vec::with_capacity(n);
    if store.has_full_draws() {
        let mut col = Vec::with_capacity(store.n_retained());
        for j in 0..n {
            col.clear();
            for c in &store.chains {
                let mu = c.mu.as_ref().expect("full draws");
                col.extend((0..c.len()).map(|i| mu[i * n + j]));
            }
            let s = sorted_copy(&col);
            out.push(SignalSummary {
                mean: acc.mu[j].mean,
                sd: acc.mu[j].variance().sqrt(),
                ci_low: quantile_sorted(&s, qlo),
                ci_high: quantile_sorted(&s, qhi),
            });
        }
    } else {
        let sk = acc
            .sketches
            .as_ref()
            .ok_or_else(|| GcarError::InvalidParameter("store has neither full draws nor sketches".into()))?;
        for j in 0..n {
            out.push(SignalSummary {
                mean: acc.mu[j].mean,
                sd: acc.mu[j].variance().sqrt(),
                ci_low: sk[j].quantile(qlo),
                ci_high: sk[j].quantile(qhi),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub id: String,
    pub p_incl: f64,
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub cases: Vec<CaseReport>,
    pub threshold: f64,
    pub variant: Variant,
    pub alpha: f64,
    pub d: f64,
    pub seed: u64,
}

impl InclusionReport {
    pub fn from_store(store: &SampleStore, ids: &[String], threshold: f64, level: f64) -> Result<Self> {
        if ids.len() != store.n_cases {
            return Err(GcarError::DimensionMismatch {
                expected: store.n_cases,
                got: ids.len(),
            });
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(GcarError::InvalidParameter(format!("threshold {threshold} outside (0, 1)")));
        }
        let probs = inclusion_probs(store)?;
        let sig = signal_summaries(store, level)?;
        let cases = ids
            .iter()
            .zip(probs.iter().zip(&sig))
            .map(|(id, (&p, s))| CaseReport {
                id: id.clone(),
                p_incl: p,
                mu_mean: s.mean,
                mu_sd: s.sd,
                ci_low: s.ci_low,
                ci_high: s.ci_high,
                selected: p >= threshold,
            })
            .collect();
        Ok(InclusionReport {
            cases,
            threshold,
            variant: store.variant,
            alpha: store.meta.spec.alpha,
            d: store.meta.spec.d,
            seed: store.meta.config.seed,
        })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.cases.iter().map(|c| c.p_incl).collect()
    }

    pub fn selected(&self) -> Vec<bool> {
        self.cases.iter().map(|c| c.selected).collect()
    }

    pub fn n_selected(&self) -> usize {
        self.cases.iter().filter(|c| c.selected).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NeighborhoodGraph;
    use crate::model::ModelSpec;
    use crate::sampler::{run_chains, SamplerConfig, StorageMode};

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    fn small_store(storage: StorageMode) -> SampleStore {
        let g = NeighborhoodGraph::from_indexed(ids(4), &[(0, 1, 1.0), (1, 2, 1.0)], 1.0).unwrap();
        let cfg = SamplerConfig {
            burn_in: 200,
            n_iter: 2_000,
            thin: 2,
            storage,
            seed: 3,
            ..Default::default()
        };
        run_chains(&[3.0, 2.5, 0.1, -0.4], &g, &ModelSpec::gcar(1.0, 1.0), &cfg).unwrap()
    }

    #[test]
    fn selection_tie_rule() {
        assert_eq!(select(&[0.96, 0.10], 0.95), vec![true, false]);
        assert_eq!(select(&[0.95], 0.95), vec![true]);
        assert!(select(&[0.2, 0.3], 0.95).iter().all(|s| !s));
    }

    #[test]
    fn variant_checks() {
        let s = small_store(StorageMode::Full);
        assert!(gcar_inclusion_probs(&s).is_ok());
        assert!(matches!(sb_inclusion_probs(&s), Err(GcarError::WrongVariant { .. })));
    }

    #[test]
    fn report_invariants() {
        let s = small_store(StorageMode::Full);
        let r = InclusionReport::from_store(&s, &ids(4), 0.5, 0.95).unwrap();
        for c in &r.cases {
            assert!((0.0..=1.0).contains(&c.p_incl));
            assert_eq!(c.selected, c.p_incl >= 0.5);
            assert!(c.ci_low <= c.mu_mean && c.mu_mean <= c.ci_high);
        }
        assert!(r.cases[0].p_incl > r.cases[2].p_incl);
    }

    #[test]
    fn sketch_intervals_track_exact_ones() {
        let full = signal_summaries(&small_store(StorageMode::Full), 0.95).unwrap();
        let sk = signal_summaries(&small_store(StorageMode::Sketch), 0.95).unwrap();
        for (a, b) in full.iter().zip(&sk) {
            assert_eq!(a.mean, b.mean);
            let w = a.ci_high - a.ci_low;
            assert!((a.ci_low - b.ci_low).abs() < 0.05 * w);
            assert!((a.ci_high - b.ci_high).abs() < 0.05 * w);
        }
    }
}
