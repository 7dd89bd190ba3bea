//! Retained post-burn-in draws and per-case running summaries.

use serde::{Deserialize, Serialize};

use super::SamplerConfig;
use crate::error::{GcarError, Result};
use crate::model::{ModelSpec, Variant};
use crate::stats::{log_add_exp, RunningMoments};

/// Mergeable quantile summary with bounded rank error.
///
/// Values are kept as weighted centroids; a centroid never holds more than
/// `total / capacity` of the mass, so the rank error of any quantile stays
/// below `1 / capacity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSketch {
    capacity: usize,
    centroids: Vec<(f64, f64)>,
    buffer: Vec<f64>,
    total: f64,
}

impl QuantileSketch {
    pub const DEFAULT_CAPACITY: usize = 200;

    pub fn new(capacity: usize) -> Self {
        QuantileSketch {
            capacity: capacity.max(8),
            centroids: Vec::new(),
            buffer: Vec::with_capacity(capacity),
            total: 0.0,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.buffer.push(x);
        self.total += 1.0;
        if self.buffer.len() >= self.capacity {
            self.flush();
        }
    }

    pub fn count(&self) -> f64 {
        self.total
    }

    fn flush(&mut self) {
        if self.buffer.is_empty() {
            return;
        }
        let mut all: Vec<(f64, f64)> = self.centroids.drain(..).collect();
        all.extend(self.buffer.drain(..).map(|x| (x, 1.0)));
        self.compress(all);
    }

    fn compress(&mut self, mut all: Vec<(f64, f64)>) {
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let limit = (self.total / self.capacity as f64).max(1.0);
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(2 * self.capacity);
        for (x, w) in all {
            match out.last_mut() {
                Some(last) if last.1 + w <= limit => {
                    let nw = last.1 + w;
                    last.0 += (x - last.0) * w / nw;
                    last.1 = nw;
                }
                _ => out.push((x, w)),
            }
        }
        self.centroids = out;
    }

    pub fn merge(&mut self, other: &QuantileSketch) {
        self.flush();
        let mut all = std::mem::take(&mut self.centroids);
        all.extend(other.centroids.iter().copied());
        all.extend(other.buffer.iter().map(|&x| (x, 1.0)));
        self.total += other.total;
        self.compress(all);
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let mut s = self.clone();
        s.flush();
        let c = &s.centroids;
        if c.is_empty() {
            return f64::NAN;
        }
        if c.len() == 1 {
            return c[0].0;
        }
        let target = q.clamp(0.0, 1.0) * s.total;
        // centroid k sits at cumulative mass cum_k + w_k / 2
        let mut cum = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for &(x, w) in c {
            let center = cum + w / 2.0;
            if target <= center {
                return match prev {
                    None => x,
                    Some((px, pc)) => px + (x - px) * (target - pc) / (center - pc),
                };
            }
            prev = Some((x, center));
            cum += w;
        }
        c[c.len() - 1].0
    }
}

/// Per-case running sums over the retained draws of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseAccumulators {
    pub n_draws: u64,
    /// Σ_i p*_j (or the per-draw independence-model inclusion term).
    pub rb_sum: Vec<f64>,
    pub gamma_count: Vec<u64>,
    pub mu: Vec<RunningMoments>,
    /// log Σ_i f(y_j | θ^{(i)})
    pub loglik_lse: Vec<f64>,
    pub loglik: Vec<RunningMoments>,
    /// Σ_i (y_j - θ_j^{(i)})²
    pub sq_err: Vec<f64>,
    pub sketches: Option<Vec<QuantileSketch>>,
}

impl CaseAccumulators {
    pub fn new(n: usize, with_sketches: bool) -> Self {
        CaseAccumulators {
            n_draws: 0,
            rb_sum: vec![0.0; n],
            gamma_count: vec![0; n],
            mu: vec![RunningMoments::default(); n],
            loglik_lse: vec![f64::NEG_INFINITY; n],
            loglik: vec![RunningMoments::default(); n],
            sq_err: vec![0.0; n],
            sketches: with_sketches.then(|| vec![QuantileSketch::new(QuantileSketch::DEFAULT_CAPACITY); n]),
        }
    }

    pub fn merge(&mut self, other: &CaseAccumulators) {
        self.n_draws += other.n_draws;
        for j in 0..self.rb_sum.len() {
            self.rb_sum[j] += other.rb_sum[j];
            self.gamma_count[j] += other.gamma_count[j];
            self.mu[j].merge(&other.mu[j]);
            self.loglik_lse[j] = log_add_exp(self.loglik_lse[j], other.loglik_lse[j]);
            self.loglik[j].merge(&other.loglik[j]);
            self.sq_err[j] += other.sq_err[j];
        }
        if let (Some(a), Some(b)) = (self.sketches.as_mut(), other.sketches.as_ref()) {
            a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y));
        }
    }
}

/// Retained draws of one chain, in iteration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    pub sigma2: Vec<f64>,
    pub eta: Vec<f64>,
    pub rho: Vec<f64>,
    pub p: Vec<f64>,
    /// Row-major `retained × J`, present in full storage mode.
    pub mu: Option<Vec<f64>>,
    pub gamma: Option<Vec<bool>>,
    /// Full μ traces for flagged coordinates.
    pub tracked: Vec<(usize, Vec<f64>)>,
    /// Evenly spaced (σ², θ) draws kept for posterior-predictive checks in
    /// sketch mode.
    pub ppd: Vec<(f64, Vec<f64>)>,
    pub cases: CaseAccumulators,
    pub stats: ChainStats,
}

impl ChainDraws {
    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }

    pub fn tau2(&self) -> Vec<f64> {
        self.sigma2.iter().zip(&self.eta).map(|(s, e)| s * e).collect()
    }
}

/// Sampler bookkeeping for one chain.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub seed: u64,
    pub stream: u64,
    pub eta_proposals: u64,
    pub eta_fallbacks: u64,
    pub slice_evaluations: u64,
    pub slice_cap_hits: u64,
    pub p_proposals: u64,
    pub p_accepted: u64,
    /// Metropolis acceptance for the independence-model coordinates
    /// (log σ², log τ², logit p), post burn-in.
    pub rw_accept: [f64; 3],
    pub rw_steps: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub spec: ModelSpec,
    pub config: SamplerConfig,
    pub wall_clock_secs: f64,
    pub rho_support: Option<(f64, f64)>,
}

/// All retained draws across chains. Chains are merged in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStore {
    pub variant: Variant,
    pub n_cases: usize,
    pub chains: Vec<ChainDraws>,
    pub meta: StoreMeta,
}

const STORE_MAGIC: &[u8; 8] = b"GCARSTO1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scalar {
    Sigma2,
    Eta,
    Tau2,
    Rho,
    P,
}

impl Scalar {
    pub fn name(&self) -> &'static str {
        match self {
            Scalar::Sigma2 => "sigma2",
            Scalar::Eta => "eta",
            Scalar::Tau2 => "tau2",
            Scalar::Rho => "rho",
            Scalar::P => "p",
        }
    }
}

impl SampleStore {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    /// Total retained draws over all chains.
    pub fn n_retained(&self) -> usize {
        self.chains.iter().map(|c| c.len()).sum()
    }

    pub fn has_full_draws(&self) -> bool {
        self.chains.iter().all(|c| c.mu.is_some() && c.gamma.is_some())
    }

    pub fn ensure_nonempty(&self) -> Result<()> {
        if self.n_retained() == 0 {
            Err(GcarError::EmptyStore)
        } else {
            Ok(())
        }
    }

    /// Per-chain draws of a scalar parameter.
    pub fn scalar_chains(&self, which: Scalar) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| match which {
                Scalar::Sigma2 => c.sigma2.clone(),
                Scalar::Eta => c.eta.clone(),
                Scalar::Tau2 => c.tau2(),
                Scalar::Rho => c.rho.clone(),
                Scalar::P => c.p.clone(),
            })
            .collect()
    }

    /// Pooled draws of a scalar parameter in chain order.
    pub fn scalar(&self, which: Scalar) -> Vec<f64> {
        self.scalar_chains(which).concat()
    }

    /// μ traces of coordinate `j`, one per chain, when available.
    pub fn mu_chains(&self, j: usize) -> Option<Vec<Vec<f64>>> {
        if self.has_full_draws() {
            let n = self.n_cases;
            return Some(
                self.chains
                    .iter()
                    .map(|c| {
                        let mu = c.mu.as_ref().expect("full draws");
                        (0..c.len()).map(|i| mu[i * n + j]).collect()
                    })
                    .collect(),
            );
        }
        self.chains
            .iter()
            .map(|c| c.tracked.iter().find(|(k, _)| *k == j).map(|(_, t)| t.clone()))
            .collect()
    }

    /// Accumulators pooled over chains.
    pub fn pooled_cases(&self) -> CaseAccumulators {
        let mut it = self.chains.iter();
        let mut acc = it.next().map(|c| c.cases.clone()).unwrap_or_else(|| CaseAccumulators::new(self.n_cases, false));
        for c in it {
            acc.merge(&c.cases);
        }
        acc
    }

    /// Iterate over retained (σ², θ) draws in chain order. Falls back to the
    /// kept posterior-predictive subset when full draws are absent.
    pub fn theta_draws(&self) -> Vec<(f64, Vec<f64>)> {
        let n = self.n_cases;
        if self.has_full_draws() {
            let mut out = Vec::with_capacity(self.n_retained());
            for c in &self.chains {
                let mu = c.mu.as_ref().expect("full draws");
                let gamma = c.gamma.as_ref().expect("full draws");
                for i in 0..c.len() {
                    let theta = (0..n)
                        .map(|j| if gamma[i * n + j] { mu[i * n + j] } else { 0.0 })
                        .collect();
                    out.push((c.sigma2[i], theta));
                }
            }
            out
        } else {
            self.chains.iter().flat_map(|c| c.ppd.iter().cloned()).collect()
        }
    }

    /// Binary serialization; reading back yields an identical store.
    pub fn write_to<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        w.write_all(STORE_MAGIC)?;
        ciborium::into_writer(self, &mut w).map_err(|e| GcarError::CorruptStore(e.to_string()))?;
        Ok(())
    }

    pub fn read_from<R: std::io::Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|e| GcarError::CorruptStore(format!("missing header: {e}")))?;
        if &magic != STORE_MAGIC {
            return Err(GcarError::CorruptStore("bad magic".into()));
        }
        let store: SampleStore = ciborium::from_reader(&mut r).map_err(|e| GcarError::CorruptStore(e.to_string()))?;
        store.validate()?;
        Ok(store)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_cases;
        for (k, c) in self.chains.iter().enumerate() {
            let len = c.len();
            if c.eta.len() != len || c.rho.len() != len || c.p.len() != len {
                return Err(GcarError::CorruptStore(format!("chain {k}: ragged scalar traces")));
            }
            if c.mu.as_ref().is_some_and(|m| m.len() != len * n) || c.gamma.as_ref().is_some_and(|g| g.len() != len * n) {
                return Err(GcarError::CorruptStore(format!("chain {k}: draw matrix has wrong size")));
            }
            if c.cases.rb_sum.len() != n {
                return Err(GcarError::CorruptStore(format!("chain {k}: accumulator length")));
            }
        }
        Ok(())
    }
}
