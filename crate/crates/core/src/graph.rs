//! Neighborhood graphs, the d-augmented CAR precision structure and the
//! spectral quantities that bound the propriety parameter ρ.
//!
//! The precision of the signal field is `D*_w - ρW` with `D*_w = D_w + dI`.
//! Nodes without neighbors are admitted only when `d > 0`; they then carry an
//! independent `N(0, τ²/d)` prior.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GcarError, Result};

/// Weighted undirected graph over the cases, plus the augmentation constant `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodGraph {
    node_ids: Vec<String>,
    /// Canonical edges `(i, j, w)` with `i < j`, sorted.
    edges: Vec<(usize, usize, f64)>,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, f64)>,
    degrees: Vec<f64>,
    d: f64,
}

/// Build a graph from string ids and a weighted edge list.
///
/// Edges are canonicalized to `i < j`; repeated edges are merged by summing
/// their weights.
pub fn build_graph(nodes: &[String], edges: &[(String, String, f64)], d: f64) -> Result<NeighborhoodGraph> {
    let mut index = HashMap::with_capacity(nodes.len());
    for (k, id) in nodes.iter().enumerate() {
        if index.insert(id.as_str(), k).is_some() {
            return Err(GcarError::DuplicateId(id.clone()));
        }
    }
    let mut indexed = Vec::with_capacity(edges.len());
    for (a, b, w) in edges {
        let i = *index.get(a.as_str()).ok_or_else(|| GcarError::UnknownEndpoint(a.clone()))?;
        let j = *index.get(b.as_str()).ok_or_else(|| GcarError::UnknownEndpoint(b.clone()))?;
        indexed.push((i, j, *w));
    }
    NeighborhoodGraph::from_indexed(nodes.to_vec(), &indexed, d)
}

impl NeighborhoodGraph {
    /// Build from positional edges; ids must be unique.
    pub fn from_indexed(node_ids: Vec<String>, edges: &[(usize, usize, f64)], d: f64) -> Result<Self> {
        if !d.is_finite() || d < 0.0 {
            return Err(GcarError::InvalidD(d));
        }
        let n = node_ids.len();
        {
            let mut seen = std::collections::HashSet::with_capacity(n);
            for id in &node_ids {
                if !seen.insert(id.as_str()) {
                    return Err(GcarError::DuplicateId(id.clone()));
                }
            }
        }
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(a, b, w) in edges {
            if a >= n {
                return Err(GcarError::UnknownEndpoint(format!("#{a}")));
            }
            if b >= n {
                return Err(GcarError::UnknownEndpoint(format!("#{b}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GcarError::NonPositiveWeight(node_ids[a].clone(), node_ids[b].clone(), w));
            }
            if a == b {
                return Err(GcarError::SelfLoop(node_ids[a].clone()));
            }
            let key = (a.min(b), a.max(b));
            if let Some(prev) = merged.get_mut(&key) {
                log::warn!(
                    "duplicate edge ({}, {}) merged by summing weights",
                    node_ids[key.0],
                    node_ids[key.1]
                );
                *prev += w;
            } else {
                merged.insert(key, w);
            }
        }
        let edges: Vec<(usize, usize, f64)> = merged.into_iter().map(|((i, j), w)| (i, j, w)).collect();

        let mut counts = vec![0usize; n];
        let mut degrees = vec![0.0; n];
        for &(i, j, w) in &edges {
            counts[i] += 1;
            counts[j] += 1;
            degrees[i] += w;
            degrees[j] += w;
        }
        if d == 0.0 {
            if let Some(k) = counts.iter().position(|&c| c == 0) {
                return Err(GcarError::IsolatedWithZeroD(node_ids[k].clone()));
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for k in 0..n {
            offsets[k + 1] = offsets[k] + counts[k];
        }
        let mut fill = offsets.clone();
        let mut adjacency = vec![(0usize, 0.0f64); offsets[n]];
        for &(i, j, w) in &edges {
            adjacency[fill[i]] = (j, w);
            fill[i] += 1;
            adjacency[fill[j]] = (i, w);
            fill[j] += 1;
        }
        Ok(NeighborhoodGraph {
            node_ids,
            edges,
            offsets,
            adjacency,
            degrees,
            d,
        })
    }

    /// An edgeless graph over `n` anonymous nodes (`d` must be positive).
    pub fn edgeless(node_ids: Vec<String>, d: f64) -> Result<Self> {
        Self::from_indexed(node_ids, &[], d)
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn has_edges(&self) -> bool {
        !self.edges.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, j: usize) -> &[(usize, f64)] {
        &self.adjacency[self.offsets[j]..self.offsets[j + 1]]
    }

    /// Σ_i w_ji x_i
    #[inline]
    pub fn weighted_neighbor_sum(&self, j: usize, x: &[f64]) -> f64 {
        self.neighbors(j).iter().map(|&(i, w)| w * x[i]).sum()
    }

    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.neighbors(j).is_empty()).collect()
    }

    /// Same topology with a different augmentation constant.
    pub fn with_d(&self, d: f64) -> Result<Self> {
        Self::from_indexed(self.node_ids.clone(), &self.edges, d)
    }

    /// Induced subgraph on `keep` (positions into this graph, in output order).
    pub fn subgraph(&self, keep: &[usize], d: f64) -> Result<Self> {
        let mut pos = vec![usize::MAX; self.len()];
        for (new, &old) in keep.iter().enumerate() {
            pos[old] = new;
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter(|(i, j, _)| pos[*i] != usize::MAX && pos[*j] != usize::MAX)
            .map(|&(i, j, w)| (pos[i], pos[j], w))
            .collect();
        let ids = keep.iter().map(|&k| self.node_ids[k].clone()).collect();
        Self::from_indexed(ids, &edges, d)
    }

    /// Drop nodes without neighbors. Returns the reduced graph and the
    /// positions of the kept nodes in the original ordering.
    pub fn drop_isolated(&self, d: f64) -> Result<(Self, Vec<usize>)> {
        let keep: Vec<usize> = (0..self.len()).filter(|&j| !self.neighbors(j).is_empty()).collect();
        Ok((self.subgraph(&keep, d)?, keep))
    }

    /// Connected components (isolated nodes are singleton components).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let c = out.len();
            let mut members = vec![start];
            label[start] = c;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(u, _) in self.neighbors(v) {
                    if label[u] == usize::MAX {
                        label[u] = c;
                        members.push(u);
                        stack.push(u);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn dense_adjacency(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, w) in &self.edges {
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
        m
    }

    /// Dense `D*_w - ρW`.
    pub fn dense_precision(&self, rho: f64) -> DMatrix<f64> {
        let mut m = self.dense_adjacency() * (-rho);
        for j in 0..self.len() {
            m[(j, j)] = self.degrees[j] + self.d;
        }
        m
    }

    /// Σ_j log(w_j. + d)
    pub fn log_det_diag(&self) -> f64 {
        self.degrees.iter().map(|w| (w + self.d).ln()).sum()
    }
}

/// Open interval of admissible ρ values, `(1/ν_1, 1/ν_J)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSupport {
    pub lower: f64,
    pub upper: f64,
}

impl RhoSupport {
    #[inline]
    pub fn contains(&self, rho: f64) -> bool {
        rho > self.lower && rho < self.upper
    }
}

/// Eigenvalues of `(D*_w)^{-1/2} W (D*_w)^{-1/2}` and the derived ρ support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Sorted ascending, one per node.
    pub nus: Vec<f64>,
    /// `None` when the graph has no edges: there is no spatial term.
    pub support: Option<RhoSupport>,
    /// log|D*_w|
    pub log_det_const: f64,
    nonzero: Vec<f64>,
}

const ZERO_NU: f64 = 1e-12;

impl SpectralSummary {
    pub fn rho_lower(&self) -> Option<f64> {
        self.support.map(|s| s.lower)
    }

    pub fn rho_upper(&self) -> Option<f64> {
        self.support.map(|s| s.upper)
    }

    /// log|D*_w - ρW| through the eigenvalue shortcut; `-inf` outside the support.
    pub fn log_det(&self, rho: f64) -> f64 {
        let mut acc = self.log_det_const;
        for &nu in &self.nonzero {
            let t = 1.0 - rho * nu;
            if t <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += t.ln();
        }
        acc
    }

    pub fn describe_support(&self) -> String {
        match self.support {
            Some(s) => format!("({}, {})", s.lower, s.upper),
            None => "unconstrained (no spatial term)".to_string(),
        }
    }
}

/// Spectrum of the normalized adjacency.
///
/// The matrix is block diagonal over connected components, so each component
/// is decomposed densely on its own; isolated nodes contribute ν = 0.
pub fn spectral_summary(g: &NeighborhoodGraph) -> Result<SpectralSummary> {
    let mut nus = Vec::with_capacity(g.len());
    let scale: Vec<f64> = g.degrees().iter().map(|w| 1.0 / (w + g.d()).sqrt()).collect();
    for comp in g.components() {
        if comp.len() == 1 {
            nus.push(0.0);
            continue;
        }
        let m = comp.len();
        let mut local = HashMap::with_capacity(m);
        for (k, &v) in comp.iter().enumerate() {
            local.insert(v, k);
        }
        let mut a = DMatrix::zeros(m, m);
        for (k, &v) in comp.iter().enumerate() {
            for &(u, w) in g.neighbors(v) {
                let l = local[&u];
                a[(k, l)] = w * scale[v] * scale[u];
            }
        }
        let eig = SymmetricEigen::try_new(a, 1e-14, 10_000)
            .ok_or_else(|| GcarError::Eigen(format!("no convergence on a component of size {m}")))?;
        nus.extend(eig.eigenvalues.iter().copied());
    }
    nus.sort_by(f64::total_cmp);
    let nonzero: Vec<f64> = nus.iter().copied().filter(|v| v.abs() > ZERO_NU).collect();
    let support = if g.has_edges() {
        let lo = nus[0];
        let hi = nus[nus.len() - 1];
        if !(lo < 0.0 && hi > 0.0) {
            return Err(GcarError::Eigen(format!("degenerate spectrum [{lo}, {hi}]")));
        }
        Some(RhoSupport {
            lower: 1.0 / lo,
            upper: 1.0 / hi,
        })
    } else {
        None
    };
    Ok(SpectralSummary {
        nus,
        support,
        log_det_const: g.log_det_diag(),
        nonzero,
    })
}

/// The two ρ-free quadratic forms `μ'D*_wμ` and `μ'Wμ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForms {
    pub diag: f64,
    pub adj: f64,
}

impl QuadForms {
    /// μ'(D*_w - ρW)μ
    #[inline]
    pub fn combined(&self, rho: f64) -> f64 {
        self.diag - rho * self.adj
    }
}

pub fn precision_quadform(g: &NeighborhoodGraph, mu: &[f64]) -> Result<QuadForms> {
    if mu.len() != g.len() {
        return Err(GcarError::DimensionMismatch {
            expected: g.len(),
            got: mu.len(),
        });
    }
    Ok(quadforms_unchecked(g, mu))
}

#[inline]
pub(crate) fn quadforms_unchecked(g: &NeighborhoodGraph, mu: &[f64]) -> QuadForms {
    let d = g.d();
    let diag = g.degrees().iter().zip(mu).map(|(w, m)| (w + d) * m * m).sum();
    let adj = 2.0 * g.edges().iter().map(|&(i, j, w)| w * mu[i] * mu[j]).sum::<f64>();
    QuadForms { diag, adj }
}

/// Whether `D*_w - ρW` has smallest eigenvalue above 1e-10. Dense; meant for
/// validation and tests.
pub fn check_positive_definite(g: &NeighborhoodGraph, rho: f64) -> bool {
    let m = g.dense_precision(rho);
    match SymmetricEigen::try_new(m, 1e-14, 10_000) {
        Some(e) => e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min) > 1e-10,
        None => false,
    }
}
