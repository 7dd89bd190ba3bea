//! Seeded generators for the simulation studies and the t → z pipeline.
//!
//! Every generator is a pure function of its parameters and seed.

mod cascade;
mod ising;
mod microarray;
mod pathway;
pub mod tstat;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GcarError, Result};
use crate::graph::NeighborhoodGraph;

pub use cascade::{gen_cascade, gen_cascade_with, CascadeParams};
pub use ising::{gen_ising, gen_ising_with, IsingParams};
pub use microarray::{gen_adjacency_microarray, gen_adjacency_microarray_with, MicroarrayParams};
pub use pathway::{gen_pathway, gen_pathway_with, PathwayParams};
pub use tstat::{pooled_t, t_to_z};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Ising,
    Microarray,
    Pathway,
    Cascade,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Ising => "ising",
            Scenario::Microarray => "microarray",
            Scenario::Pathway => "pathway",
            Scenario::Cascade => "cascade",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = GcarError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ising" => Ok(Scenario::Ising),
            "microarray" | "adjacency" => Ok(Scenario::Microarray),
            "pathway" => Ok(Scenario::Pathway),
            "cascade" => Ok(Scenario::Cascade),
            other => Err(GcarError::InvalidParameter(format!(
                "unknown scenario `{other}` (expected ising, microarray, pathway or cascade)"
            ))),
        }
    }
}

/// A named edge list over the output's case indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SimGraph {
    pub name: String,
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub scenario: Scenario,
    pub seed: u64,
    pub ids: Vec<String>,
    pub y: Vec<f64>,
    pub truth: Vec<bool>,
    pub graphs: Vec<SimGraph>,
    /// Scenario parameters and bookkeeping, in emission order.
    pub meta: Vec<(String, String)>,
}

impl SimOutput {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_active(&self) -> usize {
        self.truth.iter().filter(|&&t| t).count()
    }

    pub fn edges(&self, name: &str) -> Result<&[(usize, usize, f64)]> {
        self.graphs
            .iter()
            .find(|g| g.name == name)
            .map(|g| g.edges.as_slice())
            .ok_or_else(|| GcarError::InvalidParameter(format!("no graph named `{name}`")))
    }

    /// Neighborhood graph `name` over all cases.
    pub fn graph(&self, name: &str, d: f64) -> Result<NeighborhoodGraph> {
        NeighborhoodGraph::from_indexed(self.ids.clone(), self.edges(name)?, d)
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Stationary AR(1) vector with unit marginal variance, i.e. a draw from
/// N(0, Σ) with Σ_ij = φ^|i−j|.
pub(crate) fn ar1_vector<R: Rng + ?Sized>(n: usize, phi: f64, rng: &mut R) -> Vec<f64> {
    let innov = (1.0 - phi * phi).sqrt();
    let mut out = Vec::with_capacity(n);
    let mut x: f64 = StandardNormal.sample(rng);
    out.push(x);
    for _ in 1..n {
        let z: f64 = StandardNormal.sample(rng);
        x = phi * x + innov * z;
        out.push(x);
    }
    out
}

pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Gene ids g0001, g0002, ... (1-based, matching the study's indexing).
pub(crate) fn gene_ids(n: usize) -> Vec<String> {
    let w = n.to_string().len().max(4);
    (1..=n).map(|i| format!("g{i:0w$}")).collect()
}

/// All pairs within each group, weight 1.
pub(crate) fn clique_edges(groups: &[Vec<usize>]) -> Vec<(usize, usize, f64)> {
    let mut e = Vec::new();
    for g in groups {
        for (a, &i) in g.iter().enumerate() {
            for &j in &g[a + 1..] {
                e.push((i.min(j), i.max(j), 1.0));
            }
        }
    }
    e.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    e
}

/// Per-gene pooled t statistics from a subjects × genes expression array
/// split into controls then treatments, transformed to z.
pub(crate) fn expression_to_z(control: &[Vec<f64>], treat: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n_genes = control[0].len();
    let mut t = Vec::with_capacity(n_genes);
    let mut c = vec![0.0; control.len()];
    let mut tr = vec![0.0; treat.len()];
    for j in 0..n_genes {
        for (k, row) in control.iter().enumerate() {
            c[k] = row[j];
        }
        for (k, row) in treat.iter().enumerate() {
            tr[k] = row[j];
        }
        t.push(pooled_t(&c, &tr));
    }
    let df = (control.len() + treat.len() - 2) as f64;
    t_to_z(&t, df)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ar1_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut s01, mut s02, mut s00) = (0.0, 0.0, 0.0);
        let n = 40_000;
        for _ in 0..n {
            let v = ar1_vector(3, 0.9, &mut rng);
            s00 += v[0] * v[0];
            s01 += v[0] * v[1];
            s02 += v[0] * v[2];
        }
        let n = n as f64;
        assert!((s00 / n - 1.0).abs() < 0.03);
        assert!((s01 / n - 0.9).abs() < 0.03);
        assert!((s02 / n - 0.81).abs() < 0.03);
    }

    #[test]
    fn clique_counts() {
        let e = clique_edges(&[(0..10).collect(), (20..40).collect()]);
        assert_eq!(e.len(), 45 + 190);
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in [Scenario::Ising, Scenario::Microarray, Scenario::Pathway, Scenario::Cascade] {
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
        }
        assert!("nope".parse::<Scenario>().is_err());
    }
}
