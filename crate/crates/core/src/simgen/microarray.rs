//! Adjacency-correlated microarray study: 1,000 genes, 5 control and 5
//! treatment subjects, five correlated blocks of differentially expressed
//! genes, pooled t statistics probit-transformed to z.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ar1_vector, expression_to_z, gene_ids, std_normal, Scenario, SimGraph, SimOutput};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct MicroarrayParams {
    pub n_genes: usize,
    pub n_control: usize,
    pub n_treat: usize,
    /// 0-based first index of each 20-gene block and its treatment mean.
    pub blocks: Vec<(usize, f64)>,
    pub block_len: usize,
    pub ar: f64,
}

impl Default for MicroarrayParams {
    fn default() -> Self {
        MicroarrayParams {
            n_genes: 1_000,
            n_control: 5,
            n_treat: 5,
            blocks: vec![(0, 1.5), (110, 1.5), (210, 1.5), (310, -1.5), (410, -1.5)],
            block_len: 20,
            ar: 0.9,
        }
    }
}

/// Path-graph neighborhoods with weights by distance: `weights[k]` links
/// genes k + 1 apart; truncated at the sequence ends.
pub(crate) fn banded_edges(n: usize, weights: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut e = Vec::new();
    for i in 0..n {
        for (k, &w) in weights.iter().enumerate() {
            let j = i + k + 1;
            if j < n {
                e.push((i, j, w));
            }
        }
    }
    e
}

pub fn gen_adjacency_microarray(seed: u64) -> Result<SimOutput> {
    gen_adjacency_microarray_with(&MicroarrayParams::default(), seed)
}

pub fn gen_adjacency_microarray_with(p: &MicroarrayParams, seed: u64) -> Result<SimOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.n_genes;
    let control: Vec<Vec<f64>> = (0..p.n_control)
        .map(|_| (0..n).map(|_| std_normal(&mut rng)).collect())
        .collect();
    let mut treat = Vec::with_capacity(p.n_treat);
    for _ in 0..p.n_treat {
        let mut row: Vec<f64> = (0..n).map(|_| std_normal(&mut rng)).collect();
        for &(start, mean) in &p.blocks {
            let noise = ar1_vector(p.block_len, p.ar, &mut rng);
            for (k, z) in noise.into_iter().enumerate() {
                row[start + k] = mean + z;
            }
        }
        treat.push(row);
    }
    let y = expression_to_z(&control, &treat)?;
    let mut truth = vec![false; n];
    for &(start, mean) in &p.blocks {
        if mean != 0.0 {
            truth[start..start + p.block_len].iter_mut().for_each(|t| *t = true);
        }
    }
    Ok(SimOutput {
        scenario: Scenario::Microarray,
        seed,
        ids: gene_ids(n),
        y,
        truth,
        graphs: vec![
            SimGraph {
                name: "w1".into(),
                edges: banded_edges(n, &[1.0]),
            },
            SimGraph {
                name: "w2".into(),
                edges: banded_edges(n, &[1.0, 1.0]),
            },
            SimGraph {
                name: "w3".into(),
                edges: banded_edges(n, &[1.0, 0.5, 1.0 / 3.0]),
            },
        ],
        meta: vec![
            ("n_genes".into(), n.to_string()),
            ("n_control".into(), p.n_control.to_string()),
            ("n_treat".into(), p.n_treat.to_string()),
            (
                "blocks".into(),
                p.blocks
                    .iter()
                    .map(|(s, m)| format!("{}-{}:{m}", s + 1, s + p.block_len))
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
            ("ar".into(), p.ar.to_string()),
            ("df".into(), (p.n_control + p.n_treat - 2).to_string()),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, variance};

    #[test]
    fn truth_layout() {
        let out = gen_adjacency_microarray(1).unwrap();
        assert_eq!(out.n_active(), 100);
        for i in [0, 19, 110, 129, 210, 229, 310, 329, 410, 429] {
            assert!(out.truth[i]);
        }
        for i in [20, 109, 130, 430, 999] {
            assert!(!out.truth[i]);
        }
        assert_eq!(out.ids[0], "g0001");
    }

    #[test]
    fn null_variant_is_standard_normal() {
        let p = MicroarrayParams {
            blocks: vec![(0, 0.0), (110, 0.0)],
            ..Default::default()
        };
        let out = gen_adjacency_microarray_with(&p, 7).unwrap();
        assert!(mean(&out.y).abs() < 0.1);
        assert!((0.85..=1.15).contains(&variance(&out.y)));
        assert_eq!(out.n_active(), 0);
    }

    #[test]
    fn graphs() {
        let out = gen_adjacency_microarray(2).unwrap();
        assert_eq!(out.edges("w1").unwrap().len(), 999);
        assert_eq!(out.edges("w2").unwrap().len(), 999 + 998);
        let w3 = out.edges("w3").unwrap();
        assert_eq!(w3.len(), 999 + 998 + 997);
        assert!(w3.contains(&(0, 3, 1.0 / 3.0)));
        let g = out.graph("w3", 0.0).unwrap();
        assert_eq!(g.degrees()[0], 1.0 + 0.5 + 1.0 / 3.0);
    }

    #[test]
    fn active_signs() {
        let out = gen_adjacency_microarray(3).unwrap();
        let up = mean(&out.y[0..20]);
        let down = mean(&out.y[310..330]);
        assert!(up > 1.0 && down < -1.0, "{up} {down}");
    }
}
