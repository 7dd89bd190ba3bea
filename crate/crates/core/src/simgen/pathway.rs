//! Gene-set study: five gene sets, two of them differentially expressed,
//! with physical positions randomly permuted so set members are not
//! physically adjacent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::microarray::banded_edges;
use super::{clique_edges, expression_to_z, gene_ids, std_normal, Scenario, SimGraph, SimOutput};
use crate::error::Result;

/// 0-based gene sets 11–20, 111–130, 211–230, 311–330, 411–430.
pub(crate) fn default_sets() -> Vec<Vec<usize>> {
    vec![
        (10..20).collect(),
        (110..130).collect(),
        (210..230).collect(),
        (310..330).collect(),
        (410..430).collect(),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathwayParams {
    pub n_genes: usize,
    pub sets: Vec<Vec<usize>>,
    /// (set index, mean) for the differentially expressed sets.
    pub active: Vec<(usize, f64)>,
    /// Means apply to treatment expression levels of 5 + 5 subjects and
    /// y is the probit-transformed pooled t; otherwise y is drawn directly.
    pub expression: bool,
    pub n_control: usize,
    pub n_treat: usize,
}

impl Default for PathwayParams {
    fn default() -> Self {
        PathwayParams {
            n_genes: 1_000,
            sets: default_sets(),
            active: vec![(1, 2.5), (4, -1.5)],
            expression: true,
            n_control: 5,
            n_treat: 5,
        }
    }
}

pub fn gen_pathway(seed: u64) -> Result<SimOutput> {
    gen_pathway_with(&PathwayParams::default(), seed)
}

pub fn gen_pathway_with(p: &PathwayParams, seed: u64) -> Result<SimOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.n_genes;
    let mut means = vec![0.0; n];
    let mut truth = vec![false; n];
    for &(s, m) in &p.active {
        for &g in &p.sets[s] {
            means[g] = m;
            truth[g] = m != 0.0;
        }
    }
    let y = if p.expression {
        let control: Vec<Vec<f64>> = (0..p.n_control)
            .map(|_| (0..n).map(|_| std_normal(&mut rng)).collect())
            .collect();
        let treat: Vec<Vec<f64>> = (0..p.n_treat)
            .map(|_| means.iter().map(|m| m + std_normal(&mut rng)).collect())
            .collect();
        expression_to_z(&control, &treat)?
    } else {
        means.iter().map(|m| m + std_normal(&mut rng)).collect()
    };
    // position[g] = physical location of gene g
    let mut position: Vec<usize> = (0..n).collect();
    position.shuffle(&mut rng);
    let mut at = vec![0; n];
    for (g, &pos) in position.iter().enumerate() {
        at[pos] = g;
    }
    let adjacency: Vec<(usize, usize, f64)> = banded_edges(n, &[1.0])
        .into_iter()
        .map(|(a, b, w)| (at[a].min(at[b]), at[a].max(at[b]), w))
        .collect();
    let mut adjacency = adjacency;
    adjacency.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let in_sets = p.sets.iter().map(|s| s.len()).sum::<usize>();
    Ok(SimOutput {
        scenario: Scenario::Pathway,
        seed,
        ids: gene_ids(n),
        y,
        truth,
        graphs: vec![
            SimGraph {
                name: "pathway".into(),
                edges: clique_edges(&p.sets),
            },
            SimGraph {
                name: "adjacency".into(),
                edges: adjacency,
            },
        ],
        meta: vec![
            ("n_genes".into(), n.to_string()),
            (
                "active".into(),
                p.active
                    .iter()
                    .map(|(s, m)| format!("set{}:{m}", s + 1))
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
            ("expression_pipeline".into(), p.expression.to_string()),
            ("isolated_in_pathway_graph".into(), (n - in_sets).to_string()),
            (
                "positions".into(),
                position.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(" "),
            ),
        ],
    })
}
