//! Activation pattern from a lattice Ising model p(x) ∝ exp(β Σ_{i∼j} I(x_i = x_j))
//! with Gaussian observations on top.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{std_normal, Scenario, SimGraph, SimOutput};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingParams {
    pub rows: usize,
    pub cols: usize,
    pub beta: f64,
    pub mu_active: f64,
    pub sweeps: usize,
}

impl Default for IsingParams {
    fn default() -> Self {
        IsingParams {
            rows: 20,
            cols: 20,
            beta: 0.35,
            mu_active: 3.5,
            sweeps: 5_000,
        }
    }
}

/// First-order (4-neighbor) lattice edges in row-major site order.
pub(crate) fn lattice_edges(rows: usize, cols: usize) -> Vec<(usize, usize, f64)> {
    let mut e = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                e.push((i, i + 1, 1.0));
            }
            if r + 1 < rows {
                e.push((i, i + cols, 1.0));
            }
        }
    }
    e.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    e
}

pub fn gen_ising(rows: usize, cols: usize, beta: f64, mu_active: f64, seed: u64) -> SimOutput {
    gen_ising_with(
        &IsingParams {
            rows,
            cols,
            beta,
            mu_active,
            ..Default::default()
        },
        seed,
    )
}

/// Single-site Gibbs sweeps from a uniform random start, then y_i ~ N(0, 1)
/// for inactive and N(mu_active, 1) for active sites.
pub fn gen_ising_with(p: &IsingParams, seed: u64) -> SimOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (p.rows, p.cols);
    let n = rows * cols;
    let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in lattice_edges(rows, cols) {
        nbrs[i].push(j);
        nbrs[j].push(i);
    }
    for _ in 0..p.sweeps {
        for i in 0..n {
            let ones = nbrs[i].iter().filter(|&&k| x[k]).count() as f64;
            let zeros = nbrs[i].len() as f64 - ones;
            let pr = 1.0 / (1.0 + (p.beta * (zeros - ones)).exp());
            x[i] = rng.random::<f64>() < pr;
        }
    }
    let y = x
        .iter()
        .map(|&a| if a { p.mu_active } else { 0.0 } + std_normal(&mut rng))
        .collect();
    let ids = (0..n).map(|i| format!("r{:02}c{:02}", i / cols + 1, i % cols + 1)).collect();
    let active = x.iter().filter(|&&a| a).count();
    SimOutput {
        scenario: Scenario::Ising,
        seed,
        ids,
        y,
        truth: x,
        graphs: vec![SimGraph {
            name: "lattice".into(),
            edges: lattice_edges(rows, cols),
        }],
        meta: vec![
            ("rows".into(), rows.to_string()),
            ("cols".into(), cols.to_string()),
            ("beta".into(), p.beta.to_string()),
            ("mu_active".into(), p.mu_active.to_string()),
            ("sweeps".into(), p.sweeps.to_string()),
            ("n_active".into(), active.to_string()),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::morans_i;
    use rand::seq::SliceRandom;

    #[test]
    fn independent_sites_at_zero_coupling() {
        let out = gen_ising_with(
            &IsingParams {
                beta: 0.0,
                sweeps: 10,
                ..Default::default()
            },
            4,
        );
        let f = out.n_active() as f64 / 400.0;
        assert!((0.44..=0.56).contains(&f), "{f}");
    }

    #[test]
    fn lattice_edge_count() {
        assert_eq!(lattice_edges(20, 20).len(), 2 * 20 * 19);
    }

    #[test]
    fn coupling_clusters_the_pattern() {
        let mut wins = 0;
        for seed in 0..20 {
            let out = gen_ising_with(
                &IsingParams {
                    sweeps: 300,
                    ..Default::default()
                },
                seed,
            );
            let g = out.graph("lattice", 0.0).unwrap();
            let pat: Vec<f64> = out.truth.iter().map(|&b| b as u8 as f64).collect();
            let mut perm = pat.clone();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 100));
            if morans_i(&pat, &g).unwrap() > morans_i(&perm, &g).unwrap() {
                wins += 1;
            }
        }
        assert!(wins >= 19, "{wins}");
    }

    #[test]
    fn deterministic() {
        let p = IsingParams {
            sweeps: 50,
            ..Default::default()
        };
        assert_eq!(gen_ising_with(&p, 9), gen_ising_with(&p, 9));
    }
}
