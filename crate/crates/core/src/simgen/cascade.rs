//! Directed-cascade study: within each enriched gene set a parent signal
//! feeds seven children, which feed the remaining members. The emitted
//! neighborhoods are deliberately incomplete, and a block of genes outside
//! every set is correlated without any edges.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pathway::default_sets;
use super::{ar1_vector, clique_edges, expression_to_z, gene_ids, std_normal, Scenario, SimGraph, SimOutput};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeParams {
    pub n_genes: usize,
    pub sets: Vec<Vec<usize>>,
    pub active_sets: Vec<usize>,
    pub parent_mean: f64,
    pub sd: f64,
    pub coef: f64,
    pub n_children: usize,
    /// Remaining members centre on coef·mean(children) instead of
    /// coef·sum(children).
    pub remainder_uses_mean: bool,
    pub n_isolated_correlated: usize,
    pub ar: f64,
    pub n_control: usize,
    pub n_treat: usize,
}

impl Default for CascadeParams {
    fn default() -> Self {
        CascadeParams {
            n_genes: 1_000,
            sets: default_sets(),
            active_sets: vec![1, 4],
            parent_mean: 2.5,
            sd: 0.75,
            coef: 0.92,
            n_children: 7,
            remainder_uses_mean: false,
            n_isolated_correlated: 30,
            ar: 0.9,
            n_control: 5,
            n_treat: 5,
        }
    }
}

/// Parent, children and cascade signals of one set: (parent, children, means).
pub(crate) fn cascade_signals<R: Rng + ?Sized>(
    members: &[usize],
    p: &CascadeParams,
    rng: &mut R,
) -> (usize, Vec<usize>, Vec<(usize, f64)>) {
    let mut order = members.to_vec();
    order.shuffle(rng);
    let parent = order[0];
    let children = order[1..=p.n_children].to_vec();
    let mu_p = p.parent_mean + p.sd * std_normal(rng);
    let mut out = vec![(parent, mu_p)];
    let mut total = 0.0;
    for &c in &children {
        let m = p.coef * mu_p + p.sd * std_normal(rng);
        total += m;
        out.push((c, m));
    }
    let centre = if p.remainder_uses_mean {
        p.coef * total / p.n_children as f64
    } else {
        p.coef * total
    };
    for &g in &order[p.n_children + 1..] {
        out.push((g, centre + p.sd * std_normal(rng)));
    }
    (parent, children, out)
}

pub fn gen_cascade(seed: u64) -> Result<SimOutput> {
    gen_cascade_with(&CascadeParams::default(), seed)
}

pub fn gen_cascade_with(p: &CascadeParams, seed: u64) -> Result<SimOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.n_genes;
    let mut means = vec![0.0; n];
    let mut truth = vec![false; n];
    let mut parents = Vec::new();
    for &s in &p.active_sets {
        let (parent, _, sig) = cascade_signals(&p.sets[s], p, &mut rng);
        parents.push(parent);
        for (g, m) in sig {
            means[g] = m;
            truth[g] = true;
        }
    }
    // incomplete neighborhoods: two members of one enriched set and one of
    // an inactive set are left out
    let active_pick = *p.active_sets.choose(&mut rng).expect("an active set");
    let inactive: Vec<usize> = (0..p.sets.len()).filter(|s| !p.active_sets.contains(s)).collect();
    let inactive_pick = *inactive.choose(&mut rng).expect("an inactive set");
    let mut omitted: Vec<usize> = p.sets[active_pick].choose_multiple(&mut rng, 2).copied().collect();
    omitted.push(*p.sets[inactive_pick].choose(&mut rng).expect("nonempty set"));
    omitted.sort_unstable();
    let listed: Vec<Vec<usize>> = p
        .sets
        .iter()
        .map(|s| s.iter().copied().filter(|g| !omitted.contains(g)).collect())
        .collect();

    let in_any: Vec<bool> = {
        let mut v = vec![false; n];
        p.sets.iter().flatten().for_each(|&g| v[g] = true);
        v
    };
    let outside: Vec<usize> = (0..n).filter(|&g| !in_any[g]).collect();
    let mut correlated: Vec<usize> = outside
        .choose_multiple(&mut rng, p.n_isolated_correlated)
        .copied()
        .collect();
    correlated.sort_unstable();

    let draw_subject = |treated: bool, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut row: Vec<f64> = (0..n)
            .map(|g| if treated { means[g] } else { 0.0 } + std_normal(rng))
            .collect();
        let block = ar1_vector(correlated.len(), p.ar, rng);
        for (&g, z) in correlated.iter().zip(block) {
            row[g] = z;
        }
        row
    };
    let control: Vec<Vec<f64>> = (0..p.n_control).map(|_| draw_subject(false, &mut rng)).collect();
    let treat: Vec<Vec<f64>> = (0..p.n_treat).map(|_| draw_subject(true, &mut rng)).collect();
    let y = expression_to_z(&control, &treat)?;

    let ids = gene_ids(n);
    let join = |v: &[usize]| v.iter().map(|&g| ids[g].clone()).collect::<Vec<_>>().join(" ");
    let meta = vec![
        ("n_genes".into(), n.to_string()),
        (
            "active_sets".into(),
            p.active_sets.iter().map(|s| format!("set{}", s + 1)).collect::<Vec<_>>().join(" "),
        ),
        (
            "remainder_rule".into(),
            if p.remainder_uses_mean { "mean" } else { "sum" }.to_string(),
        ),
        ("coef".into(), p.coef.to_string()),
        ("parents".into(), join(&parents)),
        ("omitted_from_neighborhoods".into(), join(&omitted)),
        ("isolated_correlated".into(), join(&correlated)),
    ];
    Ok(SimOutput {
        scenario: Scenario::Cascade,
        seed,
        ids,
        y,
        truth,
        graphs: vec![SimGraph {
            name: "pathway".into(),
            edges: clique_edges(&listed),
        }],
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omissions_and_isolated_block() {
        let out = gen_cascade(11).unwrap();
        assert_eq!(out.n_active(), 40);
        let omitted: Vec<&str> = out.meta_value("omitted_from_neighborhoods").unwrap().split(' ').collect();
        assert_eq!(omitted.len(), 3);
        let g = out.graph("pathway", 1.0).unwrap();
        // members of the listed sets minus the three omissions have edges
        let with_edges = (0..1000).filter(|&j| !g.neighbors(j).is_empty()).count();
        assert_eq!(with_edges, 90 - 3);
        let active_omitted = omitted
            .iter()
            .filter(|id| out.truth[out.ids.iter().position(|x| x == *id).unwrap()])
            .count();
        assert_eq!(active_omitted, 2);
        assert_eq!(out.meta_value("isolated_correlated").unwrap().split(' ').count(), 30);
        assert_eq!(out.meta_value("remainder_rule"), Some("sum"));
    }

    #[test]
    fn child_regression_slope() {
        let p = CascadeParams::default();
        let (mut sxy, mut sxx, mut sx, mut sy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for seed in 0..500 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (_, children, sig) = cascade_signals(&p.sets[1], &p, &mut rng);
            let mu_p = sig[0].1;
            for (g, m) in &sig {
                if children.contains(g) {
                    sxy += mu_p * m;
                    sxx += mu_p * mu_p;
                    sx += mu_p;
                    sy += m;
                    n += 1.0;
                }
            }
        }
        let slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
        assert!((slope - 0.92).abs() < 0.05, "{slope}");
    }

    #[test]
    fn mean_rule_flag() {
        let p = CascadeParams {
            remainder_uses_mean: true,
            ..Default::default()
        };
        let out = gen_cascade_with(&p, 1).unwrap();
        assert_eq!(out.meta_value("remainder_rule"), Some("mean"));
    }
}
