//! Fixtures shared by the benchmarks.

use gcar::simgen::gen_cascade;
use gcar::NeighborhoodGraph;

/// The 1,000-case cascade study: statistics and its pathway graph (d = 1).
pub fn cascade_fixture() -> (Vec<f64>, NeighborhoodGraph) {
    let sim = gen_cascade(1).expect("cascade simulation");
    let g = sim.graph("pathway", 1.0).expect("pathway graph");
    (sim.y, g)
}

/// Square lattice with `side`² nodes and unit weights.
pub fn lattice(side: usize, d: f64) -> NeighborhoodGraph {
    let mut e = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let k = r * side + c;
            if c + 1 < side {
                e.push((k, k + 1, 1.0));
            }
            if r + 1 < side {
                e.push((k, k + side, 1.0));
            }
        }
    }
    let ids = (0..side * side).map(|k| format!("s{k}")).collect();
    NeighborhoodGraph::from_indexed(ids, &e, d).expect("lattice graph")
}
