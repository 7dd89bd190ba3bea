//! Each sampler step against an independently written density, with the
//! rest of the state frozen.

mod common;

fn check(o: common::KsOutcome) {
    assert_eq!(o.n, 10_000);
    assert!(o.pvalue > 0.01, "{}: D = {} p = {}", o.name, o.d, o.pvalue);
}

#[test]
fn eta_rejection_matches_density() {
    check(common::eta_check(10_000, 101));
}

#[test]
fn rho_slice_matches_density() {
    check(common::rho_check(10_000, 102));
}

#[test]
fn p_langevin_leaves_beta_invariant() {
    check(common::p_langevin_check(10_000, 103));
}

#[test]
fn sigma2_draw_matches_density() {
    check(common::sigma2_check(10_000, 104));
}

#[test]
fn grid_cdf_reproduces_a_known_law() {
    // standard normal through the same grid machinery
    let g = common::GridCdf::new(|x| -0.5 * x * x, -9.0, 9.0, 20_001);
    assert!((g.eval(0.0) - 0.5).abs() < 1e-9);
    assert!((g.eval(1.959964) - 0.975).abs() < 1e-6);
}
