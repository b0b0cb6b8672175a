//! One test per acceptance criterion. Each prints its result line; run with
//! `--nocapture` to see all of them, or `--test-threads 1` to keep them ordered.

use lpfraisse::rng::seed_from_env;
use lpfraisse::suite::{run_criterion, SuiteConfig};

fn check(id: u8) {
    let cfg = SuiteConfig {
        seed: seed_from_env(),
        ..SuiteConfig::default()
    };
    let r = run_criterion(id, &cfg).expect("known criterion");
    println!("{}", r.line());
    assert!(r.property_holds, "property failed: {}", r.line());
    assert!(r.within_budget, "over budget: {}", r.line());
}

#[test]
fn c01_gp_shape() {
    check(1);
}

#[test]
fn c02_cdf_inversion() {
    check(2);
}

#[test]
fn c03_even_odd_characteristics() {
    check(3);
}

#[test]
fn c04_matching_bound() {
    check(4);
}

#[test]
fn c05_concentration() {
    check(5);
}

#[test]
fn c06_equi_counting() {
    check(6);
}

#[test]
fn c07_lattice_rounding() {
    check(7);
}

#[test]
fn c08_amalgamation() {
    check(8);
}

#[test]
fn c09_hilbert_rounding() {
    check(9);
}

#[test]
fn c10_mazur() {
    check(10);
}

#[test]
fn c11_envelope_pipeline() {
    check(11);
}

#[test]
fn c12_certificates() {
    check(12);
}

#[test]
fn c13_spread_dp() {
    check(13);
}

#[test]
fn c14_gap_geometry() {
    check(14);
}
