//! Regression fixtures: enumerated preimage lists frozen as golden files
//! (header comment line, then one admissible window per line).

use fi_traffic::preimage::{enumerate_preimages, render_golden};

#[test]
fn golden_m1_n2() {
    assert_eq!(render_golden(1, 2).unwrap(), include_str!("golden/m1_n2.txt"));
}

#[test]
fn golden_m2_n1() {
    assert_eq!(render_golden(2, 1).unwrap(), include_str!("golden/m2_n1.txt"));
}

#[test]
fn golden_bodies_match_enumeration_order() {
    for (m, n, fixture) in [
        (1, 2, include_str!("golden/m1_n2.txt")),
        (2, 1, include_str!("golden/m2_n1.txt")),
    ] {
        let body: Vec<&str> = fixture.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(enumerate_preimages(m, n).unwrap(), body);
    }
}
