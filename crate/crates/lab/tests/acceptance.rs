//! Every primary acceptance criterion at its pinned tolerance. Each test
//! prints one `PASS`/`FAIL` line to stderr, visible without `--nocapture`.

use std::io::Write;

use disloc::acceptance::{criterion, run_criterion, CRITERIA};

fn check(id: &str) {
    let c = criterion(id).unwrap_or_else(|| panic!("no criterion {id}"));
    let r = run_criterion(c);
    let line = format!("{}\n", r.line());
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(r.passed, "{}\n{:#}", r.line(), r.detail);
}

#[test]
fn every_criterion_has_a_test() {
    let covered = [
        "two-body",
        "collision-theorem",
        "repulsive",
        "heteroclinic",
        "stationarity",
        "pde-ode",
        "relaxation",
        "classification",
        "multibump",
        "cell",
        "orowan",
        "meanfield",
    ];
    let ids: Vec<&str> = CRITERIA.iter().map(|c| c.id).collect();
    assert_eq!(ids, covered);
}

#[test]
fn two_body() {
    check("two-body");
}

#[test]
fn collision_theorem() {
    check("collision-theorem");
}

#[test]
fn repulsive() {
    check("repulsive");
}

#[test]
fn heteroclinic() {
    check("heteroclinic");
}

#[test]
fn stationarity() {
    check("stationarity");
}

#[test]
fn pde_ode() {
    check("pde-ode");
}

#[test]
fn relaxation() {
    check("relaxation");
}

#[test]
fn classification() {
    check("classification");
}

#[test]
fn multibump() {
    check("multibump");
}

#[test]
fn cell() {
    check("cell");
}

#[test]
fn orowan() {
    check("orowan");
}

#[test]
fn meanfield() {
    check("meanfield");
}
