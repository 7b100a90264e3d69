//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p holocrit --test acceptance -- --nocapture` to see
//! the lines; each test also fails on its own criterion.

use std::sync::OnceLock;

use holocrit::verify::{self, CheckResult, MatrixRun, SimulationRun, VerifyConfig};

fn report(result: holocrit::Result<CheckResult>) {
    let result = result.expect("check ran");
    println!("{result}");
    assert!(result.passed, "{result}");
}

fn config() -> VerifyConfig {
    VerifyConfig::default()
}

fn matrix() -> &'static MatrixRun {
    static RUN: OnceLock<MatrixRun> = OnceLock::new();
    RUN.get_or_init(|| verify::matrix_run(&config()).expect("random-matrix run"))
}

fn simulation() -> &'static SimulationRun {
    static RUN: OnceLock<SimulationRun> = OnceLock::new();
    RUN.get_or_init(|| verify::simulation_run(&config()).expect("simulation run"))
}

#[test]
fn criterion_1_closed_form() {
    report(verify::check_closed_form());
}

#[test]
fn criterion_2_signed_identity() {
    report(verify::check_signed_identity());
}

#[test]
fn criterion_3_degree_two() {
    report(verify::check_degree_two());
}

#[test]
fn criterion_4_monotonicity() {
    report(verify::check_monotonicity());
}

#[test]
fn criterion_5_leading_coefficients() {
    report(verify::check_leading_coefficients());
}

#[test]
fn criterion_6_selberg_equivalence() {
    report(verify::check_selberg_equivalence());
}

#[test]
fn criterion_7_random_matrix() {
    report(verify::check_matrix_run(matrix()));
}

#[test]
fn criterion_8_simulation() {
    report(verify::check_simulation_run(simulation()));
}

#[test]
fn criterion_9_determinism() {
    report(verify::check_determinism(&config(), matrix(), simulation()));
}
