//! Acceptance suite: one test per criterion, each printing its pass/fail
//! line with the measured values. `peas verify` runs the same list.

use peas::acceptance::*;

fn check(result: peas::Result<CriterionResult>) {
    let result = result.expect("criterion run failed with an infrastructure error");
    println!("{}", result.line());
    assert!(result.passed, "{}", result.line());
}

#[test]
fn criterion_01_discrete_velocity_rate() {
    check(c01_discrete_velocity_rate());
}

#[test]
fn criterion_02_discrete_gradient_rate() {
    check(c02_discrete_gradient_rate());
}

#[test]
fn criterion_03_discrete_tau_growth() {
    check(c03_discrete_tau_growth());
}

#[test]
fn criterion_04_monotonicity() {
    check(c04_monotonicity());
}

#[test]
fn criterion_05_summability() {
    check(c05_summability());
}

#[test]
fn criterion_06_p1_reduction() {
    check(c06_p1_reduction());
}

#[test]
fn criterion_07_inertial_identity_and_rate() {
    check(c07_inertial_identity_and_rate());
}

#[test]
fn criterion_08_continuous_velocity_rate() {
    check(c08_continuous_velocity_rate());
}

#[test]
fn criterion_09_continuous_gradient_vs_lin_jordan() {
    check(c09_continuous_gradient_vs_lin_jordan());
}

#[test]
fn criterion_10_second_order_equivalence() {
    check(c10_second_order_equivalence());
}

#[test]
fn criterion_11_averaging_measure() {
    check(c11_averaging_measure());
}

#[test]
fn criterion_12_open_loop_coefficients() {
    check(c12_open_loop_coefficients());
}

#[test]
fn criterion_13_steepest_descent_baseline() {
    check(c13_steepest_descent_baseline());
}

#[test]
fn criterion_14_gamma_one_regime() {
    check(c14_gamma_one_regime());
}

#[test]
fn criterion_15_prox_oracle() {
    check(c15_prox_oracle());
}
