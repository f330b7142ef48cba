//! Randomized invariants: 200 cases per property, fixed seed.

mod common;

#[test]
fn bk_s_matrix_unitary() {
    if let Err(e) = common::run_suite(common::suite("bk_s_matrix_unitary")) {
        panic!("{e}");
    }
}

#[test]
fn bk2_s_matrix_unitary() {
    if let Err(e) = common::run_suite(common::suite("bk2_s_matrix_unitary")) {
        panic!("{e}");
    }
}

#[test]
fn gauge_invariance() {
    if let Err(e) = common::run_suite(common::suite("gauge_invariance")) {
        panic!("{e}");
    }
}

#[test]
fn bk_eigenphase_velocity() {
    if let Err(e) = common::run_suite(common::suite("bk_eigenphase_velocity")) {
        panic!("{e}");
    }
}

#[test]
fn bk2_eigenphase_velocity_bounds() {
    if let Err(e) = common::run_suite(common::suite("bk2_eigenphase_velocity_bounds")) {
        panic!("{e}");
    }
}

#[test]
fn bk2_plus_minus_symmetry() {
    if let Err(e) = common::run_suite(common::suite("bk2_plus_minus_symmetry")) {
        panic!("{e}");
    }
}

#[test]
fn zero_mode_probe_independent() {
    if let Err(e) = common::run_suite(common::suite("zero_mode_probe_independent")) {
        panic!("{e}");
    }
}

#[test]
fn orbit_lengths_and_amplitudes() {
    if let Err(e) = common::run_suite(common::suite("orbit_lengths_and_amplitudes")) {
        panic!("{e}");
    }
}
