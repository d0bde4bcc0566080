//! Inputs shared by the benchmarks, built once outside the timed loops.

use std::f64::consts::PI;

use qcgen_core::classical::PauliState;
use qcgen_core::experiments::ideal_cphase;
use qcgen_core::simulator::{build_circuits, exact_tables};
use qcgen_core::{Circuit, MeasurementTriad, NoiseModel, ProbabilityTable, ProcessMatrix, TestKind};

pub type Tables = Vec<([PauliState; 2], ProbabilityTable)>;

/// Exact tomography tables for CPHASE(pi) under the santiago calibration.
pub fn noisy_tables(test: TestKind) -> Tables {
    exact_tables(test, PI, Some(&NoiseModel::santiago())).expect("preset model is valid")
}

pub fn bob_triad(test: TestKind) -> MeasurementTriad {
    match test.bob_rotation() {
        Some((phi, theta)) => MeasurementTriad::bell_bob(phi, theta),
        None => MeasurementTriad::pauli(),
    }
}

pub fn circuits(test: TestKind) -> Vec<Circuit> {
    build_circuits(test, PI).expect("finite lambda")
}

/// Processes spanning the quantifier landscape: zero, interior and maximal.
pub fn processes() -> Vec<(&'static str, ProcessMatrix)> {
    vec![("identity", ProcessMatrix::identity()), ("cphase_half_pi", ideal_cphase(PI / 2.0)), ("cphase_pi", ideal_cphase(PI))]
}
