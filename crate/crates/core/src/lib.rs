//! Quantifying how well a two-qubit process *creates* EPR steering and Bell
//! nonlocality.
//!
//! The pipeline runs tomography circuits (simulated with an optional device
//! noise model, or ingested from counts files), reconstructs output states
//! and the 16x16 process matrix, and then solves semidefinite programs for the
//! generating composition, generating robustness and classical-mimicry
//! fidelity bounds against local-hidden-state (steering) and
//! local-hidden-variable (Bell) models.
//!
//! Module map:
//! - [`qmath`]: dense complex linear algebra.
//! - [`channels`]: gates, process matrices, noise channels and noise models.
//! - [`simulator`]: tomography circuits, exact probabilities, seeded counts.
//! - [`tomography`]: state and process reconstruction.
//! - [`classical`]: deterministic strategies and LHS/LHV output maps.
//! - [`quantifiers`]: conic programs and the six quantifiers.
//! - [`experiments`]: sweeps, counts ingestion, CSV/JSON export.

// Links the system OpenBLAS/LAPACK used by the PSD cone of the SDP solver.
extern crate openblas_src;

pub mod channels;
pub mod classical;
pub mod error;
pub mod experiments;
pub mod qmath;
pub mod quantifiers;
pub mod simulator;
pub mod tomography;

pub use channels::{
    calibrated_gate_noise, compose, gate, process_from_kraus, GateKind, GateUnitary,
    KrausChannel, NoiseModel, ProcessMatrix, ReadoutError,
};
pub use classical::{DeterministicStrategy, LhsVariables, LhvVariables, MeasurementTriad};
pub use error::{Error, Result};
pub use experiments::{ResultRow, SweepConfig};
pub use qmath::{CMatrix, EigenDecomposition, Hermitian, C64};
pub use quantifiers::{
    ConicProgram, CorrelationKind, MeasureKind, QuantifierReport, SdpSolution, SolveStatus,
};
pub use simulator::{Circuit, CountsRecord, TestKind, TomographyDataset};
pub use tomography::{DensityMatrix, ProbabilityTable, QptResult};

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Max |A - A^dag| entry accepted as Hermitian.
    pub hermiticity: f64,
    /// Slack on PSD and trace checks of states and processes.
    pub psd: f64,
    /// Hermiticity slack for process matrices read from files.
    pub file_hermiticity: f64,
    /// Max duality gap and constraint violation for an optimal SDP status.
    pub sdp: f64,
    /// Optima within this distance below zero are reported as zero.
    pub clamp: f64,
}

pub const TOL: Tolerances = Tolerances {
    hermiticity: 1e-10,
    psd: 1e-8,
    file_hermiticity: 1e-8,
    sdp: 1e-7,
    clamp: 1e-6,
};
