//! Gate unitaries, process matrices and the noise channels used to model
//! calibrated devices.

mod noise;
pub(crate) mod process;

pub use noise::{
    amplitude_damping, calibrated_gate_noise, depolarizing, phase_damping, readout_apply,
    thermal_relaxation, GateKind, KrausChannel, NoiseModel, ReadoutError,
};
pub use process::{
    apply_chi, apply_chi_adjoint, apply_process, basis_operator, chi_from_action, compose, process_from_kraus,
    ProcessMatrix, PROCESS_DIM,
};

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::qmath::{c, kron, CMatrix, C64, I, ONE, ZERO};
use crate::TOL;

/// A unitary on one or two qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct GateUnitary {
    name: String,
    matrix: CMatrix,
}

impl GateUnitary {
    /// Wraps a matrix after checking U^dag U = I to 1e-10.
    pub fn new(name: impl Into<String>, matrix: CMatrix) -> Result<Self> {
        let name = name.into();
        let d = matrix.rows();
        if !matrix.is_square() || !(d == 2 || d == 4) {
            return Err(Error::DimMismatch(format!("gate `{name}` must be 2x2 or 4x4")));
        }
        let err = matrix.adjoint().matmul(&matrix).max_abs_diff(&CMatrix::identity(d));
        if err > TOL.hermiticity {
            return Err(Error::InvalidGateParams { gate: name, reason: format!("not unitary ({err:.2e})") });
        }
        Ok(GateUnitary { name, matrix })
    }

    fn exact(name: &str, matrix: CMatrix) -> Self {
        GateUnitary { name: name.to_string(), matrix }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_qubits(&self) -> usize {
        if self.dim() == 2 { 1 } else { 2 }
    }

    pub fn adjoint(&self) -> Self {
        GateUnitary { name: format!("{}^dag", self.name), matrix: self.matrix.adjoint() }
    }

    pub fn identity() -> Self {
        Self::exact("id", CMatrix::identity(2))
    }

    pub fn x() -> Self {
        Self::exact("x", CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]))
    }

    pub fn h() -> Self {
        let h = FRAC_1_SQRT_2;
        Self::exact("h", CMatrix::from_real_rows(&[&[h, h], &[h, -h]]))
    }

    pub fn s() -> Self {
        Self::exact("s", CMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, I]]))
    }

    pub fn s_dag() -> Self {
        Self::exact("sdg", CMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -I]]))
    }

    pub fn rx(theta: f64) -> Self {
        let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        Self::exact("rx", CMatrix::from_rows(&[&[c(cs, 0.0), c(0.0, -sn)], &[c(0.0, -sn), c(cs, 0.0)]]))
    }

    pub fn ry(theta: f64) -> Self {
        let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        Self::exact("ry", CMatrix::from_real_rows(&[&[cs, -sn], &[sn, cs]]))
    }

    pub fn rz(phi: f64) -> Self {
        Self::exact("rz", CMatrix::diag_complex(&[C64::from_polar(1.0, -phi / 2.0), C64::from_polar(1.0, phi / 2.0)]))
    }

    /// The general single-qubit rotation used to tilt Bob's observables,
    /// `[[e^{-i phi/2} cos(theta/2), e^{-i phi/2} sin(theta/2)],
    ///   [-e^{i phi/2} sin(theta/2), e^{i phi/2} cos(theta/2)]]`.
    pub fn u_r(phi: f64, theta: f64) -> Self {
        let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let em = C64::from_polar(1.0, -phi / 2.0);
        let ep = C64::from_polar(1.0, phi / 2.0);
        Self::exact("ur", CMatrix::from_rows(&[&[em * cs, em * sn], &[-ep * sn, ep * cs]]))
    }

    /// diag(1, 1, 1, e^{i lambda}).
    pub fn cphase(lambda: f64) -> Self {
        Self::exact("cphase", CMatrix::diag_complex(&[ONE, ONE, ONE, C64::from_polar(1.0, lambda)]))
    }

    /// `self` on qubit `q` of a two-qubit register (qubit 0 is the first tensor factor).
    pub fn on_qubit(&self, q: usize) -> CMatrix {
        assert_eq!(self.dim(), 2);
        let id = CMatrix::identity(2);
        if q == 0 { kron(&self.matrix, &id) } else { kron(&id, &self.matrix) }
    }
}

/// Looks a gate up by name. Angles are radians.
///
/// Names: `id`, `x`, `h`, `s`, `sdg`, `rx(theta)`, `ry(theta)`, `rz(phi)`,
/// `ur(phi, theta)`, `cphase(lambda)`.
pub fn gate(name: &str, params: &[f64]) -> Result<GateUnitary> {
    let arity = |n: usize| -> Result<()> {
        if params.len() != n {
            return Err(Error::InvalidGateParams {
                gate: name.to_string(),
                reason: format!("expected {n} parameters, got {}", params.len()),
            });
        }
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidGateParams { gate: name.to_string(), reason: format!("angle {p} is not finite") });
        }
        Ok(())
    };
    let g = match name.to_ascii_lowercase().as_str() {
        "id" | "i" => {
            arity(0)?;
            GateUnitary::identity()
        }
        "x" => {
            arity(0)?;
            GateUnitary::x()
        }
        "h" => {
            arity(0)?;
            GateUnitary::h()
        }
        "s" => {
            arity(0)?;
            GateUnitary::s()
        }
        "sdg" | "sdag" => {
            arity(0)?;
            GateUnitary::s_dag()
        }
        "rx" => {
            arity(1)?;
            GateUnitary::rx(params[0])
        }
        "ry" => {
            arity(1)?;
            GateUnitary::ry(params[0])
        }
        "rz" => {
            arity(1)?;
            GateUnitary::rz(params[0])
        }
        "ur" | "u_r" => {
            arity(2)?;
            GateUnitary::u_r(params[0], params[1])
        }
        "cphase" | "cp" => {
            arity(1)?;
            GateUnitary::cphase(params[0])
        }
        _ => return Err(Error::UnknownGate(name.to_string())),
    };
    Ok(g)
}

/// `a` equals `b` up to a global phase, within `tol` entry-wise.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    let overlap = crate::qmath::frob_inner(b, a).unwrap_or(ZERO);
    if overlap.norm() < 1e-12 {
        return false;
    }
    let phase = overlap / overlap.norm();
    a.max_abs_diff(&b.scale(phase)) < tol
}
