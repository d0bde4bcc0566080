//! Two-qubit process matrices in the operator basis
//! `E_q = |q1 q2><q3 q4|`, `q = q1 + 2 q2 + 4 q3 + 8 q4`.
//!
//! Convention: `tr chi = 1` for trace-preserving processes and
//! `rho_out = 4 * sum_{q,r} chi_qr E_q rho E_r^dag`. With this scaling two
//! identical unitary processes have `tr(chi_a chi_b) = 1`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::noise::KrausChannel;
use super::GateUnitary;
use crate::error::{Error, Result};
use crate::qmath::{c, CMatrix, Hermitian, C64, ZERO};
use crate::TOL;

pub const PROCESS_DIM: usize = 16;

/// Row of the 4x4 matrix unit `E_q` (the ket `|q1 q2>`).
#[inline]
pub(crate) fn out_idx(q: usize) -> usize {
    2 * (q & 1) + ((q >> 1) & 1)
}

/// Column of `E_q` (the bra `<q3 q4|`).
#[inline]
pub(crate) fn in_idx(q: usize) -> usize {
    2 * ((q >> 2) & 1) + ((q >> 3) & 1)
}

/// The 4x4 matrix unit `E_q`, `q` in `0..16`.
pub fn basis_operator(q: usize) -> Result<CMatrix> {
    if q >= PROCESS_DIM {
        return Err(Error::IndexOutOfRange(q));
    }
    let mut e = CMatrix::zeros(4, 4);
    e[(out_idx(q), in_idx(q))] = c(1.0, 0.0);
    Ok(e)
}

/// `4 * sum chi_st E_s rho E_t^dag` for any 16x16 `chi` and 4x4 `rho`.
///
/// `E_s rho E_t^dag = rho[in(s), in(t)] |out(s)><out(t)|`, so the double sum
/// collapses to one pass over `chi`.
pub fn apply_chi(chi: &CMatrix, rho: &CMatrix) -> CMatrix {
    assert_eq!((chi.rows(), chi.cols()), (PROCESS_DIM, PROCESS_DIM));
    assert_eq!((rho.rows(), rho.cols()), (4, 4));
    let mut out = CMatrix::zeros(4, 4);
    for s in 0..PROCESS_DIM {
        let (os, is) = (out_idx(s), in_idx(s));
        for t in 0..PROCESS_DIM {
            let x = chi[(s, t)];
            if x == ZERO {
                continue;
            }
            out[(os, out_idx(t))] += x * rho[(is, in_idx(t))] * 4.0;
        }
    }
    out
}

/// Adjoint of `chi -> apply_chi(chi, rho)` with respect to the Frobenius
/// inner product: `tr(W^dag apply_chi(chi, rho)) = tr(adjoint^dag chi)`.
pub fn apply_chi_adjoint(w: &CMatrix, rho: &CMatrix) -> CMatrix {
    CMatrix::from_fn(PROCESS_DIM, PROCESS_DIM, |s, t| {
        w[(out_idx(s), out_idx(t))] * rho[(in_idx(s), in_idx(t))].conj() * 4.0
    })
}

/// chi of a linear map on 4x4 matrices, read off its action on the matrix
/// units `|a><b|`.
pub fn chi_from_action(mut f: impl FnMut(&CMatrix) -> CMatrix) -> CMatrix {
    let mut images = Vec::with_capacity(16);
    for a in 0..4 {
        for b in 0..4 {
            let mut unit = CMatrix::zeros(4, 4);
            unit[(a, b)] = c(1.0, 0.0);
            images.push(f(&unit));
        }
    }
    CMatrix::from_fn(PROCESS_DIM, PROCESS_DIM, |s, t| {
        images[4 * in_idx(s) + in_idx(t)][(out_idx(s), out_idx(t))] * 0.25
    })
}

/// A completely positive two-qubit process.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    chi: Hermitian,
    trace_convention: f64,
}

impl ProcessMatrix {
    /// Validates shape, Hermiticity (1e-10), PSD and trace (both 1e-8).
    pub fn new(chi: CMatrix, trace_convention: f64) -> Result<Self> {
        Self::validated(chi, trace_convention, TOL.hermiticity)
    }

    fn validated(chi: CMatrix, trace_convention: f64, herm_tol: f64) -> Result<Self> {
        if chi.rows() != PROCESS_DIM || chi.cols() != PROCESS_DIM {
            return Err(Error::DimMismatch(format!(
                "process matrix must be 16x16, got {}x{}",
                chi.rows(),
                chi.cols()
            )));
        }
        if !trace_convention.is_finite() || trace_convention <= 0.0 {
            return Err(Error::NonPhysicalInput(format!("trace convention {trace_convention}")));
        }
        let chi = Hermitian::with_tolerance(chi, herm_tol)?;
        let min = chi.min_eigenvalue();
        if min < -TOL.psd {
            return Err(Error::NonPhysicalInput(format!("not CP: min eigenvalue {min:.3e}")));
        }
        let tr = chi.trace();
        if (tr - trace_convention).abs() > TOL.psd {
            return Err(Error::NonPhysicalInput(format!(
                "trace {tr} differs from declared {trace_convention}"
            )));
        }
        Ok(ProcessMatrix { chi, trace_convention })
    }

    /// Wraps a CP map whose trace is whatever it is (used for the feasible
    /// points of the quantifier programs).
    pub fn with_own_trace(chi: CMatrix) -> Result<Self> {
        let tr = chi.trace().re;
        Self::new(chi, tr)
    }

    pub fn identity() -> Self {
        Self::from_unitary(&CMatrix::identity(4))
    }

    /// Pure process `k k^dag / 4` of a 4x4 unitary.
    pub fn from_unitary(u: &CMatrix) -> Self {
        let k = kraus_coefficients(u);
        let chi = CMatrix::outer(&k, &k).scale_re(0.25);
        ProcessMatrix { chi: Hermitian::symmetrized(&chi), trace_convention: 1.0 }
    }

    pub fn from_gate(g: &GateUnitary) -> Self {
        assert_eq!(g.dim(), 4, "process matrices describe two-qubit gates");
        Self::from_unitary(g.matrix())
    }

    /// chi of an arbitrary linear map; must come out CP.
    pub fn from_action(f: impl FnMut(&CMatrix) -> CMatrix) -> Result<Self> {
        Self::with_own_trace(chi_from_action(f))
    }

    pub fn chi(&self) -> &Hermitian {
        &self.chi
    }

    pub fn matrix(&self) -> &CMatrix {
        self.chi.matrix()
    }

    pub fn trace_convention(&self) -> f64 {
        self.trace_convention
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        apply_chi(self.chi.matrix(), rho)
    }

    /// tr(chi_a chi_b) scaled by both trace conventions.
    pub fn fidelity(&self, other: &ProcessMatrix) -> f64 {
        let overlap = crate::qmath::frob_inner(self.matrix(), other.matrix()).expect("16x16").re;
        overlap / (self.trace_convention * other.trace_convention)
    }

    /// `p * self + (1 - p) * other`.
    pub fn mix(&self, other: &ProcessMatrix, p: f64) -> Result<Self> {
        let m = &self.matrix().scale_re(p) + &other.matrix().scale_re(1.0 - p);
        Self::with_own_trace(m)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let m = self.matrix();
        let chi: Vec<Vec<[f64; 2]>> =
            (0..PROCESS_DIM).map(|i| (0..PROCESS_DIM).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
        serde_json::to_value(ProcessJson { chi, trace_convention: self.trace_convention }).expect("plain data")
    }

    /// Parses the `{chi: [[[re, im], ...], ...], trace_convention}` layout.
    /// Hermiticity is checked to 1e-8 before symmetrizing.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: ProcessJson = serde_json::from_value(value.clone())
            .map_err(|e| Error::schema("process", e.to_string()))?;
        if raw.chi.len() != PROCESS_DIM || raw.chi.iter().any(|r| r.len() != PROCESS_DIM) {
            return Err(Error::schema("process.chi", "expected 16 rows of 16 [re, im] pairs"));
        }
        let data: Vec<C64> = raw.chi.iter().flatten().map(|&[re, im]| c(re, im)).collect();
        let chi = CMatrix::from_vec(PROCESS_DIM, PROCESS_DIM, data)?;
        Self::validated(chi, raw.trace_convention, TOL.file_hermiticity)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct ProcessJson {
    chi: Vec<Vec<[f64; 2]>>,
    trace_convention: f64,
}

/// Coefficients `k_q` of `K = sum_q k_q E_q`.
fn kraus_coefficients(k: &CMatrix) -> Vec<C64> {
    (0..PROCESS_DIM).map(|q| k[(out_idx(q), in_idx(q))]).collect()
}

/// `chi = 1/4 sum_K k k^dag` for a two-qubit Kraus set.
pub fn process_from_kraus(ch: &KrausChannel) -> Result<ProcessMatrix> {
    if ch.dim() != 4 {
        return Err(Error::DimMismatch(format!("expected a two-qubit channel, got dimension {}", ch.dim())));
    }
    let mut chi = CMatrix::zeros(PROCESS_DIM, PROCESS_DIM);
    for k in ch.operators() {
        let v = kraus_coefficients(k);
        chi += &CMatrix::outer(&v, &v).scale_re(0.25);
    }
    ProcessMatrix::with_own_trace(chi)
}

pub fn apply_process(chi: &ProcessMatrix, rho: &CMatrix) -> CMatrix {
    chi.apply(rho)
}

/// The process `second . first`.
pub fn compose(second: &ProcessMatrix, first: &ProcessMatrix) -> ProcessMatrix {
    let chi = chi_from_action(|rho| second.apply(&first.apply(rho)));
    let tr = chi.trace().re;
    // A composition of CP maps is CP; only round-off needs clearing.
    ProcessMatrix { chi: Hermitian::symmetrized(&chi), trace_convention: tr }
}
