//! State tomography from Pauli-setting statistics and two-qubit process
//! tomography from the outputs of the 16 inputs `{Z+, Z-, X+, Y+}^2`.

use std::collections::BTreeMap;

use crate::channels::process::{in_idx, out_idx};
use crate::channels::{ProcessMatrix, PROCESS_DIM};
use crate::classical::{Axis, MeasurementTriad, PauliState};
use crate::error::{Error, Result};
use crate::qmath::{c, kron, nearest_psd, pauli, CMatrix, Hermitian, C64};

/// Joint outcome distributions for the 9 setting pairs of one input.
///
/// `joint[3k + l]` is over `(++, +-, -+, --)` for Alice's setting `k` and
/// Bob's setting `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    joint: [[f64; 4]; 9],
}

impl ProbabilityTable {
    pub fn new(joint: [[f64; 4]; 9]) -> Result<Self> {
        for (i, p) in joint.iter().enumerate() {
            if p.iter().any(|&x| !x.is_finite() || x < -1e-12) {
                return Err(Error::InvalidProbability { what: format!("setting {i}"), value: p.iter().cloned().fold(f64::NAN, f64::min) });
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidProbability { what: format!("setting {i} total"), value: total });
            }
        }
        Ok(ProbabilityTable { joint })
    }

    /// Builds the table from a map keyed by `[alice axis, bob axis]`.
    pub fn from_grid(grid: &BTreeMap<[Axis; 2], [f64; 4]>) -> Result<Self> {
        let mut joint = [[0.0; 4]; 9];
        for a in Axis::ALL {
            for b in Axis::ALL {
                joint[3 * a.index() + b.index()] = *grid.get(&[a, b]).ok_or_else(|| {
                    Error::IncompleteGrid(format!("setting {}{} missing", a.as_char(), b.as_char()))
                })?;
            }
        }
        Self::new(joint)
    }

    pub fn joint(&self, k: usize, l: usize) -> [f64; 4] {
        self.joint[3 * k + l]
    }

    /// `<V_k (x) V_l>`.
    pub fn correlation(&self, k: usize, l: usize) -> f64 {
        let p = self.joint(k, l);
        p[0] - p[1] - p[2] + p[3]
    }

    /// Alice's `P(v_k = +1)`, averaged over Bob's three settings.
    pub fn alice_marginal(&self, k: usize) -> f64 {
        (0..3).map(|l| self.joint(k, l)[0] + self.joint(k, l)[1]).sum::<f64>() / 3.0
    }

    /// Bob's `P(v_l = +1)`, averaged over Alice's three settings.
    pub fn bob_marginal(&self, l: usize) -> f64 {
        (0..3).map(|k| self.joint(k, l)[0] + self.joint(k, l)[2]).sum::<f64>() / 3.0
    }

    /// Exact statistics of `rho` measured in the two triads.
    pub fn from_state(rho: &CMatrix, alice: &MeasurementTriad, bob: &MeasurementTriad) -> Result<Self> {
        let mut joint = [[0.0; 4]; 9];
        for k in 0..3 {
            for l in 0..3 {
                for (o, (sa, sb)) in [(true, true), (true, false), (false, true), (false, false)].into_iter().enumerate() {
                    let proj = kron(&alice.projector(k, sa), &bob.projector(l, sb));
                    joint[3 * k + l][o] = rho.matmul(&proj).trace().re;
                }
            }
        }
        Self::new(joint)
    }
}

/// A reconstructed two-qubit state. Hermitian with unit trace; PSD is not
/// guaranteed for finite-shot data.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Hermitian);

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self> {
        Ok(DensityMatrix(Hermitian::new(rho)?))
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.min_eigenvalue()
    }
}

/// Linear-inversion state tomography:
/// `rho = 1/4 (I + sum_kl <V_k V_l> V_k (x) W_l + sum_k <V_k> V_k (x) I + sum_l <W_l> I (x) W_l)`.
pub fn qst(table: &ProbabilityTable, alice: &MeasurementTriad, bob: &MeasurementTriad) -> DensityMatrix {
    let id = pauli::id();
    let mut rho = CMatrix::identity(4);
    for k in 0..3 {
        let a = 2.0 * table.alice_marginal(k) - 1.0;
        rho += &kron(alice.observable(k), &id).scale_re(a);
        for l in 0..3 {
            rho += &kron(alice.observable(k), bob.observable(l)).scale_re(table.correlation(k, l));
        }
    }
    for l in 0..3 {
        let b = 2.0 * table.bob_marginal(l) - 1.0;
        rho += &kron(&id, bob.observable(l)).scale_re(b);
    }
    DensityMatrix(Hermitian::symmetrized(&rho.scale_re(0.25)))
}

/// Coefficients of the matrix unit `|a><b|` over the input projectors
/// `P(Z+), P(Z-), P(X+), P(Y+)`.
fn unit_expansion(a: usize, b: usize) -> [C64; 4] {
    let h = 0.5;
    match (a, b) {
        (0, 0) => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        (1, 1) => [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        // |0><1| = P(X+) + i P(Y+) - (1+i)/2 (P(Z+) + P(Z-))
        (0, 1) => [c(-h, -h), c(-h, -h), c(1.0, 0.0), c(0.0, 1.0)],
        // |1><0| = P(X+) - i P(Y+) - (1-i)/2 (P(Z+) + P(Z-))
        (1, 0) => [c(-h, h), c(-h, h), c(1.0, 0.0), c(0.0, -1.0)],
        _ => unreachable!("qubit indices are 0 or 1"),
    }
}

/// Process tomography: rebuilds the action on every two-qubit matrix unit
/// from the 16 measured outputs by linearity, then reads off
/// `chi[s][t] = 1/4 Phi(|in(s)><in(t)|)[out(s), out(t)]`.
pub fn qpt(outputs: &[([PauliState; 2], DensityMatrix)]) -> Result<Hermitian> {
    let lookup: BTreeMap<[PauliState; 2], &CMatrix> = outputs.iter().map(|(k, v)| (*k, v.matrix())).collect();
    let t = PauliState::TOMOGRAPHY;
    let mut out = [[None::<&CMatrix>; 4]; 4];
    for (i, &a) in t.iter().enumerate() {
        for (j, &b) in t.iter().enumerate() {
            out[i][j] = Some(
                lookup.get(&[a, b]).copied().ok_or_else(|| Error::MissingInput(format!("{a} {b}")))?,
            );
        }
    }
    // images[4a + b] = Phi(|a><b|), with a = 2 a1 + a2 (qubit 0 first)
    let mut images = Vec::with_capacity(16);
    for a in 0..4 {
        for b in 0..4 {
            let ca = unit_expansion(a >> 1, b >> 1);
            let cb = unit_expansion(a & 1, b & 1);
            let mut img = CMatrix::zeros(4, 4);
            for i in 0..4 {
                for j in 0..4 {
                    let w = ca[i] * cb[j];
                    if w != c(0.0, 0.0) {
                        img += &out[i][j].expect("filled above").scale(w);
                    }
                }
            }
            images.push(img);
        }
    }
    let chi = CMatrix::from_fn(PROCESS_DIM, PROCESS_DIM, |s, t| {
        images[4 * in_idx(s) + in_idx(t)][(out_idx(s), out_idx(t))] * 0.25
    });
    Ok(Hermitian::symmetrized(&chi))
}

/// Raw and physical process estimates.
#[derive(Clone, Debug)]
pub struct QptResult {
    pub chi_raw: Hermitian,
    pub chi_phys: ProcessMatrix,
    /// Frobenius distance between `chi_raw` and `chi_phys`.
    pub ml_distance: f64,
    /// How `chi_phys` was obtained from `chi_raw`.
    pub method: &'static str,
}

/// Clips negative eigenvalues of `chi_raw` and renormalizes to trace 1.
pub fn physicalize(chi_raw: &Hermitian) -> Result<QptResult> {
    if chi_raw.dim() != PROCESS_DIM {
        return Err(Error::DimMismatch(format!("process matrix must be 16x16, got {}", chi_raw.dim())));
    }
    let clipped = nearest_psd(chi_raw);
    let tr = clipped.trace();
    if tr < 1e-12 {
        return Err(Error::ZeroTrace(tr));
    }
    let phys = clipped.matrix().scale_re(1.0 / tr);
    let ml_distance = (chi_raw.matrix() - &phys).frobenius_norm();
    Ok(QptResult {
        chi_raw: chi_raw.clone(),
        chi_phys: ProcessMatrix::new(phys, 1.0)?,
        ml_distance,
        method: "eigenvalue clipping + trace renormalization",
    })
}

/// `tr(chi_a chi_b)` for trace-1 processes.
pub fn process_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> f64 {
    a.fidelity(b)
}

/// QST on every table, QPT, then physicalization. Alice always measures the
/// Pauli triad; `bob` is Pauli for steering and the rotated triad for Bell.
pub fn reconstruct_process(
    tables: &[([PauliState; 2], ProbabilityTable)],
    bob: &MeasurementTriad,
) -> Result<QptResult> {
    let alice = MeasurementTriad::pauli();
    let outputs: Vec<_> = tables.iter().map(|(input, t)| (*input, qst(t, &alice, bob))).collect();
    physicalize(&qpt(&outputs)?)
}
