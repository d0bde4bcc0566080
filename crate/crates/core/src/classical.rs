//! Deterministic local strategies and the linear maps from local-hidden-state
//! (LHS) and local-hidden-variable (LHV) variables to two-qubit output
//! operators, as reconstructed by state tomography.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::GateUnitary;
use crate::error::{Error, Result};
use crate::qmath::{c, frob_inner, kron, pauli, CMatrix};
use crate::TOL;

/// Pauli measurement axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_char(ch: char) -> Option<Axis> {
        match ch.to_ascii_uppercase() {
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        ['X', 'Y', 'Z'][self.index()]
    }
}

/// One of the six Pauli eigenstates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliState {
    pub axis: Axis,
    pub positive: bool,
}

impl PauliState {
    pub const X_PLUS: PauliState = PauliState { axis: Axis::X, positive: true };
    pub const X_MINUS: PauliState = PauliState { axis: Axis::X, positive: false };
    pub const Y_PLUS: PauliState = PauliState { axis: Axis::Y, positive: true };
    pub const Y_MINUS: PauliState = PauliState { axis: Axis::Y, positive: false };
    pub const Z_PLUS: PauliState = PauliState { axis: Axis::Z, positive: true };
    pub const Z_MINUS: PauliState = PauliState { axis: Axis::Z, positive: false };

    /// X+, X-, Y+, Y-, Z+, Z-.
    pub const ALL: [PauliState; 6] =
        [Self::X_PLUS, Self::X_MINUS, Self::Y_PLUS, Self::Y_MINUS, Self::Z_PLUS, Self::Z_MINUS];

    /// The four single-qubit inputs used for process tomography.
    pub const TOMOGRAPHY: [PauliState; 4] = [Self::Z_PLUS, Self::Z_MINUS, Self::X_PLUS, Self::Y_PLUS];

    /// (I + s V)/2
    pub fn density(self) -> CMatrix {
        let v = &pauli::xyz()[self.axis.index()];
        let s = if self.positive { 0.5 } else { -0.5 };
        &pauli::id().scale_re(0.5) + &v.scale_re(s)
    }
}

impl fmt::Display for PauliState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.axis.as_char(), if self.positive { '+' } else { '-' })
    }
}

impl FromStr for PauliState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.trim().chars();
        let axis = chars.next().and_then(Axis::from_char);
        let sign = match chars.as_str() {
            "+" => Some(true),
            "-" | "\u{2212}" => Some(false),
            _ => None,
        };
        match (axis, sign) {
            (Some(axis), Some(positive)) => Ok(PauliState { axis, positive }),
            _ => Err(Error::schema("input", format!("bad state token `{s}`"))),
        }
    }
}

/// The 36 product inputs, index `6 * alice + bob` over [`PauliState::ALL`].
pub fn steering_inputs() -> Vec<[PauliState; 2]> {
    PauliState::ALL.iter().flat_map(|&a| PauliState::ALL.iter().map(move |&b| [a, b])).collect()
}

pub fn input_density(input: [PauliState; 2]) -> CMatrix {
    kron(&input[0].density(), &input[1].density())
}

/// Three +-1-valued qubit observables, orthonormal under `tr(A B)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementTriad {
    observables: [CMatrix; 3],
}

impl MeasurementTriad {
    pub fn new(observables: [CMatrix; 3]) -> Result<Self> {
        for (k, v) in observables.iter().enumerate() {
            if v.rows() != 2 || v.cols() != 2 {
                return Err(Error::TriadInvalid(format!("observable {k} is not 2x2")));
            }
            if v.hermiticity_error() > TOL.hermiticity {
                return Err(Error::TriadInvalid(format!("observable {k} is not Hermitian")));
            }
            if v.matmul(v).max_abs_diff(&pauli::id()) > TOL.hermiticity {
                return Err(Error::TriadInvalid(format!("observable {k} does not square to I")));
            }
        }
        for k in 0..3 {
            for l in 0..3 {
                let g = frob_inner(&observables[k], &observables[l])?.re / 2.0;
                let want = if k == l { 1.0 } else { 0.0 };
                if (g - want).abs() > TOL.hermiticity {
                    return Err(Error::TriadInvalid(format!("observables {k} and {l} are not orthonormal")));
                }
            }
        }
        Ok(MeasurementTriad { observables })
    }

    pub fn pauli() -> Self {
        MeasurementTriad { observables: pauli::xyz() }
    }

    /// `U V U^dag` for each Pauli `V`.
    pub fn rotated(u: &CMatrix) -> Result<Self> {
        let [x, y, z] = pauli::xyz();
        Self::new([x.conjugate_by(u), y.conjugate_by(u), z.conjugate_by(u)])
    }

    /// Bob's triad for the Bell test, rotated by `U_R(phi, theta)`.
    pub fn bell_bob(phi: f64, theta: f64) -> Self {
        Self::rotated(GateUnitary::u_r(phi, theta).matrix()).expect("unitary rotation of the Pauli triad")
    }

    pub fn observables(&self) -> &[CMatrix; 3] {
        &self.observables
    }

    pub fn observable(&self, k: usize) -> &CMatrix {
        &self.observables[k]
    }

    /// Eigenprojector `(I +- V_k)/2`.
    pub fn projector(&self, k: usize, positive: bool) -> CMatrix {
        let s = if positive { 0.5 } else { -0.5 };
        &pauli::id().scale_re(0.5) + &self.observables[k].scale_re(s)
    }

    /// `(I + sum_k v_k V_k)/2`: the state tomography reconstructs from the
    /// deterministic statistics of `s`. Not PSD.
    pub fn reconstruct(&self, s: DeterministicStrategy) -> CMatrix {
        let mut m = pauli::id();
        for k in 0..3 {
            m = &m + &self.observables[k].scale_re(s.outcomes[k] as f64);
        }
        m.scale_re(0.5)
    }
}

/// Fixed +-1 answers to the three settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    pub outcomes: [i8; 3],
}

impl DeterministicStrategy {
    /// Strategy `mu` in lexicographic order, `+1` before `-1`.
    pub fn from_index(mu: usize) -> Self {
        assert!(mu < 8);
        let bit = |k: usize| if (mu >> (2 - k)) & 1 == 0 { 1 } else { -1 };
        DeterministicStrategy { outcomes: [bit(0), bit(1), bit(2)] }
    }

    /// Outcome for setting `k` in `1..=3`.
    pub fn response(&self, k: usize) -> Result<i8> {
        deterministic_response(*self, k)
    }
}

pub fn deterministic_response(s: DeterministicStrategy, k: usize) -> Result<i8> {
    if !(1..=3).contains(&k) {
        return Err(Error::IndexOutOfRange(k));
    }
    Ok(s.outcomes[k - 1])
}

/// 8 single-party strategies (`parties = 1`) or the 64 ordered pairs
/// (`parties = 2`), each entry holding one strategy per party.
pub fn enumerate_strategies(parties: usize) -> Result<Vec<Vec<DeterministicStrategy>>> {
    let one: Vec<DeterministicStrategy> = (0..8).map(DeterministicStrategy::from_index).collect();
    match parties {
        1 => Ok(one.into_iter().map(|s| vec![s]).collect()),
        2 => Ok(one.iter().flat_map(|&a| one.iter().map(move |&b| vec![a, b])).collect()),
        _ => Err(Error::InvalidConfig(format!("strategies for {parties} parties"))),
    }
}

pub const NUM_INPUTS: usize = 36;
pub const NUM_STRATEGIES: usize = 8;
pub const NUM_PAIRS: usize = 64;

/// Bob operators `sigma_{mu|input}`, 8 per input.
#[derive(Clone, Debug, PartialEq)]
pub struct LhsVariables {
    pub sigma: Vec<[CMatrix; NUM_STRATEGIES]>,
}

impl LhsVariables {
    pub fn zeros() -> Self {
        let z = || std::array::from_fn(|_| CMatrix::zeros(2, 2));
        LhsVariables { sigma: (0..NUM_INPUTS).map(|_| z()).collect() }
    }

    /// Every operator PSD to `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.sigma.iter().flatten().all(|s| crate::qmath::Hermitian::symmetrized(s).is_psd(tol))
    }
}

/// Weights `P(zeta, eta)`, 64 per input, pair index `8 zeta + eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct LhvVariables {
    pub weights: Vec<[f64; NUM_PAIRS]>,
}

impl LhvVariables {
    pub fn zeros() -> Self {
        LhvVariables { weights: vec![[0.0; NUM_PAIRS]; NUM_INPUTS] }
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.weights.iter().flatten().all(|&w| w >= -tol)
    }
}

/// `sigma -> sum_mu A_mu (x) sigma_mu` per input.
#[derive(Clone, Debug)]
pub struct LhsMap {
    alice: [CMatrix; NUM_STRATEGIES],
}

pub fn lhs_output_map(alice: &MeasurementTriad) -> LhsMap {
    LhsMap { alice: std::array::from_fn(|mu| alice.reconstruct(DeterministicStrategy::from_index(mu))) }
}

impl LhsMap {
    pub fn alice_operators(&self) -> &[CMatrix; NUM_STRATEGIES] {
        &self.alice
    }

    pub fn output(&self, sigma: &[CMatrix; NUM_STRATEGIES]) -> CMatrix {
        let mut out = CMatrix::zeros(4, 4);
        for (a, s) in self.alice.iter().zip(sigma) {
            out += &kron(a, s);
        }
        out
    }

    pub fn apply(&self, vars: &LhsVariables) -> Vec<CMatrix> {
        vars.sigma.iter().map(|s| self.output(s)).collect()
    }
}

/// `P -> sum_{zeta, eta} P(zeta, eta) A_zeta (x) B_eta` per input.
#[derive(Clone, Debug)]
pub struct LhvMap {
    products: Vec<CMatrix>,
}

pub fn lhv_output_map(alice: &MeasurementTriad, bob: &MeasurementTriad) -> LhvMap {
    let a: Vec<CMatrix> = (0..8).map(|z| alice.reconstruct(DeterministicStrategy::from_index(z))).collect();
    let b: Vec<CMatrix> = (0..8).map(|e| bob.reconstruct(DeterministicStrategy::from_index(e))).collect();
    LhvMap { products: a.iter().flat_map(|az| b.iter().map(move |be| kron(az, be))).collect() }
}

impl LhvMap {
    /// `A_zeta (x) B_eta` at index `8 zeta + eta`.
    pub fn products(&self) -> &[CMatrix] {
        &self.products
    }

    pub fn output(&self, weights: &[f64; NUM_PAIRS]) -> CMatrix {
        let mut out = CMatrix::zeros(4, 4);
        for (p, &w) in self.products.iter().zip(weights) {
            if w != 0.0 {
                out += &p.scale(c(w, 0.0));
            }
        }
        out
    }

    pub fn apply(&self, vars: &LhvVariables) -> Vec<CMatrix> {
        vars.weights.iter().map(|w| self.output(w)).collect()
    }
}
