//! Composition, robustness and fidelity quantifiers for steering and Bell
//! generation.
//!
//! Every program optimizes over an unnormalized process `chi~` (16x16 PSD)
//! that is tied to a classical model through the channel action: for each of
//! the 36 product Pauli inputs, `apply(chi~, rho_k)` must equal the LHS (or
//! LHV) output assembled from that input's classical variables. The
//! identity-decomposition consistency of the outputs then holds by linearity
//! and is only re-checked on the returned witness.

mod sdp;

use std::sync::OnceLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use sdp::{
    solve, ConeKind, ConicProgram, HermitianExpr, HermitianVar, LinExpr, SdpSolution, SolveStatus,
    VariableBlock,
};

use crate::channels::{apply_chi, ProcessMatrix, PROCESS_DIM};
use crate::classical::{
    input_density, lhs_output_map, lhv_output_map, steering_inputs, LhsVariables, LhvVariables,
    MeasurementTriad, NUM_INPUTS, NUM_PAIRS, NUM_STRATEGIES,
};
use crate::error::{Error, Result};
use crate::qmath::{eigh, from_hvec, hvec, kron, pauli, CMatrix, Hermitian};
use crate::simulator::BELL_ROTATION;
use crate::TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Steering,
    Bell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Composition,
    Robustness,
    Fidelity,
}

impl CorrelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationKind::Steering => "steering",
            CorrelationKind::Bell => "bell",
        }
    }

    /// Bob's measurement triad in the classical model.
    pub fn bob_triad(self) -> MeasurementTriad {
        match self {
            CorrelationKind::Steering => MeasurementTriad::pauli(),
            CorrelationKind::Bell => MeasurementTriad::bell_bob(BELL_ROTATION.0, BELL_ROTATION.1),
        }
    }

    /// Classical variables per input: 8 Bloch-form `sigma` blocks of 4 reals,
    /// or 64 strategy-pair weights.
    fn vars_per_input(self) -> usize {
        match self {
            CorrelationKind::Steering => NUM_STRATEGIES * 4,
            CorrelationKind::Bell => NUM_PAIRS,
        }
    }
}

impl MeasureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasureKind::Composition => "composition",
            MeasureKind::Robustness => "robustness",
            MeasureKind::Fidelity => "fidelity",
        }
    }
}

/// `hvec(apply(E_m, rho_k))` for every hvec basis element `E_m` of the
/// process space: `ACTION[k][r * 256 + m]`.
fn action_coefficients() -> &'static [Vec<f64>] {
    static CACHE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let nn = PROCESS_DIM * PROCESS_DIM;
        let rhos: Vec<CMatrix> = steering_inputs().into_iter().map(input_density).collect();
        let mut out = vec![vec![0.0; 16 * nn]; NUM_INPUTS];
        let mut e = vec![0.0; nn];
        for m in 0..nn {
            e[m] = 1.0;
            let basis = from_hvec(PROCESS_DIM, &e);
            e[m] = 0.0;
            for (k, rho) in rhos.iter().enumerate() {
                for (r, v) in hvec(&apply_chi(&basis, rho)).into_iter().enumerate() {
                    out[k][r * nn + m] = v;
                }
            }
        }
        out
    })
}

/// `hvec` of the output contributed by each classical variable of one input.
fn classical_columns(kind: CorrelationKind) -> Vec<Vec<f64>> {
    match kind {
        CorrelationKind::Steering => {
            let map = lhs_output_map(&MeasurementTriad::pauli());
            let half_paulis = [pauli::id(), pauli::x(), pauli::y(), pauli::z()].map(|p| p.scale_re(0.5));
            map.alice_operators()
                .iter()
                .flat_map(|a| half_paulis.iter().map(move |p| hvec(&kron(a, p))))
                .collect()
        }
        CorrelationKind::Bell => {
            let map = lhv_output_map(&MeasurementTriad::pauli(), &kind.bob_triad());
            map.products().iter().map(hvec).collect()
        }
    }
}

/// Classical variables of a solved program.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassicalWitness {
    Lhs(LhsVariables),
    Lhv(LhvVariables),
}

impl ClassicalWitness {
    /// Output operator of every input under the classical model.
    pub fn outputs(&self) -> Vec<CMatrix> {
        match self {
            ClassicalWitness::Lhs(v) => lhs_output_map(&MeasurementTriad::pauli()).apply(v),
            ClassicalWitness::Lhv(v) => {
                let bob = CorrelationKind::Bell.bob_triad();
                lhv_output_map(&MeasurementTriad::pauli(), &bob).apply(v)
            }
        }
    }

    fn min_slack(&self) -> f64 {
        match self {
            ClassicalWitness::Lhs(v) => v
                .sigma
                .iter()
                .flatten()
                .map(|s| Hermitian::symmetrized(s).min_eigenvalue())
                .fold(f64::INFINITY, f64::min),
            ClassicalWitness::Lhv(v) => v.weights.iter().flatten().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Where a classical model lives inside a program.
#[derive(Clone, Debug)]
pub struct ClassicalBlock {
    pub kind: CorrelationKind,
    pub offset: usize,
}

impl ClassicalBlock {
    pub fn witness(&self, x: &[f64]) -> ClassicalWitness {
        let per = self.kind.vars_per_input();
        let at = |k: usize, j: usize| x[self.offset + k * per + j];
        match self.kind {
            CorrelationKind::Steering => {
                let paulis = [pauli::id(), pauli::x(), pauli::y(), pauli::z()];
                let sigma = (0..NUM_INPUTS)
                    .map(|k| {
                        std::array::from_fn(|mu| {
                            let mut s = CMatrix::zeros(2, 2);
                            for (q, p) in paulis.iter().enumerate() {
                                s += &p.scale_re(0.5 * at(k, 4 * mu + q));
                            }
                            s
                        })
                    })
                    .collect();
                ClassicalWitness::Lhs(LhsVariables { sigma })
            }
            CorrelationKind::Bell => ClassicalWitness::Lhv(LhvVariables {
                weights: (0..NUM_INPUTS).map(|k| std::array::from_fn(|p| at(k, p))).collect(),
            }),
        }
    }
}

/// Eigenvalues of a trace-1 reference at or below this are treated as zero
/// when restricting the composition program to the reference's face.
const FACE_TOL: f64 = 1e-9;

/// How `chi~` is expressed through program variables: either directly as a
/// 16x16 Hermitian variable, or as `V Y V^dag` for an isometry `V` spanning a
/// face of the PSD cone.
#[derive(Clone, Debug)]
pub struct ProcessVariable {
    pub var: HermitianVar,
    face: Option<CMatrix>,
    /// `hvec(V E_b V^dag)` per basis element `E_b` of `Y`, row `m` column `b`.
    transform: Vec<f64>,
}

impl ProcessVariable {
    pub fn direct(prog: &mut ConicProgram) -> Self {
        ProcessVariable { var: prog.add_hermitian("chi", PROCESS_DIM), face: None, transform: Vec::new() }
    }

    pub fn on_face(prog: &mut ConicProgram, v: CMatrix) -> Self {
        let r = v.cols();
        let var = prog.add_hermitian("chi_face", r);
        let rr = r * r;
        let mut transform = vec![0.0; PROCESS_DIM * PROCESS_DIM * rr];
        let mut e = vec![0.0; rr];
        for b in 0..rr {
            e[b] = 1.0;
            let image = from_hvec(r, &e).conjugate_by(&v);
            e[b] = 0.0;
            for (m, x) in hvec(&image).into_iter().enumerate() {
                transform[m * rr + b] = x;
            }
        }
        ProcessVariable { var, face: Some(v), transform }
    }

    pub fn is_reduced(&self) -> bool {
        self.face.is_some()
    }

    pub fn value(&self, x: &[f64]) -> CMatrix {
        let y = self.var.value(x);
        match &self.face {
            None => y,
            Some(v) => y.conjugate_by(v),
        }
    }

    /// `sum_m w_m hvec(chi~)_m`.
    pub fn functional(&self, w: &[f64]) -> LinExpr {
        let mut e = LinExpr::default();
        match self.face {
            None => {
                for (m, &v) in w.iter().enumerate() {
                    if v.abs() > 1e-15 {
                        e.add_term(self.var.offset + m, v);
                    }
                }
            }
            Some(_) => {
                let rr = self.var.n * self.var.n;
                for b in 0..rr {
                    let v: f64 = w.iter().enumerate().map(|(m, &wm)| wm * self.transform[m * rr + b]).sum();
                    if v.abs() > 1e-14 {
                        e.add_term(self.var.offset + b, v);
                    }
                }
            }
        }
        e
    }

    /// `tr chi~`; the face map is an isometry so this is `tr Y` either way.
    pub fn trace(&self) -> LinExpr {
        self.var.trace()
    }
}

/// Adds the classical variables for `kind`, their cones, and the 36 groups of
/// equalities `apply(chi, rho_k) = model output_k`.
pub fn add_classical_model(prog: &mut ConicProgram, chi: &ProcessVariable, kind: CorrelationKind) -> ClassicalBlock {
    let per = kind.vars_per_input();
    let vars = prog.add_variables(
        match kind {
            CorrelationKind::Steering => "lhs_sigma",
            CorrelationKind::Bell => "lhv_weights",
        },
        NUM_INPUTS * per,
    );
    match kind {
        CorrelationKind::Steering => {
            // sigma = (t I + x X + y Y + z Z) / 2 is PSD iff t >= |(x, y, z)|
            for start in vars.clone().step_by(4) {
                prog.add_soc("sigma psd", (start..start + 4).map(LinExpr::var).collect());
            }
        }
        CorrelationKind::Bell => prog.add_nonneg("weights", vars.clone().map(LinExpr::var).collect()),
    }
    let action = action_coefficients();
    let columns = classical_columns(kind);
    let nn = PROCESS_DIM * PROCESS_DIM;
    let mut rows = Vec::with_capacity(NUM_INPUTS * 16);
    for (k, coeffs) in action.iter().enumerate() {
        for r in 0..16 {
            let mut e = chi.functional(&coeffs[r * nn..(r + 1) * nn]);
            for (j, col) in columns.iter().enumerate() {
                if col[r].abs() > 1e-15 {
                    e.add_term(vars.start + k * per + j, -col[r]);
                }
            }
            rows.push(e);
        }
    }
    prog.add_zero("channel action = classical output", rows);
    ClassicalBlock { kind, offset: vars.start }
}

/// A quantifier program with the handles needed to read its witness.
#[derive(Clone, Debug)]
pub struct QuantifierProgram {
    pub program: ConicProgram,
    pub chi: ProcessVariable,
    pub classical: ClassicalBlock,
    pub correlation: CorrelationKind,
    pub measure: MeasureKind,
    /// The process entering the constraints or objective, scaled to trace 1.
    pub reference: CMatrix,
}

/// Normalizes by the trace convention; the classical sets are cones, so
/// both quantities are invariant under this rescaling.
fn normalized(chi: &ProcessMatrix) -> CMatrix {
    chi.matrix().scale_re(1.0 / chi.trace_convention())
}

/// Columns of the eigenvectors of `m` with eigenvalue above `FACE_TOL`.
fn support(m: &CMatrix) -> CMatrix {
    let eig = eigh(&Hermitian::symmetrized(m));
    let keep: Vec<usize> = (0..m.rows()).filter(|&i| eig.values[i] > FACE_TOL).collect();
    CMatrix::from_fn(m.rows(), keep.len(), |i, j| eig.vectors[(i, keep[j])])
}

pub fn build_program(
    reference: &ProcessMatrix,
    correlation: CorrelationKind,
    measure: MeasureKind,
) -> QuantifierProgram {
    let reference = normalized(reference);
    let mut program = ConicProgram::new();
    let one = LinExpr::constant(1.0);
    let minus_one = LinExpr::constant(-1.0);
    let chi = match measure {
        MeasureKind::Composition => {
            // min 1 - tr chi~  s.t.  0 <= chi~ <= chi_expt. Any such chi~ lives
            // on the range of chi_expt; restricting to it keeps a strictly
            // feasible point when chi_expt is rank deficient (e.g. unitary).
            let v = support(&reference);
            let chi = if v.cols() < PROCESS_DIM {
                ProcessVariable::on_face(&mut program, v.clone())
            } else {
                ProcessVariable::direct(&mut program)
            };
            let upper = if chi.is_reduced() { v.adjoint().matmul(&reference).matmul(&v) } else { reference.clone() };
            program.minimize(&chi.trace().scaled(-1.0).plus(&one));
            program.add_psd_hermitian("chi", &HermitianExpr::affine(chi.var, 1.0, None));
            program.add_psd_hermitian("chi_expt - chi", &HermitianExpr::affine(chi.var, -1.0, Some(&upper)));
            chi
        }
        MeasureKind::Robustness => {
            // min tr chi~ - 1  s.t.  chi~ >= chi_expt, tr chi~ >= 1; chi~ >= 0 follows
            let chi = ProcessVariable::direct(&mut program);
            program.minimize(&chi.trace().plus(&minus_one));
            program.add_psd_hermitian(
                "chi - chi_expt",
                &HermitianExpr::affine(chi.var, 1.0, Some(&reference.scale_re(-1.0))),
            );
            program.add_nonneg("trace >= 1", vec![chi.trace().plus(&minus_one)]);
            chi
        }
        MeasureKind::Fidelity => {
            // max tr(chi~ chi_target)  s.t.  chi~ >= 0, tr chi~ = 1
            let chi = ProcessVariable::direct(&mut program);
            program.maximize(&chi.functional(&hvec(&reference)));
            program.add_psd_hermitian("chi", &HermitianExpr::affine(chi.var, 1.0, None));
            program.add_zero("trace = 1", vec![chi.trace().plus(&minus_one)]);
            chi
        }
    };
    let classical = add_classical_model(&mut program, &chi, correlation);
    QuantifierProgram { program, chi, classical, correlation, measure, reference }
}

/// Independent re-check of a witness against the defining constraints,
/// using only the high-level objects (no solver rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    /// Max violation over the PSD, trace, classical-cone and action constraints.
    pub violation: f64,
    /// Max deviation of the identity-decomposition relations among outputs.
    pub identity_decomposition_error: f64,
    /// Smallest eigenvalue across all 36 outputs (a constraint implied by
    /// `chi~ >= 0`, so not part of the program).
    pub min_output_eigenvalue: f64,
}

pub fn check_witness(
    measure: MeasureKind,
    reference: &CMatrix,
    chi: &CMatrix,
    classical: &ClassicalWitness,
) -> WitnessCheck {
    let min_eig = |m: &CMatrix| Hermitian::symmetrized(m).min_eigenvalue();
    let tr = chi.trace().re;
    let mut violation: f64 = chi.hermiticity_error();
    match measure {
        MeasureKind::Composition => {
            violation = violation.max(-min_eig(chi)).max(-min_eig(&(reference - chi)));
        }
        MeasureKind::Robustness => {
            violation = violation.max(-min_eig(&(chi - reference))).max(1.0 - tr);
        }
        MeasureKind::Fidelity => {
            violation = violation.max(-min_eig(chi)).max((tr - 1.0).abs());
        }
    }
    violation = violation.max(-classical.min_slack());
    let outputs = classical.outputs();
    let mut min_output = f64::INFINITY;
    for (k, (input, out)) in steering_inputs().into_iter().zip(&outputs).enumerate() {
        debug_assert_eq!(k, 6 * state_index(input[0]) + state_index(input[1]));
        let from_chi = apply_chi(chi, &input_density(input));
        violation = violation.max(from_chi.max_abs_diff(out));
        min_output = min_output.min(min_eig(out));
    }
    WitnessCheck {
        violation: violation.max(0.0),
        identity_decomposition_error: identity_decomposition_error(&outputs),
        min_output_eigenvalue: min_output,
    }
}

fn state_index(s: crate::classical::PauliState) -> usize {
    crate::classical::PauliState::ALL.iter().position(|&p| p == s).expect("known state")
}

/// For outputs indexed `6 a + b` (states ordered X+, X-, Y+, Y-, Z+, Z-):
/// summing either party's eigenstate pair must give an axis-independent
/// result, because every pair sums to the identity.
pub fn identity_decomposition_error(outputs: &[CMatrix]) -> f64 {
    assert_eq!(outputs.len(), NUM_INPUTS);
    let pair_alice = |axis: usize, b: usize| &outputs[6 * (2 * axis) + b] + &outputs[6 * (2 * axis + 1) + b];
    let pair_bob = |a: usize, axis: usize| &outputs[6 * a + 2 * axis] + &outputs[6 * a + 2 * axis + 1];
    let mut err: f64 = 0.0;
    for other in 0..6 {
        let (a0, b0) = (pair_alice(0, other), pair_bob(other, 0));
        for axis in 1..3 {
            err = err.max(pair_alice(axis, other).max_abs_diff(&a0));
            err = err.max(pair_bob(other, axis).max_abs_diff(&b0));
        }
    }
    err
}

/// Result of one quantifier, with solver diagnostics and witness.
#[derive(Clone, Debug)]
pub struct QuantifierReport {
    pub correlation: CorrelationKind,
    pub measure: MeasureKind,
    /// Value after clamping into the measure's range.
    pub value: f64,
    /// Primal optimum before clamping.
    pub raw_value: f64,
    /// Dual objective, in the same orientation as `raw_value`.
    pub dual_value: f64,
    pub clamped: bool,
    pub status: SolveStatus,
    pub gap: f64,
    pub iterations: u32,
    pub solver_status: String,
    pub attempts: u32,
    pub num_variables: usize,
    pub num_constraints: usize,
    pub solve_seconds: f64,
    /// Optimal `chi~` (scaled to the trace-1 reference).
    pub witness: CMatrix,
    pub classical: ClassicalWitness,
    pub check: WitnessCheck,
}

impl QuantifierReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn to_json(&self) -> serde_json::Value {
        let witness: Vec<Vec<[f64; 2]>> = (0..self.witness.rows())
            .map(|i| (0..self.witness.cols()).map(|j| [self.witness[(i, j)].re, self.witness[(i, j)].im]).collect())
            .collect();
        json!({
            "correlation": self.correlation,
            "measure": self.measure,
            "value": self.value,
            "raw_value": self.raw_value,
            "dual_value": self.dual_value,
            "clamped": self.clamped,
            "status": self.status,
            "gap": self.gap,
            "iterations": self.iterations,
            "solver_status": self.solver_status,
            "attempts": self.attempts,
            "num_variables": self.num_variables,
            "num_constraints": self.num_constraints,
            "check": self.check,
            "witness": witness,
        })
    }
}

/// Moves values within `TOL.clamp` outside `[lo, hi]` onto the boundary.
fn clamp_value(raw: f64, lo: f64, hi: f64) -> Result<(f64, bool)> {
    if !raw.is_finite() {
        return Err(Error::SolverFailure { status: "non-finite".into(), detail: format!("optimum {raw}") });
    }
    if raw < lo {
        if raw > lo - TOL.clamp {
            return Ok((lo, true));
        }
    } else if raw > hi {
        if raw < hi + TOL.clamp {
            return Ok((hi, true));
        }
    } else {
        return Ok((raw, false));
    }
    Err(Error::SolverFailure {
        status: "out of range".into(),
        detail: format!("optimum {raw:.9} outside [{lo}, {hi}] by more than {:e}", TOL.clamp),
    })
}

pub fn quantify(
    reference: &ProcessMatrix,
    correlation: CorrelationKind,
    measure: MeasureKind,
) -> Result<QuantifierReport> {
    let qp = build_program(reference, correlation, measure);
    let start = Instant::now();
    let sol = solve(&qp.program)?;
    let solve_seconds = start.elapsed().as_secs_f64();
    if sol.status == SolveStatus::Infeasible {
        // every program here is feasible (chi~ = 0 or a product process), so
        // an infeasibility certificate means the solver broke down
        return Err(Error::SolverFailure {
            status: sol.solver_status,
            detail: format!("{} {} reported infeasible", correlation.as_str(), measure.as_str()),
        });
    }
    let (raw, dual) = match measure {
        MeasureKind::Fidelity => (-sol.value, -sol.dual_value),
        _ => (sol.value, sol.dual_value),
    };
    let (value, clamped) = match measure {
        MeasureKind::Robustness => clamp_value(raw, 0.0, f64::INFINITY)?,
        _ => clamp_value(raw, 0.0, 1.0)?,
    };
    let witness = Hermitian::symmetrized(&qp.chi.value(&sol.x)).into_matrix();
    let classical = qp.classical.witness(&sol.x);
    let check = check_witness(measure, &qp.reference, &witness, &classical);
    let mut status = sol.status;
    if status == SolveStatus::Optimal && check.violation > TOL.sdp {
        status = SolveStatus::Inaccurate;
    }
    Ok(QuantifierReport {
        correlation,
        measure,
        value,
        raw_value: raw,
        dual_value: dual,
        clamped,
        status,
        gap: sol.gap,
        iterations: sol.iterations,
        solver_status: sol.solver_status,
        attempts: sol.attempts,
        num_variables: qp.program.num_vars(),
        num_constraints: qp.program.num_constraints(),
        solve_seconds,
        witness,
        classical,
        check,
    })
}

/// `alpha_steer`: least weight of a steering-capable part of the process.
pub fn steering_composition(chi_expt: &ProcessMatrix) -> Result<QuantifierReport> {
    quantify(chi_expt, CorrelationKind::Steering, MeasureKind::Composition)
}

/// `alpha_Bell`.
pub fn bell_composition(chi_expt: &ProcessMatrix) -> Result<QuantifierReport> {
    quantify(chi_expt, CorrelationKind::Bell, MeasureKind::Composition)
}

/// `beta_steer`: least noise weight making the process steering-incapable.
pub fn steering_robustness(chi_expt: &ProcessMatrix) -> Result<QuantifierReport> {
    quantify(chi_expt, CorrelationKind::Steering, MeasureKind::Robustness)
}

/// `beta_Bell`.
pub fn bell_robustness(chi_expt: &ProcessMatrix) -> Result<QuantifierReport> {
    quantify(chi_expt, CorrelationKind::Bell, MeasureKind::Robustness)
}

/// `F_I`: best process fidelity to the target reached by an incapable process.
pub fn incapable_fidelity(chi_target: &ProcessMatrix) -> Result<QuantifierReport> {
    quantify(chi_target, CorrelationKind::Steering, MeasureKind::Fidelity)
}

/// `F_U`: the same over Bell-unable processes.
pub fn unable_fidelity(chi_target: &ProcessMatrix) -> Result<QuantifierReport> {
    quantify(chi_target, CorrelationKind::Bell, MeasureKind::Fidelity)
}
