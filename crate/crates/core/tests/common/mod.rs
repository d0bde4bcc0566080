//! Shared fixtures: seeded random processes, the incapable/capable process
//! library, and an independently assembled dual program for every quantifier.

#![allow(dead_code)]

use qcgen_core::channels::{
    amplitude_damping, basis_operator, depolarizing, phase_damping, process_from_kraus, GateUnitary,
    KrausChannel, PROCESS_DIM,
};
use qcgen_core::qmath::{c, eigh, hvec, kron, pauli, CMatrix, Hermitian, C64};
use qcgen_core::quantifiers::{
    solve, ConicProgram, CorrelationKind, HermitianExpr, HermitianVar, LinExpr, MeasureKind,
    QuantifierReport, SolveStatus,
};
use qcgen_core::simulator::{exact_tables, BELL_ROTATION};
use qcgen_core::tomography::reconstruct_process;
use qcgen_core::{MeasurementTriad, NoiseModel, ProcessMatrix, TestKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cphase(lambda: f64) -> ProcessMatrix {
    ProcessMatrix::from_gate(&GateUnitary::cphase(lambda))
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Haar-ish unitary: Gram-Schmidt on the columns of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<C64> = (0..n).map(|i| g[(i, j)]).collect();
        for u in &cols {
            let dot: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Random trace-preserving channel on `n`-dimensional states with `kraus`
/// operators: `K_i = G_i S^{-1/2}`, `S = sum G_i^dag G_i`.
pub fn random_channel(rng: &mut ChaCha8Rng, n: usize, kraus: usize) -> KrausChannel {
    let gs: Vec<CMatrix> = (0..kraus).map(|_| gaussian_matrix(rng, n)).collect();
    let mut s = CMatrix::zeros(n, n);
    for g in &gs {
        s += &g.adjoint().matmul(g);
    }
    let inv_sqrt = eigh(&Hermitian::symmetrized(&s)).rebuild_with(|x| x.powf(-0.5));
    KrausChannel::new(gs.iter().map(|g| g.matmul(&inv_sqrt)).collect()).expect("normalized Kraus set")
}

pub fn random_process(rng: &mut ChaCha8Rng) -> ProcessMatrix {
    process_from_kraus(&random_channel(rng, 4, 2)).expect("CP by construction")
}

pub fn local_unitary(rng: &mut ChaCha8Rng) -> ProcessMatrix {
    let a = random_unitary(rng, 2);
    let b = random_unitary(rng, 2);
    ProcessMatrix::from_unitary(&kron(&a, &b))
}

pub fn local_depolarizing(p: f64) -> ProcessMatrix {
    let d = depolarizing(p, 1).unwrap();
    process_from_kraus(&d.tensor(&d)).unwrap()
}

/// Amplitude damping on qubit 1, phase damping on qubit 2.
pub fn damping_product() -> ProcessMatrix {
    let ad = amplitude_damping(1.0, 2.0).unwrap();
    let pd = phase_damping(1.0, 1.5).unwrap();
    process_from_kraus(&ad.tensor(&pd)).unwrap()
}

pub fn random_local_channel(rng: &mut ChaCha8Rng) -> ProcessMatrix {
    let a = random_channel(rng, 2, 3);
    let b = random_channel(rng, 2, 2);
    process_from_kraus(&a.tensor(&b)).unwrap()
}

/// CPHASE(lambda) mixed with two-qubit white noise.
pub fn noisy_cphase(lambda: f64, p: f64) -> ProcessMatrix {
    let dep = process_from_kraus(&depolarizing(1.0, 2).unwrap()).unwrap();
    cphase(lambda).mix(&dep, 1.0 - p).unwrap()
}

/// Exact-probability reconstruction of the simulated CPHASE circuits.
pub fn exact_process(test: TestKind, lambda: f64, noise: Option<&NoiseModel>) -> ProcessMatrix {
    let tables = exact_tables(test, lambda, noise).unwrap();
    let bob = match test.bob_rotation() {
        Some((phi, theta)) => MeasurementTriad::bell_bob(phi, theta),
        None => MeasurementTriad::pauli(),
    };
    reconstruct_process(&tables, &bob).unwrap().chi_phys
}

pub struct Entry {
    pub name: &'static str,
    pub chi: ProcessMatrix,
    pub incapable: bool,
}

/// Processes that map product inputs to product outputs, so every measure
/// must vanish on them.
pub fn incapable_library() -> Vec<Entry> {
    let mut r = rng(7);
    vec![
        Entry { name: "identity", chi: ProcessMatrix::identity(), incapable: true },
        Entry { name: "local unitary", chi: local_unitary(&mut r), incapable: true },
        Entry { name: "local depolarizing 0.3", chi: local_depolarizing(0.3), incapable: true },
        Entry { name: "damping product", chi: damping_product(), incapable: true },
        Entry { name: "random local channel", chi: random_local_channel(&mut r), incapable: true },
    ]
}

pub fn capable_library() -> Vec<Entry> {
    vec![
        Entry { name: "CPHASE(pi)", chi: cphase(std::f64::consts::PI), incapable: false },
        Entry { name: "CPHASE(pi/2)", chi: cphase(std::f64::consts::FRAC_PI_2), incapable: false },
        Entry { name: "noisy CPHASE(pi)", chi: noisy_cphase(std::f64::consts::PI, 0.85), incapable: false },
    ]
}

pub fn library() -> Vec<Entry> {
    let mut v = incapable_library();
    v.extend(capable_library());
    v
}

/// The report is optimal, its witness re-checks within 1e-7 and the solver's
/// duality gap is within 1e-6.
pub fn certified(r: &QuantifierReport) -> Result<(), String> {
    if r.status != SolveStatus::Optimal {
        return Err(format!("status {} ({})", r.status.as_str(), r.solver_status));
    }
    if r.check.violation > 1e-7 {
        return Err(format!("witness violation {:.3e}", r.check.violation));
    }
    if (r.raw_value - r.dual_value).abs() > 1e-6 {
        return Err(format!("primal {} vs dual {}", r.raw_value, r.dual_value));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dual oracle.
//
// Each quantifier's dual is written out by hand. With W_k (k over the 36
// product inputs) the multipliers of the channel-action equalities and
// A*_k the adjoint of chi -> apply(chi, rho_k) under tr(XY):
//
//   composition  max 1 - tr(Z chi_e)     Z >= 0, Z - I - sum A*_k(W_k) >= 0
//   robustness   max -sum tr(W_k out_k)  s >= 0, (1 - s) I - sum A*_k(W_k) >= 0
//   fidelity     min t                   t I - chi_t - sum A*_k(W_k) >= 0
//
// with out_k = apply(chi_e, rho_k), and the classical multipliers
//   steering: tr_A[(A_mu (x) I) W_k] >= 0 for each of Alice's 8 vertices A_mu,
//   Bell:     tr[(A_zeta (x) B_eta) W_k] >= 0 for all 64 vertex pairs.
// Nothing below reuses the library's program assembly.
// ---------------------------------------------------------------------------

fn pauli_eigenstates() -> Vec<CMatrix> {
    let mut v = Vec::new();
    for p in [pauli::x(), pauli::y(), pauli::z()] {
        for s in [1.0, -1.0] {
            v.push(&pauli::id().scale_re(0.5) + &p.scale_re(0.5 * s));
        }
    }
    v
}

fn product_inputs() -> Vec<CMatrix> {
    let one = pauli_eigenstates();
    one.iter().flat_map(|a| one.iter().map(move |b| kron(a, b))).collect()
}

/// `(I + s1 V1 + s2 V2 + s3 V3)/2` for all sign patterns.
fn vertices(triad: &[CMatrix; 3]) -> Vec<CMatrix> {
    let mut v = Vec::new();
    for bits in 0..8 {
        let mut m = pauli::id();
        for (k, o) in triad.iter().enumerate() {
            let s = if bits >> k & 1 == 0 { 1.0 } else { -1.0 };
            m = &m + &o.scale_re(s);
        }
        v.push(m.scale_re(0.5));
    }
    v
}

fn bell_triad() -> [CMatrix; 3] {
    let u = GateUnitary::u_r(BELL_ROTATION.0, BELL_ROTATION.1);
    [pauli::x(), pauli::y(), pauli::z()].map(|p| u.matrix().matmul(&p).matmul(&u.matrix().adjoint()))
}

/// Real and imaginary parts of `tr(W M)` for Hermitian variable `W`.
fn trace_with(w: HermitianVar, m: &CMatrix) -> (LinExpr, LinExpr) {
    let herm = (m + &m.adjoint()).scale_re(0.5);
    let anti = (m - &m.adjoint()).scale(c(0.0, -0.5));
    let coords = |h: &CMatrix| {
        let mut e = LinExpr::default();
        for (i, x) in hvec(h).into_iter().enumerate() {
            if x.abs() > 1e-15 {
                e.add_term(w.offset + i, x);
            }
        }
        e
    };
    (coords(&herm), coords(&anti))
}

/// `A*(W)` entries: `A*(W)[t][s] = 4 tr(W E_s rho E_t^dag)`.
fn adjoint_terms(ws: &[HermitianVar], inputs: &[CMatrix]) -> HermitianExpr {
    let n = PROCESS_DIM;
    let e: Vec<CMatrix> = (0..n).map(|q| basis_operator(q).unwrap()).collect();
    let mut re = vec![LinExpr::default(); n * n];
    let mut im = vec![LinExpr::default(); n * n];
    for (w, rho) in ws.iter().zip(inputs) {
        for s in 0..n {
            let left = e[s].matmul(rho);
            if left.max_abs() == 0.0 {
                continue;
            }
            for t in 0..n {
                let m = left.matmul(&e[t].adjoint()).scale_re(4.0);
                if m.max_abs() == 0.0 {
                    continue;
                }
                let (r, i) = trace_with(*w, &m);
                re[t * n + s] = std::mem::take(&mut re[t * n + s]).plus(&r);
                im[t * n + s] = std::mem::take(&mut im[t * n + s]).plus(&i);
            }
        }
    }
    HermitianExpr { n, re, im }
}

/// `base - adj` with `base` an affine Hermitian expression.
fn minus(mut base: HermitianExpr, adj: &HermitianExpr) -> HermitianExpr {
    for k in 0..base.re.len() {
        base.re[k] = std::mem::take(&mut base.re[k]).plus(&adj.re[k].scaled(-1.0));
        base.im[k] = std::mem::take(&mut base.im[k]).plus(&adj.im[k].scaled(-1.0));
    }
    base
}

fn constant_expr(m: &CMatrix) -> HermitianExpr {
    let n = m.rows();
    HermitianExpr {
        n,
        re: (0..n * n).map(|k| LinExpr::constant(m[(k / n, k % n)].re)).collect(),
        im: (0..n * n).map(|k| LinExpr::constant(m[(k / n, k % n)].im)).collect(),
    }
}

fn add_classical_dual(prog: &mut ConicProgram, ws: &[HermitianVar], kind: CorrelationKind) {
    let alice = vertices(&[pauli::x(), pauli::y(), pauli::z()]);
    match kind {
        CorrelationKind::Steering => {
            for w in ws {
                for a in &alice {
                    let mut re = Vec::new();
                    let mut im = Vec::new();
                    for b in 0..2 {
                        for bp in 0..2 {
                            let mut unit = CMatrix::zeros(2, 2);
                            unit[(bp, b)] = c(1.0, 0.0);
                            let (r, i) = trace_with(*w, &kron(a, &unit));
                            re.push(r);
                            im.push(i);
                        }
                    }
                    prog.add_psd_hermitian("reduced multiplier", &HermitianExpr { n: 2, re, im });
                }
            }
        }
        CorrelationKind::Bell => {
            let bob = vertices(&bell_triad());
            let mut rows = Vec::new();
            for w in ws {
                for a in &alice {
                    for b in &bob {
                        rows.push(trace_with(*w, &kron(a, b)).0);
                    }
                }
            }
            prog.add_nonneg("vertex multiplier", rows);
        }
    }
}

/// Optimal value of the hand-written dual. `chi` is the experimental process
/// for composition/robustness and the target for fidelity.
pub fn dual_value(chi: &ProcessMatrix, kind: CorrelationKind, measure: MeasureKind) -> (f64, SolveStatus) {
    let chi_e = chi.matrix().scale_re(1.0 / chi.trace_convention());
    let inputs = product_inputs();
    let mut prog = ConicProgram::new();
    let ws: Vec<HermitianVar> = (0..inputs.len()).map(|_| prog.add_hermitian("w", 4)).collect();
    let adj = adjoint_terms(&ws, &inputs);
    let id = CMatrix::identity(PROCESS_DIM);
    // `maximize` stores the negated objective
    let sign = if measure == MeasureKind::Fidelity { 1.0 } else { -1.0 };
    match measure {
        MeasureKind::Composition => {
            let z = prog.add_hermitian("z", PROCESS_DIM);
            prog.add_psd_hermitian("z", &HermitianExpr::affine(z, 1.0, None));
            let shifted = HermitianExpr::affine(z, 1.0, Some(&id.scale_re(-1.0)));
            prog.add_psd_hermitian("z - I - A*(W)", &minus(shifted, &adj));
            let obj = LinExpr::constant(1.0).plus(&trace_with(z, &chi_e).0.scaled(-1.0));
            prog.maximize(&obj);
        }
        MeasureKind::Robustness => {
            let s = prog.add_variables("s", 1).start;
            prog.add_nonneg("s", vec![LinExpr::var(s)]);
            let mut base = constant_expr(&id);
            for i in 0..PROCESS_DIM {
                base.re[i * PROCESS_DIM + i].add_term(s, -1.0);
            }
            prog.add_psd_hermitian("(1 - s) I - A*(W)", &minus(base, &adj));
            let mut obj = LinExpr::default();
            for (w, rho) in ws.iter().zip(&inputs) {
                obj = obj.plus(&trace_with(*w, &chi.apply(rho).scale_re(1.0 / chi.trace_convention())).0.scaled(-1.0));
            }
            prog.maximize(&obj);
        }
        MeasureKind::Fidelity => {
            let t = prog.add_variables("t", 1).start;
            let mut base = constant_expr(&chi_e.scale_re(-1.0));
            for i in 0..PROCESS_DIM {
                base.re[i * PROCESS_DIM + i].add_term(t, 1.0);
            }
            prog.add_psd_hermitian("t I - chi - A*(W)", &minus(base, &adj));
            prog.minimize(&LinExpr::var(t));
        }
    }
    add_classical_dual(&mut prog, &ws, kind);
    let sol = solve(&prog).expect("dual program solves");
    (sign * sol.value, sol.status)
}
