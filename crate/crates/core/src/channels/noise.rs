//! Kraus channels and the calibrated device noise model: depolarizing noise
//! followed by thermal relaxation on every gate, plus classical readout flips.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{c, eigh, kron, pauli, CMatrix, Hermitian};
use crate::TOL;

/// A CP, trace non-increasing map given by Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    operators: Vec<CMatrix>,
}

impl KrausChannel {
    /// Checks shapes and `sum K^dag K <= I + 1e-8`.
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::DimMismatch("empty Kraus set".into()))?;
        let d = first.rows();
        if operators.iter().any(|k| k.rows() != d || k.cols() != d) {
            return Err(Error::DimMismatch("Kraus operators must share one square shape".into()));
        }
        if operators.iter().any(|k| !k.is_finite()) {
            return Err(Error::NonFinite);
        }
        let ch = KrausChannel { operators };
        let max = eigh(&Hermitian::symmetrized(&ch.completeness())).values[0];
        if max > 1.0 + TOL.psd {
            return Err(Error::NonPhysicalInput(format!("Kraus set increases trace (||sum K^dag K|| = {max})")));
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        KrausChannel { operators: vec![CMatrix::identity(d)] }
    }

    pub fn unitary(u: &CMatrix) -> Self {
        KrausChannel { operators: vec![u.clone()] }
    }

    pub fn dim(&self) -> usize {
        self.operators[0].rows()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// sum K^dag K
    pub fn completeness(&self) -> CMatrix {
        let d = self.dim();
        self.operators.iter().fold(CMatrix::zeros(d, d), |acc, k| &acc + &k.adjoint().matmul(k))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.completeness().max_abs_diff(&CMatrix::identity(self.dim())) <= tol
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim();
        self.operators.iter().fold(CMatrix::zeros(d, d), |acc, k| &acc + &rho.conjugate_by(k))
    }

    /// `next . self`, with the Kraus count reduced to at most d^2.
    pub fn then(&self, next: &KrausChannel) -> KrausChannel {
        assert_eq!(self.dim(), next.dim());
        let ops = next.operators.iter().flat_map(|b| self.operators.iter().map(move |a| b.matmul(a))).collect();
        KrausChannel { operators: ops }.simplified()
    }

    /// `self (x) other`, `self` on the first tensor factor.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let ops = self.operators.iter().flat_map(|a| other.operators.iter().map(move |b| kron(a, b))).collect();
        KrausChannel { operators: ops }.simplified()
    }

    /// A single-qubit channel acting on qubit `q` of two.
    pub fn on_qubit(&self, q: usize) -> KrausChannel {
        assert_eq!(self.dim(), 2);
        let id = KrausChannel::identity(2);
        if q == 0 { self.tensor(&id) } else { id.tensor(self) }
    }

    /// Choi matrix `sum_ij |i><j| (x) Phi(|i><j|)`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let mut unit = CMatrix::zeros(d, d);
                unit[(i, j)] = c(1.0, 0.0);
                let img = self.apply(&unit);
                for a in 0..d {
                    for b in 0..d {
                        out[(i * d + a, j * d + b)] = img[(a, b)];
                    }
                }
            }
        }
        out
    }

    /// Canonical Kraus set from the Choi eigendecomposition, dropping
    /// eigenvalues below 1e-14.
    pub fn simplified(&self) -> KrausChannel {
        let d = self.dim();
        if self.operators.len() <= 1 {
            return self.clone();
        }
        let eig = eigh(&Hermitian::symmetrized(&self.choi()));
        let mut ops = Vec::new();
        for (k, &val) in eig.values.iter().enumerate() {
            if val <= 1e-14 {
                break;
            }
            let s = val.sqrt();
            // vec index i*d + a holds K[a, i]
            ops.push(CMatrix::from_fn(d, d, |a, i| eig.vectors[(i * d + a, k)] * s));
        }
        if ops.is_empty() {
            ops.push(CMatrix::zeros(d, d));
        }
        KrausChannel { operators: ops }
    }

    /// Entanglement fidelity with the identity, `sum |tr K|^2 / d^2`.
    pub fn process_fidelity(&self) -> f64 {
        let d = self.dim() as f64;
        self.operators.iter().map(|k| k.trace().norm_sqr()).sum::<f64>() / (d * d)
    }

    /// Haar-averaged state fidelity with the identity, `(d F_pro + 1)/(d + 1)`.
    pub fn average_fidelity(&self) -> f64 {
        let d = self.dim() as f64;
        (d * self.process_fidelity() + 1.0) / (d + 1.0)
    }

    pub fn average_gate_error(&self) -> f64 {
        1.0 - self.average_fidelity()
    }
}

fn check_time(t: f64, what: &str) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidTime(format!("{what} = {t} must be finite and non-negative")));
    }
    Ok(())
}

fn check_constant(tc: f64, what: &str) -> Result<()> {
    if tc.is_nan() || tc <= 0.0 {
        return Err(Error::InvalidTime(format!("{what} = {tc} must be positive")));
    }
    Ok(())
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability { what: what.to_string(), value: p });
    }
    Ok(())
}

/// Amplitude damping for duration `t` with `gamma = 1 - exp(-t/T1)`.
/// `t1 = inf` gives the identity.
pub fn amplitude_damping(t: f64, t1: f64) -> Result<KrausChannel> {
    check_time(t, "t")?;
    check_constant(t1, "T1")?;
    let gamma = -(-t / t1).exp_m1();
    Ok(KrausChannel {
        operators: vec![
            CMatrix::diag(&[1.0, (1.0 - gamma).sqrt()]),
            CMatrix::from_real_rows(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]]),
        ],
    })
}

/// Phase damping for duration `t` with `lambda = 1 - exp(-2t/T2)`.
pub fn phase_damping(t: f64, t2: f64) -> Result<KrausChannel> {
    check_time(t, "t")?;
    check_constant(t2, "T2")?;
    let lambda = -(-2.0 * t / t2).exp_m1();
    Ok(KrausChannel {
        operators: vec![CMatrix::diag(&[1.0, (1.0 - lambda).sqrt()]), CMatrix::diag(&[0.0, lambda.sqrt()])],
    })
}

/// Amplitude damping followed by the extra pure dephasing needed for the
/// coherences to decay as `exp(-t/T2)` overall.
///
/// Amplitude damping alone already shrinks coherences by `exp(-t/(2 T1))`, so
/// the dephasing stage uses `1/T_phi = 1/T2 - 1/(2 T1)` (no dephasing when
/// `T2 = 2 T1`).
pub fn thermal_relaxation(t: f64, t1: f64, t2: f64) -> Result<KrausChannel> {
    check_constant(t1, "T1")?;
    check_constant(t2, "T2")?;
    if t2 > 2.0 * t1 * (1.0 + 1e-12) {
        return Err(Error::InvalidNoiseModel(format!("T2 = {t2} exceeds 2 T1 = {}", 2.0 * t1)));
    }
    let rate = (1.0 / t2 - 0.5 / t1).max(0.0);
    let t_phi = if rate == 0.0 { f64::INFINITY } else { 1.0 / rate };
    // phase_damping(t, T) decays coherences as exp(-t/T).
    Ok(amplitude_damping(t, t1)?.then(&phase_damping(t, t_phi)?))
}

/// `rho -> (1 - p) rho + p I/2^nq`.
pub fn depolarizing(p: f64, nq: usize) -> Result<KrausChannel> {
    check_probability(p, "depolarizing strength")?;
    let paulis: Vec<CMatrix> = match nq {
        1 => vec![pauli::id(), pauli::x(), pauli::y(), pauli::z()],
        2 => {
            let one = [pauli::id(), pauli::x(), pauli::y(), pauli::z()];
            one.iter().flat_map(|a| one.iter().map(move |b| kron(a, b))).collect()
        }
        _ => return Err(Error::DimMismatch(format!("depolarizing on {nq} qubits is not supported"))),
    };
    let d2 = paulis.len() as f64;
    let mut ops = vec![paulis[0].scale_re((1.0 - p + p / d2).sqrt())];
    if p > 0.0 {
        ops.extend(paulis[1..].iter().map(|m| m.scale_re((p / d2).sqrt())));
    }
    Ok(KrausChannel { operators: ops })
}

/// Which gate slot a calibrated error applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    #[serde(rename = "1q")]
    OneQubit,
    #[serde(rename = "2q")]
    TwoQubit,
}

/// Depolarizing noise followed by thermal relaxation for the gate duration,
/// with the depolarizing strength tuned so the average gate error matches
/// the calibrated one.
///
/// For one-qubit gates `qubits` holds the single qubit index and the result
/// is a 2x2 channel; for two-qubit gates it must be `[0, 1]`.
pub fn calibrated_gate_noise(model: &NoiseModel, kind: GateKind, qubits: &[usize]) -> Result<KrausChannel> {
    let (relax, error, nq) = match kind {
        GateKind::OneQubit => {
            let &[q] = qubits else {
                return Err(Error::DimMismatch(format!("1q gate needs one qubit, got {qubits:?}")));
            };
            if q >= 2 {
                return Err(Error::IndexOutOfRange(q));
            }
            (model.relaxation(q, model.gate_time_1q_ns)?, model.gate_error_1q[q], 1)
        }
        GateKind::TwoQubit => {
            if qubits != [0, 1] {
                return Err(Error::DimMismatch(format!("2q gate acts on qubits [0, 1], got {qubits:?}")));
            }
            let r0 = model.relaxation(0, model.gate_time_2q_ns)?;
            let r1 = model.relaxation(1, model.gate_time_2q_ns)?;
            (r0.tensor(&r1), model.gate_error_2q, 2)
        }
    };
    let p = depolarizing_strength(&relax, error);
    Ok(depolarizing(p, nq)?.then(&relax))
}

/// Solves `1 - F_avg(relax . depol_p) = error` for `p`.
///
/// `F_pro(relax . depol_p) = (1 - p) F_pro(relax) + p / d^2` since the fully
/// depolarized part is a replacement channel. Clamped to `[0, 1]`.
pub(crate) fn depolarizing_strength(relax: &KrausChannel, error: f64) -> f64 {
    let d = relax.dim() as f64;
    let f_relax = relax.process_fidelity();
    let f_target = ((d + 1.0) * (1.0 - error) - 1.0) / d;
    let floor = 1.0 / (d * d);
    if f_relax <= f_target || f_relax <= floor {
        return 0.0;
    }
    ((f_relax - f_target) / (f_relax - floor)).clamp(0.0, 1.0)
}

/// Classical readout flips for one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutError {
    /// P(report 0 | prepared 1)
    pub p01: f64,
    /// P(report 1 | prepared 0)
    pub p10: f64,
}

impl ReadoutError {
    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        check_probability(p01, "p01")?;
        check_probability(p10, "p10")?;
        Ok(ReadoutError { p01, p10 })
    }

    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub const NONE: ReadoutError = ReadoutError { p01: 0.0, p10: 0.0 };

    /// Column-stochastic `[[1 - p10, p01], [p10, 1 - p01]]` applied to `(P0, P1)`.
    pub fn apply_bit(&self, probs: [f64; 2]) -> [f64; 2] {
        [
            (1.0 - self.p10) * probs[0] + self.p01 * probs[1],
            self.p10 * probs[0] + (1.0 - self.p01) * probs[1],
        ]
    }
}

/// Applies per-qubit confusion matrices to a distribution over `2^n`
/// outcomes. Qubit 0 is the most significant bit of the outcome index.
pub fn readout_apply(errors: &[ReadoutError], probs: &[f64]) -> Vec<f64> {
    let n = errors.len();
    assert_eq!(probs.len(), 1 << n, "distribution size must be 2^qubits");
    let mut out = probs.to_vec();
    for (q, err) in errors.iter().enumerate() {
        let bit = 1 << (n - 1 - q);
        for idx in 0..out.len() {
            if idx & bit == 0 {
                let [a, b] = err.apply_bit([out[idx], out[idx | bit]]);
                out[idx] = a;
                out[idx | bit] = b;
            }
        }
    }
    out
}

/// Calibration data for two qubits. Times in microseconds (T1, T2) and
/// nanoseconds (gate durations); infinite T1/T2 mean no relaxation.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub t1_us: [f64; 2],
    pub t2_us: [f64; 2],
    pub gate_time_1q_ns: f64,
    pub gate_time_2q_ns: f64,
    pub gate_error_1q: [f64; 2],
    pub gate_error_2q: f64,
    pub readout: [ReadoutError; 2],
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        for q in 0..2 {
            check_constant(self.t1_us[q], &format!("T1[{q}]"))?;
            check_constant(self.t2_us[q], &format!("T2[{q}]"))?;
            if self.t2_us[q] > 2.0 * self.t1_us[q] * (1.0 + 1e-12) {
                return Err(Error::InvalidNoiseModel(format!(
                    "qubit {q}: T2 = {} us exceeds 2 T1 = {} us",
                    self.t2_us[q],
                    2.0 * self.t1_us[q]
                )));
            }
            check_probability(self.gate_error_1q[q], &format!("gate_error_1q[{q}]"))?;
            check_probability(self.readout[q].p01, &format!("readout[{q}].p01"))?;
            check_probability(self.readout[q].p10, &format!("readout[{q}].p10"))?;
        }
        check_time(self.gate_time_1q_ns, "gate_time_1q_ns")?;
        check_time(self.gate_time_2q_ns, "gate_time_2q_ns")?;
        check_probability(self.gate_error_2q, "gate_error_2q")?;
        Ok(())
    }

    fn relaxation(&self, q: usize, gate_ns: f64) -> Result<KrausChannel> {
        thermal_relaxation(gate_ns * 1e-3, self.t1_us[q], self.t2_us[q])
    }

    /// No relaxation, no gate errors, perfect readout.
    pub fn ideal() -> Self {
        NoiseModel {
            t1_us: [f64::INFINITY; 2],
            t2_us: [f64::INFINITY; 2],
            gate_time_1q_ns: 0.0,
            gate_time_2q_ns: 0.0,
            gate_error_1q: [0.0; 2],
            gate_error_2q: 0.0,
            readout: [ReadoutError::NONE; 2],
        }
    }

    /// ibmq_santiago qubits 3 and 4, October 2021.
    pub fn santiago() -> Self {
        NoiseModel {
            t1_us: [106.2285, 44.8018],
            t2_us: [82.9952, 88.0221],
            gate_time_1q_ns: 35.5556,
            gate_time_2q_ns: 376.8889,
            gate_error_1q: [0.0002, 0.0003],
            gate_error_2q: 0.0056,
            readout: [ReadoutError { p01: 0.0082, p10: 0.0044 }, ReadoutError { p01: 0.0346, p10: 0.0112 }],
        }
    }

    /// Rigetti Aspen-9 qubits 10 and 17; readout flips taken symmetric at
    /// 1 - readout fidelity, gate errors at 1 - fidelity.
    pub fn aspen9() -> Self {
        NoiseModel {
            t1_us: [26.43, 28.88],
            t2_us: [21.62, 24.14],
            gate_time_1q_ns: 48.0,
            gate_time_2q_ns: 168.0,
            gate_error_1q: [1.0 - 0.9989, 1.0 - 0.9993],
            gate_error_2q: 1.0 - 0.97955,
            readout: [
                ReadoutError { p01: 1.0 - 0.957, p10: 1.0 - 0.957 },
                ReadoutError { p01: 1.0 - 0.939, p10: 1.0 - 0.939 },
            ],
        }
    }

    /// Rigetti Aspen-M-1 qubits 15 and 16.
    pub fn aspen_m1() -> Self {
        NoiseModel {
            t1_us: [50.79, 40.518],
            t2_us: [60.606, 65.261],
            gate_time_1q_ns: 40.0,
            gate_time_2q_ns: 180.0,
            gate_error_1q: [1.0 - 0.9987, 1.0 - 0.99947],
            gate_error_2q: 1.0 - 0.98996,
            readout: [
                ReadoutError { p01: 1.0 - 0.983, p10: 1.0 - 0.983 },
                ReadoutError { p01: 1.0 - 0.987, p10: 1.0 - 0.987 },
            ],
        }
    }

    /// Looks up `ideal`, `santiago`, `aspen-9` or `aspen-m-1`.
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "ideal" => Some(Self::ideal()),
            "santiago" | "ibmq-santiago" => Some(Self::santiago()),
            "aspen-9" | "aspen9" => Some(Self::aspen9()),
            "aspen-m-1" | "aspen-m1" | "aspenm1" => Some(Self::aspen_m1()),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
        let file = NoiseModelFile {
            t1_us: self.t1_us.iter().map(|&x| finite(x)).collect(),
            t2_us: self.t2_us.iter().map(|&x| finite(x)).collect(),
            gate_time_1q_ns: self.gate_time_1q_ns,
            gate_time_2q_ns: self.gate_time_2q_ns,
            gate_error_1q: self.gate_error_1q.to_vec(),
            gate_error_2q: self.gate_error_2q,
            readout: self.readout.to_vec(),
        };
        serde_json::to_value(file).expect("plain data")
    }

    /// Reads the JSON layout; `null` T1/T2 entries mean infinite.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: NoiseModelFile =
            serde_json::from_value(value.clone()).map_err(|e| Error::schema("noise", e.to_string()))?;
        let two = |v: &[f64], key: &str| -> Result<[f64; 2]> {
            <[f64; 2]>::try_from(v).map_err(|_| Error::schema(format!("noise.{key}"), "expected two entries"))
        };
        let inf = |v: &[Option<f64>]| v.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect::<Vec<_>>();
        let readout = <[ReadoutError; 2]>::try_from(file.readout.as_slice())
            .map_err(|_| Error::schema("noise.readout", "expected two entries"))?;
        let model = NoiseModel {
            t1_us: two(&inf(&file.t1_us), "t1_us")?,
            t2_us: two(&inf(&file.t2_us), "t2_us")?,
            gate_time_1q_ns: file.gate_time_1q_ns,
            gate_time_2q_ns: file.gate_time_2q_ns,
            gate_error_1q: two(&file.gate_error_1q, "gate_error_1q")?,
            gate_error_2q: file.gate_error_2q,
            readout,
        };
        model.validate()?;
        Ok(model)
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
#[serde(deny_unknown_fields)]
struct NoiseModelFile {
    t1_us: Vec<Option<f64>>,
    t2_us: Vec<Option<f64>>,
    gate_time_1q_ns: f64,
    gate_time_2q_ns: f64,
    gate_error_1q: Vec<f64>,
    gate_error_2q: f64,
    readout: Vec<ReadoutError>,
}
