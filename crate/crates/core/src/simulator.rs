//! Tomography circuits for the steering and Bell generating tests, exact
//! outcome distributions under an optional device noise model, and seeded
//! multinomial sampling of counts.
//!
//! Each circuit prepares a product of Pauli eigenstates from |00>, applies
//! CPHASE(lambda), for the Bell test applies `U_R^dag` on Bob's qubit, then
//! rotates each qubit into its measurement basis (X via H, Y via S^dag then H)
//! and reads out in Z.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::channels::{calibrated_gate_noise, readout_apply, GateKind, GateUnitary, KrausChannel, NoiseModel};
use crate::classical::{Axis, MeasurementTriad, PauliState};
use crate::error::{Error, Result};
use crate::qmath::CMatrix;
use crate::tomography::ProbabilityTable;

/// Bob's rotation for the Bell test, `U_R(0, pi/4)`.
pub const BELL_ROTATION: (f64, f64) = (0.0, std::f64::consts::FRAC_PI_4);

/// Outcome labels in distribution order; `+` is the Z = 0 readout.
pub const OUTCOMES: [&str; 4] = ["++", "+-", "-+", "--"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Steering,
    Bell,
}

impl TestKind {
    pub fn bob_rotation(self) -> Option<(f64, f64)> {
        match self {
            TestKind::Steering => None,
            TestKind::Bell => Some(BELL_ROTATION),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Steering => "steering",
            TestKind::Bell => "bell",
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "steering" => Ok(TestKind::Steering),
            "bell" => Ok(TestKind::Bell),
            _ => Err(Error::InvalidConfig(format!("unknown test kind `{s}`"))),
        }
    }
}

/// One gate of a circuit.
#[derive(Clone, Debug)]
pub enum Op {
    One { qubit: usize, gate: GateUnitary },
    Two(GateUnitary),
}

#[derive(Clone, Debug)]
pub struct Circuit {
    /// Position in [`build_circuits`] order; selects the sampling stream.
    pub ordinal: usize,
    pub input: [PauliState; 2],
    pub process_gate: GateUnitary,
    /// `(phi, theta)` of `U_R`; present exactly for the Bell test.
    pub bell_rotation: Option<(f64, f64)>,
    pub setting: [Axis; 2],
}

fn preparation(s: PauliState) -> Vec<GateUnitary> {
    use Axis::*;
    match (s.axis, s.positive) {
        (Z, true) => vec![],
        (Z, false) => vec![GateUnitary::x()],
        (X, true) => vec![GateUnitary::h()],
        (X, false) => vec![GateUnitary::x(), GateUnitary::h()],
        (Y, true) => vec![GateUnitary::h(), GateUnitary::s()],
        (Y, false) => vec![GateUnitary::h(), GateUnitary::s_dag()],
    }
}

fn measurement(a: Axis) -> Vec<GateUnitary> {
    match a {
        Axis::X => vec![GateUnitary::h()],
        Axis::Y => vec![GateUnitary::s_dag(), GateUnitary::h()],
        Axis::Z => vec![],
    }
}

impl Circuit {
    pub fn ops(&self) -> Vec<Op> {
        let mut ops = Vec::new();
        for q in 0..2 {
            ops.extend(preparation(self.input[q]).into_iter().map(|gate| Op::One { qubit: q, gate }));
        }
        ops.push(Op::Two(self.process_gate.clone()));
        if let Some((phi, theta)) = self.bell_rotation {
            ops.push(Op::One { qubit: 1, gate: GateUnitary::u_r(phi, theta).adjoint() });
        }
        for q in 0..2 {
            ops.extend(measurement(self.setting[q]).into_iter().map(|gate| Op::One { qubit: q, gate }));
        }
        ops
    }

    pub fn input_label(&self) -> String {
        format!("{} {}", self.input[0], self.input[1])
    }

    pub fn setting_label(&self) -> String {
        format!("{}{}", self.setting[0].as_char(), self.setting[1].as_char())
    }
}

/// The 16 tomography inputs, Alice's token outermost.
pub fn tomography_inputs() -> Vec<[PauliState; 2]> {
    let t = PauliState::TOMOGRAPHY;
    t.iter().flat_map(|&a| t.iter().map(move |&b| [a, b])).collect()
}

/// The 9 setting pairs, Alice's axis outermost.
pub fn setting_pairs() -> Vec<[Axis; 2]> {
    Axis::ALL.iter().flat_map(|&a| Axis::ALL.iter().map(move |&b| [a, b])).collect()
}

/// 144 circuits: 16 inputs x 9 settings, ordinal `9 * input + setting`.
pub fn build_circuits(test: TestKind, lambda: f64) -> Result<Vec<Circuit>> {
    if !lambda.is_finite() {
        return Err(Error::InvalidGateParams { gate: "cphase".into(), reason: format!("lambda = {lambda}") });
    }
    let gate = GateUnitary::cphase(lambda);
    let mut out = Vec::with_capacity(144);
    for input in tomography_inputs() {
        for setting in setting_pairs() {
            out.push(Circuit {
                ordinal: out.len(),
                input,
                process_gate: gate.clone(),
                bell_rotation: test.bob_rotation(),
                setting,
            });
        }
    }
    Ok(out)
}

/// Calibrated noise channels for one device, built once and reused.
#[derive(Clone, Debug)]
pub struct NoisyBackend {
    one: [KrausChannel; 2],
    two: KrausChannel,
    readout: [crate::channels::ReadoutError; 2],
}

impl NoisyBackend {
    pub fn new(model: &NoiseModel) -> Result<Self> {
        model.validate()?;
        let one = [
            calibrated_gate_noise(model, GateKind::OneQubit, &[0])?.on_qubit(0),
            calibrated_gate_noise(model, GateKind::OneQubit, &[1])?.on_qubit(1),
        ];
        let two = calibrated_gate_noise(model, GateKind::TwoQubit, &[0, 1])?;
        Ok(NoisyBackend { one, two, readout: model.readout })
    }

    pub fn probabilities(&self, c: &Circuit) -> [f64; 4] {
        run(c, Some(self))
    }
}

fn run(c: &Circuit, noise: Option<&NoisyBackend>) -> [f64; 4] {
    let mut rho = CMatrix::diag(&[1.0, 0.0, 0.0, 0.0]);
    for op in c.ops() {
        match op {
            Op::One { qubit, gate } => {
                rho = rho.conjugate_by(&gate.on_qubit(qubit));
                if let Some(n) = noise {
                    rho = n.one[qubit].apply(&rho);
                }
            }
            Op::Two(gate) => {
                rho = rho.conjugate_by(gate.matrix());
                if let Some(n) = noise {
                    rho = n.two.apply(&rho);
                }
            }
        }
    }
    let mut p: Vec<f64> = (0..4).map(|i| rho[(i, i)].re.max(0.0)).collect();
    if let Some(n) = noise {
        p = readout_apply(&n.readout, &p);
    }
    let total: f64 = p.iter().sum();
    [p[0] / total, p[1] / total, p[2] / total, p[3] / total]
}

/// Born-rule outcome distribution over [`OUTCOMES`].
pub fn exact_probabilities(c: &Circuit, noise: Option<&NoiseModel>) -> Result<[f64; 4]> {
    match noise {
        None => Ok(run(c, None)),
        Some(model) => Ok(run(c, Some(&NoisyBackend::new(model)?))),
    }
}

/// Multinomial counts via sequential binomial draws.
pub fn sample_from(probs: &[f64; 4], shots: u64, rng: &mut ChaCha8Rng) -> [u64; 4] {
    let mut counts = [0u64; 4];
    let mut left = shots;
    let mut mass = 1.0;
    for i in 0..3 {
        if left == 0 {
            break;
        }
        let p = if mass > 0.0 { (probs[i] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, p).expect("p in [0, 1]").sample(rng);
        counts[i] = k;
        left -= k;
        mass -= probs[i];
    }
    counts[3] = left;
    counts
}

/// Stream `ordinal` of ChaCha8 seeded with `seed`, so each circuit's draw is
/// independent of execution order.
pub fn circuit_rng(seed: u64, ordinal: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal as u64);
    rng
}

pub fn sample_counts(c: &Circuit, noise: Option<&NoiseModel>, shots: u64, seed: u64) -> Result<CountsRecord> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be at least 1".into()));
    }
    let probs = exact_probabilities(c, noise)?;
    Ok(CountsRecord::new(c.input, c.setting, shots, sample_from(&probs, shots, &mut circuit_rng(seed, c.ordinal))))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountsRecord {
    pub input: [PauliState; 2],
    pub setting: [Axis; 2],
    pub shots: u64,
    /// Indexed like [`OUTCOMES`].
    pub counts: [u64; 4],
}

impl CountsRecord {
    pub fn new(input: [PauliState; 2], setting: [Axis; 2], shots: u64, counts: [u64; 4]) -> Self {
        CountsRecord { input, setting, shots, counts }
    }

    pub fn label(&self) -> String {
        format!("input={} {}, setting={}{}", self.input[0], self.input[1], self.setting[0].as_char(), self.setting[1].as_char())
    }

    pub fn frequencies(&self) -> [f64; 4] {
        let n = self.shots as f64;
        self.counts.map(|k| k as f64 / n)
    }
}

/// Counts for the full 16 x 9 grid of one test at one CPHASE shift.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographyDataset {
    pub test: TestKind,
    pub lambda: f64,
    pub shots: u64,
    pub u_r: Option<(f64, f64)>,
    pub records: Vec<CountsRecord>,
}

impl TomographyDataset {
    pub fn bob_triad(&self) -> MeasurementTriad {
        match self.u_r {
            Some((phi, theta)) => MeasurementTriad::bell_bob(phi, theta),
            None => MeasurementTriad::pauli(),
        }
    }

    /// Frequency tables per tomography input, in [`tomography_inputs`] order.
    pub fn probability_tables(&self) -> Result<Vec<([PauliState; 2], ProbabilityTable)>> {
        let mut by_input: BTreeMap<[PauliState; 2], BTreeMap<[Axis; 2], [f64; 4]>> = BTreeMap::new();
        for r in &self.records {
            by_input.entry(r.input).or_default().insert(r.setting, r.frequencies());
        }
        tomography_inputs()
            .into_iter()
            .map(|input| {
                let grid = by_input
                    .get(&input)
                    .ok_or_else(|| Error::MissingInput(format!("{} {}", input[0], input[1])))?;
                Ok((input, ProbabilityTable::from_grid(grid)?))
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let records = self
            .records
            .iter()
            .map(|r| RecordJson {
                input: format!("{} {}", r.input[0], r.input[1]),
                setting: format!("{}{}", r.setting[0].as_char(), r.setting[1].as_char()),
                counts: OUTCOMES.iter().zip(r.counts).map(|(k, n)| (k.to_string(), n)).collect(),
            })
            .collect();
        let file = DatasetJson {
            test: self.test,
            lambda: self.lambda,
            shots: self.shots,
            ur: self.u_r.map(|(phi, theta)| UrJson { phi, theta }),
            records,
        };
        serde_json::to_value(file).expect("plain data")
    }

    /// Parses and validates a counts file: every (input, setting) pair of
    /// the grid present once, counts summing to `shots`.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: DatasetJson =
            serde_json::from_value(value.clone()).map_err(|e| Error::schema("$", e.to_string()))?;
        if !file.lambda.is_finite() {
            return Err(Error::schema("lambda", "must be finite"));
        }
        if file.shots == 0 {
            return Err(Error::schema("shots", "must be at least 1"));
        }
        let u_r = file.ur.map(|u| (u.phi, u.theta));
        match (file.test, u_r) {
            (TestKind::Bell, None) => return Err(Error::schema("ur", "required for the bell test")),
            (TestKind::Steering, Some(_)) => return Err(Error::schema("ur", "only allowed for the bell test")),
            _ => {}
        }
        let mut seen: BTreeMap<([PauliState; 2], [Axis; 2]), CountsRecord> = BTreeMap::new();
        for (i, r) in file.records.iter().enumerate() {
            let path = format!("records[{i}]");
            let input = parse_input(&r.input).map_err(|m| Error::schema(format!("{path}.input"), m))?;
            let setting = parse_setting(&r.setting).map_err(|m| Error::schema(format!("{path}.setting"), m))?;
            let mut counts = [0u64; 4];
            for (key, &n) in &r.counts {
                let norm = key.replace('\u{2212}', "-");
                let k = OUTCOMES
                    .iter()
                    .position(|o| *o == norm)
                    .ok_or_else(|| Error::schema(format!("{path}.counts"), format!("unknown outcome `{key}`")))?;
                counts[k] = n;
            }
            let record = CountsRecord::new(input, setting, file.shots, counts);
            let total: u64 = counts.iter().sum();
            if total != file.shots {
                return Err(Error::ShotMismatch { record: record.label(), total, shots: file.shots });
            }
            if seen.insert((input, setting), record).is_some() {
                return Err(Error::schema(path, "duplicate (input, setting) record"));
            }
        }
        let mut records = Vec::with_capacity(144);
        for input in tomography_inputs() {
            for setting in setting_pairs() {
                match seen.remove(&(input, setting)) {
                    Some(r) => records.push(r),
                    None => {
                        return Err(Error::schema(
                            "records",
                            format!(
                                "missing record input=\"{} {}\" setting=\"{}{}\"",
                                input[0],
                                input[1],
                                setting[0].as_char(),
                                setting[1].as_char()
                            ),
                        ))
                    }
                }
            }
        }
        if let Some((input, setting)) = seen.keys().next() {
            return Err(Error::schema(
                "records",
                format!("unexpected input \"{} {}\" with setting {:?}", input[0], input[1], setting),
            ));
        }
        Ok(TomographyDataset { test: file.test, lambda: file.lambda, shots: file.shots, u_r, records })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::schema("$", e.to_string()))?;
        Self::from_json(&value)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn parse_input(s: &str) -> std::result::Result<[PauliState; 2], String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("expected two state tokens, got `{s}`"));
    };
    let a: PauliState = a.parse().map_err(|e: Error| e.to_string())?;
    let b: PauliState = b.parse().map_err(|e: Error| e.to_string())?;
    Ok([a, b])
}

fn parse_setting(s: &str) -> std::result::Result<[Axis; 2], String> {
    let axes: Vec<Axis> = s.trim().chars().map(Axis::from_char).collect::<Option<_>>().ok_or(format!("bad setting `{s}`"))?;
    <[Axis; 2]>::try_from(axes).map_err(|_| format!("expected two axes, got `{s}`"))
}

#[derive(Serialize, Deserialize)]
struct UrJson {
    phi: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    input: String,
    setting: String,
    counts: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct DatasetJson {
    test: TestKind,
    lambda: f64,
    shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ur: Option<UrJson>,
    records: Vec<RecordJson>,
}

/// Samples every circuit of a test; ordinals fix the per-circuit streams.
pub fn simulate_dataset(
    test: TestKind,
    lambda: f64,
    noise: Option<&NoiseModel>,
    shots: u64,
    seed: u64,
) -> Result<TomographyDataset> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be at least 1".into()));
    }
    let backend = noise.map(NoisyBackend::new).transpose()?;
    let records = build_circuits(test, lambda)?
        .iter()
        .map(|c| {
            let probs = run(c, backend.as_ref());
            let counts = sample_from(&probs, shots, &mut circuit_rng(seed, c.ordinal));
            CountsRecord::new(c.input, c.setting, shots, counts)
        })
        .collect();
    Ok(TomographyDataset { test, lambda, shots, u_r: test.bob_rotation(), records })
}

/// Exact distributions arranged as tomography tables (no sampling).
pub fn exact_tables(
    test: TestKind,
    lambda: f64,
    noise: Option<&NoiseModel>,
) -> Result<Vec<([PauliState; 2], ProbabilityTable)>> {
    let backend = noise.map(NoisyBackend::new).transpose()?;
    let circuits = build_circuits(test, lambda)?;
    circuits
        .chunks(9)
        .map(|chunk| {
            let grid: BTreeMap<[Axis; 2], [f64; 4]> =
                chunk.iter().map(|c| (c.setting, run(c, backend.as_ref()))).collect();
            Ok((chunk[0].input, ProbabilityTable::from_grid(&grid)?))
        })
        .collect()
}
