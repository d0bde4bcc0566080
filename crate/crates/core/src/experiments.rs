//! Sweeps over the CPHASE shift: datasets (exact, sampled or ingested) go
//! through tomography and all six quantifiers, and rows are exported as CSV
//! or JSON.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{GateUnitary, NoiseModel, ProcessMatrix};
use crate::error::{Error, Result};
use crate::quantifiers::{quantify, CorrelationKind, MeasureKind, QuantifierReport, SolveStatus};
use crate::simulator::{exact_tables, simulate_dataset, TestKind, TomographyDataset};
use crate::tomography::{process_fidelity, reconstruct_process, ProbabilityTable, QptResult};
use crate::classical::{MeasurementTriad, PauliState};

pub const CSV_HEADER: &str =
    "lambda,alpha_steer,beta_steer,alpha_bell,beta_bell,f_expt,f_incapable,f_unable,status,gap";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// CPHASE shifts in radians.
    pub lambdas: Vec<f64>,
    pub tests: Vec<TestKind>,
    pub shots: u64,
    pub seed: u64,
    pub noise: Option<NoiseModel>,
    /// Use exact outcome distributions instead of sampled counts.
    pub exact: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lambdas: default_grid(),
            tests: vec![TestKind::Steering, TestKind::Bell],
            shots: 8192,
            seed: 0,
            noise: None,
            exact: false,
        }
    }
}

/// 0, pi/4, ..., 2 pi.
pub fn default_grid() -> Vec<f64> {
    (0..9).map(|k| k as f64 * FRAC_PI_4).collect()
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::InvalidConfig("lambda grid is empty".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !l.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda {l} is not finite")));
        }
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be at least 1".into()));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidConfig("no test kinds selected".into()));
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Simulated,
    Ingested,
}

/// One sweep point. Quantities of a test that was not run, or whose
/// pipeline failed, are `None`; failures are listed in `errors`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub lambda: f64,
    pub alpha_steer: Option<f64>,
    pub beta_steer: Option<f64>,
    pub alpha_bell: Option<f64>,
    pub beta_bell: Option<f64>,
    /// Process fidelity of the reconstructed steering-test process with the
    /// ideal CPHASE(lambda).
    pub f_expt: Option<f64>,
    pub f_incapable: Option<f64>,
    pub f_unable: Option<f64>,
    /// Solver status per quantity name.
    pub statuses: BTreeMap<String, SolveStatus>,
    pub gaps: BTreeMap<String, f64>,
    pub provenance: Provenance,
    pub errors: Vec<String>,
}

impl ResultRow {
    fn empty(lambda: f64, provenance: Provenance) -> Self {
        ResultRow {
            lambda,
            alpha_steer: None,
            beta_steer: None,
            alpha_bell: None,
            beta_bell: None,
            f_expt: None,
            f_incapable: None,
            f_unable: None,
            statuses: BTreeMap::new(),
            gaps: BTreeMap::new(),
            provenance,
            errors: Vec::new(),
        }
    }

    /// True if no error occurred and every solved program is optimal.
    pub fn all_optimal(&self) -> bool {
        self.errors.is_empty() && self.statuses.values().all(|&s| s == SolveStatus::Optimal)
    }

    /// `optimal`, the worst solver status, or `error`.
    pub fn status_summary(&self) -> &'static str {
        if !self.errors.is_empty() {
            "error"
        } else if self.statuses.values().any(|&s| s == SolveStatus::Infeasible) {
            "infeasible"
        } else if self.statuses.values().any(|&s| s == SolveStatus::Inaccurate) {
            "inaccurate"
        } else {
            "optimal"
        }
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.values().copied().fold(0.0, f64::max)
    }

    fn record(&mut self, name: &str, report: Result<QuantifierReport>) -> Option<f64> {
        match report {
            Ok(r) => {
                self.statuses.insert(name.to_owned(), r.status);
                self.gaps.insert(name.to_owned(), r.gap);
                Some(r.value)
            }
            Err(e) => {
                self.errors.push(format!("{name}: {e}"));
                None
            }
        }
    }
}

pub fn ideal_cphase(lambda: f64) -> ProcessMatrix {
    ProcessMatrix::from_gate(&GateUnitary::cphase(lambda))
}

/// Tomography tables of one test with Bob's measurement triad.
pub type TestTables = (TestKind, MeasurementTriad, Vec<([PauliState; 2], ProbabilityTable)>);

/// Reconstructs each test's process and evaluates its quantifiers against
/// the ideal CPHASE(lambda) target. Steering quantities and `f_expt` use the
/// steering-test process; Bell quantities use the Bell-test process.
pub fn analyze(lambda: f64, tables: &[TestTables], provenance: Provenance) -> ResultRow {
    let mut row = ResultRow::empty(lambda, provenance);
    let target = ideal_cphase(lambda);
    for (test, bob, t) in tables {
        let qpt: QptResult = match reconstruct_process(t, bob) {
            Ok(q) => q,
            Err(e) => {
                row.errors.push(format!("{} tomography: {e}", test.as_str()));
                continue;
            }
        };
        let chi = &qpt.chi_phys;
        match test {
            TestKind::Steering => {
                let k = CorrelationKind::Steering;
                row.alpha_steer = row.record("alpha_steer", quantify(chi, k, MeasureKind::Composition));
                row.beta_steer = row.record("beta_steer", quantify(chi, k, MeasureKind::Robustness));
                row.f_incapable = row.record("f_incapable", quantify(&target, k, MeasureKind::Fidelity));
                row.f_expt = Some(process_fidelity(chi, &target));
            }
            TestKind::Bell => {
                let k = CorrelationKind::Bell;
                row.alpha_bell = row.record("alpha_bell", quantify(chi, k, MeasureKind::Composition));
                row.beta_bell = row.record("beta_bell", quantify(chi, k, MeasureKind::Robustness));
                row.f_unable = row.record("f_unable", quantify(&target, k, MeasureKind::Fidelity));
                if row.f_expt.is_none() && !tables.iter().any(|(t, _, _)| *t == TestKind::Steering) {
                    row.f_expt = Some(process_fidelity(chi, &target));
                }
            }
        }
    }
    row
}

fn triad_for(test: TestKind) -> MeasurementTriad {
    match test.bob_rotation() {
        Some((phi, theta)) => MeasurementTriad::bell_bob(phi, theta),
        None => MeasurementTriad::pauli(),
    }
}

/// Decorrelates the counts of different sweep points and tests that share
/// one user seed.
fn point_seed(seed: u64, point: usize, test: TestKind) -> u64 {
    let t = match test {
        TestKind::Steering => 0,
        TestKind::Bell => 1,
    };
    seed ^ ((point as u64) << 33) ^ (t << 32)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let provenance = if cfg.exact { Provenance::Exact } else { Provenance::Simulated };
    let noise = cfg.noise.as_ref();
    let mut rows = Vec::with_capacity(cfg.lambdas.len());
    let mut order: Vec<(usize, f64)> = cfg.lambdas.iter().copied().enumerate().collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (point, lambda) in order {
        let mut tables = Vec::new();
        let mut failures = Vec::new();
        for &test in &cfg.tests {
            let t = if cfg.exact {
                exact_tables(test, lambda, noise)
            } else {
                simulate_dataset(test, lambda, noise, cfg.shots, point_seed(cfg.seed, point, test))
                    .and_then(|d| d.probability_tables())
            };
            match t {
                Ok(t) => tables.push((test, triad_for(test), t)),
                Err(e) => failures.push(format!("{} dataset: {e}", test.as_str())),
            }
        }
        let mut row = analyze(lambda, &tables, provenance);
        row.errors.extend(failures);
        rows.push(row);
    }
    Ok(rows)
}

/// Reads and validates a counts file.
pub fn ingest_counts(path: &Path) -> Result<TomographyDataset> {
    TomographyDataset::read(path)
}

/// Analyzes ingested datasets that share one CPHASE shift.
pub fn analyze_datasets(datasets: &[TomographyDataset]) -> Result<ResultRow> {
    let first = datasets.first().ok_or_else(|| Error::InvalidConfig("no datasets".into()))?;
    let lambda = first.lambda;
    let mut tables = Vec::new();
    for d in datasets {
        if (d.lambda - lambda).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "datasets disagree on lambda: {} vs {}",
                lambda, d.lambda
            )));
        }
        if tables.iter().any(|(t, _, _)| *t == d.test) {
            return Err(Error::InvalidConfig(format!("two {} datasets", d.test.as_str())));
        }
        tables.push((d.test, d.bob_triad(), d.probability_tables()?));
    }
    Ok(analyze(lambda, &tables, Provenance::Ingested))
}

/// Six significant digits; scientific notation below 1e-3 or from 1e6.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // the exponent after rounding to six digits decides the layout
    let sci = format!("{x:.5e}");
    let mag: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if !(-3..6).contains(&mag) {
        return sci;
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format `{s}`"))),
        }
    }
}

pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyExport);
    }
    let cell = |v: Option<f64>| v.map(format_sig6).unwrap_or_default();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            format_sig6(r.lambda),
            cell(r.alpha_steer),
            cell(r.beta_steer),
            cell(r.alpha_bell),
            cell(r.beta_bell),
            cell(r.f_expt),
            cell(r.f_incapable),
            cell(r.f_unable),
            r.status_summary(),
            format_sig6(r.max_gap()),
        );
    }
    Ok(out)
}

pub fn to_json(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyExport);
    }
    Ok(serde_json::to_string_pretty(rows)?)
}

pub fn export(rows: &[ResultRow], format: ExportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => to_csv(rows)?,
        ExportFormat::Json => to_json(rows)? + "\n",
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn import_json(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
