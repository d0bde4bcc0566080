//! `qcgen`: simulate tomography counts, reconstruct processes and quantify
//! their steering/Bell generating power.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qcgen_core::experiments::{self, ExportFormat, ResultRow, SweepConfig};
use qcgen_core::quantifiers::{quantify, CorrelationKind, MeasureKind, QuantifierReport};
use qcgen_core::simulator::simulate_dataset;
use qcgen_core::tomography::{process_fidelity, reconstruct_process};
use qcgen_core::{NoiseModel, ProcessMatrix, TestKind, TomographyDataset};

mod angle;

#[derive(Parser, Debug)]
#[command(name = "qcgen", version, about = "Steering and Bell generation quantifiers for two-qubit processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample tomography counts for CPHASE(lambda) and write them as JSON.
    Simulate(SimulateArgs),
    /// Reconstruct a process matrix from a counts file.
    Tomo(TomoArgs),
    /// Composition and robustness of a process matrix.
    Quantify(QuantifyArgs),
    /// Classical mimicry bounds for target CPHASE(lambda), optionally
    /// compared with a measured process.
    Fidelity(FidelityArgs),
    /// Run the full pipeline over a grid of CPHASE shifts.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct NoiseArg {
    /// Noise model JSON file, or a preset name (santiago, aspen9, aspen_m1, ideal).
    #[arg(long)]
    noise: Option<String>,
}

impl NoiseArg {
    fn load(&self) -> Result<Option<NoiseModel>> {
        let Some(spec) = &self.noise else { return Ok(None) };
        let path = Path::new(spec);
        if path.exists() {
            return Ok(Some(NoiseModel::read(path)?));
        }
        match NoiseModel::preset(spec) {
            Some(m) => Ok(Some(m)),
            None => bail!("`{spec}` is neither a noise model file nor a known preset"),
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value = "steering")]
    test: TestKind,
    /// CPHASE shift, e.g. `3.14159`, `pi`, `0.46pi`, `3pi/4`.
    #[arg(long, value_parser = angle::parse, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 8192)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    noise: NoiseArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TomoArgs {
    /// Counts JSON file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Where to write the physical process matrix JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QuantifyArgs {
    /// Process matrix JSON file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Restrict to one correlation kind (default: both).
    #[arg(long)]
    test: Option<TestKind>,
    /// Write the full reports (with witnesses) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FidelityArgs {
    #[arg(long, value_parser = angle::parse, allow_hyphen_values = true)]
    lambda: f64,
    /// Measured process matrix JSON file.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    test: Option<TestKind>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated CPHASE shifts (default: 0, pi/4, ..., 2pi).
    #[arg(long, value_delimiter = ',', value_parser = angle::parse, allow_hyphen_values = true)]
    lambda: Vec<f64>,
    /// Test kinds to run; repeat for both (default: both).
    #[arg(long)]
    test: Vec<TestKind>,
    #[arg(long, default_value_t = 8192)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    noise: NoiseArg,
    /// Use exact outcome probabilities instead of sampled counts.
    #[arg(long)]
    exact: bool,
    /// Analyze ingested counts files instead of simulating; files sharing a
    /// lambda form one row.
    #[arg(long = "in")]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: ExportFormat,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        // results were produced but some program did not reach optimality
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Tomo(a) => tomo(a),
        Command::Quantify(a) => quantify_cmd(a),
        Command::Fidelity(a) => fidelity(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<bool> {
    let noise = a.noise.load()?;
    let data = simulate_dataset(a.test, a.lambda, noise.as_ref(), a.shots, a.seed)?;
    let text = serde_json::to_string_pretty(&data.to_json())? + "\n";
    write_or_print(a.out.as_deref(), &text)?;
    if a.out.is_some() {
        eprintln!("{} circuits x {} shots ({} test, lambda = {})", data.records.len(), a.shots, a.test.as_str(), a.lambda);
    }
    Ok(true)
}

fn tomo(a: TomoArgs) -> Result<bool> {
    let data = TomographyDataset::read(&a.input)?;
    let qpt = reconstruct_process(&data.probability_tables()?, &data.bob_triad())?;
    let ideal = experiments::ideal_cphase(data.lambda);
    let text = serde_json::to_string_pretty(&qpt.chi_phys.to_json())? + "\n";
    write_or_print(a.out.as_deref(), &text)?;
    eprintln!(
        "{} test, lambda = {}: fidelity with ideal CPHASE {:.6}, physicalization distance {:.3e} ({})",
        data.test.as_str(),
        data.lambda,
        process_fidelity(&qpt.chi_phys, &ideal),
        qpt.ml_distance,
        qpt.method
    );
    Ok(true)
}

fn correlations(test: Option<TestKind>) -> Vec<CorrelationKind> {
    match test {
        Some(TestKind::Steering) => vec![CorrelationKind::Steering],
        Some(TestKind::Bell) => vec![CorrelationKind::Bell],
        None => vec![CorrelationKind::Steering, CorrelationKind::Bell],
    }
}

fn report_line(name: &str, r: &QuantifierReport) -> String {
    format!(
        "{name:<12} {:>10} {:<10} gap {:.2e} violation {:.2e}{}\n",
        experiments::format_sig6(r.value),
        r.status.as_str(),
        r.gap,
        r.check.violation,
        if r.clamped { " (clamped)" } else { "" }
    )
}

fn finish_reports(reports: &[(String, QuantifierReport)], out: Option<&Path>) -> Result<bool> {
    for (name, r) in reports {
        print!("{}", report_line(name, r));
    }
    if let Some(p) = out {
        let json: Vec<_> = reports
            .iter()
            .map(|(name, r)| {
                let mut j = r.to_json();
                j["name"] = serde_json::Value::from(name.as_str());
                j
            })
            .collect();
        std::fs::write(p, serde_json::to_string_pretty(&json)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(reports.iter().all(|(_, r)| r.is_optimal()))
}

fn quantify_cmd(a: QuantifyArgs) -> Result<bool> {
    let chi = ProcessMatrix::read(&a.input)?;
    let mut reports = Vec::new();
    for k in correlations(a.test) {
        let suffix = if k == CorrelationKind::Steering { "steer" } else { "bell" };
        reports.push((format!("alpha_{suffix}"), quantify(&chi, k, MeasureKind::Composition)?));
        reports.push((format!("beta_{suffix}"), quantify(&chi, k, MeasureKind::Robustness)?));
    }
    finish_reports(&reports, a.out.as_deref())
}

fn fidelity(a: FidelityArgs) -> Result<bool> {
    let target = experiments::ideal_cphase(a.lambda);
    let measured = a.input.as_deref().map(ProcessMatrix::read).transpose()?;
    let f_expt = measured.as_ref().map(|m| process_fidelity(m, &target));
    let mut reports = Vec::new();
    for k in correlations(a.test) {
        let name = if k == CorrelationKind::Steering { "f_incapable" } else { "f_unable" };
        reports.push((name.to_owned(), quantify(&target, k, MeasureKind::Fidelity)?));
    }
    if let Some(f) = f_expt {
        println!("{:<12} {:>10}", "f_expt", experiments::format_sig6(f));
        for (name, r) in &reports {
            let verdict = if f > r.value { "exceeds" } else { "does not exceed" };
            println!("f_expt {verdict} {name}");
        }
    }
    finish_reports(&reports, a.out.as_deref())
}

fn sweep(a: SweepArgs) -> Result<bool> {
    let rows: Vec<ResultRow> = if a.inputs.is_empty() {
        let mut cfg = SweepConfig { shots: a.shots, seed: a.seed, exact: a.exact, ..SweepConfig::default() };
        if !a.lambda.is_empty() {
            cfg.lambdas = a.lambda.clone();
        }
        if !a.test.is_empty() {
            cfg.tests = a.test.clone();
        }
        cfg.noise = a.noise.load()?;
        experiments::run_sweep(&cfg)?
    } else {
        ingested_rows(&a.inputs)?
    };
    let text = match a.format {
        ExportFormat::Csv => experiments::to_csv(&rows)?,
        ExportFormat::Json => experiments::to_json(&rows)? + "\n",
    };
    write_or_print(a.out.as_deref(), &text)?;
    for r in rows.iter().filter(|r| !r.errors.is_empty()) {
        for e in &r.errors {
            eprintln!("lambda = {}: {e}", r.lambda);
        }
    }
    Ok(rows.iter().all(ResultRow::all_optimal))
}

fn ingested_rows(paths: &[PathBuf]) -> Result<Vec<ResultRow>> {
    let mut groups: Vec<Vec<TomographyDataset>> = Vec::new();
    for p in paths {
        let d = experiments::ingest_counts(p)?;
        match groups.iter_mut().find(|g| g[0].lambda == d.lambda) {
            Some(g) => g.push(d),
            None => groups.push(vec![d]),
        }
    }
    groups.sort_by(|a, b| a[0].lambda.total_cmp(&b[0].lambda));
    groups.iter().map(|g| Ok(experiments::analyze_datasets(g)?)).collect()
}
