//! The `qec3` command-line tool.
//!
//! Subcommands generate decay curves, run the fitting workflow, search the
//! mixed-ancilla simplex, and print derivatives of the corrected decay.
//! Every file output is written atomically and accompanied by a
//! `<output>.manifest.json` that `qec3 replay` can re-run.

pub mod io;
pub mod manifest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analytics::{
    curve_correlation, find_inflection, fit_exponential_rate, inflection_point, linear_grid,
    predict_corrected_curve, scale_to_rms, theta_derivatives_at_zero, theta_general, theta_law,
    uncorrected_decay, DecayCurve, DecayModel, Provenance,
};
use crate::noise::{CovarianceMatrix, DephasingAxis, NoiseChannel};
use crate::operator::BlochVector;
use crate::protocol::{
    mixed_ancilla_nogo_joint, run_pipeline_mc, AncillaMixture, DataState, PipelineConfig,
};
use io::{format_float, read_covariance_file, read_series, write_csv};
pub use manifest::RunManifest;

/// Environment variable supplying the default Monte Carlo seed.
pub const SEED_ENV: &str = "QEC3_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "qec3",
    version,
    about = "Three-bit code under correlated dephasing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Corrected (or uncorrected) decay of the data spin on a time grid.
    Decay(DecayArgs),
    /// Fit an uncorrected decay and predict the corrected curve.
    Fit(FitArgs),
    /// Search ancilla mixtures for vanishing initial slope.
    Nogo(NogoArgs),
    /// Derivatives of the corrected decay at t = 0 and its inflection point.
    Derivatives(DerivativesArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Decay(_) => "decay",
            Command::Fit(_) => "fit",
            Command::Nogo(_) => "nogo",
            Command::Derivatives(_) => "derivatives",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    #[value(alias = "totally-correlated")]
    Correlated,
    Uncorrelated,
}

impl From<ModelArg> for DecayModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Correlated => DecayModel::TotallyCorrelated,
            ModelArg::Uncorrelated => DecayModel::Uncorrelated,
        }
    }
}

/// Either a named model with its `τ`, or a covariance file.
#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct CovarianceArgs {
    /// Named noise model.
    #[arg(long, value_enum, conflicts_with = "cov", requires = "tau")]
    pub model: Option<ModelArg>,
    /// Single-spin decay time τ (s) of the named model.
    #[arg(long)]
    pub tau: Option<f64>,
    /// File with three rows of three covariance rates (rad²/s).
    #[arg(long, value_name = "FILE")]
    pub cov: Option<PathBuf>,
}

impl CovarianceArgs {
    pub fn resolve(&self) -> CliResult<CovarianceMatrix> {
        match (&self.model, &self.cov) {
            (Some(model), None) => {
                let tau = self
                    .tau
                    .ok_or_else(|| CliError::Usage("--model requires --tau".into()))?;
                Ok(DecayModel::from(*model).covariance(tau)?)
            }
            (None, Some(path)) => read_covariance_file(path),
            _ => Err(CliError::Usage(
                "give either --model with --tau, or --cov FILE".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct DecayArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub covariance: CovarianceArgs,
    /// Number of equally spaced times.
    #[arg(long, default_value_t = 32)]
    pub points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub tmin: f64,
    /// Last time on the grid [default: 3τ of the fastest spin].
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Skip encoding, decoding and correction.
    #[arg(long)]
    pub no_correction: bool,
    /// Also estimate the decay by Monte Carlo with this many samples.
    #[arg(long, value_name = "SAMPLES")]
    pub mc: Option<u64>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV with a time column and the uncorrected amplitudes.
    #[arg(long)]
    pub input: PathBuf,
    /// Amplitude column [default: second column].
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// CSV with measured corrected amplitudes on the same time grid.
    #[arg(long)]
    pub corrected: Option<PathBuf>,
    #[arg(long)]
    pub corrected_column: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct NogoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub covariance: CovarianceArgs,
    /// Simplex grid spacing; must divide 1.
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Further covariance files that must vanish simultaneously.
    #[arg(long, value_name = "FILE")]
    pub joint_with: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct DerivativesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub covariance: CovarianceArgs,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main_from_env() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    match run(&cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: &Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Decay(a) => cmd_decay(a, out),
        Command::Fit(a) => cmd_fit(a, out),
        Command::Nogo(a) => cmd_nogo(a, out),
        Command::Derivatives(a) => cmd_derivatives(a, out),
        Command::Replay(a) => cmd_replay(a, out),
    }
}

fn emit(out: &mut dyn Write, key: &str, value: impl std::fmt::Display) -> CliResult {
    writeln!(out, "{key} {value}").map_err(|e| CliError::Io(format!("cannot write output: {e}")))
}

fn decay_grid(a: &DecayArgs, cov: &CovarianceMatrix) -> CliResult<Vec<f64>> {
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let fastest = (0..3).map(|j| cov.matrix()[(j, j)]).fold(0.0, f64::max);
    let tmax = match a.tmax {
        Some(t) => t,
        None if fastest > 0.0 => 3.0 * 2.0 / fastest,
        None => {
            return Err(CliError::Usage(
                "covariance has no dephasing; give --tmax explicitly".into(),
            ))
        }
    };
    if !(a.tmin.is_finite() && tmax.is_finite() && a.tmin >= 0.0 && tmax > a.tmin) {
        return Err(CliError::Usage(format!(
            "need 0 <= tmin < tmax, got tmin = {}, tmax = {tmax}",
            a.tmin
        )));
    }
    Ok(linear_grid(a.tmin, tmax, a.points))
}

fn cmd_decay(a: &DecayArgs, out: &mut dyn Write) -> CliResult {
    let cov = a.covariance.resolve()?;
    let times = decay_grid(a, &cov)?;
    if a.mc == Some(0) {
        return Err(CliError::Usage("--mc needs at least one sample".into()));
    }
    let correction = !a.no_correction;
    let config = PipelineConfig::new(
        DataState::Bloch(BlochVector::new(0.0, 0.0, 1.0)?),
        NoiseChannel::analytic(cov, DephasingAxis::X),
    )
    .with_correction(correction);

    let mut rows = Vec::with_capacity(times.len());
    for &t in &times {
        let analytic = if correction {
            theta_general(&cov, t)
        } else {
            uncorrected_decay(&cov, t)
        };
        let mut row = vec![t, analytic];
        if let Some(samples) = a.mc {
            let mc = run_pipeline_mc(&config, t, samples, a.seed)?;
            row.push(mc.result.theta_measured.unwrap_or(f64::NAN));
            row.push(mc.theta_std_error.unwrap_or(f64::NAN));
        }
        rows.push(row);
    }
    let mut header = vec!["t", "theta_analytic"];
    if a.mc.is_some() {
        header.extend(["theta_mc", "mc_stderr"]);
    }
    write_csv(&a.out, &header, &rows)?;
    let manifest = RunManifest {
        command: "decay".into(),
        parameters: Command::Decay(a.clone()),
        seed: a.mc.map(|_| a.seed),
        samples: a.mc,
        version: env!("CARGO_PKG_VERSION").into(),
        covariance: Some(cov.rows()),
        outputs: vec![a.out.clone()],
    };
    manifest.write(&RunManifest::path_for(&a.out))?;
    emit(out, "rows", rows.len())?;
    emit(out, "output", a.out.display())
}

fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> CliResult {
    let (times, values) = read_series(&a.input, a.column.as_deref())?;
    let measured = DecayCurve::new(times.clone(), values, Provenance::Measured)?;
    let fit = fit_exponential_rate(&measured)?;
    let model = DecayModel::from(a.model);
    let predicted = predict_corrected_curve(fit.rate, model, &times)
        .map_err(|e| CliError::Usage(format!("fitted rate is not a decay: {e}")))?;

    let corrected = match &a.corrected {
        Some(path) => {
            let (ct, cv) = read_series(path, a.corrected_column.as_deref())?;
            let curve = DecayCurve::new(ct, cv, Provenance::Measured)?;
            let scaled = scale_to_rms(&curve, &predicted)?;
            let corr = curve_correlation(&curve, &predicted)?;
            Some((curve, scaled, corr))
        }
        None => None,
    };

    let mut header = vec!["t", "measured", "predicted"];
    if corrected.is_some() {
        header.extend(["corrected", "corrected_scaled"]);
    }
    let rows: Vec<Vec<f64>> = (0..times.len())
        .map(|i| {
            let mut row = vec![times[i], measured.values()[i], predicted.values()[i]];
            if let Some((c, s, _)) = &corrected {
                row.extend([c.values()[i], s.values()[i]]);
            }
            row
        })
        .collect();
    write_csv(&a.out, &header, &rows)?;
    let manifest = RunManifest {
        command: "fit".into(),
        parameters: Command::Fit(a.clone()),
        seed: None,
        samples: None,
        version: env!("CARGO_PKG_VERSION").into(),
        covariance: None,
        outputs: vec![a.out.clone()],
    };
    manifest.write(&RunManifest::path_for(&a.out))?;

    emit(out, "model", model)?;
    emit(out, "rate", format_float(fit.rate))?;
    emit(out, "tau", format_float(fit.tau()))?;
    emit(out, "intercept", format_float(fit.intercept))?;
    emit(
        out,
        "log_fit_correlation",
        format_float(fit.correlation_coefficient),
    )?;
    if let Some((_, _, corr)) = corrected {
        emit(out, "prediction_correlation", format_float(corr))?;
    }
    emit(out, "output", a.out.display())
}

fn format_mixture(m: &AncillaMixture) -> String {
    m.weights()
        .iter()
        .map(|w| format!("{w:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Largest number of zero mixtures listed individually.
const MAX_LISTED_ZEROS: usize = 20;

fn cmd_nogo(a: &NogoArgs, out: &mut dyn Write) -> CliResult {
    let mut covs = vec![a.covariance.resolve()?];
    for path in &a.joint_with {
        covs.push(read_covariance_file(path)?);
    }
    let cert = mixed_ancilla_nogo_joint(&covs, a.step)?;
    emit(out, "covariances", covs.len())?;
    emit(out, "step", format_float(cert.step))?;
    emit(out, "points", cert.points)?;
    for (i, rates) in cert.vertex_rates.iter().enumerate() {
        let rates: Vec<String> = rates.iter().map(|&r| format_float(r)).collect();
        emit(out, &format!("vertex_rates[{i}]"), rates.join(" "))?;
    }
    emit(out, "zeros", cert.zeros.len())?;
    for z in cert.zeros.iter().take(MAX_LISTED_ZEROS) {
        emit(out, "zero", format_mixture(z))?;
    }
    if cert.zeros.len() > MAX_LISTED_ZEROS {
        emit(out, "zeros_not_listed", cert.zeros.len() - MAX_LISTED_ZEROS)?;
    }
    emit(out, "ground_unique", cert.ground_is_unique_zero())?;
    emit(out, "min_margin", format_float(cert.min_margin_off_ground))?;
    emit(out, "max_margin", format_float(cert.max_margin_off_ground))
}

fn cmd_derivatives(a: &DerivativesArgs, out: &mut dyn Write) -> CliResult {
    let cov = a.covariance.resolve()?;
    let d = theta_derivatives_at_zero(&cov);
    emit(out, "first", format_float(d.first))?;
    emit(out, "second", format_float(d.second))?;
    emit(out, "third", format_float(d.third))?;
    emit(out, "third_alternative", format_float(d.third_alternative))?;
    let inflection = match (a.covariance.model, a.covariance.tau) {
        (Some(model), Some(tau)) => Some(inflection_point(model.into(), tau)?),
        _ => {
            let fastest = (0..3).map(|j| cov.matrix()[(j, j)]).fold(0.0, f64::max);
            if fastest > 0.0 {
                find_inflection(&theta_law(&cov), 0.0, 20.0 / fastest).ok()
            } else {
                None
            }
        }
    };
    match inflection {
        Some(t) => emit(out, "inflection", format_float(t)),
        None => emit(out, "inflection", "none"),
    }
}

fn cmd_replay(a: &ReplayArgs, out: &mut dyn Write) -> CliResult {
    let manifest = RunManifest::read(&a.manifest)?;
    let mut command = manifest.parameters;
    match (&mut command, &a.out) {
        (Command::Replay(_), _) => {
            return Err(CliError::Usage("a manifest cannot record a replay".into()))
        }
        (Command::Decay(d), Some(path)) => d.out = path.clone(),
        (Command::Fit(f), Some(path)) => f.out = path.clone(),
        (_, Some(_)) => {
            return Err(CliError::Usage(format!(
                "--out is not meaningful for '{}'",
                command.name()
            )))
        }
        _ => {}
    }
    run(&command, out)
}
