//! Command-line parsing and validation into a [`RunConfig`].

use std::path::PathBuf;

use bayesbin::{Method, ModelKind};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, ValueEnum};

/// Rate fitted to the reference time-of-arrival record, s⁻¹.
pub const REFERENCE_THETA: f64 = 9.16e5;
/// Afterpulsing cut of the reference time-of-arrival record, s.
pub const REFERENCE_TAU_A: f64 = 7.81e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    SimulateToa,
    SimulateHomodyne,
    Bin,
    Diagnose,
    BiasDemo,
    ReplicateToa,
    ReplicateHomodyne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Toa,
    Homodyne,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Toa => ModelKind::Toa,
            ModelArg::Homodyne => ModelKind::Homodyne,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Conventional,
    Bayesian,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Conventional => Method::ConventionalMle,
            MethodArg::Bayesian => Method::Bayesian,
        }
    }
}

fn acceptance_prob(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.5 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("P_a must be in (0.5, 1], got {v}"))
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be finite and >= 0, got {v}"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be finite and > 0, got {v}"))
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must be in [0, 1), got {v}"))
    }
}

/// Bayesian binning of continuous QRNG measurement records.
#[derive(Debug, Parser)]
#[command(name = "bayesbin", version)]
pub struct Cli {
    /// What to do.
    #[arg(value_enum)]
    pub command: Command,
    /// Measurement model of the input record.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum, default_value = "bayesian")]
    pub method: MethodArg,
    /// Bits per symbol, 1..=16.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=16))]
    pub bits: Option<u32>,
    /// Acceptance probability P_a, in (0.5, 1].
    #[arg(long, default_value = "0.95", value_parser = acceptance_prob)]
    pub pa: f64,
    /// Afterpulsing time τ_a in seconds.
    #[arg(long, default_value_t = REFERENCE_TAU_A, value_parser = nonnegative)]
    pub tau_a: f64,
    /// Timing jitter σ_j in seconds (simulation only).
    #[arg(long, default_value = "0", value_parser = nonnegative)]
    pub jitter_sigma: f64,
    /// Detection rate θ in s⁻¹ for simulate-toa.
    #[arg(long, default_value_t = REFERENCE_THETA, value_parser = positive)]
    pub theta: f64,
    /// Vacuum quadrature standard deviation for simulate-homodyne.
    #[arg(long, default_value = "1", value_parser = positive)]
    pub sigma_vac: f64,
    /// Electronic noise standard deviation for simulate-homodyne.
    #[arg(long, default_value = "0.1", value_parser = nonnegative)]
    pub sigma_e: f64,
    /// Number of samples to simulate.
    #[arg(short = 'n', long = "samples")]
    pub sample_count: Option<usize>,
    /// Seed of the simulation random stream.
    #[arg(long, default_value = "0")]
    pub seed: u64,
    /// Sample record for bin, symbol CSV for diagnose.
    #[arg(short = 'i', long = "input")]
    pub input_path: Option<PathBuf>,
    /// Output file, or output directory for replicate-*.
    #[arg(short = 'o', long = "output")]
    pub output_path: Option<PathBuf>,
    /// Judge each measurement against the posterior of the earlier ones.
    #[arg(long)]
    pub online: bool,
    /// Fraction of simulated TOA events replaced by sub-τ_a afterpulses.
    #[arg(long, default_value = "0", value_parser = fraction)]
    pub afterpulse_fraction: f64,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<ModelKind>,
    pub method: Method,
    pub bit_depth: Option<u32>,
    pub acceptance_prob: f64,
    pub tau_a: f64,
    pub jitter_sigma: f64,
    pub theta: f64,
    pub sigma_vac: f64,
    pub sigma_e: f64,
    pub sample_count: Option<usize>,
    pub seed: u64,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub online: bool,
    pub afterpulse_fraction: f64,
}

impl RunConfig {
    pub fn bits(&self) -> u32 {
        self.bit_depth.expect("validated")
    }

    pub fn input(&self) -> &std::path::Path {
        self.input_path.as_deref().expect("validated")
    }

    pub fn output(&self) -> &std::path::Path {
        self.output_path.as_deref().expect("validated")
    }
}

fn usage(kind: ErrorKind, msg: impl std::fmt::Display) -> clap::Error {
    Cli::command().error(kind, msg)
}

fn require<T>(v: &Option<T>, flag: &str, cmd: Command) -> Result<(), clap::Error> {
    if v.is_none() {
        let name = cmd.to_possible_value().expect("no skipped variants");
        return Err(usage(
            ErrorKind::MissingRequiredArgument,
            format!("{} requires {flag}", name.get_name()),
        ));
    }
    Ok(())
}

impl TryFrom<Cli> for RunConfig {
    type Error = clap::Error;

    fn try_from(cli: Cli) -> Result<Self, clap::Error> {
        let cmd = cli.command;
        match cmd {
            Command::SimulateToa | Command::SimulateHomodyne => {
                require(&cli.output_path, "--output", cmd)?;
                if cli.sample_count == Some(0) {
                    return Err(usage(ErrorKind::ValueValidation, "--samples must be at least 1"));
                }
            }
            Command::Bin => {
                require(&cli.model, "--model", cmd)?;
                require(&cli.bits, "--bits", cmd)?;
                require(&cli.input_path, "--input", cmd)?;
                require(&cli.output_path, "--output", cmd)?;
                if cli.online && cli.method != MethodArg::Bayesian {
                    return Err(usage(
                        ErrorKind::ArgumentConflict,
                        "--online requires --method bayesian",
                    ));
                }
            }
            Command::Diagnose => {
                require(&cli.bits, "--bits", cmd)?;
                require(&cli.input_path, "--input", cmd)?;
            }
            Command::BiasDemo | Command::ReplicateToa | Command::ReplicateHomodyne => {}
        }
        if cmd != Command::SimulateToa && cli.afterpulse_fraction > 0.0 {
            return Err(usage(
                ErrorKind::ArgumentConflict,
                "--afterpulse-fraction only applies to simulate-toa",
            ));
        }
        Ok(RunConfig {
            command: cmd,
            model: cli.model.map(Into::into),
            method: cli.method.into(),
            bit_depth: cli.bits,
            acceptance_prob: cli.pa,
            tau_a: cli.tau_a,
            jitter_sigma: cli.jitter_sigma,
            theta: cli.theta,
            sigma_vac: cli.sigma_vac,
            sigma_e: cli.sigma_e,
            sample_count: cli.sample_count,
            seed: cli.seed,
            input_path: cli.input_path,
            output_path: cli.output_path,
            online: cli.online,
            afterpulse_fraction: cli.afterpulse_fraction,
        })
    }
}

/// Parses and validates `argv` (including the program name).
pub fn parse_and_validate<I, S>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    RunConfig::try_from(Cli::try_parse_from(argv)?)
}
