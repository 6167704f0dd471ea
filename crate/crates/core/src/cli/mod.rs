//! Command-line runner.
//!
//! Exit codes: 0 on success, 1 for an invalid configuration or usage, 2 when
//! an output file cannot be written.

pub mod config;
pub mod output;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::experiment::{rng::sweep_seed, simulate, ExperimentConfig};
use crate::homodyne::BeatMode;
use crate::protocol::ProtocolKind;
use config::{parse_angle, Overrides};

pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Kmb09,
    Bb84,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BeatModeArg {
    Paper,
    Standard,
}

/// Monte Carlo KMB09/BB84 simulator with homodyne detection over a turbulent
/// free-space channel.
#[derive(Debug, Parser)]
#[command(name = "kmb09-sim", version)]
pub struct Args {
    /// TOML config file
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    #[arg(long)]
    pub dimension: Option<usize>,
    /// Rotation angle in radians or as a multiple of pi, e.g. `pi/4`
    #[arg(long, value_name = "ANGLE", allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, value_enum)]
    pub turbulence: Option<Switch>,
    #[arg(long)]
    pub gain: Option<f64>,
    #[arg(long, value_enum)]
    pub beat_mode: Option<BeatModeArg>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Run once per value, e.g. `theta=0,pi/8,pi/4`. Axes: theta, rho,
    /// iterations, N, gain.
    #[arg(long, value_name = "AXIS=V1,V2,...")]
    pub sweep: Option<String>,
    /// With --sweep, run every value with turbulence on and off and report
    /// both in paired columns.
    #[arg(long, requires = "sweep")]
    pub pair_turbulence: bool,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl Args {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let theta = self
            .theta
            .as_deref()
            .map(parse_angle)
            .transpose()
            .map_err(|e| CliError::Config(format!("--theta: {e}")))?;
        Ok(Overrides {
            seed: self.seed,
            iterations: self.iterations,
            protocol: self.protocol.map(|p| match p {
                ProtocolArg::Kmb09 => ProtocolKind::Kmb09,
                ProtocolArg::Bb84 => ProtocolKind::Bb84,
            }),
            dimension: self.dimension,
            theta,
            rho: self.rho,
            turbulence: self.turbulence.map(|s| s == Switch::On),
            gain: self.gain,
            beat_mode: self.beat_mode.map(|m| match m {
                BeatModeArg::Paper => BeatMode::PaperLiteral,
                BeatModeArg::Standard => BeatMode::Standard,
            }),
            workers: self.workers,
        })
    }

    /// Resolves defaults, the config file and the flags into a validated
    /// configuration.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let text = match &self.config {
            Some(path) => Some(fs::read_to_string(path).map_err(|e| {
                CliError::Io(io::Error::new(
                    e.kind(),
                    format!("cannot read config {}: {e}", path.display()),
                ))
            })?),
            None => None,
        };
        config::parse_config(text.as_deref(), &self.overrides()?).map_err(CliError::Config)
    }
}

/// A parsed `--sweep AXIS=V1,V2,...` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Theta,
    Rho,
    Iterations,
    Dimension,
    Gain,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Theta => "theta",
            SweepAxis::Rho => "rho",
            SweepAxis::Iterations => "iterations",
            SweepAxis::Dimension => "N",
            SweepAxis::Gain => "gain",
        }
    }
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let (axis, values) = text
            .split_once('=')
            .ok_or_else(|| format!("sweep `{text}` must look like AXIS=V1,V2,..."))?;
        let axis = match axis.trim() {
            "theta" => SweepAxis::Theta,
            "rho" => SweepAxis::Rho,
            "iterations" => SweepAxis::Iterations,
            "N" | "n" | "dimension" => SweepAxis::Dimension,
            "gain" => SweepAxis::Gain,
            other => {
                return Err(format!(
                    "unknown sweep axis `{other}` (expected theta, rho, iterations, N or gain)"
                ))
            }
        };
        let values: Vec<String> = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(String::from)
            .collect();
        if values.is_empty() {
            return Err(format!("sweep axis `{}` has no values", axis.name()));
        }
        Ok(Self { axis, values })
    }

    /// `base` with the axis set to the `i`-th value.
    pub fn apply(&self, base: &ExperimentConfig, i: usize) -> Result<ExperimentConfig, String> {
        let raw = &self.values[i];
        let bad = |e: &dyn std::fmt::Display| format!("sweep value `{raw}`: {e}");
        let mut cfg = *base;
        match self.axis {
            SweepAxis::Theta => cfg.rotation.theta = parse_angle(raw).map_err(|e| bad(&e))?,
            SweepAxis::Rho => cfg.rotation.rho = raw.parse().map_err(|e| bad(&e))?,
            SweepAxis::Iterations => cfg.iterations = raw.parse().map_err(|e| bad(&e))?,
            SweepAxis::Dimension => cfg.dimension = raw.parse().map_err(|e| bad(&e))?,
            SweepAxis::Gain => cfg.turbulence.gain = raw.parse().map_err(|e| bad(&e))?,
        }
        cfg.seed = sweep_seed(base.seed, i);
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

/// Runs one configuration and writes its files into `out`.
pub fn run_command(cfg: &ExperimentConfig, out: &Path) -> Result<output::Summary, CliError> {
    let started = output::now();
    let run = simulate(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(output::write_run(out, &run, started)?)
}

#[derive(Debug, serde::Serialize)]
struct SweepRow {
    axis: &'static str,
    value: String,
    seed: u64,
    rounds: u64,
    sifted: u64,
    errors: u64,
    qber: f64,
    efficiency: f64,
}

#[derive(Debug, serde::Serialize)]
struct PairedSweepRow {
    axis: &'static str,
    value: String,
    seed: u64,
    rounds: u64,
    qber_turbulence_on: f64,
    efficiency_turbulence_on: f64,
    qber_turbulence_off: f64,
    efficiency_turbulence_off: f64,
}

/// One run per axis value, each written to `out/run_XX`, plus a combined
/// `sweep.csv`.
pub fn sweep_command(
    base: &ExperimentConfig,
    spec: &SweepSpec,
    pair_turbulence: bool,
    out: &Path,
) -> Result<(), CliError> {
    // resolve every point before running any of them
    let configs = (0..spec.values.len())
        .map(|i| spec.apply(base, i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Config)?;
    fs::create_dir_all(out)?;
    let mut wtr = csv::Writer::from_path(out.join(SWEEP_FILE)).map_err(csv_io)?;
    for (i, cfg) in configs.iter().enumerate() {
        let value = spec.values[i].clone();
        if pair_turbulence {
            let mut on = *cfg;
            on.turbulence.enabled = true;
            let mut off = *cfg;
            off.turbulence.enabled = false;
            let s_on = run_command(&on, &out.join(format!("run_{i:02}_turbulence_on")))?;
            let s_off = run_command(&off, &out.join(format!("run_{i:02}_turbulence_off")))?;
            wtr.serialize(PairedSweepRow {
                axis: spec.axis.name(),
                value,
                seed: cfg.seed,
                rounds: s_on.rounds,
                qber_turbulence_on: s_on.qber,
                efficiency_turbulence_on: s_on.efficiency,
                qber_turbulence_off: s_off.qber,
                efficiency_turbulence_off: s_off.efficiency,
            })
            .map_err(csv_io)?;
        } else {
            let s = run_command(cfg, &out.join(format!("run_{i:02}")))?;
            wtr.serialize(SweepRow {
                axis: spec.axis.name(),
                value,
                seed: cfg.seed,
                rounds: s.rounds,
                sifted: s.sifted_length,
                errors: s.errors,
                qber: s.qber,
                efficiency: s.efficiency,
            })
            .map_err(csv_io)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(io::Error::other(e))
}

fn execute(args: &Args) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    match &args.sweep {
        Some(text) => {
            let spec = SweepSpec::parse(text).map_err(CliError::Config)?;
            sweep_command(&cfg, &spec, args.pair_turbulence, &args.out)
        }
        None => {
            let s = run_command(&cfg, &args.out)?;
            println!(
                "rounds={} sifted={} errors={} qber={:.6} efficiency={:.6}",
                s.rounds, s.sifted_length, s.errors, s.qber, s.efficiency
            );
            Ok(())
        }
    }
}

/// Parses `argv`, runs and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sweep_spec_parsing() {
        let s = SweepSpec::parse("theta=0,pi/8,pi/4").unwrap();
        assert_eq!(s.axis, SweepAxis::Theta);
        assert_eq!(s.values.len(), 3);
        assert!(SweepSpec::parse("theta=").is_err());
        assert!(SweepSpec::parse("theta").is_err());
        assert!(SweepSpec::parse("alpha=1").is_err());
        assert_eq!(
            SweepSpec::parse("N=2,3").unwrap().axis,
            SweepAxis::Dimension
        );
    }

    #[test]
    fn sweep_points_derive_seeds() {
        let base = ExperimentConfig::default();
        let s = SweepSpec::parse("theta=0,3pi/8").unwrap();
        let first = s.apply(&base, 0).unwrap();
        let second = s.apply(&base, 1).unwrap();
        assert_eq!(first.seed, base.seed);
        assert_ne!(second.seed, base.seed);
        assert_eq!(second.rotation.theta, 3.0 * PI / 8.0);
        assert!(SweepSpec::parse("rho=2").unwrap().apply(&base, 0).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with_args(["kmb09-sim", "--bogus"]), 1);
        assert_eq!(main_with_args(["kmb09-sim", "--rho", "1.5"]), 1);
        assert_eq!(main_with_args(["kmb09-sim", "--theta", "banana"]), 1);
    }
}
