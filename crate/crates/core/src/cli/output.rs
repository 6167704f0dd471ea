//! Files written by the runner: `rounds.csv`, `summary.json`, `manifest.json`
//! and `config.toml`.
//!
//! Only the manifest carries wall-clock timestamps, so the other files are
//! byte-identical for identical configurations.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use super::config::config_echo;
use crate::experiment::{efficiency_analytic, enumeration_oracle, ExperimentConfig, Run};
use crate::protocol::ProtocolKind;

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Serialize)]
struct RoundRow {
    round: u64,
    conclusive: u8,
    alice_bit: u8,
    bob_bit: Option<u8>,
    error: u8,
    cum_qber: f64,
    cum_efficiency: f64,
}

pub fn write_rounds_csv<W: io::Write>(run: &Run, out: W) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for (i, r) in run.records.iter().enumerate() {
        wtr.serialize(RoundRow {
            round: r.round,
            conclusive: u8::from(r.conclusive),
            alice_bit: r.alice_bit,
            bob_bit: r.bob_bit,
            error: u8::from(r.is_error()),
            cum_qber: run.stats.qber_series[i],
            cum_efficiency: run.stats.efficiency_series[i],
        })?;
    }
    wtr.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSummary {
    pub expected_efficiency: f64,
    pub expected_qber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub protocol: ProtocolKind,
    pub dimension: usize,
    pub seed: u64,
    pub rounds: u64,
    pub sifted_length: u64,
    pub errors: u64,
    pub qber: f64,
    pub efficiency: f64,
    /// `(N − 1)/(2N)` for KMB09, absent for BB84.
    pub analytic_efficiency: Option<f64>,
    /// Enumeration expectation, absent when the dimension is too large.
    pub oracle: Option<OracleSummary>,
    pub config: ExperimentConfig,
}

impl Summary {
    pub fn new(run: &Run) -> Self {
        let cfg = run.config;
        let analytic_efficiency = match cfg.protocol {
            ProtocolKind::Kmb09 => efficiency_analytic(cfg.dimension).ok(),
            ProtocolKind::Bb84 => None,
        };
        let oracle = enumeration_oracle(&cfg).ok().map(|o| OracleSummary {
            expected_efficiency: o.expected_efficiency,
            expected_qber: o.expected_qber,
        });
        Self {
            protocol: cfg.protocol,
            dimension: cfg.dimension,
            seed: cfg.seed,
            rounds: run.stats.rounds,
            sifted_length: run.stats.sifted,
            errors: run.stats.errors,
            qber: run.stats.qber,
            efficiency: run.stats.efficiency,
            analytic_efficiency,
            oracle,
            config: cfg,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool_version: &'static str,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    /// TOML accepted by `--config` that reproduces the run.
    pub config_echo: String,
    pub summary: &'a Summary,
}

pub fn write_run(dir: &Path, run: &Run, started: String) -> io::Result<Summary> {
    fs::create_dir_all(dir)?;
    let file = fs::File::create(dir.join(ROUNDS_FILE))?;
    write_rounds_csv(run, io::BufWriter::new(file))?;

    let summary = Summary::new(run);
    fs::write(dir.join(SUMMARY_FILE), to_json(&summary)?)?;
    let echo = config_echo(&run.config);
    fs::write(dir.join(CONFIG_FILE), &echo)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: run.config.seed,
        started,
        finished: now(),
        config_echo: echo,
        summary: &summary,
    };
    fs::write(dir.join(MANIFEST_FILE), to_json(&manifest)?)?;
    Ok(summary)
}

fn to_json<T: Serialize>(value: &T) -> io::Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    s.push('\n');
    Ok(s)
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
