//! Monte Carlo runner, run statistics and the analytic references they are
//! checked against.

mod oracle;
pub mod quadrature;
pub mod rng;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, RotationNoiseConfig, TurbulenceConfig};
use crate::error::{Result, SimError};
use crate::homodyne::{self, HomodyneConfig};
use crate::protocol::{self, Decision, ProtocolKind, PulseRecord, SiftedKeyPair};
use crate::states::{self, BasisId, BasisSet};

pub use oracle::{enumeration_oracle, expected_flip_probability, OracleResult};
pub use rng::{derive_round_randomness, RandomnessSource, RoundStream, RoundVariates};

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    pub dimension: usize,
    pub iterations: u64,
    pub seed: u64,
    pub rotation: RotationNoiseConfig,
    pub turbulence: TurbulenceConfig,
    pub homodyne: HomodyneConfig,
    pub workers: usize,
}

pub const DEFAULT_SEED: u64 = 2009;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolKind::Kmb09,
            dimension: 2,
            iterations: 1000,
            seed: DEFAULT_SEED,
            rotation: RotationNoiseConfig::default(),
            turbulence: TurbulenceConfig::default(),
            homodyne: HomodyneConfig::default(),
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    /// A KMB09 configuration with rotation and turbulence switched off.
    pub fn noiseless(dimension: usize, iterations: u64, seed: u64) -> Self {
        Self {
            dimension,
            iterations,
            seed,
            rotation: RotationNoiseConfig::disabled(),
            turbulence: TurbulenceConfig::disabled(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(SimError::config(
                "protocol.dimension",
                format!("{} is below the minimum of 2", self.dimension),
            ));
        }
        if self.protocol == ProtocolKind::Bb84 && self.dimension != 2 {
            return Err(SimError::config(
                "protocol.dimension",
                format!("BB84 requires dimension 2, got {}", self.dimension),
            ));
        }
        if self.iterations == 0 {
            return Err(SimError::config("run.iterations", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(SimError::config("run.workers", "must be at least 1"));
        }
        self.rotation.validate()?;
        self.turbulence.validate()?;
        self.homodyne.validate()
    }
}

/// Totals and per-round cumulative series of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub rounds: u64,
    pub sifted: u64,
    pub errors: u64,
    /// `errors / sifted`, or 0 when nothing was sifted.
    pub qber: f64,
    /// `sifted / rounds`.
    pub efficiency: f64,
    #[serde(skip)]
    pub qber_series: Vec<f64>,
    #[serde(skip)]
    pub efficiency_series: Vec<f64>,
}

impl RunStats {
    pub fn from_records(records: &[PulseRecord]) -> Self {
        let mut sifted = 0u64;
        let mut errors = 0u64;
        let mut qber_series = Vec::with_capacity(records.len());
        let mut efficiency_series = Vec::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.conclusive {
                sifted += 1;
                errors += r.is_error() as u64;
            }
            qber_series.push(ratio(errors, sifted));
            efficiency_series.push(ratio(sifted, i as u64 + 1));
        }
        let rounds = records.len() as u64;
        Self {
            rounds,
            sifted,
            errors,
            qber: ratio(errors, sifted),
            efficiency: ratio(sifted, rounds),
            qber_series,
            efficiency_series,
        }
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// A finished run: every round in order plus its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub config: ExperimentConfig,
    pub records: Vec<PulseRecord>,
    pub stats: RunStats,
}

impl Run {
    pub fn sifted_key(&self) -> SiftedKeyPair {
        let bits: Vec<u8> = self.records.iter().map(|r| r.alice_bit).collect();
        protocol::sift(&self.records, &bits).expect("records carry a bit for every sifted round")
    }
}

/// Analytic KMB09 efficiency `(N − 1)/(2N)`.
pub fn efficiency_analytic(dimension: usize) -> Result<f64> {
    if dimension < 2 {
        return Err(SimError::InvalidDimension(dimension));
    }
    let n = dimension as f64;
    Ok((n - 1.0) / (2.0 * n))
}

struct RoundContext<'a> {
    cfg: &'a ExperimentConfig,
    bases: &'a BasisSet,
    source: &'a RandomnessSource,
}

impl RoundContext<'_> {
    fn simulate(&self, round: u64) -> Result<PulseRecord> {
        let cfg = self.cfg;
        let n = cfg.dimension;
        let v = RoundVariates::draw(&mut self.source.stream(round));
        let alice_bit = u8::from(v.alice_bit >= 0.5);

        let (alice_basis, alice_index, prepared) = match cfg.protocol {
            ProtocolKind::Kmb09 => {
                let index = rng::uniform_index(v.alice_index, n);
                let basis = if alice_bit == 0 {
                    BasisId::E
                } else {
                    BasisId::F
                };
                (
                    basis,
                    index,
                    protocol::alice_prepare(alice_bit, index, self.bases)?,
                )
            }
            ProtocolKind::Bb84 => {
                let basis = BasisId::from_uniform(v.alice_basis);
                let state = protocol::bb84_prepare(alice_bit, basis, self.bases)?;
                (basis, alice_bit as usize + 1, state)
            }
        };

        let (received, rotated) = channel::transmit(
            &prepared,
            self.bases,
            &cfg.rotation,
            v.rotation_fire,
            v.replacement,
        )?;

        let bob_basis = BasisId::from_uniform(v.bob_basis);
        let probs = states::born_probabilities(&received, self.bases.states(bob_basis))?;
        let bob_index = states::sample_outcome(&probs, v.outcome)?;

        let decision = match cfg.protocol {
            ProtocolKind::Kmb09 => protocol::kmb09_decode(alice_index, bob_basis, bob_index, n)?,
            ProtocolKind::Bb84 => {
                protocol::bb84_round(alice_bit, alice_basis, bob_basis, bob_index, n)?
            }
        };

        let (bob_bit, flipped) = match decision {
            Decision::Discard => (None, false),
            Decision::Keep(bit) => {
                let turbulence_delta = if cfg.turbulence.enabled {
                    channel::sample_phase(&cfg.turbulence, v.kappa, v.phase_sign)?.delta
                } else {
                    0.0
                };
                let outcome = homodyne::detect(&cfg.homodyne, turbulence_delta, v.flip)?;
                (Some(bit ^ u8::from(outcome.flipped)), outcome.flipped)
            }
        };

        Ok(PulseRecord {
            round,
            alice_bit,
            alice_index,
            alice_basis,
            bob_basis,
            bob_index,
            conclusive: bob_bit.is_some(),
            bob_bit,
            rotated,
            flipped_by_detection: flipped,
        })
    }
}

/// Runs every round of the configured protocol. Rounds are numbered from 1
/// and the result depends only on the config, never on `workers`.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Run> {
    cfg.validate()?;
    let bases = states::build_bases(cfg.dimension)?;
    let source = RandomnessSource::new(cfg.seed);
    let ctx = RoundContext {
        cfg,
        bases: &bases,
        source: &source,
    };
    let records = if cfg.workers <= 1 {
        (1..=cfg.iterations)
            .map(|r| ctx.simulate(r))
            .collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| SimError::config("run.workers", e.to_string()))?;
        pool.install(|| {
            (1..=cfg.iterations)
                .into_par_iter()
                .map(|r| ctx.simulate(r))
                .collect::<Result<Vec<_>>>()
        })?
    };
    let stats = RunStats::from_records(&records);
    Ok(Run {
        config: *cfg,
        records,
        stats,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunStats> {
    simulate(cfg).map(|run| run.stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn within_sigmas(observed: f64, p: f64, n: u64, k: f64) -> bool {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        (observed - p).abs() <= k * sigma
    }

    #[test]
    fn analytic_efficiency() {
        assert_eq!(efficiency_analytic(2).unwrap(), 0.25);
        assert!((efficiency_analytic(3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((efficiency_analytic(10).unwrap() - 0.45).abs() < 1e-15);
        assert!(efficiency_analytic(1).is_err());
    }

    #[test]
    fn invalid_config_rejected_before_work() {
        let cfg = ExperimentConfig {
            protocol: ProtocolKind::Bb84,
            dimension: 3,
            ..Default::default()
        };
        assert!(simulate(&cfg).is_err());
        let cfg = ExperimentConfig {
            iterations: 0,
            ..Default::default()
        };
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn noiseless_run_is_error_free() {
        for n in [2, 3, 5] {
            let run = simulate(&ExperimentConfig::noiseless(n, 5_000, 17)).unwrap();
            assert_eq!(run.stats.errors, 0);
            assert_eq!(run.stats.qber, 0.0);
            let eta = efficiency_analytic(n).unwrap();
            assert!(within_sigmas(run.stats.efficiency, eta, 5_000, 4.0));
        }
    }

    #[test]
    fn record_invariants_hold() {
        let cfg = ExperimentConfig {
            dimension: 3,
            iterations: 3_000,
            ..Default::default()
        };
        let run = simulate(&cfg).unwrap();
        for r in &run.records {
            assert_eq!(r.conclusive, r.bob_index != r.alice_index);
            assert_eq!(r.bob_bit.is_some(), r.conclusive);
            if !r.conclusive {
                assert!(!r.flipped_by_detection);
            }
        }
        let key = run.sifted_key();
        assert_eq!(key.len() as u64, run.stats.sifted);
        assert_eq!(key.errors() as u64, run.stats.errors);
    }

    #[test]
    fn series_end_at_totals() {
        let run = simulate(&ExperimentConfig::default()).unwrap();
        let s = &run.stats;
        assert_eq!(s.qber_series.len() as u64, s.rounds);
        assert_eq!(s.efficiency_series.len() as u64, s.rounds);
        assert_eq!(*s.qber_series.last().unwrap(), s.qber);
        assert_eq!(*s.efficiency_series.last().unwrap(), s.efficiency);
    }

    #[test]
    fn key_length_near_quarter_of_rounds() {
        let run = simulate(&ExperimentConfig::noiseless(2, 100_000, 99)).unwrap();
        let key = run.sifted_key();
        let sigma = (100_000f64 * 0.25 * 0.75).sqrt();
        assert!(
            (key.len() as f64 - 25_000.0).abs() < 3.0 * sigma,
            "{}",
            key.len()
        );
        assert_eq!(key.errors(), 0);
    }

    #[test]
    fn workers_do_not_change_results() {
        let base = ExperimentConfig {
            iterations: 4_000,
            ..Default::default()
        };
        let one = simulate(&base).unwrap();
        let many = simulate(&ExperimentConfig { workers: 8, ..base }).unwrap();
        assert_eq!(one.records, many.records);
        assert_eq!(one.stats, many.stats);
    }

    #[test]
    fn bb84_quarter_pi_gives_half_qber() {
        let cfg = ExperimentConfig {
            protocol: ProtocolKind::Bb84,
            iterations: 20_000,
            rotation: RotationNoiseConfig {
                theta: FRAC_PI_4,
                rho: 1.0,
                enabled: true,
            },
            turbulence: TurbulenceConfig::disabled(),
            ..Default::default()
        };
        let s = run_experiment(&cfg).unwrap();
        assert!(within_sigmas(s.efficiency, 0.5, s.rounds, 4.0));
        assert!(within_sigmas(s.qber, 0.5, s.sifted, 4.0));
    }
}
