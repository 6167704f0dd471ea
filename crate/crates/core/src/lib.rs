//! Monte Carlo simulation of KMB09 quantum key distribution with homodyne
//! detection over a free-space optical link.
//!
//! The pipeline for one pulse is: Alice prepares |e_i⟩ (bit 0) or |f_i⟩
//! (bit 1) and announces `i` ([`protocol`]); the channel optionally rotates
//! the polarization ([`channel`]); Bob measures in a random basis
//! ([`states`]) and keeps the pulse when his outcome differs from `i`; the
//! homodyne receiver may flip the decoded bit under a turbulent phase
//! ([`homodyne`]). [`experiment`] drives many pulses and [`cli`] exposes it
//! on the command line.

pub mod channel;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod homodyne;
pub mod protocol;
pub mod states;

pub use error::{Result, SimError};
pub use experiment::{
    efficiency_analytic, enumeration_oracle, run_experiment, simulate, ExperimentConfig,
    OracleResult, Run, RunStats,
};
