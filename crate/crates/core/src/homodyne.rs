//! Homodyne receiver: beat power between the signal and the local oscillator
//! and the bit flip caused by a phase mismatch.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// How the interference cross term is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeatMode {
    /// `2·√(P_S + P_LO)·cos(…)`, as the receiver equation is usually printed
    /// in this model.
    #[serde(rename = "paper", alias = "paper_literal")]
    PaperLiteral,
    /// `2·√(P_S·P_LO)·cos(…)`, the textbook coherent-detection cross term.
    Standard,
}

/// How a phase mismatch turns into a decoded-bit flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionMode {
    /// Flip with probability `(1 − cos Δφ)/2`.
    Probabilistic,
    /// Flip whenever `cos Δφ < threshold`.
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneConfig {
    pub p_signal: f64,
    pub p_lo: f64,
    /// Intermediate frequency; homodyne operation means 0.
    pub omega_if: f64,
    pub phi_s: f64,
    pub phi_lo: f64,
    pub beat_mode: BeatMode,
    pub decision_mode: DecisionMode,
    pub threshold: f64,
}

impl Default for HomodyneConfig {
    fn default() -> Self {
        Self {
            p_signal: 3.0,
            p_lo: 8.0,
            omega_if: 0.0,
            phi_s: 0.0,
            phi_lo: 0.0,
            beat_mode: BeatMode::PaperLiteral,
            decision_mode: DecisionMode::Probabilistic,
            threshold: 0.0,
        }
    }
}

impl HomodyneConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("homodyne.p_signal", self.p_signal),
            ("homodyne.p_lo", self.p_lo),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::config(
                    key,
                    format!("power {v} must be nonnegative"),
                ));
            }
        }
        if self.omega_if != 0.0 {
            return Err(SimError::config(
                "homodyne.omega_if",
                format!(
                    "{} is nonzero; homodyne detection requires 0",
                    self.omega_if
                ),
            ));
        }
        for (key, v) in [
            ("homodyne.phi_s", self.phi_s),
            ("homodyne.phi_lo", self.phi_lo),
        ] {
            if !v.is_finite() {
                return Err(SimError::config(key, "must be finite"));
            }
        }
        if !(-1.0..=1.0).contains(&self.threshold) {
            return Err(SimError::config(
                "homodyne.threshold",
                format!("{} is outside [-1, 1]", self.threshold),
            ));
        }
        Ok(())
    }

    /// Static part of the phase mismatch, `Φ_S − Φ_LO`.
    pub fn static_mismatch(&self) -> f64 {
        self.phi_s - self.phi_lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOutcome {
    pub power: f64,
    /// Total mismatch `Φ_S ± Φ(κ) − Φ_LO`.
    pub delta_phase: f64,
    pub flipped: bool,
}

/// Received beat power `P_S + P_LO + 2·X·cos(ω_IF + Φ_S + δ − Φ_LO)`, where
/// `X` depends on the beat mode.
pub fn mixed_power(cfg: &HomodyneConfig, turbulence_delta: f64) -> Result<f64> {
    if cfg.p_signal < 0.0 || cfg.p_lo < 0.0 {
        return Err(SimError::Domain {
            name: "power",
            value: cfg.p_signal.min(cfg.p_lo),
            domain: "[0, inf)",
        });
    }
    let cross = match cfg.beat_mode {
        BeatMode::PaperLiteral => (cfg.p_signal + cfg.p_lo).sqrt(),
        BeatMode::Standard => (cfg.p_signal * cfg.p_lo).sqrt(),
    };
    let phase = cfg.omega_if + cfg.phi_s + turbulence_delta - cfg.phi_lo;
    Ok(cfg.p_signal + cfg.p_lo + 2.0 * cross * phase.cos())
}

pub fn flip_probability(delta_phase: f64) -> f64 {
    ((1.0 - delta_phase.cos()) / 2.0).clamp(0.0, 1.0)
}

pub fn decide_flip(cfg: &HomodyneConfig, delta_phase: f64, u: f64) -> bool {
    match cfg.decision_mode {
        DecisionMode::Probabilistic => u < flip_probability(delta_phase),
        DecisionMode::Threshold => delta_phase.cos() < cfg.threshold,
    }
}

/// Full detection step for one conclusive pulse.
pub fn detect(cfg: &HomodyneConfig, turbulence_delta: f64, u: f64) -> Result<DetectionOutcome> {
    let delta_phase = cfg.static_mismatch() + turbulence_delta;
    Ok(DetectionOutcome {
        power: mixed_power(cfg, turbulence_delta)?,
        delta_phase,
        flipped: decide_flip(cfg, delta_phase, u),
    })
}
