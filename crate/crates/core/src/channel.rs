//! Free-space channel: collective-rotation noise on the polarization state and
//! von Kármán random-phase turbulence.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Result, SimError};
use crate::states::{BasisSet, StateVector};

/// Per-pulse collective rotation by `theta`, fired with probability `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationNoiseConfig {
    pub theta: f64,
    pub rho: f64,
    pub enabled: bool,
}

impl Default for RotationNoiseConfig {
    fn default() -> Self {
        Self {
            theta: PI / 4.0,
            rho: 1.0,
            enabled: true,
        }
    }
}

impl RotationNoiseConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() {
            return Err(SimError::config("channel.rotation.theta", "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(SimError::config(
                "channel.rotation.rho",
                format!("{} is not a probability in [0, 1]", self.rho),
            ));
        }
        Ok(())
    }

    /// Whether rotation noise is active and fires for the variate `u`.
    pub fn fires(&self, u: f64) -> bool {
        self.enabled && u < self.rho
    }
}

/// Turbulence parameters for the von Kármán phase spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceConfig {
    /// Inner scale l₀ in metres.
    pub inner_scale: f64,
    /// Outer scale L₀ in metres.
    pub outer_scale: f64,
    /// Spectral exponent α.
    pub alpha: f64,
    /// Coherence radius r_c in metres.
    pub coherence_radius: f64,
    /// Wavelength λ in metres. Reported only.
    pub wavelength: f64,
    /// Link distance L in metres. Reported only.
    pub distance: f64,
    /// Multiplier applied to the spectral value before it is used as a phase.
    pub gain: f64,
    /// Lower κ sampling bound in rad/m; defaults to κ₀ = 2π/L₀.
    pub kappa_min: Option<f64>,
    /// Upper κ sampling bound in rad/m; defaults to κ_m = 2π/l₀.
    pub kappa_max: Option<f64>,
    pub enabled: bool,
}

/// Coherence radius committed to the default configuration.
pub const DEFAULT_COHERENCE_RADIUS: f64 = 0.05;

/// Gain that puts the mean turbulence flip probability at 0.12 for the
/// default spectrum and coherence radius.
pub const DEFAULT_GAIN: f64 = 4.4715;

impl Default for TurbulenceConfig {
    fn default() -> Self {
        Self {
            inner_scale: 0.01,
            outer_scale: 10.0,
            alpha: 5.0 / 3.0,
            coherence_radius: DEFAULT_COHERENCE_RADIUS,
            wavelength: 1500e-9,
            distance: 1000.0,
            gain: DEFAULT_GAIN,
            kappa_min: None,
            kappa_max: None,
            enabled: true,
        }
    }
}

impl TurbulenceConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    /// κ_m = 2π/l₀.
    pub fn kappa_m(&self) -> f64 {
        2.0 * PI / self.inner_scale
    }

    /// κ₀ = 2π/L₀.
    pub fn kappa_0(&self) -> f64 {
        2.0 * PI / self.outer_scale
    }

    /// Effective sampling interval `[kappa_min, kappa_max]`.
    pub fn kappa_bounds(&self) -> (f64, f64) {
        (
            self.kappa_min.unwrap_or_else(|| self.kappa_0()),
            self.kappa_max.unwrap_or_else(|| self.kappa_m()),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SimError::config(
                    key,
                    format!("{v} must be positive and finite"),
                ))
            }
        };
        positive("channel.turbulence.inner_scale", self.inner_scale)?;
        positive("channel.turbulence.outer_scale", self.outer_scale)?;
        positive("channel.turbulence.coherence_radius", self.coherence_radius)?;
        positive("channel.turbulence.wavelength", self.wavelength)?;
        positive("channel.turbulence.distance", self.distance)?;
        if self.inner_scale >= self.outer_scale {
            return Err(SimError::config(
                "channel.turbulence.inner_scale",
                format!(
                    "inner scale {} must be smaller than outer scale {}",
                    self.inner_scale, self.outer_scale
                ),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(SimError::config(
                "channel.turbulence.alpha",
                format!("{} is outside (0, 2)", self.alpha),
            ));
        }
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return Err(SimError::config(
                "channel.turbulence.gain",
                format!("{} must be nonnegative and finite", self.gain),
            ));
        }
        if let Some(k) = self.kappa_min {
            positive("channel.turbulence.kappa_min", k)?;
        }
        if let Some(k) = self.kappa_max {
            positive("channel.turbulence.kappa_max", k)?;
        }
        let (lo, hi) = self.kappa_bounds();
        if lo > hi {
            return Err(SimError::config(
                "channel.turbulence.kappa_min",
                format!("kappa_min {lo} exceeds kappa_max {hi}"),
            ));
        }
        Ok(())
    }
}

/// One turbulence draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub kappa: f64,
    /// Gain-scaled spectral value, used as a phase in radians.
    pub magnitude: f64,
    pub sign: f64,
    /// `sign * magnitude`.
    pub delta: f64,
}

/// Turbulence strength constant `C(α) = α·2^(α−2)·Γ(1+α/2) / (π·Γ(1−α/2))`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(SimError::Domain {
            name: "alpha",
            value: alpha,
            domain: "(0, 2)",
        });
    }
    Ok(alpha * 2f64.powf(alpha - 2.0) * gamma(1.0 + alpha / 2.0) / (PI * gamma(1.0 - alpha / 2.0)))
}

/// Von Kármán phase spectrum
/// `C(α)·r_c^(−α)·exp(−κ²/κ_m²) / (κ² + κ₀²)^(1+α/2)`.
pub fn von_karman_psd(kappa: f64, cfg: &TurbulenceConfig) -> Result<f64> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(SimError::Domain {
            name: "kappa",
            value: kappa,
            domain: "[0, inf)",
        });
    }
    cfg.validate()?;
    Ok(psd_unchecked(kappa, cfg, c_alpha(cfg.alpha)?))
}

/// Spectrum evaluation for a config that has already been validated, with
/// `C(α)` supplied by the caller.
pub(crate) fn psd_unchecked(kappa: f64, cfg: &TurbulenceConfig, c: f64) -> f64 {
    let km = cfg.kappa_m();
    let k0 = cfg.kappa_0();
    let k2 = kappa * kappa;
    c * cfg.coherence_radius.powf(-cfg.alpha) * (-k2 / (km * km)).exp()
        / (k2 + k0 * k0).powf(1.0 + cfg.alpha / 2.0)
}

/// κ on the log-uniform sampling scale for a variate `u ∈ [0, 1)`.
pub fn kappa_from_uniform(cfg: &TurbulenceConfig, u: f64) -> f64 {
    let (lo, hi) = cfg.kappa_bounds();
    lo * (hi / lo).powf(u)
}

/// Draws κ log-uniformly over the configured bounds and converts the spectral
/// value at κ into a signed phase offset.
pub fn sample_phase(cfg: &TurbulenceConfig, u_kappa: f64, u_sign: f64) -> Result<PhaseSample> {
    if !cfg.enabled {
        return Err(SimError::Unsupported(
            "turbulence is disabled; skip phase sampling".into(),
        ));
    }
    let kappa = kappa_from_uniform(cfg, u_kappa);
    let magnitude = cfg.gain * von_karman_psd(kappa, cfg)?;
    Ok(phase_from_parts(kappa, magnitude, u_sign))
}

pub(crate) fn phase_from_parts(kappa: f64, magnitude: f64, u_sign: f64) -> PhaseSample {
    let sign = if u_sign < 0.5 { 1.0 } else { -1.0 };
    PhaseSample {
        kappa,
        magnitude,
        sign,
        delta: sign * magnitude,
    }
}

/// Rotates a two-level state by `theta`: `[[cos, −sin], [sin, cos]]`.
pub fn apply_rotation(state: &StateVector, theta: f64) -> Result<StateVector> {
    if state.dimension() != 2 {
        return Err(SimError::Unsupported(format!(
            "rotation is defined for N = 2 only (got N = {}); use depolarize_replace",
            state.dimension()
        )));
    }
    let (s, c) = theta.sin_cos();
    let a = state.amplitudes();
    Ok(StateVector::from_unitary_image(vec![
        a[0] * c - a[1] * s,
        a[0] * s + a[1] * c,
    ]))
}

/// Replaces the state with one of the 2N basis states, picked uniformly by `u`.
/// Slots 1..=N are e_1..e_N and slots N+1..=2N are f_1..f_N.
pub fn depolarize_replace(_state: &StateVector, bases: &BasisSet, u: f64) -> StateVector {
    let n = bases.dimension();
    let slot = ((u * (2 * n) as f64) as usize).min(2 * n - 1);
    if slot < n {
        bases.e_states()[slot].clone()
    } else {
        bases.f_states()[slot - n].clone()
    }
}

/// Applies the configured rotation noise for one pulse. Returns the channel
/// output and whether the noise fired.
pub fn transmit(
    state: &StateVector,
    bases: &BasisSet,
    noise: &RotationNoiseConfig,
    u_fire: f64,
    u_replace: f64,
) -> Result<(StateVector, bool)> {
    if !noise.fires(u_fire) {
        return Ok((state.clone(), false));
    }
    let out = if state.dimension() == 2 {
        apply_rotation(state, noise.theta)?
    } else {
        depolarize_replace(state, bases, u_replace)
    };
    Ok((out, true))
}
