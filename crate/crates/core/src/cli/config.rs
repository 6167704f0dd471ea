//! Config file schema and flag overrides.
//!
//! The file is TOML with sections `[protocol]`, `[channel.rotation]`,
//! `[channel.turbulence]`, `[homodyne]` and `[run]`. Every key is optional;
//! missing keys take the defaults of [`ExperimentConfig::default`]. Angles
//! accept radians or multiples of π written as strings (`"pi/4"`,
//! `"3pi/8"`, `"-0.5*pi"`).

use std::f64::consts::PI;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{RotationNoiseConfig, TurbulenceConfig};
use crate::experiment::ExperimentConfig;
use crate::homodyne::{BeatMode, DecisionMode, HomodyneConfig};
use crate::protocol::ProtocolKind;

/// Parses `"pi/4"`, `"3pi/8"`, `"3*pi/8"`, `"-pi"`, `"π/2"` or a plain number.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text
        .trim()
        .to_ascii_lowercase()
        .replace('π', "pi")
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let bad = || format!("cannot parse angle `{text}`");
    let value = match s.find("pi") {
        None => s.parse::<f64>().map_err(|_| bad())?,
        Some(at) => {
            let coef = s[..at].trim_end_matches('*');
            let coef = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            let rest = &s[at + 2..];
            let divisor = match rest {
                "" => 1.0,
                r => r
                    .strip_prefix('/')
                    .ok_or_else(bad)?
                    .parse::<f64>()
                    .map_err(|_| bad())?,
            };
            coef * PI / divisor
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Angle in radians that also deserializes from `"pi/4"`-style strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct AngleVisitor;
        impl Visitor<'_> for AngleVisitor {
            type Value = Angle;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle in radians or a multiple of pi such as \"pi/4\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Angle, E> {
                Ok(Angle(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Angle, E> {
                parse_angle(v).map(Angle).map_err(E::custom)
            }
        }
        d.deserialize_any(AngleVisitor)
    }
}

/// 64-bit seed. TOML integers are signed, so seeds above `i64::MAX` are
/// written as decimal strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed(pub u64);

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct SeedVisitor;
        impl Visitor<'_> for SeedVisitor {
            type Value = Seed;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a nonnegative 64-bit integer")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Seed, E> {
                u64::try_from(v)
                    .map(Seed)
                    .map_err(|_| E::custom("seed must be nonnegative"))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Seed, E> {
                Ok(Seed(v))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Seed, E> {
                v.trim().parse().map(Seed).map_err(E::custom)
            }
        }
        d.deserialize_any(SeedVisitor)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub name: Option<ProtocolKind>,
    pub dimension: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSection {
    pub enabled: Option<bool>,
    pub theta: Option<Angle>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbulenceSection {
    pub enabled: Option<bool>,
    pub inner_scale: Option<f64>,
    pub outer_scale: Option<f64>,
    pub alpha: Option<f64>,
    pub coherence_radius: Option<f64>,
    pub wavelength: Option<f64>,
    pub distance: Option<f64>,
    pub gain: Option<f64>,
    pub kappa_min: Option<f64>,
    pub kappa_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub rotation: Option<RotationSection>,
    pub turbulence: Option<TurbulenceSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomodyneSection {
    pub p_signal: Option<f64>,
    pub p_lo: Option<f64>,
    pub omega_if: Option<f64>,
    pub phi_s: Option<Angle>,
    pub phi_lo: Option<Angle>,
    pub beat_mode: Option<BeatMode>,
    pub decision_mode: Option<DecisionMode>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub iterations: Option<u64>,
    pub seed: Option<Seed>,
    pub workers: Option<usize>,
}

/// On-disk configuration layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub protocol: Option<ProtocolSection>,
    pub channel: Option<ChannelSection>,
    pub homodyne: Option<HomodyneSection>,
    pub run: Option<RunSection>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string().trim_end().to_string())
    }

    /// Overlays the file values on `base`.
    pub fn apply(&self, base: &mut ExperimentConfig) {
        if let Some(p) = &self.protocol {
            set(&mut base.protocol, p.name);
            set(&mut base.dimension, p.dimension);
        }
        if let Some(ch) = &self.channel {
            if let Some(r) = &ch.rotation {
                set(&mut base.rotation.enabled, r.enabled);
                set(&mut base.rotation.theta, r.theta.map(|a| a.0));
                set(&mut base.rotation.rho, r.rho);
            }
            if let Some(t) = &ch.turbulence {
                let dst = &mut base.turbulence;
                set(&mut dst.enabled, t.enabled);
                set(&mut dst.inner_scale, t.inner_scale);
                set(&mut dst.outer_scale, t.outer_scale);
                set(&mut dst.alpha, t.alpha);
                set(&mut dst.coherence_radius, t.coherence_radius);
                set(&mut dst.wavelength, t.wavelength);
                set(&mut dst.distance, t.distance);
                set(&mut dst.gain, t.gain);
                if t.kappa_min.is_some() {
                    dst.kappa_min = t.kappa_min;
                }
                if t.kappa_max.is_some() {
                    dst.kappa_max = t.kappa_max;
                }
            }
        }
        if let Some(h) = &self.homodyne {
            let dst = &mut base.homodyne;
            set(&mut dst.p_signal, h.p_signal);
            set(&mut dst.p_lo, h.p_lo);
            set(&mut dst.omega_if, h.omega_if);
            set(&mut dst.phi_s, h.phi_s.map(|a| a.0));
            set(&mut dst.phi_lo, h.phi_lo.map(|a| a.0));
            set(&mut dst.beat_mode, h.beat_mode);
            set(&mut dst.decision_mode, h.decision_mode);
            set(&mut dst.threshold, h.threshold);
        }
        if let Some(r) = &self.run {
            set(&mut base.iterations, r.iterations);
            set(&mut base.seed, r.seed.map(|s| s.0));
            set(&mut base.workers, r.workers);
        }
    }

    /// Complete file form of a resolved configuration.
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let RotationNoiseConfig {
            theta,
            rho,
            enabled,
        } = cfg.rotation;
        let t: TurbulenceConfig = cfg.turbulence;
        let h: HomodyneConfig = cfg.homodyne;
        Self {
            protocol: Some(ProtocolSection {
                name: Some(cfg.protocol),
                dimension: Some(cfg.dimension),
            }),
            channel: Some(ChannelSection {
                rotation: Some(RotationSection {
                    enabled: Some(enabled),
                    theta: Some(Angle(theta)),
                    rho: Some(rho),
                }),
                turbulence: Some(TurbulenceSection {
                    enabled: Some(t.enabled),
                    inner_scale: Some(t.inner_scale),
                    outer_scale: Some(t.outer_scale),
                    alpha: Some(t.alpha),
                    coherence_radius: Some(t.coherence_radius),
                    wavelength: Some(t.wavelength),
                    distance: Some(t.distance),
                    gain: Some(t.gain),
                    kappa_min: t.kappa_min,
                    kappa_max: t.kappa_max,
                }),
            }),
            homodyne: Some(HomodyneSection {
                p_signal: Some(h.p_signal),
                p_lo: Some(h.p_lo),
                omega_if: Some(h.omega_if),
                phi_s: Some(Angle(h.phi_s)),
                phi_lo: Some(Angle(h.phi_lo)),
                beat_mode: Some(h.beat_mode),
                decision_mode: Some(h.decision_mode),
                threshold: Some(h.threshold),
            }),
            run: Some(RunSection {
                iterations: Some(cfg.iterations),
                seed: Some(Seed(cfg.seed)),
                workers: Some(cfg.workers),
            }),
        }
    }
}

/// TOML text that parses back to exactly `cfg`.
pub fn config_echo(cfg: &ExperimentConfig) -> String {
    toml::to_string(&ConfigFile::from_config(cfg)).expect("config is always serializable")
}

/// Values given on the command line; each one beats the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iterations: Option<u64>,
    pub protocol: Option<ProtocolKind>,
    pub dimension: Option<usize>,
    pub theta: Option<f64>,
    pub rho: Option<f64>,
    pub turbulence: Option<bool>,
    pub gain: Option<f64>,
    pub beat_mode: Option<BeatMode>,
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.iterations, self.iterations);
        set(&mut cfg.protocol, self.protocol);
        set(&mut cfg.dimension, self.dimension);
        set(&mut cfg.rotation.theta, self.theta);
        set(&mut cfg.rotation.rho, self.rho);
        set(&mut cfg.turbulence.enabled, self.turbulence);
        set(&mut cfg.turbulence.gain, self.gain);
        set(&mut cfg.homodyne.beat_mode, self.beat_mode);
        set(&mut cfg.workers, self.workers);
    }
}

/// Defaults, then the file contents, then the flags; the result is validated.
pub fn parse_config(
    file_text: Option<&str>,
    overrides: &Overrides,
) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::default();
    if let Some(text) = file_text {
        ConfigFile::parse(text)?.apply(&mut cfg);
    }
    overrides.apply(&mut cfg);
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}
