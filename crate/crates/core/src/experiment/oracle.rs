//! Exact expectations by enumeration.
//!
//! Every discrete branch of a round (Alice's bit, index or basis, whether
//! rotation noise fires and what it produces, Bob's basis, Bob's outcome) is
//! walked with its probability weight. The turbulence flip rate is
//! integrated over the same log-uniform κ density the sampler draws from.
//! Nothing here touches the random streams, the outcome sampler or the
//! decoder used by the Monte Carlo path.

use num_complex::Complex64;

use super::quadrature;
use super::ExperimentConfig;
use crate::channel::{self, TurbulenceConfig};
use crate::error::{Result, SimError};
use crate::homodyne::{flip_probability, DecisionMode, HomodyneConfig};
use crate::protocol::ProtocolKind;
use crate::states::{build_bases, BasisId, BasisSet, StateVector};

/// Largest dimension the enumeration supports.
pub const MAX_ORACLE_DIMENSION: usize = 8;

const QUADRATURE_TOL: f64 = 1e-10;
const QUADRATURE_PANELS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub expected_efficiency: f64,
    pub expected_qber: f64,
}

/// Probability that detection flips a kept bit, averaged over the phase sign
/// and over κ when turbulence is on.
pub fn expected_flip_probability(
    turbulence: &TurbulenceConfig,
    homodyne: &HomodyneConfig,
) -> Result<f64> {
    let offset = homodyne.static_mismatch();
    let decision = |delta: f64| match homodyne.decision_mode {
        DecisionMode::Probabilistic => flip_probability(delta),
        DecisionMode::Threshold => f64::from(u8::from(delta.cos() < homodyne.threshold)),
    };
    if !turbulence.enabled {
        return Ok(decision(offset));
    }
    turbulence.validate()?;
    let c = channel::c_alpha(turbulence.alpha)?;
    let (lo, hi) = turbulence.kappa_bounds();
    let integrand = |log_kappa: f64| {
        let m = turbulence.gain * channel::psd_unchecked(log_kappa.exp(), turbulence, c);
        0.5 * (decision(offset + m) + decision(offset - m))
    };
    if lo == hi {
        return Ok(integrand(lo.ln()));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let total = quadrature::integrate(integrand, a, b, QUADRATURE_TOL * (b - a), QUADRATURE_PANELS);
    Ok(total / (b - a))
}

/// Weighted channel outputs for one prepared state.
fn channel_branches(
    state: &StateVector,
    bases: &BasisSet,
    cfg: &ExperimentConfig,
) -> Result<Vec<(f64, StateVector)>> {
    let fire = if cfg.rotation.enabled {
        cfg.rotation.rho
    } else {
        0.0
    };
    let mut out = Vec::new();
    if fire < 1.0 {
        out.push((1.0 - fire, state.clone()));
    }
    if fire > 0.0 {
        if bases.dimension() == 2 {
            let (s, c) = cfg.rotation.theta.sin_cos();
            let a: &[Complex64] = state.amplitudes();
            let rotated = StateVector::new(vec![c * a[0] - s * a[1], s * a[0] + c * a[1]])?;
            out.push((fire, rotated));
        } else {
            let n = bases.dimension();
            let w = fire / (2 * n) as f64;
            for candidate in bases.e_states().iter().chain(bases.f_states()) {
                out.push((w, candidate.clone()));
            }
        }
    }
    Ok(out)
}

/// Accumulates kept mass and error mass across branches.
#[derive(Default)]
struct Tally {
    kept: f64,
    errors: f64,
}

impl Tally {
    fn add(&mut self, weight: f64, pre_flip_error: bool, flip: f64) {
        self.kept += weight;
        self.errors += weight * if pre_flip_error { 1.0 - flip } else { flip };
    }

    fn finish(self) -> OracleResult {
        OracleResult {
            expected_efficiency: self.kept,
            expected_qber: if self.kept > 0.0 {
                self.errors / self.kept
            } else {
                0.0
            },
        }
    }
}

fn overlaps(state: &StateVector, basis: &[StateVector]) -> Result<Vec<f64>> {
    basis.iter().map(|b| b.overlap(state)).collect()
}

fn kmb09(cfg: &ExperimentConfig, bases: &BasisSet, flip: f64) -> Result<OracleResult> {
    let n = cfg.dimension;
    let mut tally = Tally::default();
    for alice_bit in 0..2u8 {
        let alice_states = if alice_bit == 0 {
            bases.e_states()
        } else {
            bases.f_states()
        };
        for (index, prepared) in alice_states.iter().enumerate() {
            let w_prep = 0.5 / n as f64;
            for (w_chan, received) in channel_branches(prepared, bases, cfg)? {
                for bob_basis in BasisId::ALL {
                    let bob_bit = if bob_basis == BasisId::E { 1 } else { 0 };
                    let probs = overlaps(&received, bases.states(bob_basis))?;
                    for (outcome, p) in probs.into_iter().enumerate() {
                        if outcome == index {
                            continue;
                        }
                        tally.add(w_prep * w_chan * 0.5 * p, bob_bit != alice_bit, flip);
                    }
                }
            }
        }
    }
    Ok(tally.finish())
}

fn bb84(cfg: &ExperimentConfig, bases: &BasisSet, flip: f64) -> Result<OracleResult> {
    let mut tally = Tally::default();
    for alice_bit in 0..2u8 {
        for basis in BasisId::ALL {
            let prepared = &bases.states(basis)[alice_bit as usize];
            for (w_chan, received) in channel_branches(prepared, bases, cfg)? {
                // only Bob's matching-basis choice (weight 1/2) is kept
                let probs = overlaps(&received, bases.states(basis))?;
                for (outcome, p) in probs.into_iter().enumerate() {
                    tally.add(0.25 * w_chan * 0.5 * p, outcome != alice_bit as usize, flip);
                }
            }
        }
    }
    Ok(tally.finish())
}

/// Expected efficiency and QBER for `cfg`, independent of `iterations`,
/// `seed` and `workers`.
pub fn enumeration_oracle(cfg: &ExperimentConfig) -> Result<OracleResult> {
    cfg.validate()?;
    if cfg.dimension > MAX_ORACLE_DIMENSION {
        return Err(SimError::Unsupported(format!(
            "enumeration oracle supports N <= {MAX_ORACLE_DIMENSION}, got {}",
            cfg.dimension
        )));
    }
    let bases = build_bases(cfg.dimension)?;
    let flip = expected_flip_probability(&cfg.turbulence, &cfg.homodyne)?;
    match cfg.protocol {
        ProtocolKind::Kmb09 => kmb09(cfg, &bases, flip),
        ProtocolKind::Bb84 => bb84(cfg, &bases, flip),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RotationNoiseConfig;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn rotated(protocol: ProtocolKind, theta: f64, rho: f64) -> ExperimentConfig {
        ExperimentConfig {
            protocol,
            rotation: RotationNoiseConfig {
                theta,
                rho,
                enabled: true,
            },
            turbulence: TurbulenceConfig::disabled(),
            ..Default::default()
        }
    }

    fn assert_result(r: OracleResult, eff: f64, qber: f64) {
        assert!((r.expected_efficiency - eff).abs() < 1e-12, "{r:?}");
        assert!((r.expected_qber - qber).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn hand_enumerated_points() {
        assert_result(
            enumeration_oracle(&rotated(ProtocolKind::Kmb09, FRAC_PI_4, 1.0)).unwrap(),
            0.5,
            0.5,
        );
        assert_result(
            enumeration_oracle(&rotated(ProtocolKind::Kmb09, FRAC_PI_2, 1.0)).unwrap(),
            0.75,
            2.0 / 3.0,
        );
    }

    #[test]
    fn noiseless_closed_forms() {
        for n in 2..=8 {
            let r = enumeration_oracle(&ExperimentConfig::noiseless(n, 1, 0)).unwrap();
            let nf = n as f64;
            assert_result(r, (nf - 1.0) / (2.0 * nf), 0.0);
        }
        let bb = ExperimentConfig {
            protocol: ProtocolKind::Bb84,
            ..ExperimentConfig::noiseless(2, 1, 0)
        };
        assert_result(enumeration_oracle(&bb).unwrap(), 0.5, 0.0);
    }

    #[test]
    fn bb84_sin_squared() {
        for k in 0..=4 {
            let theta = k as f64 * PI / 8.0;
            let r = enumeration_oracle(&rotated(ProtocolKind::Bb84, theta, 1.0)).unwrap();
            assert_result(r, 0.5, theta.sin().powi(2));
        }
    }

    #[test]
    fn qber_monotone_in_theta() {
        let mut last = -1.0;
        for k in 0..=40 {
            let theta = k as f64 * FRAC_PI_2 / 40.0;
            let q = enumeration_oracle(&rotated(ProtocolKind::Kmb09, theta, 1.0))
                .unwrap()
                .expected_qber;
            assert!(q >= last - 1e-12, "theta {theta}: {q} < {last}");
            last = q;
        }
    }

    #[test]
    fn default_turbulence_calibrated_to_twelve_percent() {
        let cfg = ExperimentConfig::default();
        let p = expected_flip_probability(&cfg.turbulence, &cfg.homodyne).unwrap();
        assert!((p - 0.12).abs() < 1e-4, "{p}");
    }

    #[test]
    fn flip_probability_without_turbulence() {
        let h = HomodyneConfig::default();
        let t = TurbulenceConfig::disabled();
        assert_eq!(expected_flip_probability(&t, &h).unwrap(), 0.0);
        let h = HomodyneConfig {
            phi_s: FRAC_PI_2,
            ..h
        };
        assert!((expected_flip_probability(&t, &h).unwrap() - 0.5).abs() < 1e-15);
    }

    fn midpoint_flip_rate(t: &TurbulenceConfig, h: &HomodyneConfig, steps: usize) -> f64 {
        let (lo, hi) = t.kappa_bounds();
        let (a, b) = (lo.ln(), hi.ln());
        let width = (b - a) / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            let kappa = (a + (i as f64 + 0.5) * width).exp();
            let m = t.gain * channel::von_karman_psd(kappa, t).unwrap();
            for delta in [h.static_mismatch() + m, h.static_mismatch() - m] {
                acc += match h.decision_mode {
                    DecisionMode::Probabilistic => (1.0 - delta.cos()) / 2.0,
                    DecisionMode::Threshold => f64::from(u8::from(delta.cos() < h.threshold)),
                };
            }
        }
        acc / (2 * steps) as f64
    }

    #[test]
    fn quadrature_matches_midpoint_sum() {
        let t = TurbulenceConfig::default();
        for h in [
            HomodyneConfig::default(),
            HomodyneConfig {
                decision_mode: DecisionMode::Threshold,
                ..Default::default()
            },
            HomodyneConfig {
                phi_s: 0.4,
                ..Default::default()
            },
        ] {
            let quad = expected_flip_probability(&t, &h).unwrap();
            let brute = midpoint_flip_rate(&t, &h, 400_000);
            assert!((quad - brute).abs() < 1e-4, "{quad} vs {brute}");
        }
    }

    #[test]
    fn rejects_large_dimension() {
        assert!(enumeration_oracle(&ExperimentConfig::noiseless(9, 1, 0)).is_err());
    }
}
