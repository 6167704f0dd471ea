//! Complex state vectors, the paired e/f measurement bases and Born-rule
//! measurement.
//!
//! Every index that crosses a public surface is 1-based: `e_states[0]` is
//! reported as |e_1⟩.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Tolerance applied to exact-math invariants (norms, overlaps, sums).
pub const EXACT_TOL: f64 = 1e-9;

/// One of the two KMB09 measurement bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisId {
    E,
    F,
}

impl BasisId {
    pub const ALL: [BasisId; 2] = [BasisId::E, BasisId::F];

    /// Maps a uniform variate onto a basis: `u < 0.5` picks E.
    pub fn from_uniform(u: f64) -> Self {
        if u < 0.5 {
            BasisId::E
        } else {
            BasisId::F
        }
    }
}

impl fmt::Display for BasisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisId::E => f.write_str("e"),
            BasisId::F => f.write_str("f"),
        }
    }
}

/// A normalized pure state of an N-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Builds a state from raw amplitudes, rejecting N < 2 and anything whose
    /// squared norm is not 1 within [`EXACT_TOL`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(SimError::InvalidDimension(amplitudes.len()));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > EXACT_TOL {
            return Err(SimError::NotNormalized(norm_sqr));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(SimError::NotNormalized(norm * norm));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    /// Builds a state from real amplitudes.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// The computational basis state |k⟩ (0-based `k`).
    pub(crate) fn basis_state(dimension: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dimension];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dimension() != other.dimension() {
            return Err(SimError::DimensionMismatch {
                expected: self.dimension(),
                actual: other.dimension(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|².
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        self.inner(other).map(|z| z.norm_sqr())
    }

    /// Equality up to a global phase, i.e. |⟨self|other⟩|² = 1.
    pub fn equals_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.overlap(other)
            .map(|o| (o - 1.0).abs() <= tol)
            .unwrap_or(false)
    }

    /// Wraps amplitudes produced by a unitary map without re-validating.
    pub(crate) fn from_unitary_image(amplitudes: Vec<Complex64>) -> Self {
        debug_assert!(
            (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs() <= EXACT_TOL
        );
        Self { amplitudes }
    }
}

/// The e basis (computational) and its discrete-Fourier partner f.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    dimension: usize,
    e_states: Vec<StateVector>,
    f_states: Vec<StateVector>,
}

impl BasisSet {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn e_states(&self) -> &[StateVector] {
        &self.e_states
    }

    pub fn f_states(&self) -> &[StateVector] {
        &self.f_states
    }

    pub fn states(&self, basis: BasisId) -> &[StateVector] {
        match basis {
            BasisId::E => &self.e_states,
            BasisId::F => &self.f_states,
        }
    }

    /// |e_index⟩ or |f_index⟩ with a 1-based index.
    pub fn state(&self, basis: BasisId, index: usize) -> Result<&StateVector> {
        if index == 0 || index > self.dimension {
            return Err(SimError::IndexOutOfRange {
                index,
                dimension: self.dimension,
            });
        }
        Ok(&self.states(basis)[index - 1])
    }
}

/// Builds the e basis and the f basis `f_j[k] = exp(2πi·j·k/N)/√N`.
pub fn build_bases(dimension: usize) -> Result<BasisSet> {
    if dimension < 2 {
        return Err(SimError::InvalidDimension(dimension));
    }
    let n = dimension as f64;
    let scale = 1.0 / n.sqrt();
    let e_states = (0..dimension)
        .map(|k| StateVector::basis_state(dimension, k))
        .collect();
    let f_states = (0..dimension)
        .map(|j| {
            let amplitudes = (0..dimension)
                .map(|k| {
                    // reduce j·k mod N first so the phase stays small for large N
                    let phase = 2.0 * PI * ((j * k) % dimension) as f64 / n;
                    Complex64::from_polar(scale, phase)
                })
                .collect();
            StateVector::from_unitary_image(amplitudes)
        })
        .collect();
    Ok(BasisSet {
        dimension,
        e_states,
        f_states,
    })
}

/// `p_j = |⟨basis_j|s⟩|²` for each basis vector, in basis order.
pub fn born_probabilities(state: &StateVector, basis: &[StateVector]) -> Result<Vec<f64>> {
    if basis.len() != state.dimension() {
        return Err(SimError::DimensionMismatch {
            expected: state.dimension(),
            actual: basis.len(),
        });
    }
    basis.iter().map(|b| b.overlap(state)).collect()
}

/// Returns the smallest 1-based `j` whose cumulative probability exceeds `u`.
///
/// A value of `u` landing exactly on a bin boundary belongs to the next bin.
/// Rounding slack at the top end resolves to the last bin with nonzero
/// probability.
pub fn sample_outcome(probabilities: &[f64], u: f64) -> Result<usize> {
    if probabilities.is_empty() {
        return Err(SimError::MalformedProbabilities("empty".into()));
    }
    if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(SimError::MalformedProbabilities(format!(
            "entry {p} is negative or not finite"
        )));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > EXACT_TOL {
        return Err(SimError::MalformedProbabilities(format!("sum is {total}")));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(SimError::Domain {
            name: "u",
            value: u,
            domain: "[0, 1)",
        });
    }
    let mut cumulative = 0.0;
    for (j, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if cumulative > u {
            return Ok(j + 1);
        }
    }
    let last = probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("probabilities sum to one");
    Ok(last + 1)
}
