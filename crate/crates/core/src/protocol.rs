//! KMB09 state preparation, index-based decoding and sifting, plus the BB84
//! baseline that runs over the same channel.
//!
//! KMB09 decoding table (announced index `i`, Bob's outcome):
//!
//! | outcome     | e_j, j ≠ i | e_i | f_j, j ≠ i | f_i |
//! |-------------|------------|-----|------------|-----|
//! | decoded bit | 1          | ×   | 0          | ×   |

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::states::{BasisId, BasisSet, StateVector};

/// Which protocol a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Kmb09,
    Bb84,
}

impl std::str::FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kmb09" => Ok(ProtocolKind::Kmb09),
            "bb84" => Ok(ProtocolKind::Bb84),
            other => Err(format!(
                "unknown protocol `{other}` (expected kmb09 or bb84)"
            )),
        }
    }
}

/// Bob's interpretation of a single pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// KMB09 conclusive event or BB84 matching-basis event.
    Keep(u8),
    Discard,
}

impl Decision {
    pub fn bit(self) -> Option<u8> {
        match self {
            Decision::Keep(b) => Some(b),
            Decision::Discard => None,
        }
    }
}

/// One protocol round. Indices are 1-based.
///
/// For BB84 `alice_index` is the 1-based label of the prepared state within
/// Alice's basis (bit + 1) and `conclusive` means the bases matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseRecord {
    pub round: u64,
    pub alice_bit: u8,
    pub alice_index: usize,
    pub alice_basis: BasisId,
    pub bob_basis: BasisId,
    pub bob_index: usize,
    pub conclusive: bool,
    pub bob_bit: Option<u8>,
    pub rotated: bool,
    pub flipped_by_detection: bool,
}

impl PulseRecord {
    /// A sifted bit that disagrees with Alice's bit.
    pub fn is_error(&self) -> bool {
        self.bob_bit.is_some_and(|b| b != self.alice_bit)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SiftedKeyPair {
    pub alice_key: Vec<u8>,
    pub bob_key: Vec<u8>,
}

impl SiftedKeyPair {
    pub fn len(&self) -> usize {
        self.alice_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_key.is_empty()
    }

    pub fn errors(&self) -> usize {
        self.alice_key
            .iter()
            .zip(&self.bob_key)
            .filter(|(a, b)| a != b)
            .count()
    }
}

fn check_bit(bit: u8) -> Result<()> {
    if bit > 1 {
        return Err(SimError::Domain {
            name: "bit",
            value: bit as f64,
            domain: "{0, 1}",
        });
    }
    Ok(())
}

fn check_index(index: usize, dimension: usize) -> Result<()> {
    if index == 0 || index > dimension {
        return Err(SimError::IndexOutOfRange { index, dimension });
    }
    Ok(())
}

/// Bit 0 is encoded as |e_index⟩, bit 1 as |f_index⟩.
pub fn alice_prepare(bit: u8, index: usize, bases: &BasisSet) -> Result<StateVector> {
    check_bit(bit)?;
    let basis = if bit == 0 { BasisId::E } else { BasisId::F };
    bases.state(basis, index).cloned()
}

/// Outcome equal to the announced index is discarded; any other outcome
/// decodes to 1 in the e basis and 0 in the f basis.
pub fn kmb09_decode(
    announced_index: usize,
    bob_basis: BasisId,
    outcome_index: usize,
    dimension: usize,
) -> Result<Decision> {
    check_index(announced_index, dimension)?;
    check_index(outcome_index, dimension)?;
    if outcome_index == announced_index {
        return Ok(Decision::Discard);
    }
    Ok(match bob_basis {
        BasisId::E => Decision::Keep(1),
        BasisId::F => Decision::Keep(0),
    })
}

/// BB84 sifting for one pulse: mismatched bases are discarded, otherwise
/// outcome `k` decodes to bit `k − 1`.
pub fn bb84_round(
    bit: u8,
    alice_basis: BasisId,
    bob_basis: BasisId,
    outcome_index: usize,
    dimension: usize,
) -> Result<Decision> {
    if dimension != 2 {
        return Err(SimError::Unsupported(format!(
            "BB84 requires N = 2, got N = {dimension}"
        )));
    }
    check_bit(bit)?;
    check_index(outcome_index, 2)?;
    if alice_basis != bob_basis {
        return Ok(Decision::Discard);
    }
    Ok(Decision::Keep((outcome_index - 1) as u8))
}

/// BB84 state for `bit` in `basis`: |e_{bit+1}⟩ or |f_{bit+1}⟩.
pub fn bb84_prepare(bit: u8, basis: BasisId, bases: &BasisSet) -> Result<StateVector> {
    if bases.dimension() != 2 {
        return Err(SimError::Unsupported(format!(
            "BB84 requires N = 2, got N = {}",
            bases.dimension()
        )));
    }
    check_bit(bit)?;
    bases.state(basis, bit as usize + 1).cloned()
}

/// Keeps exactly the conclusive rounds, pairing Alice's bit with Bob's.
pub fn sift(records: &[PulseRecord], alice_bits: &[u8]) -> Result<SiftedKeyPair> {
    if records.len() != alice_bits.len() {
        return Err(SimError::DimensionMismatch {
            expected: records.len(),
            actual: alice_bits.len(),
        });
    }
    let mut key = SiftedKeyPair::default();
    for (record, &alice_bit) in records.iter().zip(alice_bits) {
        if !record.conclusive {
            continue;
        }
        let bob_bit = record.bob_bit.ok_or_else(|| {
            SimError::Unsupported(format!(
                "round {} is conclusive but has no bit",
                record.round
            ))
        })?;
        key.alice_key.push(alice_bit);
        key.bob_key.push(bob_bit);
    }
    Ok(key)
}
