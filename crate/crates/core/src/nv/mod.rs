//! The NV centre: ground triplet `|0⟩, |+⟩, |−⟩` plus the A₂ excited state
//! `|e⟩`, microwave and optical drives, relaxation, and dressed-state algebra.

mod dressed;
mod hamiltonian;
mod relaxation;

use serde::{Deserialize, Serialize};

pub use dressed::{
    cpt_resonance_positions, dressed_energies, dressed_transform, eq1_amplitudes, eq1_state, optical_dark_state_check, DressedAmplitudes,
};
pub use hamiltonian::{build_block_hamiltonian, build_hamiltonian, DriveField, DriveKind, Hamiltonian};
pub use relaxation::{collapse_operators, collapse_operators_block, RelaxationRates};

use crate::{Error, Result};

/// Default ¹⁴N hyperfine satellite offset, MHz.
pub const DEFAULT_HYPERFINE: f64 = 4.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Zero,
    Plus,
    Minus,
    Excited,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Zero, Level::Plus, Level::Minus, Level::Excited];
}

/// Level content of the simulated Hilbert space.
///
/// The canonical order is `|0⟩, |+⟩, |−⟩, |e⟩`; levels that are switched off
/// are dropped and the rest keep their relative order. With hyperfine on the
/// space is three copies of that block, for `m_n = −1, 0, +1` in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Zeeman splitting of `|±⟩`, MHz.
    pub omega_b: f64,
    pub include_excited: bool,
    /// `|0⟩` may be dropped when nothing couples to it (bare Λ runs).
    pub include_zero: bool,
    pub hyperfine: bool,
    /// Offset of the CPT satellites, MHz. Block `m_n` shifts `|±⟩` by `±m_n·A/2`.
    pub hyperfine_splitting: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig { omega_b: 100.0, include_excited: true, include_zero: true, hyperfine: false, hyperfine_splitting: DEFAULT_HYPERFINE }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_b > 0.0) || !self.omega_b.is_finite() {
            return Err(Error::param(format!("omega_b must be positive, got {}", self.omega_b)));
        }
        if !(self.hyperfine_splitting >= 0.0) || !self.hyperfine_splitting.is_finite() {
            return Err(Error::param(format!("hyperfine splitting must be >= 0, got {}", self.hyperfine_splitting)));
        }
        Ok(())
    }

    pub fn levels(&self) -> Vec<Level> {
        Level::ALL
            .into_iter()
            .filter(|l| match l {
                Level::Zero => self.include_zero,
                Level::Excited => self.include_excited,
                _ => true,
            })
            .collect()
    }

    pub fn block_dim(&self) -> usize {
        self.levels().len()
    }

    pub fn n_blocks(&self) -> usize {
        if self.hyperfine {
            3
        } else {
            1
        }
    }

    pub fn dim(&self) -> usize {
        self.block_dim() * self.n_blocks()
    }

    /// Nuclear projections of the blocks, in block order.
    pub fn nuclear_projections(&self) -> Vec<i32> {
        if self.hyperfine {
            vec![-1, 0, 1]
        } else {
            vec![0]
        }
    }

    /// Index of `level` within one block.
    pub fn index(&self, level: Level) -> Option<usize> {
        self.levels().iter().position(|&l| l == level)
    }

    pub(crate) fn require(&self, level: Level) -> Result<usize> {
        self.index(level).ok_or_else(|| Error::param(format!("level {level:?} is not part of the configured basis")))
    }
}
