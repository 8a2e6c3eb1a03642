use serde::{Deserialize, Serialize};

use super::{Level, SystemConfig};
use crate::quantum::{CMatrix, Operator, C64};
use crate::{angular, Error, Result};

/// Residual loop detuning (MHz) below which a closed drive loop is static.
const LOOP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveKind {
    Microwave,
    Optical,
}

/// A coherent field on one transition, `(Ω/2) e^{iφ} |upper⟩⟨lower| + h.c.`
/// in the frame co-rotating with the field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveField {
    pub kind: DriveKind,
    pub lower: Level,
    pub upper: Level,
    /// Rabi frequency, MHz.
    pub rabi: f64,
    /// Field frequency minus transition frequency, MHz.
    pub detuning: f64,
    /// Radians.
    pub phase: f64,
}

impl DriveField {
    /// Microwave on `|0⟩ ↔ target`.
    pub fn microwave(target: Level, rabi: f64, detuning: f64) -> Self {
        DriveField { kind: DriveKind::Microwave, lower: Level::Zero, upper: target, rabi, detuning, phase: 0.0 }
    }

    /// Optical field on `from ↔ |e⟩`.
    pub fn optical(from: Level, rabi: f64, detuning: f64, phase: f64) -> Self {
        DriveField { kind: DriveKind::Optical, lower: from, upper: Level::Excited, rabi, detuning, phase }
    }

    fn label(&self) -> String {
        format!("{:?}<->{:?}", self.lower, self.upper)
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            DriveKind::Microwave => self.lower == Level::Zero && matches!(self.upper, Level::Plus | Level::Minus),
            DriveKind::Optical => matches!(self.lower, Level::Plus | Level::Minus) && self.upper == Level::Excited,
        };
        if !ok {
            return Err(Error::ForbiddenTransition(format!("{:?} {}", self.kind, self.label())));
        }
        if !(self.rabi >= 0.0) || !self.rabi.is_finite() {
            return Err(Error::param(format!("Rabi frequency must be >= 0, got {}", self.rabi)));
        }
        if !self.detuning.is_finite() || !self.phase.is_finite() {
            return Err(Error::param(format!("non-finite detuning or phase on {}", self.label())));
        }
        Ok(())
    }

    /// Position in the canonical order mw(+), mw(−), σ₊ (|−⟩↔|e⟩), σ₋ (|+⟩↔|e⟩).
    fn rank(&self) -> usize {
        match (self.lower, self.upper) {
            (Level::Zero, Level::Plus) => 0,
            (Level::Zero, Level::Minus) => 1,
            (Level::Minus, Level::Excited) => 2,
            _ => 3,
        }
    }
}

/// `H(t) = h_static + h_osc e^{i·freq·t} + h.c.`, rad/μs.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub h_static: Operator,
    pub h_osc: Option<(Operator, f64)>,
}

/// Rotating-frame Hamiltonian of a single `m_n` block.
///
/// Each level gets a frame frequency by walking the drives in canonical order
/// from the first level of the block; a drive that closes a loop carries the
/// leftover detuning as the oscillating term.
pub fn build_block_hamiltonian(cfg: &SystemConfig, drives: &[DriveField], delta_n: f64, delta_opt: f64, m_n: i32) -> Result<Hamiltonian> {
    cfg.validate()?;
    let levels = cfg.levels();
    let d = levels.len();
    let mut ordered: Vec<&DriveField> = Vec::with_capacity(drives.len());
    for dr in drives {
        dr.validate()?;
        if ordered.iter().any(|o| o.rank() == dr.rank()) {
            return Err(Error::DuplicateDrive(dr.label()));
        }
        cfg.require(dr.lower)?;
        cfg.require(dr.upper)?;
        ordered.push(dr);
    }
    ordered.sort_by_key(|dr| dr.rank());

    let mut frame: Vec<Option<f64>> = vec![None; d];
    let mut closing: Option<(&DriveField, f64)> = None;
    let mut pending = ordered.clone();
    frame[0] = Some(0.0);
    loop {
        let before = pending.len();
        let mut rest = Vec::new();
        for dr in pending {
            let (lo, up) = (cfg.index(dr.lower).unwrap(), cfg.index(dr.upper).unwrap());
            match (frame[lo], frame[up]) {
                (Some(g), None) => frame[up] = Some(g + dr.detuning),
                (None, Some(g)) => frame[lo] = Some(g - dr.detuning),
                (Some(gl), Some(gu)) => {
                    let r = dr.detuning - (gu - gl);
                    if r.abs() > LOOP_TOL {
                        closing = Some((dr, r));
                    }
                }
                (None, None) => rest.push(dr),
            }
        }
        if rest.is_empty() {
            break;
        }
        if rest.len() == before {
            // disconnected component: anchor it and keep going
            let lo = cfg.index(rest[0].lower).unwrap();
            frame[lo] = Some(0.0);
        }
        pending = rest;
    }

    let half_hf = 0.5 * m_n as f64 * cfg.hyperfine_splitting;
    let mut h = CMatrix::zeros(d, d);
    for (i, lvl) in levels.iter().enumerate() {
        let shift = match lvl {
            Level::Zero => 0.0,
            Level::Plus => delta_n + half_hf,
            Level::Minus => -(delta_n + half_hf),
            Level::Excited => delta_opt,
        };
        h[(i, i)] = C64::new(angular(shift - frame[i].unwrap_or(0.0)), 0.0);
    }
    let mut h_osc = None;
    for dr in &ordered {
        let (lo, up) = (cfg.index(dr.lower).unwrap(), cfg.index(dr.upper).unwrap());
        let c = C64::from_polar(angular(dr.rabi / 2.0), dr.phase);
        match closing {
            Some((cd, r)) if std::ptr::eq(cd, *dr) => {
                let mut m = CMatrix::zeros(d, d);
                m[(up, lo)] = c;
                h_osc = Some((Operator::new(m)?, -angular(r)));
            }
            _ => {
                h[(up, lo)] += c;
                h[(lo, up)] += c.conj();
            }
        }
    }
    Ok(Hamiltonian { h_static: Operator::new(h)?, h_osc })
}

/// Full Hamiltonian; with hyperfine on, the direct sum over `m_n = −1, 0, +1`.
pub fn build_hamiltonian(cfg: &SystemConfig, drives: &[DriveField], delta_n: f64, delta_opt: f64) -> Result<Hamiltonian> {
    let blocks = cfg
        .nuclear_projections()
        .into_iter()
        .map(|m| build_block_hamiltonian(cfg, drives, delta_n, delta_opt, m))
        .collect::<Result<Vec<_>>>()?;
    if blocks.len() == 1 {
        return Ok(blocks.into_iter().next().unwrap());
    }
    let h_static = Operator::direct_sum(&blocks.iter().map(|b| b.h_static.clone()).collect::<Vec<_>>());
    let h_osc = match &blocks[0].h_osc {
        None => None,
        Some((_, f)) => {
            let ops: Vec<Operator> = blocks.iter().map(|b| b.h_osc.as_ref().unwrap().0.clone()).collect();
            Some((Operator::direct_sum(&ops), *f))
        }
    };
    Ok(Hamiltonian { h_static, h_osc })
}
