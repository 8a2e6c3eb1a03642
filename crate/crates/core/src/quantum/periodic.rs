//! Cycle-averaged steady state of a generator with a single oscillating term,
//!
//! `L(t) = L₀ + L₊ e^{iωt} + L₋ e^{-iωt}`.
//!
//! The asymptotic state is periodic, `ρ(t) = Σₙ ρₙ e^{inωt}`, with
//! `(L₀ - inω) ρₙ + L₊ ρₙ₋₁ + L₋ ρₙ₊₁ = 0`. Writing `ρₙ = Sₙ ρₙ₋₁` for `n > 0`
//! (and the mirror relation for `n < 0`) turns this into matrix continued
//! fractions that fold every harmonic into an effective static generator for
//! `ρ₀`, the average over one period.

use super::liouvillian::{build_liouvillian, commutator_superoperator, steady_state, CollapseOp, Liouvillian};
use super::operator::{max_abs_diff, CMatrix, DensityMatrix, Operator, C64};
use crate::{Error, Result};

const START_HARMONICS: usize = 8;
const MAX_HARMONICS: usize = 1024;
const HARMONIC_TOL: f64 = 1e-11;

/// `H(t) = H_static + H_osc e^{iωt} + h.c.` with dissipation.
#[derive(Clone, Debug)]
pub struct PeriodicDrive {
    pub l0: Liouvillian,
    l_plus: CMatrix,
    l_minus: CMatrix,
    /// ω in rad/μs.
    pub freq: f64,
}

impl PeriodicDrive {
    pub fn new(h_static: &Operator, h_osc: &Operator, freq: f64, collapse_ops: &[CollapseOp]) -> Result<Self> {
        if h_osc.dim() != h_static.dim() {
            return Err(Error::DimensionMismatch { expected: h_static.dim(), found: h_osc.dim() });
        }
        Ok(PeriodicDrive {
            l0: build_liouvillian(h_static, collapse_ops)?,
            l_plus: commutator_superoperator(h_osc),
            l_minus: commutator_superoperator(&h_osc.adjoint()),
            freq,
        })
    }

    /// Generator frozen at time `t`.
    pub fn at(&self, t: f64) -> Liouvillian {
        let ph = C64::from_polar(1.0, self.freq * t);
        let m = self.l0.matrix() + &self.l_plus * ph + &self.l_minus * ph.conj();
        Liouvillian::from_matrix(self.l0.dim(), m).expect("dimensions fixed at construction")
    }

    fn effective_generator(&self, harmonics: usize) -> Result<Liouvillian> {
        let n = self.l0.matrix().nrows();
        let id = CMatrix::identity(n, n);
        let fold = |sign: f64, up: &CMatrix, down: &CMatrix| -> Result<CMatrix> {
            let mut s = CMatrix::zeros(n, n);
            for k in (1..=harmonics).rev() {
                let shift = C64::new(0.0, -sign * k as f64 * self.freq);
                let m: CMatrix = self.l0.matrix() + &id * shift + down * &s;
                let lu = m.lu();
                s = -lu.solve(up).ok_or(Error::SingularNormalEquations { condition: f64::INFINITY })?;
            }
            Ok(down * s)
        };
        let pos = fold(1.0, &self.l_plus, &self.l_minus)?;
        let neg = fold(-1.0, &self.l_minus, &self.l_plus)?;
        Liouvillian::from_matrix(self.l0.dim(), self.l0.matrix() + pos + neg)
    }
}

/// Time average over one drive period of the asymptotic periodic state.
///
/// With `freq == 0` the generator is static and this is the ordinary steady
/// state of `L₀ + L₊ + L₋`.
pub fn cycle_averaged_steady_state(drive: &PeriodicDrive) -> Result<DensityMatrix> {
    if drive.freq == 0.0 {
        return steady_state(&drive.at(0.0));
    }
    let mut k = START_HARMONICS;
    let mut prev = steady_state(&drive.effective_generator(k)?)?;
    loop {
        let k2 = 2 * k;
        let next = steady_state(&drive.effective_generator(k2)?)?;
        let change = max_abs_diff(prev.matrix(), next.matrix());
        if change <= HARMONIC_TOL {
            return Ok(next);
        }
        if k2 >= MAX_HARMONICS {
            return Err(Error::HarmonicTruncation { harmonics: k2, change });
        }
        prev = next;
        k = k2;
    }
}
