//! Measurements: CPT spectra, Rabi calibration, linewidth sweeps and the
//! closed-form Λ-system coherence.

mod calibrate;
mod cpt;
mod rabi;
mod sweeps;

pub use calibrate::{bare_fwhm, calibrate_sigma, CalibrationSetup};
pub use cpt::{cpt_drives, cpt_spectrum, CptDrive, InitialState, LoopPhase, Mode, PulseSchedule};
pub use rabi::{rabi_trace, RabiTrace};
pub use sweeps::{
    fit_resonances, linewidth_vs_omega_m, linewidth_vs_power, linewidths_vs_omega_m, splitting_vs_omega_m, PointStatus, Resonance,
    ResonanceFit, Scan, SplittingPoint, SplittingResult, SweepContext, SweepPoint, SweepResult, SweepVariable,
};

use crate::quantum::C64;
use crate::{Error, Result};

/// Rabi frequency (MHz) per √nW of incident optical power.
pub const DEFAULT_RABI_PER_SQRT_NW: f64 = 0.74;

/// Steady-state `ρ_{−+}` of a Λ system with lower-state splitting `omega_0`,
/// both fields at Rabi frequency `omega_r`, optical decoherence `gamma`, spin
/// decoherence `gamma_s` and population differences `n_plus`, `n_minus`:
///
/// `ρ_{−+} = −Ω²(N₊ + N₋)/(4γ) / [i(δ − ω₀) + γ_s + Ω²/(2γ)]`.
///
/// Inputs are ordinary frequencies (MHz); the expression is homogeneous of
/// degree zero so the 2π factors cancel.
pub fn analytic_cpt(delta: f64, omega_0: f64, omega_r: f64, gamma: f64, gamma_s: f64, n_plus: f64, n_minus: f64) -> Result<C64> {
    if !(gamma > 0.0) {
        return Err(Error::param(format!("optical decoherence must be > 0, got {gamma}")));
    }
    if !(gamma_s >= 0.0) {
        return Err(Error::param(format!("spin decoherence must be >= 0, got {gamma_s}")));
    }
    for n in [n_plus, n_minus] {
        if !(0.0..=1.0).contains(&n) {
            return Err(Error::param(format!("population difference {n} outside [0, 1]")));
        }
    }
    let num = -omega_r * omega_r * (n_plus + n_minus) / (4.0 * gamma);
    let den = C64::new(gamma_s + omega_r * omega_r / (2.0 * gamma), delta - omega_0);
    Ok(C64::new(num, 0.0) / den)
}

/// FWHM (MHz) of `|ρ_{−+}|²` versus δ: `2γ_s + Ω²/γ`.
pub fn effective_linewidth(omega_r: f64, gamma: f64, gamma_s: f64) -> f64 {
    2.0 * gamma_s + omega_r * omega_r / gamma
}

/// Optical Rabi frequency (MHz) at power `p` (nW): `Ω₀ = k·√P`.
pub fn power_to_rabi(p: f64, rabi_per_sqrt_nw: f64) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::param(format!("optical power must be >= 0, got {p}")));
    }
    Ok(rabi_per_sqrt_nw * p.sqrt())
}
