//! Open-system simulation of a microwave-dressed NV electron spin probed by
//! coherent population trapping (CPT).
//!
//! The crate is layered bottom-up:
//!
//! * [`quantum`] is a basis-agnostic dense Lindblad engine: operators,
//!   density matrices, Liouvillians, steady states (static and cycle-averaged)
//!   and fixed-step RK4 propagation.
//! * [`nv`] assembles the NV ground-triplet + A2 Hamiltonian in a rotating
//!   frame, its relaxation channels, and the closed-form dressed-state algebra.
//! * [`bath`] draws quasi-static and Ornstein-Uhlenbeck spin-bath realisations
//!   and averages spectra over them.
//! * [`experiments`] composes the above into CPT spectra, Rabi calibrations and
//!   linewidth sweeps.
//! * [`analysis`] fits Lorentzian dips and straight lines.
//!
//! All user-facing frequencies are ordinary frequencies in MHz and times are in
//! μs. Conversion to angular units (rad/μs) happens once, when Hamiltonians and
//! collapse operators are built.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bath;
mod error;
pub mod exec;
pub mod experiments;
pub mod nv;
pub mod quantum;
pub mod spectrum;

pub use error::{Error, Result};
pub use exec::Exec;
pub use spectrum::Spectrum;

/// 2π, the MHz → rad/μs conversion factor.
pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Converts an ordinary frequency in MHz to an angular frequency in rad/μs.
#[inline]
pub fn angular(mhz: f64) -> f64 {
    TWO_PI * mhz
}
