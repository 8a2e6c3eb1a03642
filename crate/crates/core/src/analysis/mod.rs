//! Lorentzian line fitting, model-free dip widths, straight-line regression and frequency estimation.

mod frequency;
mod lorentzian;
mod profile;
mod regression;

pub use frequency::dominant_frequency;
pub use lorentzian::{auto_init, fit_lorentzians, fwhm_of, FitResult, LorentzianModel, Peak, PeakSign};
pub use profile::{dip_profile, DipProfile};
pub use regression::{linear_fit, LinearFit};
