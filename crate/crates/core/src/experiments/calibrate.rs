use super::cpt::{LoopPhase, Mode};
use super::sweeps::{linewidth_vs_power, PointStatus, Scan, SweepContext};
use crate::bath::NoiseModel;
use crate::nv::{RelaxationRates, SystemConfig};
use crate::{Error, Exec, Result};

/// Bare-spin reference measurement used to calibrate the bath amplitude.
#[derive(Clone, Debug)]
pub struct CalibrationSetup {
    /// Optical power, nW; should be low enough that power broadening is
    /// negligible against the target.
    pub power: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub scan: Scan,
    pub rabi_per_sqrt_nw: f64,
    /// Relative tolerance on the reproduced FWHM.
    pub tolerance: f64,
    pub exec: Exec,
}

impl Default for CalibrationSetup {
    fn default() -> Self {
        CalibrationSetup {
            power: 0.5,
            n_samples: 2000,
            seed: 1,
            scan: Scan { points: 161, span: 4.0 },
            rabi_per_sqrt_nw: super::DEFAULT_RABI_PER_SQRT_NW,
            tolerance: 0.02,
            exec: Exec::default(),
        }
    }
}

/// FWHM (MHz) of the bare CPT dip, long-pulse limit, under quasi-static
/// Gaussian spin noise of width `sigma`.
pub fn bare_fwhm(cfg: &SystemConfig, rates: &RelaxationRates, sigma: f64, setup: &CalibrationSetup) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::param(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut ctx = SweepContext::new(cfg.clone(), rates.clone());
    ctx.mode = Mode::Steady;
    ctx.loop_phase = LoopPhase::Fixed { theta: std::f64::consts::PI };
    ctx.scan = setup.scan.clone();
    ctx.rabi_per_sqrt_nw = setup.rabi_per_sqrt_nw;
    ctx.exec = setup.exec;
    ctx.noise = if sigma > 0.0 { NoiseModel::static_gaussian(sigma, setup.seed, setup.n_samples) } else { NoiseModel::default() };
    let r = linewidth_vs_power(&ctx, 0.0, &[setup.power], false)?;
    let p = &r.points[0];
    match &p.status {
        PointStatus::Ok => Ok(p.fwhm),
        PointStatus::Failed(why) => Err(Error::Calibration(format!("bare dip unreadable at sigma {sigma}: {why}"))),
        PointStatus::Overlapping => Err(Error::Calibration("unexpected overlapping resonance".into())),
    }
}

/// Spin-noise amplitude σ_N (MHz) for which the simulated bare CPT dip has
/// FWHM `target` (MHz), by bisection.
///
/// Every trial reuses the same normal deviates (`δ_N = σ·zᵢ`), so the
/// fitted width is a smooth, monotone function of σ.
pub fn calibrate_sigma(target: f64, cfg: &SystemConfig, rates: &RelaxationRates, setup: &CalibrationSetup) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::param(format!("target FWHM must be > 0, got {target}")));
    }
    let tol = setup.tolerance.max(1e-6);
    let floor = bare_fwhm(cfg, rates, 0.0, setup)?;
    if (floor - target).abs() <= tol * target {
        return Ok(0.0);
    }
    if floor > target {
        return Err(Error::Calibration(format!("target {target} MHz lies below the homogeneous width {floor} MHz")));
    }
    let gauss = 2.0 * (2.0 * 2f64.ln()).sqrt();
    let mut lo = 0.0;
    let mut hi = target / (2.0 * gauss) * 1.5;
    let mut tries = 0;
    while bare_fwhm(cfg, rates, hi, setup)? < target {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 12 {
            return Err(Error::Calibration(format!("no sigma up to {hi} MHz reaches {target} MHz")));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let w = bare_fwhm(cfg, rates, mid, setup)?;
        if (w - target).abs() <= tol * target {
            return Ok(mid);
        }
        if w < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!("bisection stalled in [{lo}, {hi}] MHz")))
}
