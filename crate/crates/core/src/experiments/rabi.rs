use serde::{Deserialize, Serialize};

use crate::analysis::dominant_frequency;
use crate::nv::{build_hamiltonian, collapse_operators, DriveField, DriveKind, Level, RelaxationRates, SystemConfig};
use crate::quantum::{DensityMatrix, Observer, Propagator, C64};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiTrace {
    pub times: Vec<f64>,
    /// Population of the drive's upper level.
    pub population: Vec<f64>,
    /// Extracted Rabi frequency, MHz.
    pub rabi: f64,
}

struct Recorder {
    dim: usize,
    target: usize,
    times: Vec<f64>,
    pops: Vec<f64>,
}

impl Observer for Recorder {
    fn reset(&mut self) {
        self.times.clear();
        self.pops.clear();
    }

    fn observe(&mut self, t: f64, rho: &[C64]) {
        self.times.push(t);
        self.pops.push(rho[self.target * (self.dim + 1)].re);
    }
}

/// Population oscillation under a single drive, starting from `|0⟩` for a
/// microwave and from the drive's lower level for an optical field, with the
/// dominant frequency extracted from the trace.
pub fn rabi_trace(cfg: &SystemConfig, rates: &RelaxationRates, drive: &DriveField, duration: f64, dt: f64) -> Result<RabiTrace> {
    if !(dt > 0.0 && duration >= dt) {
        return Err(Error::param(format!("need 0 < dt <= duration, got dt {dt}, duration {duration}")));
    }
    let mut c = cfg.clone();
    c.hyperfine = false;
    if drive.kind == DriveKind::Optical {
        c.include_excited = true;
    }
    let h = build_hamiltonian(&c, std::slice::from_ref(drive), 0.0, 0.0)?;
    let ops = collapse_operators(&c, rates)?;
    let start = if drive.kind == DriveKind::Microwave { Level::Zero } else { drive.lower };
    let rho0 = DensityMatrix::basis(c.dim(), c.require(start)?)?;
    let prop = Propagator::new(&h.h_static, h.h_osc.as_ref().map(|(o, f)| (o, *f)), &ops)?;
    let mut rec = Recorder { dim: c.dim(), target: c.require(drive.upper)?, times: Vec::new(), pops: Vec::new() };
    prop.run(&rho0, duration, dt, None, &mut rec)?;
    let rabi = dominant_frequency(&rec.times, &rec.pops)?;
    Ok(RabiTrace { times: rec.times, population: rec.pops, rabi })
}
