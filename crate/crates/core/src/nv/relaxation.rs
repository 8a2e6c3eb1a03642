use serde::{Deserialize, Serialize};

use super::{Level, SystemConfig};
use crate::quantum::{CMatrix, CollapseOp, Operator};
use crate::{angular, Error, Result};

/// Relaxation rates in MHz (ordinary frequency).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationRates {
    /// Excited-state population decay.
    pub gamma_e: f64,
    pub branch_plus: f64,
    pub branch_minus: f64,
    pub branch_zero: f64,
    /// Optical pure dephasing: adds to the e–g coherence decay.
    pub gamma_phi_opt: f64,
    /// Spin pure dephasing; the `|+⟩–|−⟩` coherence decays at `2·gamma_s`.
    pub gamma_s: f64,
}

impl Default for RelaxationRates {
    fn default() -> Self {
        RelaxationRates { gamma_e: 13.0, branch_plus: 0.5, branch_minus: 0.5, branch_zero: 0.0, gamma_phi_opt: 0.0, gamma_s: 0.0 }
    }
}

impl RelaxationRates {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("gamma_e", self.gamma_e),
            ("branch_plus", self.branch_plus),
            ("branch_minus", self.branch_minus),
            ("branch_zero", self.branch_zero),
            ("gamma_phi_opt", self.gamma_phi_opt),
            ("gamma_s", self.gamma_s),
        ];
        for (name, v) in all {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let sum = self.branch_plus + self.branch_minus + self.branch_zero;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("branching fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Optical dipole decoherence `γ = Γ_e/2 + γ_φ`, MHz.
    pub fn optical_decoherence(&self) -> f64 {
        self.gamma_e / 2.0 + self.gamma_phi_opt
    }
}

/// Jump operators of one `m_n` block, rates in rad/μs.
pub fn collapse_operators_block(cfg: &SystemConfig, rates: &RelaxationRates) -> Result<Vec<CollapseOp>> {
    rates.validate()?;
    let d = cfg.block_dim();
    let mut ops = Vec::new();
    if let Some(e) = cfg.index(Level::Excited) {
        for (lvl, frac) in [(Level::Plus, rates.branch_plus), (Level::Minus, rates.branch_minus), (Level::Zero, rates.branch_zero)] {
            let rate = rates.gamma_e * frac;
            if rate == 0.0 {
                continue;
            }
            let to = cfg.index(lvl).ok_or_else(|| Error::param(format!("decay into {lvl:?} requires that level in the basis")))?;
            ops.push(CollapseOp::new(Operator::transition(d, to, e), angular(rate)));
        }
        if rates.gamma_phi_opt > 0.0 {
            ops.push(CollapseOp::new(Operator::projector(d, e), angular(2.0 * rates.gamma_phi_opt)));
        }
    }
    if rates.gamma_s > 0.0 {
        let mut diag = vec![0.0; d];
        diag[cfg.require(Level::Plus)?] = 1.0;
        diag[cfg.require(Level::Minus)?] = -1.0;
        ops.push(CollapseOp::new(Operator::diagonal(&diag), angular(rates.gamma_s)));
    }
    Ok(ops)
}

/// Jump operators on the full space; each block relaxes independently.
pub fn collapse_operators(cfg: &SystemConfig, rates: &RelaxationRates) -> Result<Vec<CollapseOp>> {
    let block = collapse_operators_block(cfg, rates)?;
    let nb = cfg.n_blocks();
    if nb == 1 {
        return Ok(block);
    }
    let d = cfg.block_dim();
    let mut out = Vec::with_capacity(block.len() * nb);
    for b in 0..nb {
        for c in &block {
            let mut m = CMatrix::zeros(d * nb, d * nb);
            m.view_mut((b * d, b * d), (d, d)).copy_from(c.op.matrix());
            out.push(CollapseOp::new(Operator::new(m)?, c.rate));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{propagate, DensityMatrix, C64};
    use approx::assert_abs_diff_eq;

    #[test]
    fn no_rates_no_channels() {
        let r = RelaxationRates { gamma_e: 0.0, ..Default::default() };
        assert!(collapse_operators(&SystemConfig::default(), &r).unwrap().is_empty());
    }

    #[test]
    fn default_optical_decoherence() {
        let r = RelaxationRates::default();
        assert_abs_diff_eq!(r.optical_decoherence(), 6.5);
        assert_eq!(collapse_operators(&SystemConfig::default(), &r).unwrap().len(), 2);
    }

    #[test]
    fn spin_dephasing_rate() {
        let cfg = SystemConfig { include_excited: false, ..Default::default() };
        let r = RelaxationRates { gamma_e: 0.0, gamma_s: 0.2, ..Default::default() };
        let ops = collapse_operators(&cfg, &r).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [C64::default(), C64::new(s, 0.0), C64::new(s, 0.0)];
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let traj = propagate(&Operator::zeros(3), None, &ops, &rho0, 1.0, 1e-3).unwrap();
        for (t, rho) in traj.times.iter().zip(&traj.states) {
            let want = 0.5 * (-2.0 * angular(0.2) * t).exp();
            assert_abs_diff_eq!(rho.element(1, 2).re, want, epsilon = 1e-10);
            assert_abs_diff_eq!(rho.population(1), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_rates() {
        let cfg = SystemConfig::default();
        let r = RelaxationRates { branch_plus: 0.6, ..Default::default() };
        assert!(collapse_operators(&cfg, &r).is_err());
        let r = RelaxationRates { gamma_s: -1.0, ..Default::default() };
        assert!(collapse_operators(&cfg, &r).is_err());
        let cfg = SystemConfig { include_zero: false, ..Default::default() };
        let r = RelaxationRates { branch_plus: 0.4, branch_zero: 0.1, ..Default::default() };
        assert!(collapse_operators(&cfg, &r).is_err());
    }
}
