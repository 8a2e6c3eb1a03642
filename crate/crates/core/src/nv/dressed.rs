//! Closed-form dressed-state algebra for two resonant, equal-amplitude
//! microwaves on `|0⟩ ↔ |±⟩`.
//!
//! `|d⟩ = (|+⟩ − |−⟩)/√2`, `|b⟩ = (|+⟩ + |−⟩)/√2`, `|l⟩ = (|0⟩ − |b⟩)/√2`,
//! `|u⟩ = (|0⟩ + |b⟩)/√2`.
//!
//! The time-dependent amplitude expansion ([`eq1_state`]) writes the `|0⟩`
//! component as `(C_u − C_l)/√2`, i.e. its lower dressed state is `−|l⟩`.
//! [`eq1_amplitudes`] inverts that expansion as printed, so for example
//! `|0⟩` maps to `C_l = −1/√2`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::quantum::{CMatrix, Operator, C64};
use crate::{angular, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct DressedAmplitudes {
    pub c_d: C64,
    pub c_l: C64,
    pub c_u: C64,
    pub c_e: C64,
}

impl DressedAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.c_d.norm_sqr() + self.c_l.norm_sqr() + self.c_u.norm_sqr() + self.c_e.norm_sqr()
    }
}

/// `(E_l, E_d, E_u)` in MHz for Zeeman shift `±δ_N` on `|±⟩`.
pub fn dressed_energies(omega_m: f64, delta_n: f64) -> (f64, f64, f64) {
    let e = (omega_m * omega_m / 2.0 + delta_n * delta_n).sqrt();
    (-e, 0.0, e)
}

/// Unitary on `{|0⟩, |+⟩, |−⟩}` whose columns are `|l⟩, |d⟩, |u⟩`.
pub fn dressed_transform(omega_m: f64) -> Result<Operator> {
    if !(omega_m > 0.0) {
        return Err(Error::param(format!("dressing needs omega_m > 0, got {omega_m}")));
    }
    let r = |x: f64| C64::new(x, 0.0);
    #[rustfmt::skip]
    let m = CMatrix::from_row_slice(3, 3, &[
        r(FRAC_1_SQRT_2), r(0.0),            r(FRAC_1_SQRT_2),
        r(-0.5),          r(FRAC_1_SQRT_2),  r(0.5),
        r(-0.5),          r(-FRAC_1_SQRT_2), r(0.5),
    ]);
    Ok(Operator::new(m).expect("3x3"))
}

/// Bare amplitudes `[c_0, c_+, c_−, c_e]` at time `t` (μs) from dressed
/// amplitudes. Frequencies in MHz; `nu` is the microwave frame frequency.
pub fn eq1_state(amps: &DressedAmplitudes, t: f64, omega_m: f64, omega_b: f64, nu: f64) -> [C64; 4] {
    let w = angular(omega_m) * FRAC_1_SQRT_2 * t;
    let up = amps.c_u * C64::from_polar(1.0, -w);
    let lo = amps.c_l * C64::from_polar(1.0, w);
    let plus = (up * 0.5 + lo * 0.5 + amps.c_d * FRAC_1_SQRT_2) * C64::from_polar(1.0, -angular(omega_b) * t);
    let zero = (up - lo) * FRAC_1_SQRT_2 * C64::from_polar(1.0, angular(nu) * t);
    let minus = up * 0.5 + lo * 0.5 - amps.c_d * FRAC_1_SQRT_2;
    [zero, plus, minus, amps.c_e]
}

/// Inverse of [`eq1_state`].
pub fn eq1_amplitudes(psi: &[C64; 4], t: f64, omega_m: f64, omega_b: f64, nu: f64) -> DressedAmplitudes {
    let w = angular(omega_m) * FRAC_1_SQRT_2 * t;
    let a_plus = psi[1] * C64::from_polar(1.0, angular(omega_b) * t);
    let a_zero = psi[0] * C64::from_polar(1.0, -angular(nu) * t);
    let a_minus = psi[2];
    let s = a_plus + a_minus;
    DressedAmplitudes {
        c_d: (a_plus - a_minus) * FRAC_1_SQRT_2,
        c_u: (s + a_zero * SQRT_2) * 0.5 * C64::from_polar(1.0, w),
        c_l: (s - a_zero * SQRT_2) * 0.5 * C64::from_polar(1.0, -w),
        c_e: psi[3],
    }
}

/// Residual of `(C_l + C_u)/C_d = √2(1 + e^{iθ})/(1 − e^{iθ})`, the condition
/// for the spin to sit in the optical dark state `(|+⟩ + e^{iθ}|−⟩)/√2`.
/// Returns `(residual ≤ 1e-6, residual)`.
pub fn optical_dark_state_check(amps: &DressedAmplitudes, theta: f64) -> Result<(bool, f64)> {
    let wrapped = theta.rem_euclid(std::f64::consts::TAU);
    if wrapped.abs() < 1e-12 || (wrapped - std::f64::consts::TAU).abs() < 1e-12 {
        return Err(Error::DivergentCondition);
    }
    if amps.c_d.norm() == 0.0 {
        return Err(Error::param("dark-state condition needs C_d != 0"));
    }
    let ph = C64::from_polar(1.0, theta);
    let rhs = (ph + 1.0) * SQRT_2 / (C64::new(1.0, 0.0) - ph);
    let residual = ((amps.c_l + amps.c_u) / amps.c_d - rhs).norm();
    Ok((residual <= 1e-6, residual))
}

/// Two-photon detunings of the five CPT resonances, ascending, MHz.
pub fn cpt_resonance_positions(omega_m: f64, omega_b: f64) -> [f64; 5] {
    let a = omega_m * FRAC_1_SQRT_2;
    [omega_b - 2.0 * a, omega_b - a, omega_b, omega_b + a, omega_b + 2.0 * a]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    #[test]
    fn energies() {
        let (l, d, u) = dressed_energies(1.0, 0.0);
        assert_abs_diff_eq!(l, -FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_eq!(d, 0.0);
        assert_abs_diff_eq!(u, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_eq!(dressed_energies(0.0, 0.3), (-0.3, 0.0, 0.3));
        assert_abs_diff_eq!(dressed_energies(1.0, 0.5).2, 0.86603, epsilon = 1e-5);
    }

    #[test]
    fn transform_is_unitary_and_diagonalises() {
        let u = dressed_transform(1.3).unwrap();
        let id = u.matrix().adjoint() * u.matrix();
        assert!((id - CMatrix::identity(3, 3)).iter().all(|c| c.norm() < 1e-12));
        // column amplitudes of |+⟩: (C_l, C_d, C_u)
        let row = u.matrix().row(1).map(|c| c.conj());
        assert_abs_diff_eq!(row[0].re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(row[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(row[2].re, 0.5, epsilon = 1e-15);

        let om = 1.3;
        let c = C64::new(angular(om) / 2.0, 0.0);
        let mut h = CMatrix::zeros(3, 3);
        h[(0, 1)] = c;
        h[(1, 0)] = c;
        h[(0, 2)] = c;
        h[(2, 0)] = c;
        let dh = u.matrix().adjoint() * h * u.matrix();
        let want = [-om * FRAC_1_SQRT_2, 0.0, om * FRAC_1_SQRT_2];
        for i in 0..3 {
            for j in 0..3 {
                let w = if i == j { angular(want[i]) } else { 0.0 };
                assert_abs_diff_eq!(dh[(i, j)].re, w, epsilon = 1e-12);
                assert_abs_diff_eq!(dh[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
        assert!(dressed_transform(0.0).is_err());
    }

    #[test]
    fn eq1_known_states() {
        let s = FRAC_1_SQRT_2;
        let z = C64::default();
        let r = |x: f64| C64::new(x, 0.0);
        let dark = [z, r(s), r(-s), z];
        let a = eq1_amplitudes(&dark, 0.0, 1.0, 100.0, 2870.0);
        assert_abs_diff_eq!(a.c_d.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.c_l.norm() + a.c_u.norm() + a.c_e.norm(), 0.0, epsilon = 1e-15);
        let zero = [r(1.0), z, z, z];
        let a = eq1_amplitudes(&zero, 0.0, 1.0, 100.0, 2870.0);
        assert_abs_diff_eq!(a.c_u.re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(a.c_l.re, -s, epsilon = 1e-15);
        assert_abs_diff_eq!(a.c_d.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dark_state_condition() {
        let r = |x: f64| C64::new(x, 0.0);
        let amps = DressedAmplitudes { c_l: r(0.3), c_u: r(-0.3), c_d: r(0.9), c_e: r(0.0) };
        let (ok, res) = optical_dark_state_check(&amps, std::f64::consts::PI).unwrap();
        assert!(ok && res < 1e-15);
        let pure_d = DressedAmplitudes { c_d: r(1.0), ..Default::default() };
        let (ok, res) = optical_dark_state_check(&pure_d, std::f64::consts::PI).unwrap();
        assert!(ok && res < 1e-15);
        // θ = π/2: ratio √2·i
        let amps = DressedAmplitudes { c_l: C64::new(0.0, SQRT_2 / 2.0), c_u: C64::new(0.0, SQRT_2 / 2.0), c_d: r(1.0), c_e: r(0.0) };
        assert!(optical_dark_state_check(&amps, std::f64::consts::FRAC_PI_2).unwrap().0);
        assert!(matches!(optical_dark_state_check(&pure_d, 0.0), Err(Error::DivergentCondition)));
        assert!(matches!(optical_dark_state_check(&pure_d, std::f64::consts::TAU), Err(Error::DivergentCondition)));
    }

    #[test]
    fn resonance_positions() {
        let p = cpt_resonance_positions(1.0, 0.0);
        for (a, b) in p.iter().zip([-SQRT_2, -FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, SQRT_2]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(cpt_resonance_positions(0.0, 2.0).iter().all(|&x| x == 2.0));
        let (l, _, u) = dressed_energies(1.0, 0.0);
        let q = cpt_resonance_positions(1.0, 100.0);
        assert_abs_diff_eq!(q[4] - 100.0, u - l, epsilon = 1e-12);
        assert_abs_diff_eq!(q[3] - 100.0, u, epsilon = 1e-12);
    }
}
