use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Spectrum};

/// Model-free description of a single dip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipProfile {
    pub center: f64,
    pub fwhm: f64,
    pub depth: f64,
}

/// Half-depth width of the deepest dip, for lines that are not Lorentzian
/// (inhomogeneous ensembles).
///
/// A quadratic background is fitted to the points whose distance from the
/// scan centre exceeds `1 − wing` of the half-span, the dip is taken as
/// background minus signal, and the half-depth crossings on each side of its
/// maximum are located by linear interpolation.
pub fn dip_profile(spec: &Spectrum, wing: f64) -> Result<DipProfile> {
    if !(wing > 0.0 && wing < 1.0) {
        return Err(Error::param(format!("wing fraction must lie in (0, 1), got {wing}")));
    }
    let x = &spec.detunings;
    let y = &spec.signal;
    let n = x.len();
    let (lo, hi) = (x[0].min(x[n - 1]), x[0].max(x[n - 1]));
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if !(half > 0.0) {
        return Err(Error::EmptyGrid);
    }

    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    let mut used = 0;
    for (&xi, &yi) in x.iter().zip(y) {
        let u = (xi - mid) / half;
        if u.abs() < 1.0 - wing {
            continue;
        }
        let row = Vector3::new(1.0, u, u * u);
        ata += row * row.transpose();
        atb += row * yi;
        used += 1;
    }
    if used < 6 {
        return Err(Error::param(format!("only {used} wing points to fix the background")));
    }
    let c = ata.cholesky().ok_or_else(|| Error::param("wing points do not determine a quadratic background"))?.solve(&atb);
    let depth: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let u = (xi - mid) / half;
            c[0] + c[1] * u + c[2] * u * u - yi
        })
        .collect();

    let (imax, &dmax) = depth.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(Error::EmptyGrid)?;
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(dmax > 1e-9 * scale) {
        return Err(Error::param("no dip below the background"));
    }
    let h = 0.5 * dmax;
    let cross = |i: usize, j: usize| x[i] + (x[j] - x[i]) * (depth[i] - h) / (depth[i] - depth[j]);
    let mut l = imax;
    while l > 0 && depth[l - 1] >= h {
        l -= 1;
    }
    let mut r = imax;
    while r + 1 < n && depth[r + 1] >= h {
        r += 1;
    }
    if l == 0 || r + 1 == n {
        return Err(Error::param("dip does not fall to half depth inside the scan"));
    }
    let left = cross(l, l - 1);
    let right = cross(r, r + 1);
    Ok(DipProfile { center: x[imax], fwhm: (right - left).abs(), depth: dmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::linspace;

    #[test]
    fn gaussian_on_curved_background() {
        let w = 0.75;
        let x = linspace(-3.0, 3.0, 601);
        let y =
            x.iter().map(|&v| 2.0 - 0.01 * v - 0.02 * v * v - 0.3 * (-4.0 * 2f64.ln() * (v - 0.1) * (v - 0.1) / (w * w)).exp()).collect();
        let p = dip_profile(&Spectrum::new(x, y).unwrap(), 0.3).unwrap();
        assert!((p.fwhm - w).abs() < 2e-3, "{}", p.fwhm);
        assert!((p.center - 0.1).abs() < 0.011);
        assert!((p.depth - 0.3).abs() < 1e-3);
    }

    #[test]
    fn rejects_flat() {
        let x = linspace(-1.0, 1.0, 101);
        let flat = Spectrum::new(x.clone(), vec![1.0; 101]).unwrap();
        assert!(dip_profile(&flat, 0.3).is_err());
        assert!(dip_profile(&flat, 1.5).is_err());
    }
}
