use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Spectrum};

const MAX_ITER: usize = 500;
const FTOL: f64 = 1e-10;
const GTOL: f64 = 1e-4;
const MAX_CONDITION: f64 = 1e14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakSign {
    Dip,
    Peak,
}

impl PeakSign {
    fn factor(self) -> f64 {
        match self {
            PeakSign::Dip => -1.0,
            PeakSign::Peak => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub sign: PeakSign,
}

impl Peak {
    pub fn dip(center: f64, fwhm: f64, depth: f64) -> Self {
        Peak { center, fwhm, amplitude: depth, sign: PeakSign::Dip }
    }
}

/// `y(x) = baseline + Σ ±A (w/2)² / ((x − c)² + (w/2)²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzianModel {
    pub baseline: f64,
    pub peaks: Vec<Peak>,
}

impl LorentzianModel {
    pub fn eval(&self, x: f64) -> f64 {
        self.baseline
            + self
                .peaks
                .iter()
                .map(|p| {
                    let h = p.fwhm / 2.0;
                    p.sign.factor() * p.amplitude * h * h / ((x - p.center).powi(2) + h * h)
                })
                .sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: LorentzianModel,
    /// Parameter order: baseline, then (center, fwhm, amplitude) per peak.
    pub covariance: Vec<Vec<f64>>,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

struct Scaling {
    x0: f64,
    xs: f64,
    ys: f64,
}

impl Scaling {
    fn to_internal(&self, m: &LorentzianModel) -> DVector<f64> {
        let mut p = vec![m.baseline / self.ys];
        for pk in &m.peaks {
            p.extend([(pk.center - self.x0) / self.xs, pk.fwhm / self.xs, pk.amplitude / self.ys]);
        }
        DVector::from_vec(p)
    }

    fn to_model(&self, p: &DVector<f64>, signs: &[PeakSign]) -> LorentzianModel {
        LorentzianModel {
            baseline: p[0] * self.ys,
            peaks: signs
                .iter()
                .enumerate()
                .map(|(k, &sign)| Peak {
                    center: p[1 + 3 * k] * self.xs + self.x0,
                    fwhm: p[2 + 3 * k] * self.xs,
                    amplitude: p[3 + 3 * k] * self.ys,
                    sign,
                })
                .collect(),
        }
    }

    fn factors(&self, n_peaks: usize) -> Vec<f64> {
        let mut d = vec![self.ys];
        for _ in 0..n_peaks {
            d.extend([self.xs, self.xs, self.ys]);
        }
        d
    }
}

fn residuals_and_jacobian(x: &[f64], y: &[f64], p: &DVector<f64>, signs: &[PeakSign], jac: bool) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let np = p.len();
    let mut r = DVector::zeros(n);
    let mut j = if jac { DMatrix::zeros(n, np) } else { DMatrix::zeros(0, 0) };
    for i in 0..n {
        let mut f = p[0];
        if jac {
            j[(i, 0)] = 1.0;
        }
        for (k, s) in signs.iter().enumerate() {
            let (c, w, a) = (p[1 + 3 * k], p[2 + 3 * k], p[3 + 3 * k]);
            let s = s.factor();
            let h2 = w * w / 4.0;
            let u = x[i] - c;
            let den = u * u + h2;
            let l = h2 / den;
            f += s * a * l;
            if jac {
                j[(i, 1 + 3 * k)] = s * a * 2.0 * u * h2 / (den * den);
                j[(i, 2 + 3 * k)] = s * a * (w / 2.0) * u * u / (den * den);
                j[(i, 3 + 3 * k)] = s * l;
            }
        }
        r[i] = f - y[i];
    }
    (r, j)
}

/// Levenberg–Marquardt fit of `n_peaks` Lorentzians plus a constant baseline.
///
/// Abscissa and ordinate are normalised to O(1) internally. Damping is
/// multiplied by 10 on a rejected step and divided by 10 on an accepted one;
/// iteration stops when an accepted step lowers the cost by less than 1e-10
/// relative, after 500 iterations, or when no step can lower it further.
/// Widths are kept above the grid spacing.
pub fn fit_lorentzians(spec: &Spectrum, n_peaks: usize, init: &LorentzianModel) -> Result<FitResult> {
    if n_peaks == 0 {
        return Err(Error::param("n_peaks must be >= 1"));
    }
    if init.peaks.len() != n_peaks {
        return Err(Error::param(format!("initial model has {} peaks, expected {n_peaks}", init.peaks.len())));
    }
    let x = &spec.detunings;
    let y = &spec.signal;
    let n = x.len();
    let np = 1 + 3 * n_peaks;
    if n <= np {
        return Err(Error::param(format!("{n} points cannot constrain {np} parameters")));
    }
    let (xmin, xmax) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let widest = init.peaks.iter().map(|p| p.fwhm).fold(0.0, f64::max);
    if !(xmax - xmin >= 3.0 * widest) {
        return Err(Error::param(format!("grid span {} is narrower than 3x the widest initial fwhm {widest}", xmax - xmin)));
    }
    let ys = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let sc = Scaling { x0: 0.5 * (xmin + xmax), xs: 0.5 * (xmax - xmin), ys: if ys > 0.0 { ys } else { 1.0 } };
    let xn: Vec<f64> = x.iter().map(|v| (v - sc.x0) / sc.xs).collect();
    let yn: Vec<f64> = y.iter().map(|v| v / sc.ys).collect();
    let wmin = spec.min_spacing() / sc.xs;
    let signs: Vec<PeakSign> = init.peaks.iter().map(|p| p.sign).collect();

    let clamp = |p: &mut DVector<f64>| {
        for k in 0..n_peaks {
            let w = &mut p[2 + 3 * k];
            *w = w.abs().max(wmin);
        }
    };
    let mut p = sc.to_internal(init);
    clamp(&mut p);
    let (mut r, mut j) = residuals_and_jacobian(&xn, &yn, &p, &signs, true);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut capped = true;
    while iterations < MAX_ITER {
        iterations += 1;
        if cost <= 1e-30 * n as f64 {
            capped = false;
            break;
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..np {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial = &p + step;
            clamp(&mut trial);
            let (rt, _) = residuals_and_jacobian(&xn, &yn, &trial, &signs, false);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct < cost {
                let rel = (cost - ct) / cost;
                p = trial;
                let (r2, j2) = residuals_and_jacobian(&xn, &yn, &p, &signs, true);
                r = r2;
                j = j2;
                cost = ct;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel < FTOL {
                    capped = false;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            capped = false;
            break;
        }
        if !capped {
            break;
        }
    }

    // MINPACK-style orthogonality of residual and Jacobian columns
    let rn = r.norm();
    let gcos = (0..np)
        .map(|c| {
            let col = j.column(c);
            let cn = col.norm();
            if cn == 0.0 || rn == 0.0 {
                0.0
            } else {
                (col.dot(&r) / (cn * rn)).abs()
            }
        })
        .fold(0.0, f64::max);
    if capped && gcos > GTOL {
        return Err(Error::NonConvergence { iterations, gradient: gcos });
    }
    let converged = gcos <= GTOL || cost <= 1e-30 * n as f64;

    let jtj = j.transpose() * &j;
    let eig = jtj.clone().symmetric_eigen();
    let emax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let emin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if emin > 0.0 { emax / emin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularNormalEquations { condition });
    }
    let inv = jtj.try_inverse().ok_or(Error::SingularNormalEquations { condition })?;
    let s2 = cost / (n - np) as f64;
    let d = sc.factors(n_peaks);
    let covariance = (0..np).map(|a| (0..np).map(|b| s2 * inv[(a, b)] * d[a] * d[b]).collect()).collect();
    Ok(FitResult { model: sc.to_model(&p, &signs), covariance, residual_rms: sc.ys * (cost / n as f64).sqrt(), converged, iterations })
}

/// FWHM of peak `which` and its standard error, MHz.
pub fn fwhm_of(fit: &FitResult, which: usize) -> Result<(f64, f64)> {
    if which >= fit.model.peaks.len() {
        return Err(Error::IndexOutOfRange { index: which, len: fit.model.peaks.len() });
    }
    if !fit.converged {
        return Err(Error::Unconverged);
    }
    let i = 2 + 3 * which;
    Ok((fit.model.peaks[which].fwhm, fit.covariance[i][i].max(0.0).sqrt()))
}

/// Initial guess from the `n_peaks` deepest local minima below the baseline
/// (taken as the largest signal value), widths from half-depth crossings.
pub fn auto_init(spec: &Spectrum, n_peaks: usize) -> Result<LorentzianModel> {
    let y = &spec.signal;
    let x = &spec.detunings;
    let n = y.len();
    if n < 3 {
        return Err(Error::param("spectrum too short to seed a fit"));
    }
    let base = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut minima: Vec<usize> = (0..n)
        .filter(|&i| {
            let l = if i == 0 { f64::INFINITY } else { y[i - 1] };
            let r = if i + 1 == n { f64::INFINITY } else { y[i + 1] };
            y[i] < base && y[i] <= l && y[i] <= r
        })
        .collect();
    minima.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    minima.truncate(n_peaks);
    if minima.len() < n_peaks {
        return Err(Error::param(format!("found {} dips, wanted {n_peaks}", minima.len())));
    }
    minima.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let spacing = spec.min_spacing();
    let peaks = minima
        .into_iter()
        .map(|i| {
            let half = base - 0.5 * (base - y[i]);
            let mut lo = i;
            while lo > 0 && y[lo] < half {
                lo -= 1;
            }
            let mut hi = i;
            while hi + 1 < n && y[hi] < half {
                hi += 1;
            }
            Peak::dip(x[i], (x[hi] - x[lo]).abs().max(2.0 * spacing), base - y[i])
        })
        .collect();
    Ok(LorentzianModel { baseline: base, peaks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::linspace;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn synth(model: &LorentzianModel, grid: Vec<f64>) -> Spectrum {
        let y = grid.iter().map(|&x| model.eval(x)).collect();
        Spectrum::new(grid, y).unwrap()
    }

    #[test]
    fn exact_single_dip() {
        let truth = LorentzianModel { baseline: 10.0, peaks: vec![Peak::dip(0.0, 0.22, 1.0)] };
        let spec = synth(&truth, linspace(-2.0, 2.0, 201));
        let init = LorentzianModel { baseline: 9.5, peaks: vec![Peak::dip(0.03, 0.3, 0.7)] };
        let fit = fit_lorentzians(&spec, 1, &init).unwrap();
        assert!(fit.converged);
        let p = &fit.model.peaks[0];
        assert!((p.fwhm - 0.22).abs() < 1e-6 * 0.22);
        assert!(p.center.abs() < 1e-7);
        assert!((p.amplitude - 1.0).abs() < 1e-6);
        assert!((fit.model.baseline - 10.0).abs() < 1e-5);
        let (w, e) = fwhm_of(&fit, 0).unwrap();
        assert!((w - 0.22).abs() < 1e-6 && e <= 1e-8);
        assert!(fit.residual_rms <= 1e-9 * 10.0);
    }

    #[test]
    fn narrow_and_wide() {
        for (w, span) in [(0.75, 8.0), (0.013, 0.2)] {
            let truth = LorentzianModel { baseline: 3.0, peaks: vec![Peak::dip(0.001, w, 0.5)] };
            let spec = synth(&truth, linspace(-span / 2.0, span / 2.0, 161));
            let init = auto_init(&spec, 1).unwrap();
            let fit = fit_lorentzians(&spec, 1, &init).unwrap();
            let (got, err) = fwhm_of(&fit, 0).unwrap();
            assert!((got - w).abs() < 1e-8 * w.max(1.0), "{got} vs {w}");
            assert!(err < 1e-8);
        }
    }

    #[test]
    fn five_dip_ratios() {
        let depths = [0.25, 0.70, 1.0, 0.70, 0.25];
        let centers = [-SQRT_2, -FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, SQRT_2];
        let truth = LorentzianModel { baseline: 5.0, peaks: centers.iter().zip(depths).map(|(&c, d)| Peak::dip(c, 0.12, d)).collect() };
        let spec = synth(&truth, linspace(-2.5, 2.5, 401));
        let init = LorentzianModel { baseline: 5.0, peaks: centers.iter().map(|&c| Peak::dip(c * 1.01, 0.1, 0.5)).collect() };
        let fit = fit_lorentzians(&spec, 5, &init).unwrap();
        let c = fit.model.peaks[2].amplitude;
        for (p, d) in fit.model.peaks.iter().zip(depths) {
            assert!((p.amplitude / c - d).abs() < 0.02 * d);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let truth = LorentzianModel { baseline: 1.0, peaks: vec![Peak::dip(0.0, 0.2, 0.5)] };
        let spec = synth(&truth, linspace(-1.0, 1.0, 51));
        assert!(fit_lorentzians(&spec, 0, &truth).is_err());
        assert!(fit_lorentzians(&spec, 2, &truth).is_err());
        let wide = LorentzianModel { baseline: 1.0, peaks: vec![Peak::dip(0.0, 1.0, 0.5)] };
        assert!(fit_lorentzians(&spec, 1, &wide).is_err());
        let fit = FitResult { model: truth.clone(), covariance: vec![], residual_rms: 0.0, converged: false, iterations: 0 };
        assert!(matches!(fwhm_of(&fit, 0), Err(Error::Unconverged)));
        assert!(matches!(fwhm_of(&fit, 1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn flat_data_is_singular() {
        let spec = Spectrum::new(linspace(-1.0, 1.0, 51), vec![1.0; 51]).unwrap();
        let init = LorentzianModel { baseline: 1.0, peaks: vec![Peak::dip(0.0, 0.2, 0.0)] };
        assert!(matches!(fit_lorentzians(&spec, 1, &init), Err(Error::SingularNormalEquations { .. })));
    }
}
