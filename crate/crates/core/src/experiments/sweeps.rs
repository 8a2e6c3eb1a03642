use serde::{Deserialize, Serialize};

use super::cpt::{cpt_spectrum, CptDrive, LoopPhase, Mode, PulseSchedule};
use super::power_to_rabi;
use crate::analysis::{dip_profile, fit_lorentzians, linear_fit, FitResult, LinearFit, LorentzianModel, Peak};
use crate::bath::{NoiseModel, SpinNoise};
use crate::nv::{cpt_resonance_positions, RelaxationRates, SystemConfig};
use crate::spectrum::linspace;
use crate::{Error, Exec, Result, Spectrum};

/// Detuning grid around the expected resonance(s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scan {
    /// Minimum number of grid points; more are used when needed to put at
    /// least five points inside the expected linewidth.
    pub points: usize,
    /// Half-width of the scan in units of the expected FWHM.
    pub span: f64,
}

impl Default for Scan {
    fn default() -> Self {
        Scan { points: 41, span: 5.0 }
    }
}

/// Everything a sweep holds fixed.
#[derive(Clone, Debug)]
pub struct SweepContext {
    pub cfg: SystemConfig,
    pub rates: RelaxationRates,
    pub noise: NoiseModel,
    pub schedule: PulseSchedule,
    pub mode: Mode,
    pub loop_phase: LoopPhase,
    pub scan: Scan,
    pub rabi_per_sqrt_nw: f64,
    pub exec: Exec,
}

impl SweepContext {
    pub fn new(cfg: SystemConfig, rates: RelaxationRates) -> Self {
        SweepContext {
            cfg,
            rates,
            noise: NoiseModel::default(),
            schedule: PulseSchedule::default(),
            mode: Mode::Steady,
            loop_phase: LoopPhase::default(),
            scan: Scan::default(),
            rabi_per_sqrt_nw: super::DEFAULT_RABI_PER_SQRT_NW,
            exec: Exec::default(),
        }
    }

    /// Rough FWHM (MHz) of resonance `order`, used to size scan windows.
    /// Spin noise broadens the bare line directly but the dressed lines only
    /// through the spread of the dressed splitting; the dressed central line
    /// does not move at all.
    fn expected_width(&self, omega_0: f64, omega_m: f64, order: i32) -> f64 {
        let gamma = self.rates.optical_decoherence();
        let mut w = omega_0 * omega_0 / gamma + 4.0 * self.rates.gamma_s;
        if self.mode == Mode::Pulsed {
            w += 1.0 / self.schedule.duration;
        }
        let sigma = match self.noise.spin {
            SpinNoise::None => 0.0,
            SpinNoise::StaticGaussian { sigma } | SpinNoise::OrnsteinUhlenbeck { sigma, .. } => sigma,
        };
        let spread = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        if omega_m == 0.0 {
            w += 2.0 * spread;
        } else if order != 0 {
            let split = omega_m / std::f64::consts::SQRT_2;
            w += order.abs() as f64 * ((split * split + spread * spread).sqrt() - split);
        }
        w.max(1e-4)
    }

    /// `width` sets the point density, `half` the extent.
    fn grid(&self, half: f64, width: f64) -> Vec<f64> {
        let dense = (2.0 * half / (width / 5.0)).ceil() as usize + 1;
        let n = self.scan.points.max(dense).min(2001) | 1;
        linspace(self.cfg.omega_b - half, self.cfg.omega_b + half, n)
    }

    fn spectrum(&self, drive: &CptDrive, grid: &[f64]) -> Result<Spectrum> {
        cpt_spectrum(&self.cfg, &self.rates, drive, grid, &self.noise, &self.schedule, self.mode, &self.exec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// nW.
    Power,
    /// MHz.
    OmegaM,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resonance {
    Central,
    FirstSideband,
    SecondSideband,
}

impl Resonance {
    fn order(self) -> i32 {
        match self {
            Resonance::Central => 0,
            Resonance::FirstSideband => 1,
            Resonance::SecondSideband => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    /// The resonance is wider than its distance to the central dip.
    Overlapping,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// MHz; NaN when the fit failed.
    pub fwhm: f64,
    pub fwhm_err: f64,
    pub center: f64,
    pub status: PointStatus,
    pub fit: Option<FitResult>,
}

impl SweepPoint {
    fn failed(value: f64, e: &Error) -> Self {
        SweepPoint { value, fwhm: f64::NAN, fwhm_err: f64::NAN, center: f64::NAN, status: PointStatus::Failed(e.to_string()), fit: None }
    }

    pub fn is_ok(&self) -> bool {
        self.status == PointStatus::Ok
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub resonance: Resonance,
    pub points: Vec<SweepPoint>,
}

/// Joint Lorentzian fit of every predicted resonance inside the scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceFit {
    pub fit: FitResult,
    /// Resonance order (−2…2) of each fitted peak.
    pub orders: Vec<i32>,
}

impl ResonanceFit {
    pub fn peak(&self, order: i32) -> Option<&Peak> {
        self.orders.iter().position(|&o| o == order).map(|i| &self.fit.model.peaks[i])
    }

    fn width(&self, order: i32) -> Option<(f64, f64)> {
        let i = self.orders.iter().position(|&o| o == order)?;
        let k = 2 + 3 * i;
        Some((self.fit.model.peaks[i].fwhm, self.fit.covariance[k][k].max(0.0).sqrt()))
    }
}

/// Fits dips seeded at the predicted `positions` (ordered −2…2 when five are
/// given) that fall inside the scan; coincident predictions are merged.
/// `width_guess[k]` seeds the FWHM of `positions[k]`.
pub fn fit_resonances(spec: &Spectrum, positions: &[f64], width_guess: &[f64]) -> Result<ResonanceFit> {
    if width_guess.len() != positions.len() {
        return Err(Error::DimensionMismatch { expected: positions.len(), found: width_guess.len() });
    }
    let x = &spec.detunings;
    let (lo, hi) = (x[0].min(x[x.len() - 1]), x[0].max(x[x.len() - 1]));
    let spacing = spec.min_spacing();
    let widest = (hi - lo) / 4.0;
    let base = spec.signal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mid = (positions.len() / 2) as i32;
    let mut peaks = Vec::new();
    let mut orders = Vec::new();
    for (k, &p) in positions.iter().enumerate() {
        let order = k as i32 - mid;
        if p < lo || p > hi {
            continue;
        }
        if let Some(last) = peaks.last().map(|pk: &Peak| pk.center) {
            if (p - last).abs() < spacing {
                // merged resonances count as the more central one
                if order.abs() < orders.last().map(|o: &i32| o.abs()).unwrap_or(i32::MAX) {
                    *orders.last_mut().unwrap() = order;
                }
                continue;
            }
        }
        let j = x.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &v)| if (v - p).abs() < a.1 { (i, (v - p).abs()) } else { a }).0;
        let depth = (base - spec.signal[j]).max(1e-3 * base.abs().max(1e-300));
        peaks.push(Peak::dip(p, width_guess[k].min(widest).max(2.0 * spacing), depth));
        orders.push(order);
    }
    if peaks.is_empty() {
        return Err(Error::param("no predicted resonance inside the scan"));
    }
    // A dip that turns upside down, leaves the scan or stalls the fit was not
    // resolvable; the outermost orders are dropped until the fit is clean.
    loop {
        let init = LorentzianModel { baseline: base, peaks: peaks.clone() };
        let fit = fit_lorentzians(spec, peaks.len(), &init).and_then(|f| if f.converged { Ok(f) } else { Err(Error::Unconverged) });
        let outer = orders.iter().map(|o| o.abs()).max().unwrap_or(0);
        match fit {
            Ok(fit) if fit.model.peaks.iter().all(|p| p.amplitude > 0.0 && p.center >= lo && p.center <= hi) => {
                return Ok(ResonanceFit { fit, orders });
            }
            _ if outer > 0 => {
                let keep: Vec<bool> = orders.iter().map(|o| o.abs() < outer).collect();
                peaks = peaks.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(p, _)| p).collect();
                orders.retain(|o| o.abs() < outer);
            }
            Ok(_) => return Err(Error::param("central dip fit is unphysical")),
            Err(e) => return Err(e),
        }
    }
}

fn predicted(cfg: &SystemConfig, omega_m: f64) -> Vec<f64> {
    if omega_m > 0.0 {
        cpt_resonance_positions(omega_m, cfg.omega_b).to_vec()
    } else {
        vec![cfg.omega_b]
    }
}

/// Width of resonance `order` (averaged over both signs for sidebands) and
/// whether it overlaps the central dip.
fn extract(rf: &ResonanceFit, order: i32) -> Result<(f64, f64, f64, bool)> {
    let central = rf.peak(0).map(|p| p.center);
    let sides: Vec<i32> = if order == 0 { vec![0] } else { vec![-order, order] };
    let mut found = Vec::new();
    for o in sides {
        if let (Some((w, e)), Some(p)) = (rf.width(o), rf.peak(o)) {
            found.push((w, e, p.center));
        }
    }
    if found.is_empty() {
        return Err(Error::param(format!("resonance of order {order} not resolved in the scan")));
    }
    let k = found.len() as f64;
    let w = found.iter().map(|f| f.0).sum::<f64>() / k;
    let e = found.iter().map(|f| f.1 * f.1).sum::<f64>().sqrt() / k;
    let center = found.last().unwrap().2;
    let overlapping = order != 0
        && match central {
            Some(c) => found.iter().any(|f| f.0 > (f.2 - c).abs()),
            None => true,
        };
    Ok((w, e, center, overlapping))
}

/// Measures every requested order from one spectrum. A central-only request
/// scans around `ω_B`; any sideband request widens the scan to cover all five
/// resonances so they are fitted jointly.
fn measure(ctx: &SweepContext, drive: &CptDrive, value: f64, orders: &[i32]) -> Vec<SweepPoint> {
    let width = |o: i32| ctx.expected_width(drive.omega_0, drive.omega_m, o);
    let half = if orders.iter().all(|&o| o == 0) {
        ctx.scan.span * width(0)
    } else {
        std::f64::consts::SQRT_2 * drive.omega_m + ctx.scan.span * width(2)
    };
    let grid = ctx.grid(half, width(0));
    let fitted = || -> Result<ResonanceFit> {
        let spec = ctx.spectrum(drive, &grid)?;
        let positions = predicted(&ctx.cfg, drive.omega_m);
        let mid = (positions.len() / 2) as i32;
        let guesses: Vec<f64> = (0..positions.len()).map(|k| width(k as i32 - mid)).collect();
        fit_resonances(&spec, &positions, &guesses)
    };
    let rf = match fitted() {
        Ok(rf) => rf,
        Err(e) => return orders.iter().map(|_| SweepPoint::failed(value, &e)).collect(),
    };
    orders
        .iter()
        .map(|&order| match extract(&rf, order) {
            Ok((fwhm, err, center, overlapping)) => SweepPoint {
                value,
                fwhm,
                fwhm_err: err,
                center,
                status: if overlapping { PointStatus::Overlapping } else { PointStatus::Ok },
                fit: Some(rf.fit.clone()),
            },
            Err(e) => SweepPoint::failed(value, &e),
        })
        .collect()
}

/// Half-depth width of an inhomogeneously broadened bare dip. Spin noise
/// turns it into a Voigt profile on top of the curved optical line, which a
/// Lorentzian over a flat baseline fits poorly.
fn measure_profile(ctx: &SweepContext, drive: &CptDrive, value: f64) -> SweepPoint {
    let width = ctx.expected_width(drive.omega_0, 0.0, 0);
    let grid = ctx.grid(ctx.scan.span * width, width);
    match ctx.spectrum(drive, &grid).and_then(|s| dip_profile(&s, 0.3)) {
        Ok(p) => SweepPoint { value, fwhm: p.fwhm, fwhm_err: f64::NAN, center: p.center, status: PointStatus::Ok, fit: None },
        Err(e) => SweepPoint::failed(value, &e),
    }
}

/// Central-resonance FWHM versus optical power (nW). Under spin noise the
/// bare width is read at half depth rather than from a Lorentzian fit. In bare mode the
/// microwaves are off and the spin starts in `|+⟩`.
pub fn linewidth_vs_power(ctx: &SweepContext, omega_m: f64, powers: &[f64], dressed: bool) -> Result<SweepResult> {
    if powers.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut points = Vec::with_capacity(powers.len());
    for &p in powers {
        let omega_0 = power_to_rabi(p, ctx.rabi_per_sqrt_nw)?;
        let drive =
            if dressed { CptDrive { loop_phase: ctx.loop_phase, ..CptDrive::new(omega_m, omega_0) } } else { CptDrive::bare(omega_0) };
        if dressed || ctx.noise.spin == SpinNoise::None {
            points.extend(measure(ctx, &drive, p, &[0]));
        } else {
            points.push(measure_profile(ctx, &drive, p));
        }
    }
    Ok(SweepResult { variable: SweepVariable::Power, resonance: Resonance::Central, points })
}

/// FWHM of the requested resonance versus microwave Rabi frequency at fixed
/// optical power.
pub fn linewidth_vs_omega_m(ctx: &SweepContext, omega_ms: &[f64], power: f64, which: Resonance) -> Result<SweepResult> {
    Ok(linewidths_vs_omega_m(ctx, omega_ms, power, &[which])?.remove(0))
}

/// Several resonances per `Ω_m`, all taken from the same spectrum and fit.
pub fn linewidths_vs_omega_m(ctx: &SweepContext, omega_ms: &[f64], power: f64, which: &[Resonance]) -> Result<Vec<SweepResult>> {
    if omega_ms.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if which.is_empty() {
        return Err(Error::param("no resonance requested"));
    }
    let omega_0 = power_to_rabi(power, ctx.rabi_per_sqrt_nw)?;
    let orders: Vec<i32> = which.iter().map(|w| w.order()).collect();
    let mut out: Vec<SweepResult> =
        which.iter().map(|&resonance| SweepResult { variable: SweepVariable::OmegaM, resonance, points: Vec::new() }).collect();
    for &om in omega_ms {
        let drive = CptDrive { loop_phase: ctx.loop_phase, ..CptDrive::new(om, omega_0) };
        for (res, pt) in out.iter_mut().zip(measure(ctx, &drive, om, &orders)) {
            res.points.push(pt);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingPoint {
    pub omega_m: f64,
    /// Mean offset of the first sidebands from the central dip, MHz.
    pub splitting: f64,
    pub err: f64,
    pub status: PointStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingResult {
    pub points: Vec<SplittingPoint>,
    /// Splitting regressed on `Ω_m/√2`.
    pub vs_scaled: Option<LinearFit>,
    /// Splitting regressed on `Ω_m`.
    pub vs_omega_m: Option<LinearFit>,
}

/// Central-to-first-sideband splitting versus `Ω_m`.
pub fn splitting_vs_omega_m(ctx: &SweepContext, omega_ms: &[f64], power: f64) -> Result<SplittingResult> {
    if omega_ms.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let omega_0 = power_to_rabi(power, ctx.rabi_per_sqrt_nw)?;
    let mut points = Vec::with_capacity(omega_ms.len());
    for &om in omega_ms {
        let drive = CptDrive { loop_phase: ctx.loop_phase, ..CptDrive::new(om, omega_0) };
        let sp = measure(ctx, &drive, om, &[1]).remove(0);
        let pt = match (&sp.status, &sp.fit) {
            (PointStatus::Failed(_), _) | (_, None) => {
                SplittingPoint { omega_m: om, splitting: f64::NAN, err: f64::NAN, status: sp.status.clone() }
            }
            (status, Some(fit)) => {
                let rf_orders = order_map(fit, &predicted(&ctx.cfg, om));
                let c = |o: i32| rf_orders.iter().position(|&x| x == o).map(|i| (fit.model.peaks[i].center, 1 + 3 * i));
                match (c(-1), c(0), c(1)) {
                    (Some((lo, il)), Some((mid, _)), Some((hi, ih))) => {
                        let s = 0.5 * ((hi - mid) + (mid - lo));
                        let var = 0.25 * (fit.covariance[il][il] + fit.covariance[ih][ih]);
                        SplittingPoint { omega_m: om, splitting: s, err: var.max(0.0).sqrt(), status: status.clone() }
                    }
                    _ => SplittingPoint {
                        omega_m: om,
                        splitting: f64::NAN,
                        err: f64::NAN,
                        status: PointStatus::Failed("first sidebands not resolved".into()),
                    },
                }
            }
        };
        points.push(pt);
    }
    let good: Vec<&SplittingPoint> = points.iter().filter(|p| p.status == PointStatus::Ok).collect();
    let ys: Vec<f64> = good.iter().map(|p| p.splitting).collect();
    let xs: Vec<f64> = good.iter().map(|p| p.omega_m).collect();
    let scaled: Vec<f64> = xs.iter().map(|x| x / std::f64::consts::SQRT_2).collect();
    Ok(SplittingResult { vs_scaled: linear_fit(&scaled, &ys, None).ok(), vs_omega_m: linear_fit(&xs, &ys, None).ok(), points })
}

/// Recovers the resonance order of each fitted peak from its position.
fn order_map(fit: &FitResult, positions: &[f64]) -> Vec<i32> {
    let mid = (positions.len() / 2) as i32;
    fit.model
        .peaks
        .iter()
        .map(|p| {
            positions
                .iter()
                .enumerate()
                .fold((0usize, f64::INFINITY), |a, (i, &q)| if (q - p.center).abs() < a.1 { (i, (q - p.center).abs()) } else { a })
                .0 as i32
                - mid
        })
        .collect()
}
