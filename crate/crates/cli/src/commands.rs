use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use nvcpt::analysis::{auto_init, fit_lorentzians, linear_fit, FitResult, LinearFit, LorentzianModel, Peak};
use nvcpt::experiments::{
    analytic_cpt, cpt_spectrum, effective_linewidth, linewidth_vs_power, linewidths_vs_omega_m, power_to_rabi, rabi_trace,
    splitting_vs_omega_m, CptDrive, Resonance, SplittingResult, SweepContext, SweepResult,
};
use nvcpt::nv::{cpt_resonance_positions, DriveField, Level};
use nvcpt::spectrum::linspace;
use nvcpt::{Exec, Spectrum};
use serde::Serialize;

use crate::config::{Curve, RunConfig, SweepKind};
use crate::output::{Cell, OutDir};
use crate::CliError;

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    workers: usize,
    runtime_s: f64,
    config: &'a RunConfig,
    #[serde(flatten)]
    result: T,
}

fn sidecar<'a, T: Serialize>(command: &'a str, cfg: &'a RunConfig, exec: Exec, start: Instant, result: T) -> Sidecar<'a, T> {
    Sidecar { command, seed: cfg.noise.seed, workers: exec.workers(), runtime_s: start.elapsed().as_secs_f64(), config: cfg, result }
}

/// Resonance offsets from `ω_B` the run should show, MHz.
fn predictions(cfg: &RunConfig) -> Vec<f64> {
    let base: Vec<f64> = if cfg.drive.omega_m > 0.0 { cpt_resonance_positions(cfg.drive.omega_m, 0.0).to_vec() } else { vec![0.0] };
    if !cfg.system.hyperfine {
        return base;
    }
    let a = cfg.system.hyperfine_splitting;
    let mut all: Vec<f64> = base.iter().flat_map(|&p| [p - a, p, p + a]).collect();
    all.sort_by(f64::total_cmp);
    all
}

fn drive(cfg: &RunConfig) -> Result<CptDrive, CliError> {
    let d = &cfg.drive;
    Ok(CptDrive {
        omega_m: d.omega_m,
        omega_0: power_to_rabi(d.power_nw, d.rabi_per_sqrt_nw)?,
        loop_phase: d.loop_phase,
        initial: d.initial,
    })
}

pub fn spectrum(cfg: &RunConfig, exec: Exec, out: &OutDir) -> Result<(), CliError> {
    let start = Instant::now();
    let grid = cfg.scan.grid(cfg.system.omega_b);
    let spec = cpt_spectrum(&cfg.system, &cfg.rates, &drive(cfg)?, &grid, &cfg.noise, &cfg.schedule, cfg.mode, &exec)?;
    let rows = (0..spec.len())
        .map(|i| {
            let err = spec.stderr.as_ref().map_or(0.0, |e| e[i]);
            vec![Cell::from(spec.detunings[i] - cfg.system.omega_b), spec.signal[i].into(), err.into()]
        })
        .collect();
    let csv = out.csv("spectrum.csv", &["detuning_mhz", "signal", "stderr"], rows)?;

    #[derive(Serialize)]
    struct Body<'a> {
        predictions_mhz: Vec<f64>,
        points: usize,
        metadata: &'a BTreeMap<String, String>,
    }
    let body = Body { predictions_mhz: predictions(cfg), points: spec.len(), metadata: &spec.metadata };
    out.json("spectrum.json", &sidecar("spectrum", cfg, exec, start, body))?;
    println!("wrote {} ({} points)", csv.display(), spec.len());
    Ok(())
}

#[derive(Serialize)]
struct Curves {
    curves: Vec<(Curve, SweepResult)>,
    /// FWHM regressed on `Ω₀²` per power curve.
    power_slopes: Vec<(Curve, Option<LinearFit>)>,
}

pub fn sweep(cfg: &RunConfig, exec: Exec, out: &OutDir) -> Result<(), CliError> {
    let start = Instant::now();
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("sweep needs a [sweep] table".into()))?;
    let mut ctx = SweepContext::new(cfg.system.clone(), cfg.rates.clone());
    ctx.noise = cfg.noise.clone();
    ctx.schedule = cfg.schedule.clone();
    ctx.mode = cfg.mode;
    ctx.loop_phase = cfg.drive.loop_phase;
    ctx.scan = sw.scan.clone();
    ctx.rabi_per_sqrt_nw = cfg.drive.rabi_per_sqrt_nw;
    ctx.exec = exec;

    if sw.kind == SweepKind::Splitting {
        let res = splitting_vs_omega_m(&ctx, &sw.values, cfg.drive.power_nw)?;
        let rows = res.points.iter().map(|p| vec![p.omega_m.into(), p.splitting.into(), p.err.into(), status(&p.status).into()]).collect();
        let csv = out.csv("sweep.csv", &["omega_m_mhz", "splitting_mhz", "splitting_err", "status"], rows)?;
        out.json("sweep.json", &sidecar::<&SplittingResult>("sweep", cfg, exec, start, &res))?;
        report_splitting(&res);
        println!("wrote {}", csv.display());
        return Ok(());
    }

    let curves: Vec<(Curve, SweepResult)> = match sw.kind {
        SweepKind::Power => {
            let mut v = Vec::new();
            for &c in &sw.curves {
                let res = match c {
                    Curve::Bare => linewidth_vs_power(&ctx, 0.0, &sw.values, false)?,
                    Curve::Central => linewidth_vs_power(&ctx, cfg.drive.omega_m, &sw.values, true)?,
                    c => return Err(CliError::Config(format!("curve {} is not available in a power sweep", curve_name(c)))),
                };
                v.push((c, res));
            }
            v
        }
        _ => {
            let which = sw
                .curves
                .iter()
                .map(|&c| match c {
                    Curve::Central => Ok(Resonance::Central),
                    Curve::FirstSideband => Ok(Resonance::FirstSideband),
                    Curve::SecondSideband => Ok(Resonance::SecondSideband),
                    Curve::Bare => Err(CliError::Config("curve bare is not available in an omega_m sweep".into())),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let res = linewidths_vs_omega_m(&ctx, &sw.values, cfg.drive.power_nw, &which)?;
            sw.curves.iter().copied().zip(res).collect()
        }
    };
    let mut rows = Vec::new();
    for (c, res) in &curves {
        for p in &res.points {
            rows.push(vec![
                p.value.into(),
                curve_name(*c).into(),
                p.fwhm.into(),
                p.fwhm_err.into(),
                (p.center - cfg.system.omega_b).into(),
                status(&p.status).into(),
            ]);
        }
    }
    let csv = out.csv("sweep.csv", &["sweep_value", "curve", "fwhm_mhz", "fwhm_err", "center_mhz", "status"], rows)?;
    let power_slopes = if sw.kind == SweepKind::Power {
        curves
            .iter()
            .map(|(c, res)| {
                let ok: Vec<_> = res.points.iter().filter(|p| p.is_ok()).collect();
                let x: Vec<f64> = ok.iter().map(|p| cfg.drive.rabi_per_sqrt_nw.powi(2) * p.value).collect();
                let y: Vec<f64> = ok.iter().map(|p| p.fwhm).collect();
                (*c, linear_fit(&x, &y, None).ok())
            })
            .collect()
    } else {
        Vec::new()
    };
    let failed = curves.iter().flat_map(|(_, r)| &r.points).filter(|p| !p.is_ok()).count();
    out.json("sweep.json", &sidecar("sweep", cfg, exec, start, Curves { curves, power_slopes }))?;
    println!("wrote {} ({failed} points flagged)", csv.display());
    Ok(())
}

fn curve_name(c: Curve) -> &'static str {
    match c {
        Curve::Bare => "bare",
        Curve::Central => "central",
        Curve::FirstSideband => "first_sideband",
        Curve::SecondSideband => "second_sideband",
    }
}

fn status(s: &nvcpt::experiments::PointStatus) -> String {
    use nvcpt::experiments::PointStatus::*;
    match s {
        Ok => "ok".into(),
        Overlapping => "overlapping".into(),
        Failed(why) => format!("failed: {why}"),
    }
}

fn report_splitting(res: &SplittingResult) {
    if let Some(f) = &res.vs_scaled {
        println!("splitting vs omega_m/sqrt2: slope {:.4} +- {:.4}, intercept {:.4} MHz", f.slope, f.slope_err, f.intercept);
    }
    if let Some(f) = &res.vs_omega_m {
        println!("splitting vs omega_m:       slope {:.4} +- {:.4}, intercept {:.4} MHz", f.slope, f.slope_err, f.intercept);
    }
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum, CliError> {
    let io = |e: &dyn std::fmt::Display| CliError::Io(format!("{}: {e}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io(&e))?;
    let header = rdr.headers().map_err(|e| io(&e))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(xi), Some(yi)) = (col("detuning_mhz"), col("signal")) else {
        return Err(CliError::Config(format!("{}: need columns detuning_mhz and signal", path.display())));
    };
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| CliError::Config(format!("{}: row {line}: {e}", path.display())))?;
        let get = |i: usize| -> Result<f64, CliError> {
            let field = rec.get(i).unwrap_or("");
            field
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{}: row {line}: cannot parse {field:?} as a number", path.display())))
        };
        x.push(get(xi)?);
        y.push(get(yi)?);
    }
    Ok(Spectrum::new(x, y)?)
}

pub fn fit(input: &Path, n_peaks: usize, centers: Option<&[f64]>, out: &OutDir) -> Result<FitResult, CliError> {
    if n_peaks == 0 {
        return Err(CliError::Config("n_peaks must be at least 1".into()));
    }
    let spec = read_spectrum(input)?;
    let init = match centers {
        Some(c) if c.len() != n_peaks => {
            return Err(CliError::Config(format!("{} centres given for {n_peaks} peaks", c.len())));
        }
        Some(c) => {
            let auto = auto_init(&spec, 1)?;
            let span = spec.detunings.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let w = (auto.peaks[0].fwhm).min(span / n_peaks as f64);
            let depth = auto.peaks[0].amplitude;
            LorentzianModel { baseline: auto.baseline, peaks: c.iter().map(|&x| Peak::dip(x, w, depth)).collect() }
        }
        None => auto_init(&spec, n_peaks)?,
    };
    let fit = fit_lorentzians(&spec, n_peaks, &init)?;
    out.json("fit.json", &fit)?;
    for (k, p) in fit.model.peaks.iter().enumerate() {
        let (ec, ew) = (fit.covariance[1 + 3 * k][1 + 3 * k].sqrt(), fit.covariance[2 + 3 * k][2 + 3 * k].sqrt());
        println!("peak {k}: center {:.6} +- {ec:.2e}  fwhm {:.6} +- {ew:.2e}  depth {:.4e}", p.center, p.fwhm, p.amplitude);
    }
    println!("residual rms {:.3e}, {} iterations", fit.residual_rms, fit.iterations);
    Ok(fit)
}

pub fn oracle(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let start = Instant::now();
    let o = &cfg.oracle;
    // Validates γ and the populations before the grid is sized.
    analytic_cpt(0.0, 0.0, o.omega_r, o.gamma, o.gamma_s, o.n_plus, o.n_minus)?;
    let w = effective_linewidth(o.omega_r, o.gamma, o.gamma_s);
    if !(w > 0.0) || o.points < 2 || !(o.widths > 0.0) {
        return Err(CliError::Config(format!("oracle grid is degenerate (linewidth {w} MHz, {} points)", o.points)));
    }
    let grid = linspace(-o.widths * w, o.widths * w, o.points);
    let mut rows = Vec::with_capacity(grid.len());
    for &d in &grid {
        let r = analytic_cpt(d, 0.0, o.omega_r, o.gamma, o.gamma_s, o.n_plus, o.n_minus)?;
        rows.push(vec![d.into(), r.re.into(), r.im.into(), r.norm().into()]);
    }
    let csv = out.csv("oracle.csv", &["detuning_mhz", "re", "im", "abs"], rows)?;

    #[derive(Serialize)]
    struct Body {
        effective_fwhm_mhz: f64,
    }
    out.json("oracle.json", &sidecar("oracle", cfg, Exec::sequential(), start, Body { effective_fwhm_mhz: w }))?;
    println!("effective FWHM {w:.6} MHz");
    println!("wrote {}", csv.display());
    Ok(())
}

pub fn rabi(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let start = Instant::now();
    let r = &cfg.rabi;
    let field = match (r.lower, r.upper) {
        (Level::Zero, Level::Plus | Level::Minus) => DriveField::microwave(r.upper, r.rabi, r.detuning),
        (Level::Plus | Level::Minus, Level::Excited) => DriveField::optical(r.lower, r.rabi, r.detuning, 0.0),
        (a, b) => return Err(CliError::Config(format!("no drive on {a:?} <-> {b:?}"))),
    };
    let trace = rabi_trace(&cfg.system, &cfg.rates, &field, r.duration, r.dt)?;
    let rows = trace.times.iter().zip(&trace.population).map(|(&t, &p)| vec![t.into(), p.into()]).collect();
    let csv = out.csv("rabi.csv", &["time_us", "population"], rows)?;
    let expected = r.rabi.hypot(r.detuning);

    #[derive(Serialize)]
    struct Body {
        rabi_mhz: f64,
        expected_mhz: f64,
    }
    out.json("rabi.json", &sidecar("rabi", cfg, Exec::sequential(), start, Body { rabi_mhz: trace.rabi, expected_mhz: expected }))?;
    println!("oscillation {:.6} MHz (generalised Rabi frequency {expected:.6} MHz)", trace.rabi);
    println!("wrote {}", csv.display());
    Ok(())
}
