use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::bath::{ensemble_average, BathSample, NoiseModel};
use crate::nv::{build_block_hamiltonian, collapse_operators_block, DriveField, Level, RelaxationRates, SystemConfig};
use crate::quantum::{
    build_liouvillian, cycle_averaged_steady_state, steady_state, CollapseOp, DensityMatrix, Modulation, Observer, Operator, PeriodicDrive,
    Propagator, C64,
};
use crate::{angular, Error, Exec, Result, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Long-time limit; cycle-averaged when the drive loop does not close.
    Steady,
    /// Finite optical pulse from a prepared state.
    Pulsed,
}

/// Relative phase `θ` of the optical fields around the drive loop, defined so
/// that the optical dark state is `(|+⟩ + e^{iθ}|−⟩)/√2`.
///
/// The phase between the optical and microwave sources is not stabilised from
/// one repetition to the next, so by default it is averaged over a uniform
/// grid of `points` values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopPhase {
    Fixed { theta: f64 },
    Averaged { points: usize },
}

impl Default for LoopPhase {
    fn default() -> Self {
        LoopPhase::Averaged { points: 8 }
    }
}

impl LoopPhase {
    /// Quadrature nodes `(θ, weight)`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        match *self {
            LoopPhase::Fixed { theta } => vec![(theta, 1.0)],
            LoopPhase::Averaged { points } => {
                let n = points.max(1);
                (0..n).map(|k| (TAU * (k as f64 + 0.5) / n as f64, 1.0 / n as f64)).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    Zero,
    Plus,
    /// Equal mixture of `|+⟩` and `|−⟩`.
    SpinMixture,
}

/// Drive amplitudes of a CPT measurement (MHz).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptDrive {
    pub omega_m: f64,
    pub omega_0: f64,
    pub loop_phase: LoopPhase,
    pub initial: InitialState,
}

impl CptDrive {
    pub fn new(omega_m: f64, omega_0: f64) -> Self {
        CptDrive { omega_m, omega_0, loop_phase: LoopPhase::default(), initial: InitialState::Zero }
    }

    /// Bare Λ: no microwaves, spin prepared in `|+⟩`.
    pub fn bare(omega_0: f64) -> Self {
        CptDrive { omega_m: 0.0, omega_0, loop_phase: LoopPhase::Fixed { theta: PI }, initial: InitialState::Plus }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSchedule {
    /// Pulse length, μs.
    pub duration: f64,
    /// Largest integration step, μs.
    pub dt: f64,
    /// Emission integration window; the whole pulse when absent.
    pub window: Option<(f64, f64)>,
}

impl Default for PulseSchedule {
    fn default() -> Self {
        PulseSchedule { duration: 40.0, dt: 0.01, window: None }
    }
}

impl PulseSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt < self.duration) || !self.duration.is_finite() {
            return Err(Error::param(format!("need 0 < dt < duration, got dt {} and duration {}", self.dt, self.duration)));
        }
        if let Some((a, b)) = self.window {
            if !(0.0 <= a && a < b && b <= self.duration) {
                return Err(Error::param(format!("emission window [{a}, {b}] not inside [0, {}]", self.duration)));
            }
        }
        Ok(())
    }

    fn window(&self) -> (f64, f64) {
        self.window.unwrap_or((0.0, self.duration))
    }
}

/// The four CPT fields at two-photon detuning `delta` (MHz, absolute):
/// resonant microwaves on `|0⟩ ↔ |±⟩` and optical fields on `|∓⟩ ↔ |e⟩` with
/// the one-photon detuning split symmetrically. Microwaves are omitted when
/// `omega_m` is zero.
pub fn cpt_drives(cfg: &SystemConfig, drive: &CptDrive, delta: f64, theta: f64) -> Vec<DriveField> {
    let two_photon = delta - cfg.omega_b;
    let mut d = Vec::with_capacity(4);
    if drive.omega_m > 0.0 {
        d.push(DriveField::microwave(Level::Plus, drive.omega_m, 0.0));
        d.push(DriveField::microwave(Level::Minus, drive.omega_m, 0.0));
    }
    d.push(DriveField::optical(Level::Minus, drive.omega_0, two_photon / 2.0, 0.0));
    d.push(DriveField::optical(Level::Plus, drive.omega_0, -two_photon / 2.0, theta - PI));
    d
}

/// Averages `Γ_e·ρ_ee` over the emission window (trapezoid rule).
struct Emission {
    dim: usize,
    e: usize,
    window: (f64, f64),
    last: Option<(f64, f64)>,
    integral: f64,
    span: f64,
}

impl Observer for Emission {
    fn reset(&mut self) {
        self.last = None;
        self.integral = 0.0;
        self.span = 0.0;
    }

    fn observe(&mut self, t: f64, rho: &[C64]) {
        let eps = 1e-9;
        if t < self.window.0 - eps || t > self.window.1 + eps {
            return;
        }
        let p = rho[self.e + self.dim * self.e].re;
        if let Some((t0, p0)) = self.last {
            self.integral += 0.5 * (p + p0) * (t - t0);
            self.span += t - t0;
        }
        self.last = Some((t, p));
    }
}

struct Engine<'a> {
    cfg: SystemConfig,
    rates: &'a RelaxationRates,
    drive: &'a CptDrive,
    ops: Vec<CollapseOp>,
    schedule: &'a PulseSchedule,
    mode: Mode,
    rho0: DensityMatrix,
    spin_op: Operator,
    e: usize,
}

impl Engine<'_> {
    fn block(&self, delta: f64, theta: f64, sample: &BathSample, m_n: i32) -> Result<f64> {
        let drives = cpt_drives(&self.cfg, self.drive, delta, theta);
        let dynamic = sample.trajectory.is_some();
        let dn = if dynamic { 0.0 } else { sample.delta_n };
        let h = build_block_hamiltonian(&self.cfg, &drives, dn, sample.delta_opt, m_n)?;
        let pop = match self.mode {
            Mode::Steady => {
                let rho = match &h.h_osc {
                    Some((op, f)) => cycle_averaged_steady_state(&PeriodicDrive::new(&h.h_static, op, *f, &self.ops)?)?,
                    None => steady_state(&build_liouvillian(&h.h_static, &self.ops)?)?,
                };
                rho.population(self.e)
            }
            Mode::Pulsed => {
                let prop = Propagator::new(&h.h_static, h.h_osc.as_ref().map(|(o, f)| (o, *f)), &self.ops)?;
                let modulation = sample.trajectory.as_ref().map(|(step, values)| Modulation {
                    op: self.spin_op.clone(),
                    step: *step,
                    values: values.clone(),
                });
                let mut obs =
                    Emission { dim: self.cfg.block_dim(), e: self.e, window: self.schedule.window(), last: None, integral: 0.0, span: 0.0 };
                prop.run(&self.rho0, self.schedule.duration, self.schedule.dt, modulation.as_ref(), &mut obs)?;
                if obs.span > 0.0 {
                    obs.integral / obs.span
                } else {
                    obs.last.map(|(_, p)| p).unwrap_or(0.0)
                }
            }
        };
        Ok(self.rates.gamma_e * pop)
    }

    fn point(&self, delta: f64, nodes: &[(f64, f64)], sample: &BathSample) -> Result<f64> {
        let blocks = self.cfg.nuclear_projections();
        let closed = (delta - self.cfg.omega_b).abs() <= 1e-9;
        // off two-photon resonance the cycle average already averages θ out
        let single = [(nodes[0].0, 1.0)];
        let nodes = if self.mode == Mode::Steady && !closed { &single[..] } else { nodes };
        let mut s = 0.0;
        for &m in &blocks {
            for &(theta, w) in nodes {
                s += w * self.block(delta, theta, sample, m)?;
            }
        }
        Ok(s / blocks.len() as f64)
    }
}

/// CPT emission spectrum `Γ_e·⟨ρ_ee⟩` on a grid of absolute two-photon
/// detunings, averaged over loop phase, hyperfine blocks and noise.
///
/// Without microwaves (and without decay into `|0⟩`) the decoupled `|0⟩` level
/// is dropped from the basis. Hyperfine blocks are simulated separately and
/// weighted equally.
#[allow(clippy::too_many_arguments)]
pub fn cpt_spectrum(
    cfg: &SystemConfig,
    rates: &RelaxationRates,
    drive: &CptDrive,
    grid: &[f64],
    noise: &NoiseModel,
    schedule: &PulseSchedule,
    mode: Mode,
    exec: &Exec,
) -> Result<Spectrum> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    cfg.validate()?;
    rates.validate()?;
    noise.validate()?;
    if !(drive.omega_m >= 0.0) || !(drive.omega_0 >= 0.0) {
        return Err(Error::param("Rabi frequencies must be >= 0"));
    }
    if let LoopPhase::Averaged { points: 0 } = drive.loop_phase {
        return Err(Error::param("loop-phase average needs at least one point"));
    }
    if !cfg.include_excited {
        return Err(Error::param("CPT needs the excited state in the basis"));
    }
    if mode == Mode::Pulsed {
        schedule.validate()?;
    }
    if mode == Mode::Steady && noise.is_dynamic() {
        return Err(Error::param("time-dependent spin noise requires pulsed mode"));
    }

    let mut c = cfg.clone();
    if drive.omega_m == 0.0 && rates.branch_zero == 0.0 && (mode == Mode::Steady || drive.initial != InitialState::Zero) {
        c.include_zero = false;
    }
    let d = c.block_dim();
    let idx = |l| c.require(l);
    let rho0 = match drive.initial {
        InitialState::Zero => DensityMatrix::basis(d, idx(Level::Zero)?)?,
        InitialState::Plus => DensityMatrix::basis(d, idx(Level::Plus)?)?,
        InitialState::SpinMixture => {
            let mut w = vec![0.0; d];
            w[idx(Level::Plus)?] = 0.5;
            w[idx(Level::Minus)?] = 0.5;
            DensityMatrix::mixture(&w)?
        }
    };
    let mut spin = vec![0.0; d];
    spin[idx(Level::Plus)?] = angular(1.0);
    spin[idx(Level::Minus)?] = -angular(1.0);
    let engine = Engine {
        ops: collapse_operators_block(&c, rates)?,
        e: idx(Level::Excited)?,
        cfg: c,
        rates,
        drive,
        schedule,
        mode,
        rho0,
        spin_op: Operator::diagonal(&spin),
    };

    let all_nodes = if drive.omega_m > 0.0 { drive.loop_phase.nodes() } else { vec![(PI, 1.0)] };
    let cycle = !noise.is_silent() && noise.n_samples >= all_nodes.len() && all_nodes.len() > 1;
    let (noise_step, duration) = noise_grid(noise, schedule);

    let spectrum = if noise.n_samples == 1 {
        let sample = noise.sample(0, duration, noise_step)?;
        let signal = exec.try_map(grid.len(), |i| engine.point(grid[i], &all_nodes, &sample))?;
        Spectrum::new(grid.to_vec(), signal)?
    } else {
        ensemble_average(noise, exec, duration, noise_step, |sample, i| {
            let own;
            let nodes = if cycle {
                own = [(all_nodes[i % all_nodes.len()].0, 1.0)];
                &own[..]
            } else {
                &all_nodes[..]
            };
            let signal = grid.iter().map(|&x| engine.point(x, nodes, sample)).collect::<Result<Vec<_>>>()?;
            Spectrum::new(grid.to_vec(), signal)
        })?
    };
    Ok(spectrum
        .with_meta("mode", format!("{mode:?}").to_lowercase())
        .with_meta("omega_m_mhz", drive.omega_m)
        .with_meta("omega_0_mhz", drive.omega_0)
        .with_meta("omega_b_mhz", cfg.omega_b)
        .with_meta("hyperfine", cfg.hyperfine)
        .with_meta("loop_phase", format!("{:?}", drive.loop_phase))
        .with_meta("seed", noise.seed)
        .with_meta("n_samples", noise.n_samples))
}

/// Sampling interval and length for time-dependent noise.
fn noise_grid(noise: &NoiseModel, schedule: &PulseSchedule) -> (f64, f64) {
    match noise.spin {
        crate::bath::SpinNoise::OrnsteinUhlenbeck { tau_c, .. } => {
            let step = (tau_c / 20.0).min(schedule.duration / 400.0).max(schedule.dt);
            (step, schedule.duration)
        }
        _ => (schedule.dt, schedule.duration),
    }
}
