use std::path::Path;

use nvcpt::bath::NoiseModel;
use nvcpt::experiments::{InitialState, LoopPhase, Mode, PulseSchedule, Scan, DEFAULT_RABI_PER_SQRT_NW};
use nvcpt::nv::{Level, RelaxationRates, SystemConfig};
use nvcpt::spectrum::linspace;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run reads; every table is optional and falls back to the
/// defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub system: SystemConfig,
    pub rates: RelaxationRates,
    pub noise: NoiseModel,
    pub drive: DriveConfig,
    pub scan: ScanConfig,
    pub schedule: PulseSchedule,
    pub sweep: Option<SweepConfig>,
    pub oracle: OracleConfig,
    pub rabi: RabiConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Steady,
            system: SystemConfig::default(),
            rates: RelaxationRates::default(),
            noise: NoiseModel::default(),
            drive: DriveConfig::default(),
            scan: ScanConfig::default(),
            schedule: PulseSchedule::default(),
            sweep: None,
            oracle: OracleConfig::default(),
            rabi: RabiConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    /// Microwave Rabi frequency, MHz; zero gives the bare Λ.
    pub omega_m: f64,
    /// Optical power per field, nW.
    pub power_nw: f64,
    pub rabi_per_sqrt_nw: f64,
    pub loop_phase: LoopPhase,
    pub initial: InitialState,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig {
            omega_m: 1.0,
            power_nw: 1.0,
            rabi_per_sqrt_nw: DEFAULT_RABI_PER_SQRT_NW,
            loop_phase: LoopPhase::default(),
            initial: InitialState::Zero,
        }
    }
}

/// Two-photon detuning grid, symmetric about the Zeeman splitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// MHz.
    pub half_span: f64,
    pub points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { half_span: 2.0, points: 401 }
    }
}

impl ScanConfig {
    pub fn grid(&self, omega_b: f64) -> Vec<f64> {
        linspace(omega_b - self.half_span, omega_b + self.half_span, self.points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Central linewidth against optical power.
    Power,
    /// Linewidths against microwave Rabi frequency.
    OmegaM,
    /// Central-to-sideband splitting against microwave Rabi frequency.
    Splitting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Bare,
    Central,
    FirstSideband,
    SecondSideband,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    /// nW for power sweeps, MHz otherwise.
    pub values: Vec<f64>,
    #[serde(default = "default_curves")]
    pub curves: Vec<Curve>,
    #[serde(default)]
    pub scan: Scan,
}

fn default_curves() -> Vec<Curve> {
    vec![Curve::Central]
}

/// Parameters of the closed-form Λ coherence, MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub omega_r: f64,
    pub gamma: f64,
    pub gamma_s: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    /// Grid half-width in effective linewidths.
    pub widths: f64,
    pub points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { omega_r: 0.74, gamma: 6.5, gamma_s: 0.0, n_plus: 0.5, n_minus: 0.5, widths: 10.0, points: 201 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RabiConfig {
    /// `zero`..`plus`/`minus` for microwaves, `plus`/`minus`..`excited` for light.
    pub lower: Level,
    pub upper: Level,
    /// MHz.
    pub rabi: f64,
    pub detuning: f64,
    /// μs.
    pub duration: f64,
    pub dt: f64,
}

impl Default for RabiConfig {
    fn default() -> Self {
        RabiConfig { lower: Level::Zero, upper: Level::Plus, rabi: 1.0, detuning: 0.0, duration: 10.0, dt: 0.002 }
    }
}

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2b", include_str!("../presets/fig2b.toml")),
    ("fig2c", include_str!("../presets/fig2c.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig3c", include_str!("../presets/fig3c.toml")),
    ("fig3d", include_str!("../presets/fig3d.toml")),
];

pub fn parse(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("unknown preset {name:?}; available: {}", names.join(", ")))
    })?;
    parse(text, &format!("preset {name}"))
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}
