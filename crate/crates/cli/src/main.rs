//! `nvcpt`: CPT spectra, linewidth sweeps, fits and checks for
//! microwave-dressed NV spins.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nvcpt::Exec;

use config::RunConfig;
use output::OutDir;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<nvcpt::Error> for CliError {
    fn from(e: nvcpt::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "nvcpt", version, about = "Coherent population trapping in microwave-dressed NV spins")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: fig2b, fig2c, fig3a, fig3b, fig3c or fig3d.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Overrides the noise seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, value_name = "N", default_value_t = 0)]
    workers: usize,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => config::load(p)?,
            (None, Some(name)) => config::preset(name)?,
            (None, None) => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.noise.seed = s;
        }
        Ok(cfg)
    }

    fn exec(&self) -> Exec {
        if self.workers == 1 {
            Exec::sequential()
        } else {
            Exec::parallel(self.workers)
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Emission spectrum versus two-photon detuning.
    Spectrum(Common),
    /// Linewidth or splitting sweep described by the [sweep] table.
    Sweep(Common),
    /// Lorentzian fit of a spectrum CSV.
    Fit {
        /// CSV with detuning_mhz and signal columns.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "N")]
        peaks: usize,
        /// Initial centres, comma separated; seeded from the deepest dips otherwise.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        centers: Option<Vec<f64>>,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Closed-form Λ-system coherence and its effective linewidth.
    Oracle(Common),
    /// Single-transition Rabi oscillation.
    Rabi(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(c) => {
            let cfg = c.load()?;
            commands::spectrum(&cfg, c.exec(), &OutDir::create(&c.out)?)
        }
        Command::Sweep(c) => {
            let cfg = c.load()?;
            commands::sweep(&cfg, c.exec(), &OutDir::create(&c.out)?)
        }
        Command::Fit { input, peaks, centers, out } => commands::fit(&input, peaks, centers.as_deref(), &OutDir::create(&out)?).map(|_| ()),
        Command::Oracle(c) => {
            let cfg = c.load()?;
            commands::oracle(&cfg, &OutDir::create(&c.out)?)
        }
        Command::Rabi(c) => {
            let cfg = c.load()?;
            commands::rabi(&cfg, &OutDir::create(&c.out)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nvcpt: {e}");
            ExitCode::from(e.code())
        }
    }
}
