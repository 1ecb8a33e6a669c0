//! Command-line front end: configuration, sweeps and CSV output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{FileConfig, Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Core(#[from] qjump_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        1
    }
}

/// Successful completion, or completion with a numerical tolerance breach.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    ToleranceBreach,
}

impl Status {
    pub fn exit_code(&self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::ToleranceBreach => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qjump", version, about = "Jump-counting statistics of a monitored two-level emitter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form moments and Mandel Q over the sweep.
    Theory(CommonArgs),
    /// Monte Carlo trajectory ensembles with matching closed-form columns.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Exit with status 2 unless final-time statistics agree with theory.
        #[arg(long)]
        diagnostic: bool,
    },
    /// Reconstruct the radiative Kraus operators in truncated Fock space.
    VerifyAppendix {
        #[command(flatten)]
        common: CommonArgs,
        /// Step used for the reconstruction (default 1e-6).
        #[arg(long)]
        verify_dt: Option<f64>,
        /// Fock truncation for the squeezed state (default: from tail bound).
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Dump θ(s_a, s_e) on a square tilt grid.
    Scgf {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        s_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated, strictly increasing gamma_m sweep.
    #[arg(long, value_delimiter = ',')]
    pub gamma_m: Option<Vec<f64>>,
    #[arg(long)]
    pub n_avg: Option<f64>,
    #[arg(long)]
    pub gamma_w: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// semi (default) or conditional
    #[arg(long)]
    pub mode: Option<String>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit every k-th time step (default 20).
    #[arg(long)]
    pub decimate: Option<usize>,
    /// Worker threads for trajectory ensembles (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Accept n_avg above 1.
    #[arg(long)]
    pub allow_large_n: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            gamma_m: self.gamma_m.clone(),
            n_avg: self.n_avg,
            gamma_w: self.gamma_w,
            omega: self.omega,
            dt: self.dt,
            steps: self.steps,
            trajectories: self.trajectories,
            seed: self.seed,
            mode: self.mode.clone(),
            out: self.out.clone(),
            decimate: self.decimate,
            workers: self.workers,
            allow_large_n: self.allow_large_n,
            ..Overrides::default()
        }
    }

    pub fn resolve(&self, extra: impl FnOnce(&mut Overrides)) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut o = self.overrides();
        extra(&mut o);
        RunConfig::resolve(file, o)
    }
}

/// Runs a parsed command: writes the CSV, prints the report to stderr.
pub fn run(cli: &Cli) -> Result<Status, CliError> {
    let (cfg, out, csv_to_stdout) = match &cli.command {
        Command::Theory(c) => {
            let cfg = c.resolve(|_| {})?;
            let out = commands::theory(&cfg)?;
            (cfg, out, true)
        }
        Command::Simulate { common, diagnostic } => {
            let cfg = common.resolve(|_| {})?;
            let out = commands::simulate(&cfg, *diagnostic)?;
            (cfg, out, true)
        }
        Command::VerifyAppendix { common, verify_dt, n_max } => {
            let cfg = common.resolve(|o| {
                o.verify_dt = *verify_dt;
                o.n_max = *n_max;
            })?;
            let out = commands::verify_appendix(&cfg)?;
            for line in &out.report {
                println!("{line}");
            }
            (cfg, out, false)
        }
        Command::Scgf { common, s_min, s_max, points } => {
            let cfg = common.resolve(|o| {
                o.s_min = *s_min;
                o.s_max = *s_max;
                o.points = *points;
            })?;
            let out = commands::scgf(&cfg)?;
            (cfg, out, true)
        }
    };
    if csv_to_stdout {
        for line in &out.report {
            eprintln!("{line}");
        }
    }
    match (&cfg.out, csv_to_stdout) {
        (Some(p), _) => out.table.emit(Some(p))?,
        (None, true) => out.table.emit(None)?,
        (None, false) => {}
    }
    if out.breaches.is_empty() {
        Ok(Status::Ok)
    } else {
        for b in &out.breaches {
            eprintln!("tolerance breach: {b}");
        }
        Ok(Status::ToleranceBreach)
    }
}
