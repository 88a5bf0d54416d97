//! `lrinv`: compute invariant coefficients, eigenstates, packets and phases,
//! run the propagators and the verification scenarios.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 usage error,
//! 3 verification check failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lrinv::oracle::Method;

use crate::config::{Config, ConfigError};

#[derive(Debug, Parser)]
#[command(name = "lrinv", version, about = "Invariants with continuous spectra: eigenstates, packets, phases and checks")]
struct Cli {
    /// TOML configuration file (see the README for the format).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TimeArgs {
    #[arg(long)]
    t_max: Option<f64>,
    /// Intervals of the output time mesh.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Split,
    Exact,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write b(t), d(t) on the time mesh.
    Coeffs(TimeArgs),
    /// Sample the invariant eigenstate phi_k(x, t).
    Eigenstate {
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
    },
    /// Build the eigendifferential packet of the band around k.
    Packet {
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        delta_k: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
    },
    /// Phase trajectory from the matrix element, the closed form and optionally the propagator.
    Phase {
        #[arg(long)]
        k: Option<f64>,
        #[command(flatten)]
        time: TimeArgs,
        /// Also extract the phase from a propagated packet.
        #[arg(long)]
        oracle: bool,
    },
    /// Propagate a Gaussian (or the band packet) and write snapshots.
    Propagate {
        #[command(flatten)]
        time: TimeArgs,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        dt: Option<f64>,
        /// Launch the packet of the band around `band.k` instead of the Gaussian.
        #[arg(long)]
        packet: bool,
    },
    /// Run a builtin scenario by name, or one assembled from the config.
    Verify {
        /// One of: free, uniform-field, sinusoidal.
        scenario: Option<String>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Compute(lrinv::Error),
    Io(std::io::Error),
    Usage(String),
    ChecksFailed(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<lrinv::Error> for CliError {
    fn from(e: lrinv::Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Compute(_) | CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::ChecksFailed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Compute(e) => write!(f, "error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::ChecksFailed(m) => write!(f, "verification failed: {m}"),
        }
    }
}

fn resolve(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    let time = |cfg: &mut Config, t: &TimeArgs| {
        if let Some(v) = t.t_max {
            cfg.time.t_max = v;
        }
        if let Some(v) = t.steps {
            cfg.time.steps = v;
        }
    };
    match &cli.command {
        Command::Coeffs(t) => time(&mut cfg, t),
        Command::Eigenstate { k, .. } => {
            if let Some(k) = k {
                cfg.band.k = *k;
            }
        }
        Command::Packet { k, delta_k, .. } => {
            if let Some(k) = k {
                cfg.band.k = *k;
            }
            if let Some(dk) = delta_k {
                cfg.band.delta_k = *dk;
            }
        }
        Command::Phase { k, time: t, .. } => {
            if let Some(k) = k {
                cfg.band.k = *k;
            }
            time(&mut cfg, t);
        }
        Command::Propagate {
            time: t, method, dt, ..
        } => {
            time(&mut cfg, t);
            if let Some(m) = method {
                cfg.time.method = match m {
                    MethodArg::Split => Method::SplitOperator,
                    MethodArg::Exact => Method::ExactLinear,
                };
            }
            if let Some(dt) = dt {
                cfg.time.dt = *dt;
            }
        }
        Command::Verify { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    let written = match &cli.command {
        Command::Coeffs(_) => commands::coeffs(&cfg)?,
        Command::Eigenstate { t, .. } => commands::eigenstate(&cfg, *t)?,
        Command::Packet { t, .. } => commands::packet(&cfg, *t)?,
        Command::Phase { oracle, .. } => commands::phase(&cfg, *oracle)?,
        Command::Propagate { packet, .. } => commands::propagate(&cfg, *packet)?,
        Command::Verify { scenario } => {
            return commands::verify(&cfg, scenario.as_deref(), cli.config.is_some(), cli.quiet);
        }
    };
    if !cli.quiet {
        for p in written {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lrinv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
