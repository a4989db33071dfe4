//! `hinfstab`: optimal level, stable suboptimal controller search and re-certification
//! for delay plants described by a TOML problem file.
//!
//! Exit codes: 0 success, 1 numerical failure or failed verification, 2 input error,
//! 3 search exhausted, 4 certificates disagree.

pub mod commands;
pub mod config;
pub mod plots;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{Method, StabilizeArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Numeric(#[from] hinfstab::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Numeric(hinfstab::Error::LevelNotAboveOptimal { .. }) => 2,
            CliError::Numeric(hinfstab::Error::InvalidPlant(_) | hinfstab::Error::InvalidWeights(_)) => 2,
            CliError::Numeric(hinfstab::Error::Exhausted(_)) => 3,
            CliError::Numeric(hinfstab::Error::CertificateContradiction(_)) => 4,
            CliError::Numeric(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hinfstab", version, about = "Stable H-infinity controllers for plants with input delay")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Optimal performance level and the interpolation diagnostics at it.
    GammaOpt {
        config: PathBuf,
    },
    /// Searches for a stable suboptimal controller at level --rho.
    Stabilize {
        config: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Directory for the figure CSV files.
        #[arg(long)]
        emit_plots: Option<PathBuf>,
        /// Report file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Adds stage timings to stderr and to the report.
        #[arg(long)]
        timing: bool,
    },
    /// Re-certifies a reported controller at doubled resolution.
    Verify {
        config: PathBuf,
        #[arg(long)]
        controller: PathBuf,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Cmd::GammaOpt { config } => {
            let r = commands::cmd_gamma_opt(&config)?;
            emit(&report::to_json(&r), None)?;
            Ok(0)
        }
        Cmd::Stabilize { config, rho, method, emit_plots, out, timing } => {
            let args = StabilizeArgs { config, rho, method, emit_plots, timing };
            let o = commands::cmd_stabilize(&args)?;
            emit(&report::to_json(&o.report), out.as_ref())?;
            if let Some(m) = &o.message {
                eprintln!("hinfstab: {}: {m}", o.report.status);
            }
            Ok(o.code as u8)
        }
        Cmd::Verify { config, controller } => {
            let r = commands::cmd_verify(&config, &controller)?;
            emit(&report::to_json(&r), None)?;
            for d in &r.diagnostics {
                eprintln!("hinfstab: verify: {d}");
            }
            Ok(if r.pass { 0 } else { 1 })
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
/// Reports go to stdout and messages to stderr, as in the binary.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hinfstab: error: {e}");
            e.code()
        }
    }
}
