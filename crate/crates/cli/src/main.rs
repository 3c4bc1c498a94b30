//! `fvi`: solve, sweep and check the discrete nonlocal exterior obstacle problem.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    Io = 1,
    Config = 2,
    Solver = 3,
    Invariant = 4,
    Rate = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self {
            status: Status::Config,
            message,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self {
            status: Status::Io,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<fvi_core::Error> for CliError {
    fn from(e: fvi_core::Error) -> Self {
        use fvi_core::Error as E;
        let status = match &e {
            E::SingularSystem(_)
            | E::MaxIterations(_)
            | E::Cycling(_)
            | E::NoConvergence { .. } => Status::Solver,
            E::Assertion(_) => Status::Rate,
            E::Io(_) => Status::Io,
            _ => Status::Config,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fvi",
    version,
    about = "Nonlocal exterior obstacle problem: finite element solver and penalty studies"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for assembly and sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized test vectors.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the constrained problem and check its KKT conditions.
    Solve {
        #[arg(long, value_enum, default_value_t = Method::Pdas)]
        method: Method,
    },
    /// Penalty convergence study over the configured parameter grid.
    Sweep {
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Integration-by-parts residual for a smooth bump on refined meshes.
    VerifyIbp,
    /// Solve, cross-check, run both sweeps and every diagnostic.
    Report,
    /// Write the mesh and the assembled matrices.
    Assemble {
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Method {
    Pdas,
    Pgs,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Mode {
    L2,
    Sobolev,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Binary,
    Csv,
}

fn run(cli: Cli) -> Result<Status, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    let path = cli
        .config
        .ok_or_else(|| CliError::config("--config is required".into()))?;
    let loaded = config::load(&path)?;
    let out = cli.out.unwrap_or_else(|| loaded.config.output.dir.clone());
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let ctx = commands::Context {
        loaded,
        out,
        seed: cli.seed,
    };
    match cli.command {
        Command::Solve { method } => commands::solve(&ctx, method),
        Command::Sweep { mode } => commands::sweep(&ctx, mode),
        Command::VerifyIbp => commands::verify_ibp(&ctx),
        Command::Report => commands::report(&ctx),
        Command::Assemble { format } => commands::assemble(&ctx, format),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.status as u8)
        }
    }
}
