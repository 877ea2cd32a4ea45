use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fvnc::cli::{cmd_check_mesh, cmd_convergence, cmd_run, cmd_verify, CliError};

#[derive(Parser)]
#[command(
    name = "fvnc",
    version,
    about = "Coupled FV / Crouzeix-Raviart solver for contaminant transport with thermal effects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Manufactured-solution convergence study.
    Convergence {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized property suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mesh file to use instead of the built-in equilateral meshes.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the admissibility report of a mesh file.
    CheckMesh { mesh: PathBuf },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SOLVER_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SOLVER_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("SOLVER_THREADS: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref(), &mut stdout).map(|_| ()),
        Command::Convergence { config, levels, out } => cmd_convergence(config.as_deref(), levels, out.as_deref(), &mut stdout),
        Command::Verify { seed, mesh, out } => cmd_verify(seed, mesh.as_deref(), out.as_deref(), &mut stdout).map(|_| ()),
        Command::CheckMesh { mesh } => cmd_check_mesh(&mesh, &mut stdout).map(|_| ()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
