//! Command-line driver: temperature scans, figure-data reproduction and
//! cross-validation reports for the osp(1|2) chain solvers.

mod commands;
mod config;
mod output;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit code for solver non-convergence.
pub const EXIT_CONVERGENCE: u8 = 2;
/// Exit code for oracle/validation mismatches.
pub const EXIT_VALIDATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ospchain", about = "Thermodynamics of the osp(1|2) spin chain by the quantum transfer matrix method", version)]
pub struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Inverse temperatures (comma separated, strictly increasing).
    #[arg(long, global = true, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// Coupling constant.
    #[arg(long = "J", global = true, allow_hyphen_values = true)]
    pub coupling: Option<f64>,
    /// Trotter numbers (comma separated, even).
    #[arg(long = "N", global = true, value_delimiter = ',')]
    pub trotter: Option<Vec<usize>>,
    /// Trotter parameter for the finite-N spectral commands.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub u: Option<f64>,
    /// Eigenvalue rank (1 or 2).
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Truncation level of the Y hierarchy.
    #[arg(long, global = true)]
    pub m_max: Option<usize>,
    /// Grid half-width V.
    #[arg(long, global = true)]
    pub grid_v: Option<f64>,
    /// Grid step h.
    #[arg(long, global = true)]
    pub grid_h: Option<f64>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Seed for sampled verification points.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also solve the excited-state system in scans.
    #[arg(long, global = true)]
    pub excited: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Bethe ansatz equations and emit the root set as JSON.
    BaeSolve,
    /// Diagonalise the finite-N QTM and emit an eigenvalue table.
    QtmDiag {
        /// Number of leading eigenvalues.
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Real spectral point v.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        v: f64,
    },
    /// Locate the zeros of fusion eigenvalues in the complex plane.
    DvfZeros {
        /// Fusion levels (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        m: Vec<usize>,
        /// Half-extent of the search rectangle along the real axis.
        #[arg(long, default_value_t = 8.0)]
        rect_re: f64,
        /// Half-extent along the imaginary axis.
        #[arg(long, default_value_t = 4.0)]
        rect_im: f64,
    },
    /// Verify the functional relations and the oracle chain.
    Verify,
    /// Solve the ground-state TBA and report the free energy.
    Tba,
    /// Solve the excited-state TBA and report the correlation length.
    Excited,
    /// Temperature scan: free energy, entropy and correlation length.
    Scan,
    /// Reproduce the root/zero data behind one of the six figures.
    Figure {
        /// Which figure: fig1..fig6.
        which: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config::RunConfig::resolve(cli.config.as_deref(), &cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let run = || -> Result<u8> {
        match &cli.command {
            Command::BaeSolve => commands::bae_solve(&cfg, cli.k.unwrap_or(1)),
            Command::QtmDiag { count, v } => commands::qtm_diag(&cfg, *count, *v),
            Command::DvfZeros { m, rect_re, rect_im } => {
                commands::dvf_zeros(&cfg, cli.k.unwrap_or(1), m, *rect_re, *rect_im)
            }
            Command::Verify => commands::verify(&cfg),
            Command::Tba => commands::tba(&cfg),
            Command::Excited => commands::excited(&cfg),
            Command::Scan => commands::scan(&cfg),
            Command::Figure { which } => commands::figure(&cfg, which),
        }
    };
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONVERGENCE)
        }
    }
}
