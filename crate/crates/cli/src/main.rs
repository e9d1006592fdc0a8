//! Command-line driver for the Hodge–Laplace finite element toolkit:
//! convergence studies, scheme-equivalence checks, space diagnostics, and
//! mesh file utilities. Exit codes: 0 success, 1 numerical-check failure,
//! 2 usage or configuration error.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::{parse_levels, RunConfig, Timing};
use hodgefem::mesh::Domain;
use hodgefem::report::ReportFormat;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hodgefem", version, about = "Nonconforming FEEC solver for the 2D Hodge-Laplace problem")]
struct Cli {
    /// Flat key=value configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Domain: unit_square | lshape | square_with_hole.
    #[arg(long, global = true)]
    domain: Option<String>,
    /// Refinement level range `A..B` (mesh size halves per level).
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Quadrature degree for analytic right-hand sides.
    #[arg(long, global = true)]
    quad: Option<usize>,
    /// Check tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format: csv | markdown.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Timing column mode: none (reproducible output) | wall.
    #[arg(long, global = true)]
    timing: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the study problem over a level range and report broken error
    /// norms and fitted rates.
    Convergence,
    /// Solve the primal and the mixed scheme for projected loads and
    /// report the four equivalence residuals.
    Equivalence,
    /// Report harmonic dimensions, Hodge decomposition checks, Poincaré
    /// estimates, and basis counts.
    Diagnose,
    /// Mesh file utilities.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
}

#[derive(Subcommand)]
enum MeshAction {
    /// Generate a structured mesh and emit the text format.
    Generate {
        /// Refinement level (ignored when --m is given).
        #[arg(long, default_value_t = 1)]
        level: usize,
        /// Explicit grid resolution.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Parse and validate a mesh file.
    Validate {
        /// Mesh file path.
        #[arg(long)]
        input: PathBuf,
    },
}

fn build_config(cli: &Cli) -> hodgefem::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.domain {
        config.domain = Some(d.parse::<Domain>()?);
    }
    if let Some(l) = &cli.levels {
        config.levels = parse_levels(l)?;
    }
    if let Some(q) = cli.quad {
        config.quad = q;
    }
    if let Some(t) = cli.tol {
        if t <= 0.0 {
            return Err(hodgefem::Error::Config("tol must be positive".into()));
        }
        config.tol = Some(t);
    }
    if let Some(o) = &cli.out {
        config.out = Some(o.clone());
    }
    if let Some(f) = &cli.format {
        config.format = f.parse::<ReportFormat>()?;
    }
    if let Some(t) = &cli.timing {
        config.timing = t.parse::<Timing>()?;
    }
    config.validate_tolerance()?;
    Ok(config)
}

fn run(cli: &Cli) -> hodgefem::Result<bool> {
    let config = build_config(cli)?;
    match &cli.command {
        Command::Convergence => commands::cmd_convergence(&config),
        Command::Equivalence => commands::cmd_equivalence(&config),
        Command::Diagnose => commands::cmd_diagnose(&config),
        Command::Mesh { action } => match action {
            MeshAction::Generate { level, m } => {
                commands::cmd_mesh_generate(&config, *level, *m).map(|_| true)
            }
            MeshAction::Validate { input } => commands::cmd_mesh_validate(input).map(|_| true),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("numerical check failed");
            ExitCode::from(1)
        }
        Err(e @ hodgefem::Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
