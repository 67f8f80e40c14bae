//! `linregge`: meshes, assembly, spectra and Regge actions on the flat 3-torus.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{parse_floats, parse_geometry, parse_grid, parse_grids, Overrides, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone)]
struct GridList(Vec<[usize; 3]>);

#[derive(Debug, Clone)]
struct FloatList(Vec<f64>);

#[derive(Parser, Debug)]
#[command(name = "linregge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Mesh summary as JSON.
    Mesh,
    /// Stiffness and mass matrices in COO text format, statistics as JSON.
    Assemble,
    /// Generalized eigenvalues matched against the Fourier oracle.
    Eigs,
    /// Exact Fourier spectrum below the cutoff.
    Oracle,
    /// Cluster errors over a sequence of grids.
    Converge,
    /// Regge action and deficit angles of a perturbed configuration.
    Action,
    /// Invariant suite with a pass/fail report.
    Verify,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Side lengths "l1,l2,l3" (or one value for a cube).
    #[arg(long, global = true, value_parser = parse_geometry)]
    geometry: Option<[f64; 3]>,
    /// Cells per axis, "n" or "n1,n2,n3".
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<[usize; 3]>,
    /// Grid sequence for `converge`, e.g. "2;3;4".
    #[arg(long, global = true, value_parser = |s: &str| parse_grids(s).map(GridList))]
    grids: Option<GridList>,
    /// Oracle cutoff on |eigenvalue|.
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    /// Number of oracle targets to match.
    #[arg(long, global = true)]
    n_eigs: Option<usize>,
    /// Perturbation size for `action`.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Comma-separated schedule for the second-variation check.
    #[arg(long, global = true, value_parser = |s: &str| parse_floats(s).map(FloatList))]
    epsilons: Option<FloatList>,
    /// Seed for the random fields.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Include incidence tables in `mesh` output.
    #[arg(long, global = true)]
    full: bool,
    /// Run every loop on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Output file, or directory for `assemble`.
    #[arg(long, global = true)]
    out: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = &cli.opts;
    let overrides = Overrides {
        geometry: o.geometry,
        grid: o.grid,
        grids: o.grids.clone().map(|g| g.0),
        cutoff: o.cutoff,
        n_eigs: o.n_eigs,
        eps: o.eps,
        epsilons: o.epsilons.clone().map(|e| e.0),
        seed: o.seed,
        full: o.full,
        sequential: o.sequential,
        out: o.out.clone(),
    };
    let cfg = match RunConfig::load(o.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Mesh => commands::mesh(&cfg),
        Command::Assemble => commands::assemble(&cfg),
        Command::Eigs => commands::eigs(&cfg),
        Command::Oracle => commands::oracle(&cfg),
        Command::Converge => commands::converge(&cfg),
        Command::Action => commands::action(&cfg),
        Command::Verify => commands::verify(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
