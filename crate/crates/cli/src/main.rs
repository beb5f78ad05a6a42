//! Command line front end: `simulate` runs a configuration file end to end,
//! `infsup` produces the stability classification table, `benchmark` runs a
//! named verification case and grades it against its acceptance thresholds.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 benchmark acceptance failure.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "poroflow",
    version,
    about = "Mixed finite elements for dynamic poroelasticity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file and write time histories and snapshots.
    Simulate {
        /// Path to the run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output.dir` from the file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constraint-rank and inf-sup diagnostics over mesh refinements.
    Infsup {
        /// Element pairs to test (default: both).
        #[arg(long = "element", value_delimiter = ',')]
        elements: Vec<String>,
        /// Mesh patterns to test (default: all three).
        #[arg(long = "pattern", value_delimiter = ',')]
        patterns: Vec<String>,
        /// Refinement ladder.
        #[arg(long, default_value = "1,2,4,8,16", value_delimiter = ',')]
        levels: Vec<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a named verification case and grade it.
    Benchmark {
        /// One of: column_ex1, block_ex2, bracket_ex3.
        case: String,
        /// Element pair for the run (cases with a fixed pairing ignore this).
        #[arg(long)]
        element: Option<String>,
        /// Mass representation.
        #[arg(long)]
        mass: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Failure category, mapped onto the exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Acceptance(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Acceptance(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Acceptance(m) => write!(f, "acceptance failure: {m}"),
        }
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("POROFLOW_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        } else {
            eprintln!("warning: POROFLOW_THREADS=`{v}` is not a number, ignored");
        }
    }
}

fn main() {
    let cli = Cli::parse();
    init_threads();
    let result = match cli.command {
        Command::Simulate { config, out } => commands::simulate(&config, out.as_deref()),
        Command::Infsup {
            elements,
            patterns,
            levels,
            out,
        } => commands::infsup(&elements, &patterns, &levels, &out),
        Command::Benchmark {
            case,
            element,
            mass,
            out,
        } => commands::benchmark(&case, element.as_deref(), mass.as_deref(), &out),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
