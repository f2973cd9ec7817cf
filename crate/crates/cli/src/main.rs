mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use whilesem::derivation::System;
use whilesem::harness::Semantics;

/// Run, compare and certify While programs under several operational semantics.
#[derive(Debug, Parser)]
#[command(name = "whilesem", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Step or rule-application budget.
    #[arg(long, default_value_t = 10_000)]
    pub fuel: u64,
    /// Input stream as comma separated values, e.g. "1,0,null".
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a program under one semantics.
    Run {
        #[arg(long, default_value = "small")]
        semantics: Semantics,
        #[command(flatten)]
        common: Common,
        file: PathBuf,
    },
    /// Print the small-step configurations of a run.
    Trace {
        #[command(flatten)]
        common: Common,
        file: PathBuf,
    },
    /// Evaluate, and search for a divergence certificate when evaluation runs out of fuel.
    Classify {
        /// Variables whose numeric values are ignored when looking for repeated states.
        #[arg(long, value_delimiter = ',')]
        abstract_vars: Vec<String>,
        /// Build a derivation graph in this coinductive system instead of a lasso.
        #[arg(long)]
        system: Option<System>,
        /// Save the certificate as JSON.
        #[arg(long)]
        cert: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        file: PathBuf,
    },
    /// Run every semantics and report whether they agree.
    /// Without `--input`, programs that read input get every 0/1 stream up to length 3.
    Compare {
        #[command(flatten)]
        common: Common,
        file: PathBuf,
    },
    /// Differential testing on generated programs.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        depth: u32,
        /// Let programs read input, and try every 0/1 stream up to length 3.
        #[arg(long)]
        with_input: bool,
        /// Generate throw and try/catch.
        #[arg(long)]
        exceptions: bool,
        #[arg(long, default_value_t = 0.9)]
        alloc_probability: f64,
        /// Directory for counterexample `.whl` files.
        #[arg(long)]
        cex_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Work with `.rules` files.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
    /// Work with divergence certificates.
    Cert {
        #[command(subcommand)]
        action: CertAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum RulesAction {
    /// Make implicit status flags explicit.
    Thread {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count rules, premises and, against a base, duplicated premises.
    Count {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        base: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Parse the files; with `--against`, compare both sides up to renaming after threading flags.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        against: Vec<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CertAction {
    /// Validate a lasso or derivation graph saved as JSON.
    Check { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("whilesem: {e}");
            e.exit_code()
        }
    }
}
