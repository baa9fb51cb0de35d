//! `sts`: command-line front end for sts-core.
//!
//! Exit codes: 0 success or a true verdict, 1 a clean negative verdict,
//! 2 invalid input, 3 an internal verification failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sts", version, about = "Steiner triple systems and free Steiner quasigroups")]
pub struct Cli {
    /// Write a JSON result document here.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Worker threads; every computation currently runs on one thread.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a system file and print its shape.
    Validate { file: PathBuf },
    /// Complete a partial system to a finite STS.
    Complete {
        file: PathBuf,
        #[arg(long, default_value_t = 27)]
        max_order: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add fresh products for undefined pairs, `depth` times.
    FreeStep {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Elements of the closure of a set of terms, by rank.
    Closure {
        base: PathBuf,
        /// Comma-separated terms.
        #[arg(long)]
        gens: String,
        #[arg(long)]
        k: u64,
        /// Maximum number of elements.
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// Normal form of a term over the base system.
    Normalize {
        base: PathBuf,
        #[arg(long)]
        term: String,
    },
    /// Whether a one-variable formula has infinitely many solutions.
    Einf {
        base: PathBuf,
        #[arg(long)]
        phi: String,
        /// Rank explored by the witness search.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Override the rank bound (the verdict is then uncertified).
        #[arg(long)]
        k: Option<u64>,
    },
    /// Check an extension instance against a model.
    DeltaCheck {
        model: PathBuf,
        instance: PathBuf,
        /// Search node budget.
        #[arg(long, default_value_t = 10_000_000)]
        nodes: u64,
    },
    /// Build a staged generic chain.
    Generic {
        #[arg(long)]
        seed_file: PathBuf,
        #[arg(long)]
        stages: usize,
        #[arg(long)]
        bound: usize,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        #[arg(long)]
        out_prefix: Option<String>,
    },
    /// Merge parameter sets over a free universe.
    Merge {
        #[arg(value_enum)]
        kind: MergeKind,
        config: PathBuf,
        #[arg(long, default_value_t = 4096)]
        cap: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Free independence of A and B over C.
    Indep {
        base: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "")]
        c: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Build (and optionally verify) the TP2 array.
    Tp2 {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        verify_depth: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and audit the three-generated chain over a family of systems.
    Sma1 {
        #[arg(required = true)]
        family: Vec<PathBuf>,
        #[arg(long)]
        prefix: usize,
        #[arg(long)]
        out_prefix: Option<String>,
    },
    /// Search for an STS of the given order without proper sub-STSs.
    Doyen {
        #[arg(long)]
        order: usize,
        /// Seconds; defaults to STS_BUDGET_MS or 120 s.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Isolating formula for the type of a tuple in a finite STS.
    Isolate {
        model: PathBuf,
        #[arg(long)]
        tuple: String,
    },
    /// Whether two tuples agree on all rank-m products.
    Equiv(EquivArgs),
}

#[derive(Args, Debug)]
pub struct EquivArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub t1: String,
    #[arg(long)]
    pub t2: String,
    /// Model of the second tuple; defaults to the first model.
    #[arg(long)]
    pub model2: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeKind {
    Al1,
    Al25,
    Family,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = commands::run(&cli);
    let code = outcome.code;
    if let Some(path) = &cli.report {
        let doc = outcome.document();
        let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
        if let Err(e) = std::fs::write(path, text) {
            eprintln!("error: cannot write report {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
