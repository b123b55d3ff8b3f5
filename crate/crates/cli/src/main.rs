//! Command-line surface for the phylogenetic invariant pipeline.
//!
//! Exit codes: 0 success, 2 input validation failure, 3 leaf-set mismatch
//! between trees and data.

mod ops;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "phyloalg",
    about = "Phylogenetic invariants and low-rank distances for binary trait data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Table,
    Tsv,
}

#[derive(Args)]
struct DataArgs {
    /// Language-by-variable trait table (TSV/CSV, header row of variable ids)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Table format
    #[arg(long, value_enum, default_value = "tsv")]
    data_format: DataFormat,
    /// Cell dialect: sswl (0 = minus) or langelin (0 = undefined)
    #[arg(long, value_enum, default_value = "sswl")]
    data_dialect: DataDialect,
    /// Boundary distribution file (pattern<TAB>p/q lines)
    #[arg(long)]
    distribution: Option<PathBuf>,
    /// Comma-separated language list fixing the leaf/bit order
    #[arg(long)]
    languages: Option<String>,
    /// Leaf-order file, one language per line (alternative to --languages)
    #[arg(long)]
    languages_file: Option<PathBuf>,
    /// Per-variable weights file (variable<TAB>weight)
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataFormat {
    Tsv,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataDialect {
    Sswl,
    Langelin,
}

#[derive(Subcommand)]
enum Command {
    /// Score candidate trees against a dataset and report winners
    Analyze {
        #[command(flatten)]
        data: DataArgs,
        /// Newick file of candidate trees, one per line
        #[arg(long)]
        trees: PathBuf,
        /// Criteria to evaluate (subset of linf,l1,dist)
        #[arg(long, default_value = "linf,l1,dist")]
        criteria: String,
        /// Score only the splits that distinguish the candidates
        #[arg(long)]
        conditional: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
        /// Write output here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the flattening matrix of a distribution along a split
    Flatten {
        #[command(flatten)]
        data: DataArgs,
        /// One side of the split: comma-separated leaf names (or 0-based indices)
        #[arg(long)]
        side: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact minor norms of a flattening or matrix
    Invariants {
        #[command(flatten)]
        data: DataArgs,
        /// Matrix file (TSV of rationals or decimals) scored directly
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Split side when scoring a distribution
        #[arg(long)]
        side: Option<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Singular values and squared distance to the rank-k matrices
    Distance {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        side: Option<String>,
        /// Rank of the target matrix set
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate or sample a Markov model on a tree
    Simulate {
        /// Model JSON file (tree, pi, per-edge parameters)
        #[arg(long)]
        model: PathBuf,
        /// Draw this many samples instead of computing the exact distribution
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tree manipulations
    #[command(subcommand)]
    Trees(TreesCommand),
}

#[derive(Subcommand)]
enum TreesCommand {
    /// Binary resolutions of multifurcating trees
    Resolve {
        #[arg(long)]
        trees: PathBuf,
        /// Deduplicate outputs by unrooted topology
        #[arg(long)]
        dedup: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// All unrooted binary topologies on the given leaves
    Enumerate {
        /// Comma-separated leaf names
        #[arg(long)]
        leaves: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graft the second tree onto the first at a shared leaf
    Graft {
        /// Newick file with exactly two trees
        #[arg(long)]
        trees: PathBuf,
        /// The shared leaf
        #[arg(long)]
        at: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-place an ancient cherry as outgroups above the root subtrees
    AncientMove {
        /// Newick file with the input tree
        #[arg(long)]
        trees: PathBuf,
        /// The two ancient leaves, comma separated
        #[arg(long)]
        pair: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ops::configure_threads();
    match ops::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(ops::exit_code_for(&err))
        }
    }
}
