//! `setse` command line: embed attribute graphs from CSV files, generate
//! benchmark block-model instances, run classification experiments over
//! them, and time the solver across graph sizes.

mod bench;
mod embed;
mod eval_cmd;
mod quintet;
mod support;

use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "setse",
    version,
    about = "Strain/elevation/tension spring embeddings for attribute networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a graph given an edge list and node attributes.
    Embed(embed::EmbedArgs),
    /// Generate block-model benchmark instances to disk.
    Quintet(quintet::QuintetArgs),
    /// Separability, nearest-neighbour and adjacency-voting experiments
    /// over a directory of generated instances.
    Eval(eval_cmd::EvalArgs),
    /// Per-iteration and to-convergence timing across graph sizes.
    Bench(bench::BenchArgs),
}

fn main() -> Result<()> {
    support::init_threads()?;
    match Cli::parse().command {
        Command::Embed(args) => embed::run(args),
        Command::Quintet(args) => quintet::run(args),
        Command::Eval(args) => eval_cmd::run(args),
        Command::Bench(args) => bench::run(args),
    }
}
