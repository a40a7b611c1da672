//! `setse embed` — load a graph from CSV, solve it, write the embedding.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use setse::graph::ForceSpec;
use setse::io::{load_edge_list, load_node_attributes, write_embeddings, RunReport};

use crate::support::{self, Mode, SolverOverrides};

#[derive(clap::Args, Debug)]
pub struct EmbedArgs {
    /// Edge list CSV with header `from,to[,k][,d]`.
    #[arg(long)]
    pub edges: PathBuf,
    /// Node attribute CSV with header `node,<attr>...`.
    #[arg(long)]
    pub nodes: PathBuf,
    /// Attribute column used as the force; repeat for more dimensions.
    #[arg(long, required = true)]
    pub force: Vec<String>,
    /// Give a two-level categorical force one dimension per level instead
    /// of collapsing the mirror-image pair.
    #[arg(long)]
    pub expand_binary: bool,
    /// Spring stiffness: a number, or `column` to use the k column.
    #[arg(long, default_value = "1000")]
    pub stiffness: String,
    /// Spring rest distance: a number, or `column` to use the d column.
    #[arg(long, default_value = "1")]
    pub distance: String,
    #[arg(long, value_enum, default_value_t = Mode::Biconnected)]
    pub mode: Mode,
    /// Mean-centre every elevation dimension before writing.
    #[arg(long)]
    pub center: bool,
    /// Directory that receives nodes.csv, edges.csv and run.json.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: SolverOverrides,
}

pub fn run(args: EmbedArgs) -> Result<()> {
    let edges = load_edge_list(&args.edges)
        .with_context(|| format!("loading edge list {}", args.edges.display()))?;
    let table = load_node_attributes(&args.nodes)
        .with_context(|| format!("loading node table {}", args.nodes.display()))?;
    let force = ForceSpec { columns: args.force.clone(), expand_binary: args.expand_binary };
    let stiffness = support::parse_edge_value(&args.stiffness, "stiffness")?;
    let distance = support::parse_edge_value(&args.distance, "distance")?;
    let graph = setse::build_prepared_graph(&edges, &table, &force, stiffness, distance)?;

    let started = Instant::now();
    let mut solved = support::solve(&graph, args.mode, &args.overrides)?;
    let wall_seconds = started.elapsed().as_secs_f64();
    if args.center {
        solved.embeddings.mean_center();
    }
    if !solved.embeddings.converged {
        eprintln!(
            "warning: not converged after {} iterations (eta {:.3e}); results written anyway",
            solved.embeddings.iterations, solved.embeddings.eta
        );
    }

    let report = RunReport {
        mode: args.mode.name().into(),
        nodes: graph.n_nodes(),
        edges: graph.n_edges(),
        dimensions: solved.embeddings.dimension_names.clone(),
        converged: solved.embeddings.converged,
        eta: solved.embeddings.eta,
        lambda: args.overrides.tolerance().lambda(&graph),
        iterations: solved.embeddings.iterations,
        wall_seconds,
        parameters: serde_json::json!({
            "inputs": {
                "edges": args.edges.display().to_string(),
                "nodes": args.nodes.display().to_string(),
                "force": args.force,
                "expand_binary": args.expand_binary,
                "stiffness": args.stiffness,
                "distance": args.distance,
                "center": args.center,
            },
            "solver": solved.parameters,
        }),
    };
    write_embeddings(&args.out, &graph, &solved.embeddings, &report)?;
    println!(
        "embedded {} nodes / {} edges in {} mode: converged={} eta={:.6e} iterations={} -> {}",
        graph.n_nodes(),
        graph.n_edges(),
        args.mode.name(),
        solved.embeddings.converged,
        solved.embeddings.eta,
        solved.embeddings.iterations,
        args.out.display()
    );
    Ok(())
}
