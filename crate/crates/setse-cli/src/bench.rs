//! `setse bench` — solver timing across a ladder of graph sizes.
//!
//! Each size is a connected random graph with half as many nodes as edges,
//! unit stiffness, and one balanced random force dimension. The CSV gets a
//! per-iteration column (convergence exit disabled) and to-convergence
//! columns (empty when the iteration cap strikes first).

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setse::engine::time_per_iteration;
use setse::graph::Edge;
use setse::io::fmt_float;
use setse::synth::{generate_random_graph, RandomGraphSpec};
use setse::{run_setse, PreparedGraph, SolverParams, Tolerance};

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    /// Edge counts to time, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000,3000,10000,30000,100000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Iteration cap of each convergence run.
    #[arg(long, default_value_t = 200_000)]
    pub max_iterations: u64,
    /// Integration time step.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Drag coefficient.
    #[arg(long, default_value_t = 2.0)]
    pub drag: f64,
}

struct BenchRow {
    edges: usize,
    nodes: usize,
    seconds_per_iteration: f64,
    converged: bool,
    iterations_to_convergence: Option<u64>,
    seconds_to_convergence: Option<f64>,
}

pub fn run(args: BenchArgs) -> Result<()> {
    if args.sizes.is_empty() {
        anyhow::bail!("--sizes needs at least one edge count");
    }

    let mut rows = Vec::with_capacity(args.sizes.len());
    for &edges in &args.sizes {
        let row = bench_one(edges, &args)
            .with_context(|| format!("benchmarking {edges} edges"))?;
        println!(
            "edges={} nodes={} s/iter={:.3e} converged={} iterations={}",
            row.edges,
            row.nodes,
            row.seconds_per_iteration,
            row.converged,
            row.iterations_to_convergence
                .map(|i| i.to_string())
                .unwrap_or_else(|| format!(">{}", args.max_iterations)),
        );
        rows.push(row);
    }

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_rows(&args.out, &rows)?;

    let per_iter: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.edges as f64, r.seconds_per_iteration))
        .collect();
    match log_log_slope(&per_iter) {
        Some(slope) => println!("per-iteration cost slope (log-log): {slope:.3}"),
        None => println!("per-iteration cost slope: n/a (need two sizes)"),
    }
    let to_conv: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.seconds_to_convergence.map(|s| (r.edges as f64, s)))
        .collect();
    match log_log_slope(&to_conv) {
        Some(slope) => println!("to-convergence cost slope (log-log): {slope:.3}"),
        None => println!("to-convergence cost slope: n/a (need two converged sizes)"),
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn bench_one(edges: usize, args: &BenchArgs) -> Result<BenchRow> {
    let nodes = (edges / 2).max(2);
    let graph = bench_graph(nodes, edges, args.seed)?;
    let params = SolverParams {
        dt: args.dt,
        drag: args.drag,
        mass: 1.0,
        max_iterations: args.max_iterations,
        tolerance: Tolerance::default(),
    };

    let timing_iterations = (5_000_000 / edges as u64).max(100);
    time_per_iteration(&graph, &params, timing_iterations.min(50))?; // warm caches
    let per_iter = time_per_iteration(&graph, &params, timing_iterations)?;

    let started = Instant::now();
    let embeddings = run_setse(&graph, &params)?;
    let wall = started.elapsed().as_secs_f64();

    Ok(BenchRow {
        edges,
        nodes,
        seconds_per_iteration: per_iter.as_secs_f64(),
        converged: embeddings.converged,
        iterations_to_convergence: embeddings.converged.then_some(embeddings.iterations),
        seconds_to_convergence: embeddings.converged.then_some(wall),
    })
}

/// Connected Gnm graph, unit springs, one balanced uniform force dimension.
fn bench_graph(nodes: usize, edges: usize, seed: u64) -> Result<PreparedGraph> {
    let spec = RandomGraphSpec::Gnm { nodes, edges };
    let pairs = generate_random_graph(&spec, seed)?;
    let edge_list: Vec<Edge> = pairs
        .iter()
        .map(|&(u, v)| Edge { source: u, target: v, stiffness: 1.0, distance: 1.0 })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(edges as u64));
    let mut force: Vec<f64> = (0..nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = force.iter().sum::<f64>() / nodes as f64;
    force.iter_mut().for_each(|f| *f -= mean);

    let ids = (0..nodes).map(|i| format!("v{i}")).collect();
    Ok(PreparedGraph::from_parts(ids, edge_list, vec![force], vec!["load".into()])?)
}

fn write_rows(path: &PathBuf, rows: &[BenchRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "edges",
        "nodes",
        "seconds_per_iteration",
        "converged",
        "iterations_to_convergence",
        "seconds_to_convergence",
    ])?;
    for r in rows {
        writer.write_record([
            r.edges.to_string(),
            r.nodes.to_string(),
            fmt_float(r.seconds_per_iteration),
            r.converged.to_string(),
            r.iterations_to_convergence.map(|i| i.to_string()).unwrap_or_default(),
            r.seconds_to_convergence.map(fmt_float).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Least-squares slope of ln y against ln x; `None` below two points.
fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
