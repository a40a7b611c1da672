//! `setse eval` — embed every instance under a directory and score how well
//! the embedding recovers the labels it was generated from.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use setse::aggregate::{aggregate_network, node_summaries, NetworkSummary};
use setse::eval::{
    adjacency_vote, knn_predict, multinomial_separability, ConfusionMatrix, LabelIndex, Metrics,
};
use setse::graph::{AttributeColumn, ForceSpec, NodeAttributeTable};
use setse::io::{fmt_float, load_edge_list, load_node_attributes};
use setse::EdgeValue;

use crate::support::{self, InstanceMeta, Mode, SolverOverrides};

#[derive(clap::Args, Debug)]
pub struct EvalArgs {
    /// Directory of instance subdirectories, as written by `quintet`.
    #[arg(long)]
    pub dir: PathBuf,
    /// Directory that receives report.csv and summary.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Neighbour count of the k-nearest-neighbour classifier.
    #[arg(long, default_value_t = 7)]
    pub knn: usize,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
    #[command(flatten)]
    pub overrides: SolverOverrides,
}

struct InstanceReport {
    name: String,
    meta: InstanceMeta,
    converged: bool,
    eta: f64,
    iterations: u64,
    network: NetworkSummary,
    class_separability: f64,
    subclass_separability: f64,
    knn: Metrics,
    vote: Metrics,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let dirs = discover_instances(&args.dir)?;
    if dirs.is_empty() {
        bail!("no instance directories (containing meta.json) under {}", args.dir.display());
    }

    let reports: Vec<InstanceReport> = dirs
        .par_iter()
        .map(|dir| {
            evaluate_instance(dir, &args).with_context(|| format!("evaluating {}", dir.display()))
        })
        .collect::<Result<_>>()?;

    std::fs::create_dir_all(&args.out)?;
    write_report(&args.out.join("report.csv"), &reports)?;
    write_summary(&args.out.join("summary.json"), &args, &reports)?;
    println!(
        "evaluated {} instances ({} converged) -> {}",
        reports.len(),
        reports.iter().filter(|r| r.converged).count(),
        args.out.display()
    );
    Ok(())
}

/// Subdirectories holding a meta.json, in name order.
fn discover_instances(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(root).with_context(|| format!("reading {}", root.display()))? {
        let path = entry?.path();
        if path.is_dir() && path.join("meta.json").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn labels_of(table: &NodeAttributeTable, column: &str) -> Result<Vec<String>> {
    match table.column(column) {
        Some(AttributeColumn::Categorical(values)) => values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.clone()
                    .with_context(|| format!("node '{}' has no {column} label", table.ids()[i]))
            })
            .collect(),
        Some(AttributeColumn::Continuous(_)) => {
            bail!("column '{column}' is numeric, expected labels")
        }
        None => bail!("node table has no '{column}' column"),
    }
}

fn evaluate_instance(dir: &Path, args: &EvalArgs) -> Result<InstanceReport> {
    let meta: InstanceMeta =
        serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
    let edges = load_edge_list(dir.join("edges.csv"))?;
    let table = load_node_attributes(dir.join("nodes.csv"))?;
    let graph = setse::build_prepared_graph(
        &edges,
        &table,
        &ForceSpec::single("class"),
        EdgeValue::Constant(meta.stiffness),
        EdgeValue::Constant(meta.distance),
    )?;

    let mut solved = support::solve(&graph, args.mode, &args.overrides)?;
    solved.embeddings.mean_center();
    let summaries = node_summaries(&graph, &solved.embeddings);
    let network = aggregate_network(&summaries, graph.n_edges())?;

    // One point per node: its elevation in the class dimension and its
    // mean incident tension.
    let points: Vec<[f64; 2]> =
        summaries.iter().map(|s| [s.elevation[0], s.node_tension]).collect();

    let (class_index, class_ids) = LabelIndex::build(&labels_of(&table, "class")?);
    let (_, subclass_ids) = LabelIndex::build(&labels_of(&table, "subclass")?);
    let class_separability = multinomial_separability(&points, &class_ids)?;
    let subclass_separability = multinomial_separability(&points, &subclass_ids)?;

    let knn_points: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
    let knn_pred = knn_predict(&knn_points, &class_ids, args.knn)?;
    let knn = ConfusionMatrix::from_pairs(&class_ids, &knn_pred, class_index.len())?.metrics();

    let pairs: Vec<(u32, u32)> =
        graph.edges().iter().map(|e| (e.source, e.target)).collect();
    let known: Vec<Option<usize>> = class_ids.iter().copied().map(Some).collect();
    let voted = adjacency_vote(graph.n_nodes(), &pairs, &known);
    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for (&t, p) in class_ids.iter().zip(voted) {
        if let Some(p) = p {
            truth.push(t);
            predicted.push(p);
        }
    }
    let vote = ConfusionMatrix::from_pairs(&truth, &predicted, class_index.len())?.metrics();

    Ok(InstanceReport {
        name: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string()),
        meta,
        converged: solved.embeddings.converged,
        eta: solved.embeddings.eta,
        iterations: solved.embeddings.iterations,
        network,
        class_separability,
        subclass_separability,
        knn,
        vote,
    })
}

fn write_report(path: &Path, reports: &[InstanceReport]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "instance",
        "type",
        "seed",
        "nodes",
        "edges",
        "converged",
        "eta",
        "iterations",
        "mean_abs_elevation",
        "mean_node_tension",
        "class_separability",
        "subclass_separability",
        "knn_accuracy",
        "knn_balanced_accuracy",
        "knn_f1",
        "knn_kappa",
        "vote_accuracy",
        "vote_balanced_accuracy",
        "vote_f1",
        "vote_kappa",
    ])?;
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for r in reports {
        writer.write_record([
            r.name.clone(),
            r.meta.quintet_type.to_string(),
            r.meta.seed.to_string(),
            r.network.node_count.to_string(),
            r.network.edge_count.to_string(),
            r.converged.to_string(),
            fmt_float(r.eta),
            r.iterations.to_string(),
            fmt_float(r.network.mean_abs_elevation[0]),
            fmt_float(r.network.mean_node_tension),
            fmt_float(r.class_separability),
            fmt_float(r.subclass_separability),
            opt(r.knn.accuracy),
            opt(r.knn.balanced_accuracy),
            opt(r.knn.f1),
            opt(r.knn.kappa),
            opt(r.vote.accuracy),
            opt(r.vote.balanced_accuracy),
            opt(r.vote.f1),
            opt(r.vote.kappa),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let collected: Vec<f64> = values.collect();
    (!collected.is_empty()).then(|| collected.iter().sum::<f64>() / collected.len() as f64)
}

fn write_summary(path: &Path, args: &EvalArgs, reports: &[InstanceReport]) -> Result<()> {
    let mut by_type: BTreeMap<String, Vec<&InstanceReport>> = BTreeMap::new();
    for r in reports {
        by_type.entry(r.meta.quintet_type.to_string()).or_default().push(r);
    }

    let per_type: serde_json::Map<String, serde_json::Value> = by_type
        .iter()
        .map(|(ty, group)| {
            let value = serde_json::json!({
                "instances": group.len(),
                "converged": group.iter().filter(|r| r.converged).count(),
                "mean_class_separability": mean(group.iter().map(|r| r.class_separability)),
                "mean_subclass_separability": mean(group.iter().map(|r| r.subclass_separability)),
                "mean_knn_accuracy": mean(group.iter().filter_map(|r| r.knn.accuracy)),
                "mean_vote_accuracy": mean(group.iter().filter_map(|r| r.vote.accuracy)),
                "mean_abs_elevation": mean(group.iter().map(|r| r.network.mean_abs_elevation[0])),
                "mean_node_tension": mean(group.iter().map(|r| r.network.mean_node_tension)),
            });
            (ty.clone(), value)
        })
        .collect();

    // Whole-graph embedding coordinates separate the generator types when
    // more than one is present.
    let type_separability = if by_type.len() >= 2 {
        let type_points: Vec<[f64; 2]> = reports
            .iter()
            .map(|r| [r.network.mean_abs_elevation[0], r.network.mean_node_tension])
            .collect();
        let names: Vec<String> =
            reports.iter().map(|r| r.meta.quintet_type.to_string()).collect();
        let (_, type_ids) = LabelIndex::build(&names);
        Some(multinomial_separability(&type_points, &type_ids)?)
    } else {
        None
    };

    let summary = serde_json::json!({
        "instances": reports.len(),
        "knn": args.knn,
        "mode": args.mode.name(),
        "per_type": per_type,
        "type_separability": type_separability,
    });
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
