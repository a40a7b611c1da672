//! `setse quintet` — write labelled benchmark instances to disk.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use setse::graph::{AttributeColumn, NodeAttributeTable, RawEdge};
use setse::io::{write_edge_list, write_node_attributes};
use setse::synth::{
    generate_peel, PeelInstance, QuintetType, QUINTET_DISTANCE, QUINTET_STIFFNESS,
};

use crate::support::{self, InstanceMeta};

#[derive(clap::Args, Debug)]
pub struct QuintetArgs {
    /// Block structure to sample: A, B, C, D or E.
    #[arg(long = "type", value_parser = support::parse_quintet_type)]
    pub quintet_type: QuintetType,
    /// How many instances to write.
    #[arg(long, default_value_t = 20)]
    pub count: u64,
    /// Seed of the first instance; instance i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory that receives one subdirectory per instance.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: QuintetArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    (0..args.count)
        .into_par_iter()
        .try_for_each(|i| -> Result<()> {
            let seed = args.seed + i;
            let instance = generate_peel(args.quintet_type, seed)?;
            let dir = args.out.join(format!("{}_{seed:05}", args.quintet_type));
            write_instance(&dir, &instance)
                .with_context(|| format!("writing {}", dir.display()))
        })?;
    println!(
        "wrote {} type-{} instances (seeds {}..{}) under {}",
        args.count,
        args.quintet_type,
        args.seed,
        args.seed + args.count,
        args.out.display()
    );
    Ok(())
}

/// One instance becomes edges.csv, nodes.csv (class and subclass columns)
/// and meta.json.
fn write_instance(dir: &Path, instance: &PeelInstance) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let ids = instance.graph.ids();

    let edges: Vec<RawEdge> = instance
        .edges
        .iter()
        .map(|&(u, v)| RawEdge::new(&ids[u as usize], &ids[v as usize]))
        .collect();
    write_edge_list(dir.join("edges.csv"), &edges)?;

    let mut table = NodeAttributeTable::new();
    for id in ids {
        table.add_node(id)?;
    }
    let column = |labels: &[String]| {
        AttributeColumn::Categorical(labels.iter().cloned().map(Some).collect())
    };
    table.add_column("class", column(&instance.class_labels))?;
    table.add_column("subclass", column(&instance.subclass_labels))?;
    write_node_attributes(dir.join("nodes.csv"), &table)?;

    let meta = InstanceMeta {
        quintet_type: instance.quintet_type,
        seed: instance.seed,
        resamples: instance.resamples,
        nodes: instance.graph.n_nodes(),
        edges: instance.edges.len(),
        stiffness: QUINTET_STIFFNESS,
        distance: QUINTET_DISTANCE,
    };
    let mut file = std::fs::File::create(dir.join("meta.json"))?;
    serde_json::to_writer_pretty(&mut file, &meta)?;
    file.write_all(b"\n")?;
    Ok(())
}
