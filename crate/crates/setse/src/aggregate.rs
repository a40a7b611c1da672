//! Node- and network-level views of an embedding.
//!
//! Edges own the tension and strain; comparisons across nodes or whole
//! graphs want one number per node (the mean absolute tension over incident
//! edges, linear in the edge tensions) or per graph (means over nodes).

use crate::engine::Embeddings;
use crate::error::{Error, Result};
use crate::graph::PreparedGraph;

/// Per-node view: the elevation in every dimension plus the mean absolute
/// tension of the incident edges (zero for an isolated node).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSummary {
    pub node_id: String,
    pub elevation: Vec<f64>,
    pub node_tension: f64,
}

/// Graph-level averages, one `mean_abs_elevation` entry per dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NetworkSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub mean_abs_elevation: Vec<f64>,
    pub mean_node_tension: f64,
}

/// Mean `|tension|` of each node's incident edges; isolated nodes get zero.
pub fn node_tensions(graph: &PreparedGraph, embeddings: &Embeddings) -> Vec<f64> {
    let mut sum = vec![0.0; graph.n_nodes()];
    let mut count = vec![0u32; graph.n_nodes()];
    for (e, &t) in graph.edges().iter().zip(&embeddings.edge_tension) {
        sum[e.source as usize] += t.abs();
        sum[e.target as usize] += t.abs();
        count[e.source as usize] += 1;
        count[e.target as usize] += 1;
    }
    sum.iter()
        .zip(&count)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect()
}

pub fn node_summaries(graph: &PreparedGraph, embeddings: &Embeddings) -> Vec<NodeSummary> {
    let tensions = node_tensions(graph, embeddings);
    (0..graph.n_nodes())
        .map(|i| NodeSummary {
            node_id: graph.ids()[i].clone(),
            elevation: embeddings
                .node_elevation
                .iter()
                .map(|dim| dim[i])
                .collect(),
            node_tension: tensions[i],
        })
        .collect()
}

/// Collapse node summaries to graph-level means.
pub fn aggregate_network(
    summaries: &[NodeSummary],
    edge_count: usize,
) -> Result<NetworkSummary> {
    if summaries.is_empty() {
        return Err(Error::EmptyInput("node summaries"));
    }
    let n = summaries.len() as f64;
    let dims = summaries[0].elevation.len();
    let mean_abs_elevation = (0..dims)
        .map(|d| summaries.iter().map(|s| s.elevation[d].abs()).sum::<f64>() / n)
        .collect();
    let mean_node_tension = summaries.iter().map(|s| s.node_tension).sum::<f64>() / n;
    Ok(NetworkSummary {
        node_count: summaries.len(),
        edge_count,
        mean_abs_elevation,
        mean_node_tension,
    })
}
