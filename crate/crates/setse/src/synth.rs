//! Synthetic benchmark graphs.
//!
//! The quintet is a family of five 40-node stochastic block models that all
//! share the same class sizes, edge count and (exactly zero) class
//! assortativity, yet differ in sub-class structure: a single summary
//! statistic cannot tell them apart. Types differ in how the ten-node
//! sub-classes a1, a2, b1, b2 wire to each other; every type places 40
//! edges inside class a, 40 inside class b and 80 between them.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{expand_categorical, Edge, PreparedGraph};

pub const QUINTET_NODES: usize = 40;
pub const QUINTET_EDGES: usize = 160;
pub const QUINTET_STIFFNESS: f64 = 1000.0;
pub const QUINTET_DISTANCE: f64 = 1.0;

/// One of the five block structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum QuintetType {
    A,
    B,
    C,
    D,
    E,
}

impl QuintetType {
    pub const ALL: [QuintetType; 5] =
        [QuintetType::A, QuintetType::B, QuintetType::C, QuintetType::D, QuintetType::E];

    /// Edge counts between sub-class pairs, upper triangle in the order
    /// a1, a2, b1, b2 (entries below the diagonal are unused).
    pub fn block_counts(self) -> [[u32; 4]; 4] {
        match self {
            QuintetType::A => [
                [10, 20, 20, 20],
                [0, 10, 20, 20],
                [0, 0, 10, 20],
                [0, 0, 0, 10],
            ],
            QuintetType::B => [
                [38, 2, 20, 20],
                [0, 0, 20, 20],
                [0, 0, 0, 2],
                [0, 0, 0, 38],
            ],
            QuintetType::C => [
                [38, 2, 0, 0],
                [0, 0, 80, 0],
                [0, 0, 10, 20],
                [0, 0, 0, 10],
            ],
            QuintetType::D => [
                [10, 20, 0, 0],
                [0, 10, 80, 0],
                [0, 0, 10, 20],
                [0, 0, 0, 10],
            ],
            QuintetType::E => [
                [38, 2, 0, 0],
                [0, 0, 80, 0],
                [0, 0, 0, 2],
                [0, 0, 0, 38],
            ],
        }
    }
}

impl std::fmt::Display for QuintetType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QuintetType::A => "A",
            QuintetType::B => "B",
            QuintetType::C => "C",
            QuintetType::D => "D",
            QuintetType::E => "E",
        })
    }
}

impl std::str::FromStr for QuintetType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(QuintetType::A),
            "B" | "b" => Ok(QuintetType::B),
            "C" | "c" => Ok(QuintetType::C),
            "D" | "d" => Ok(QuintetType::D),
            "E" | "e" => Ok(QuintetType::E),
            other => Err(Error::InvalidParameter(format!(
                "unknown quintet type '{other}' (expected A-E)"
            ))),
        }
    }
}

/// A sampled quintet graph with its labels and provenance.
#[derive(Debug, Clone)]
pub struct PeelInstance {
    /// Spring network with the class force attached (class a +0.5, b -0.5).
    pub graph: PreparedGraph,
    pub edges: Vec<(u32, u32)>,
    /// "a" / "b" per node.
    pub class_labels: Vec<String>,
    /// "a1" / "a2" / "b1" / "b2" per node.
    pub subclass_labels: Vec<String>,
    pub quintet_type: QuintetType,
    pub seed: u64,
    /// How many disconnected draws were thrown away before this one.
    pub resamples: u32,
}

fn seeded_rng(tag: &[u8; 16], seed: u64, attempt: u64) -> ChaCha8Rng {
    let mut buf = [0u8; 32];
    buf[..8].copy_from_slice(&seed.to_le_bytes());
    buf[8..16].copy_from_slice(&attempt.to_le_bytes());
    buf[16..].copy_from_slice(tag);
    ChaCha8Rng::from_seed(buf)
}

/// First `count` elements of a uniform draw without replacement.
fn sample_distinct<T: Copy>(pool: &mut [T], count: usize, rng: &mut impl Rng) -> Vec<T> {
    debug_assert!(count <= pool.len());
    for i in 0..count {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool[..count].to_vec()
}

fn connected(n: usize, edges: &[(u32, u32)]) -> bool {
    if n <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                stack.push(v);
            }
        }
    }
    reached == n
}

fn sample_quintet_edges(ty: QuintetType, rng: &mut impl Rng) -> Vec<(u32, u32)> {
    let counts = ty.block_counts();
    let mut edges = Vec::with_capacity(QUINTET_EDGES);
    for (g, row) in counts.iter().enumerate() {
        for (h, &block_count) in row.iter().enumerate().skip(g) {
            let count = block_count as usize;
            if count == 0 {
                continue;
            }
            let (gb, hb) = (10 * g as u32, 10 * h as u32);
            let mut pool: Vec<(u32, u32)> = if g == h {
                (0..10u32)
                    .flat_map(|a| (a + 1..10).map(move |b| (gb + a, gb + b)))
                    .collect()
            } else {
                (0..10u32)
                    .flat_map(|a| (0..10u32).map(move |b| (gb + a, hb + b)))
                    .collect()
            };
            edges.extend(sample_distinct(&mut pool, count, rng));
        }
    }
    edges.sort_unstable();
    edges
}

/// Balanced two-level force from class labels: the returned dimension is
/// named after the first level seen and members of it get the positive
/// value (+1/2 for an even binary split).
pub fn attach_quintet_forces(labels: &[String]) -> Result<(String, Vec<f64>)> {
    let refs: Vec<Option<&str>> = labels.iter().map(|s| Some(s.as_str())).collect();
    let mut dims = expand_categorical(&refs)?;
    let (level, values) = dims.swap_remove(0);
    Ok((format!("class={level}"), values))
}

/// Sample one quintet graph. Draws are resampled (with the attempt folded
/// into the stream) until the graph is connected; `resamples` records how
/// many draws were discarded.
pub fn generate_peel(ty: QuintetType, seed: u64) -> Result<PeelInstance> {
    const TAG: &[u8; 16] = b"setse quintet v1";
    let mut edges = Vec::new();
    let mut resamples = 0u32;
    for attempt in 0..10_000u64 {
        let mut rng = seeded_rng(TAG, seed, attempt);
        edges = sample_quintet_edges(ty, &mut rng);
        if connected(QUINTET_NODES, &edges) {
            resamples = attempt as u32;
            break;
        }
        if attempt == 9_999 {
            return Err(Error::InvalidParameter(format!(
                "quintet type {ty} seed {seed}: no connected draw in 10000 attempts"
            )));
        }
    }

    let subclass_labels: Vec<String> = (0..QUINTET_NODES)
        .map(|i| ["a1", "a2", "b1", "b2"][i / 10].to_string())
        .collect();
    let class_labels: Vec<String> =
        subclass_labels.iter().map(|s| s[..1].to_string()).collect();
    let (dim, forces) = attach_quintet_forces(&class_labels)?;
    let graph = PreparedGraph::from_parts(
        (0..QUINTET_NODES).map(|i| format!("n{i:02}")).collect(),
        edges
            .iter()
            .map(|&(u, v)| Edge {
                source: u,
                target: v,
                stiffness: QUINTET_STIFFNESS,
                distance: QUINTET_DISTANCE,
            })
            .collect(),
        vec![forces],
        vec![dim],
    )?;
    Ok(PeelInstance {
        graph,
        edges,
        class_labels,
        subclass_labels,
        quintet_type: ty,
        seed,
        resamples,
    })
}

/// Families of connected random test graphs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomGraphSpec {
    /// Every pair independently with probability `p`; extra edges then join
    /// any leftover components.
    Gnp { nodes: usize, probability: f64 },
    /// Exactly `edges` edges: a random spanning tree plus uniform extras.
    Gnm { nodes: usize, edges: usize },
    /// A uniform random recursive tree.
    Tree { nodes: usize },
}

/// Sample an undirected connected graph as a sorted `(u, v)` edge list with
/// `u < v`. The same spec and seed always produce the same graph.
pub fn generate_random_graph(spec: &RandomGraphSpec, seed: u64) -> Result<Vec<(u32, u32)>> {
    const TAG: &[u8; 16] = b"setse randgph v1";
    let mut rng = seeded_rng(TAG, seed, 0);
    let mut edges = match *spec {
        RandomGraphSpec::Tree { nodes } => {
            if nodes == 0 {
                return Err(Error::InvalidParameter("tree needs at least one node".into()));
            }
            random_tree(nodes, &mut rng)
        }
        RandomGraphSpec::Gnm { nodes, edges: m } => {
            if nodes == 0 {
                return Err(Error::InvalidParameter("graph needs at least one node".into()));
            }
            let max = nodes as u64 * (nodes as u64 - 1) / 2;
            if (m as u64) < nodes as u64 - 1 || m as u64 > max {
                return Err(Error::InvalidParameter(format!(
                    "{m} edges on {nodes} nodes is outside [{}, {max}]",
                    nodes - 1
                )));
            }
            let mut edges = random_tree(nodes, &mut rng);
            let mut have: std::collections::HashSet<(u32, u32)> =
                edges.iter().copied().collect();
            // Sparse case: rejection sampling terminates fast. Dense case:
            // walk every non-tree pair and flip a shrinking-pool coin.
            let extra = m - edges.len();
            if (extra as u64) * 2 < max - edges.len() as u64 {
                while edges.len() < m {
                    let u = rng.gen_range(0..nodes as u32);
                    let v = rng.gen_range(0..nodes as u32);
                    let pair = (u.min(v), u.max(v));
                    if u != v && have.insert(pair) {
                        edges.push(pair);
                    }
                }
            } else {
                let mut pool: Vec<(u32, u32)> = (0..nodes as u32)
                    .flat_map(|u| (u + 1..nodes as u32).map(move |v| (u, v)))
                    .filter(|p| !have.contains(p))
                    .collect();
                edges.extend(sample_distinct(&mut pool, extra, &mut rng));
            }
            edges
        }
        RandomGraphSpec::Gnp { nodes, probability } => {
            if nodes == 0 {
                return Err(Error::InvalidParameter("graph needs at least one node".into()));
            }
            if !(0.0..=1.0).contains(&probability) {
                return Err(Error::InvalidParameter(format!(
                    "edge probability {probability} is outside [0, 1]"
                )));
            }
            let mut edges = gnp_edges(nodes, probability, &mut rng);
            join_components(nodes, &mut edges, &mut rng);
            edges
        }
    };
    edges.sort_unstable();
    Ok(edges)
}

fn random_tree(nodes: usize, rng: &mut impl Rng) -> Vec<(u32, u32)> {
    // Attach each node to a uniformly chosen earlier one, over a random
    // relabeling so low indices are not systematically high-degree.
    let mut order: Vec<u32> = (0..nodes as u32).collect();
    for i in (1..nodes).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    (1..nodes)
        .map(|i| {
            let p = order[rng.gen_range(0..i)];
            let c = order[i];
            (p.min(c), p.max(c))
        })
        .collect()
}

/// Skip-based Bernoulli sampling over all pairs: geometric jumps between
/// successes, so the cost is proportional to the number of edges drawn.
fn gnp_edges(nodes: usize, p: f64, rng: &mut impl Rng) -> Vec<(u32, u32)> {
    if p <= 0.0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..nodes as u32)
            .flat_map(|u| (u + 1..nodes as u32).map(move |v| (u, v)))
            .collect();
    }
    let lq = (1.0 - p).ln();
    let mut edges = Vec::new();
    let mut v: usize = 1;
    let mut w: i64 = -1;
    while v < nodes {
        let r: f64 = rng.gen();
        w += 1 + (((1.0 - r).ln() / lq).floor() as i64);
        while w >= v as i64 && v < nodes {
            w -= v as i64;
            v += 1;
        }
        if v < nodes {
            edges.push((w as u32, v as u32));
        }
    }
    edges
}

fn join_components(nodes: usize, edges: &mut Vec<(u32, u32)>, rng: &mut impl Rng) {
    let mut label = vec![usize::MAX; nodes];
    let mut adj = vec![Vec::new(); nodes];
    for &(u, v) in edges.iter() {
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    let mut components: Vec<Vec<u32>> = Vec::new();
    for start in 0..nodes {
        if label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start as u32];
        label[start] = id;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &n in &adj[u] {
                if label[n] == usize::MAX {
                    label[n] = id;
                    members.push(n as u32);
                    stack.push(n);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    let mut merged = components[0].clone();
    for comp in &components[1..] {
        let u = merged[rng.gen_range(0..merged.len())];
        let v = comp[rng.gen_range(0..comp.len())];
        edges.push((u.min(v), u.max(v)));
        merged.extend_from_slice(comp);
    }
}
