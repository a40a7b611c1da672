//! Divide-and-conquer solving on the block-cut tree.
//!
//! Low-drag regions of a graph (long chains, pendant trees) slow global
//! convergence badly. Bi-connected components do not share that fate: each
//! block can be solved on its own once every articulation node absorbs the
//! net force of the rest of the graph hanging off it. The pieces are then
//! hung back together by shifting each block so it agrees with the already
//! placed elevation of the articulation node connecting it, starting from
//! the largest block and walking the block-cut tree breadth-first. Single
//! edge blocks (bridges, pendant edges) have a closed-form equilibrium and
//! skip the dynamics entirely.

use rayon::prelude::*;

use crate::autotune::{auto_setse, AutoTuneParams};
use crate::engine::{Embeddings, Tolerance};
use crate::error::{Error, Result};
use crate::graph::{Edge, PreparedGraph};

/// One bi-connected component of the parent graph.
#[derive(Debug, Clone)]
pub struct Block {
    /// Local index -> parent node index, ascending.
    pub nodes: Vec<u32>,
    /// Local endpoints plus the parent edge index.
    pub edges: Vec<(u32, u32, u32)>,
}

impl Block {
    fn local_of(&self, parent: u32) -> Option<u32> {
        self.nodes.binary_search(&parent).ok().map(|i| i as u32)
    }
}

/// Blocks, articulation nodes, and which blocks meet at which articulation
/// node. Block and articulation order is deterministic for a given graph.
#[derive(Debug, Clone)]
pub struct BlockCutTree {
    pub blocks: Vec<Block>,
    /// Parent indices of articulation nodes, ascending.
    pub articulation: Vec<u32>,
    /// `membership[i]` lists the blocks containing `articulation[i]`.
    pub membership: Vec<Vec<usize>>,
}

impl BlockCutTree {
    pub fn is_articulation(&self, parent: u32) -> bool {
        self.articulation.binary_search(&parent).is_ok()
    }
}

/// Split a connected graph into bi-connected components (depth-first
/// low-link search, one pass, explicit stack). Every parent edge lands in
/// exactly one block; two blocks overlap in at most one node and that node
/// is an articulation node.
pub fn decompose(graph: &PreparedGraph) -> Result<BlockCutTree> {
    let n = graph.n_nodes();
    let m = graph.n_edges();
    if n > 1 && !graph.is_connected() {
        return Err(Error::Disconnected);
    }

    let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for (idx, e) in graph.edges().iter().enumerate() {
        adj[e.source as usize].push((e.target, idx as u32));
        adj[e.target as usize].push((e.source, idx as u32));
    }

    const UNSET: u32 = u32::MAX;
    let mut disc = vec![UNSET; n];
    let mut low = vec![0u32; n];
    let mut is_artic = vec![false; n];
    let mut timer = 0u32;
    let mut edge_stack: Vec<u32> = Vec::with_capacity(m);
    let mut block_edges: Vec<Vec<u32>> = Vec::new();
    // Frames: (node, edge into it from its parent, next adjacency slot).
    let mut frames: Vec<(u32, u32, usize)> = Vec::new();
    let mut root_children = 0usize;

    if n > 0 && m > 0 {
        disc[0] = timer;
        low[0] = timer;
        timer += 1;
        frames.push((0, UNSET, 0));
        while let Some(&mut (u, parent_edge, ref mut cursor)) = frames.last_mut() {
            let ui = u as usize;
            if *cursor < adj[ui].len() {
                let (v, eidx) = adj[ui][*cursor];
                *cursor += 1;
                if eidx == parent_edge {
                    continue;
                }
                let vi = v as usize;
                if disc[vi] == UNSET {
                    edge_stack.push(eidx);
                    disc[vi] = timer;
                    low[vi] = timer;
                    timer += 1;
                    if u == 0 {
                        root_children += 1;
                    }
                    frames.push((v, eidx, 0));
                } else if disc[vi] < disc[ui] {
                    // Back edge to an ancestor; the mirror direction is
                    // skipped when the ancestor scans it later.
                    edge_stack.push(eidx);
                    low[ui] = low[ui].min(disc[vi]);
                }
            } else {
                frames.pop();
                if let Some(&mut (p, _, _)) = frames.last_mut() {
                    let pi = p as usize;
                    low[pi] = low[pi].min(low[ui]);
                    if low[ui] >= disc[pi] {
                        // One block ends at the tree edge p - u.
                        if p != 0 {
                            is_artic[pi] = true;
                        }
                        let mut edges = Vec::new();
                        while let Some(&top) = edge_stack.last() {
                            edge_stack.pop();
                            let done = top == parent_edge;
                            edges.push(top);
                            if done {
                                break;
                            }
                        }
                        block_edges.push(edges);
                    }
                }
            }
        }
        is_artic[0] = root_children >= 2;
        debug_assert!(edge_stack.is_empty());
        debug_assert_eq!(block_edges.iter().map(|b| b.len()).sum::<usize>(), m);
    }

    let mut blocks = Vec::with_capacity(block_edges.len());
    for edge_list in block_edges {
        let mut nodes: Vec<u32> = edge_list
            .iter()
            .flat_map(|&e| {
                let edge = graph.edges()[e as usize];
                [edge.source, edge.target]
            })
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        let edges = edge_list
            .iter()
            .map(|&e| {
                let edge = graph.edges()[e as usize];
                let s = nodes.binary_search(&edge.source).unwrap() as u32;
                let t = nodes.binary_search(&edge.target).unwrap() as u32;
                (s, t, e)
            })
            .collect();
        blocks.push(Block { nodes, edges });
    }

    let articulation: Vec<u32> =
        (0..n as u32).filter(|&v| is_artic[v as usize]).collect();
    let membership = articulation
        .iter()
        .map(|&a| {
            blocks
                .iter()
                .enumerate()
                .filter(|(_, b)| b.local_of(a).is_some())
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    Ok(BlockCutTree { blocks, articulation, membership })
}

/// Per-block forces: interior nodes keep their own force, and each
/// articulation node absorbs the net force of everything reachable through
/// it outside the block, so each block balances on its own.
///
/// Returns `forces[block][dim][local node]`.
pub fn balance_block_forces(tree: &BlockCutTree, graph: &PreparedGraph) -> Vec<Vec<Vec<f64>>> {
    let n_blocks = tree.blocks.len();
    let n_artic = tree.articulation.len();
    let dims = graph.n_dims();
    if n_blocks == 0 {
        return Vec::new();
    }

    // The block-cut tree as an explicit bipartite tree: vertices are blocks
    // (0..n_blocks) then articulation nodes (n_blocks..).
    let n_vertices = n_blocks + n_artic;
    let mut tree_adj: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for (ai, blocks) in tree.membership.iter().enumerate() {
        for &b in blocks {
            tree_adj[b].push(n_blocks + ai);
            tree_adj[n_blocks + ai].push(b);
        }
    }

    // Root at block 0; record a BFS order and parents.
    let mut parent = vec![usize::MAX; n_vertices];
    let mut order = Vec::with_capacity(n_vertices);
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut seen = vec![false; n_vertices];
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in &tree_adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }

    // Own force of a tree vertex: an articulation vertex owns its node's
    // force; a block vertex owns its interior (non-articulation) nodes'.
    // Every parent node is owned exactly once, so subtree sums partition
    // the graph's total force.
    let own = |v: usize, dim: usize| -> f64 {
        if v < n_blocks {
            tree.blocks[v]
                .nodes
                .iter()
                .filter(|&&p| !tree.is_articulation(p))
                .map(|&p| graph.forces()[dim][p as usize])
                .sum()
        } else {
            graph.forces()[dim][tree.articulation[v - n_blocks] as usize]
        }
    };

    let mut subtree = vec![vec![0.0; n_vertices]; dims];
    for (dim, sums) in subtree.iter_mut().enumerate() {
        for &v in order.iter().rev() {
            let mut sum = own(v, dim);
            for &w in &tree_adj[v] {
                if parent[w] == v {
                    sum += sums[w];
                }
            }
            sums[v] = sum;
        }
    }
    let total: Vec<f64> = (0..dims).map(|dim| graph.forces()[dim].iter().sum()).collect();

    tree.blocks
        .iter()
        .enumerate()
        .map(|(b, block)| {
            (0..dims)
                .map(|dim| {
                    block
                        .nodes
                        .iter()
                        .map(|&p| {
                            match tree.articulation.binary_search(&p) {
                                Err(_) => graph.forces()[dim][p as usize],
                                Ok(ai) => {
                                    let va = n_blocks + ai;
                                    // Force on the articulation node's side
                                    // of the tree edge between va and b.
                                    if parent[va] == b {
                                        subtree[dim][va]
                                    } else {
                                        total[dim] - subtree[dim][b]
                                    }
                                }
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// The block every reassembly shift is measured from: most edges, then most
/// nodes, then the lowest smallest parent node index.
pub fn origin_block(tree: &BlockCutTree) -> usize {
    (0..tree.blocks.len())
        .max_by(|&a, &b| {
            let (ba, bb) = (&tree.blocks[a], &tree.blocks[b]);
            (ba.edges.len(), ba.nodes.len(), std::cmp::Reverse(ba.nodes[0]))
                .cmp(&(bb.edges.len(), bb.nodes.len(), std::cmp::Reverse(bb.nodes[0])))
        })
        .expect("tree has blocks")
}

/// Merge per-block elevations into one absolute profile: breadth-first from
/// the origin block, each block shifted so its articulation node lands on
/// the elevation already placed for it. Within a block, differences are the
/// block-local differences; only the offset changes.
///
/// `block_z[block][dim][local node]`; returns `[dim][node]`.
pub fn abs_elevation(
    tree: &BlockCutTree,
    block_z: &[Vec<Vec<f64>>],
    n_nodes: usize,
    dims: usize,
) -> Vec<Vec<f64>> {
    let mut z = vec![vec![0.0; n_nodes]; dims];
    if tree.blocks.is_empty() {
        return z;
    }
    let origin = origin_block(tree);
    let mut placed = vec![false; n_nodes];
    let mut visited = vec![false; tree.blocks.len()];
    // (block, articulation parent index it attaches through)
    let mut queue = std::collections::VecDeque::from([(origin, None::<u32>)]);
    visited[origin] = true;
    while let Some((b, via)) = queue.pop_front() {
        let block = &tree.blocks[b];
        let shift: Vec<f64> = match via {
            None => vec![0.0; dims],
            Some(a) => {
                let local = block.local_of(a).expect("articulation in block") as usize;
                (0..dims).map(|dim| z[dim][a as usize] - block_z[b][dim][local]).collect()
            }
        };
        for (local, &p) in block.nodes.iter().enumerate() {
            if !placed[p as usize] {
                placed[p as usize] = true;
                for dim in 0..dims {
                    z[dim][p as usize] = block_z[b][dim][local] + shift[dim];
                }
            }
        }
        for (ai, &a) in tree.articulation.iter().enumerate() {
            if block.local_of(a).is_none() {
                continue;
            }
            for &nb in &tree.membership[ai] {
                if !visited[nb] {
                    visited[nb] = true;
                    queue.push_back((nb, Some(a)));
                }
            }
        }
    }
    z
}

/// Closed-form equilibrium of a lone spring: the offset along the force
/// direction solves `k x (1 - d / sqrt(x^2 + d^2)) = |F|`, which is strictly
/// increasing in `x`, so a bisection pins it to machine precision.
fn solve_single_edge(k: f64, d: f64, force: &[f64]) -> (Vec<f64>, f64, f64) {
    let mag = force.iter().map(|f| f * f).sum::<f64>().sqrt();
    if mag == 0.0 {
        return (vec![0.0; force.len()], 0.0, 0.0);
    }
    let g = |x: f64| k * x * (1.0 - d / (x * x + d * d).sqrt()) - mag;
    let mut lo = 0.0;
    let mut hi = d;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let h = (x * x + d * d).sqrt();
    let dz: Vec<f64> = force.iter().map(|f| x * f / mag).collect();
    (dz, k * (h - d), (h - d) / d)
}

struct BlockSolution {
    /// `[dim][local node]`.
    z: Vec<Vec<f64>>,
    /// `(tension, strain)` aligned with the block's edge list.
    edges: Vec<(f64, f64)>,
    iterations: u64,
}

fn solve_block(
    b: usize,
    block: &Block,
    forces: &[Vec<f64>],
    graph: &PreparedGraph,
    tune: &AutoTuneParams,
    lambda_block: f64,
) -> Result<BlockSolution> {
    let dims = graph.n_dims();
    if block.edges.len() == 1 {
        let (ls, lt, pe) = block.edges[0];
        let e = graph.edges()[pe as usize];
        let f: Vec<f64> = (0..dims).map(|dim| forces[dim][ls as usize]).collect();
        let (dz, tension, strain) = solve_single_edge(e.stiffness, e.distance, &f);
        let mut z = vec![vec![0.0; 2]; dims];
        for dim in 0..dims {
            z[dim][ls as usize] = 0.5 * dz[dim];
            z[dim][lt as usize] = -0.5 * dz[dim];
        }
        return Ok(BlockSolution { z, edges: vec![(tension, strain)], iterations: 0 });
    }

    let ids: Vec<String> =
        block.nodes.iter().map(|&p| graph.ids()[p as usize].clone()).collect();
    let edges: Vec<Edge> = block
        .edges
        .iter()
        .map(|&(s, t, pe)| {
            let e = graph.edges()[pe as usize];
            Edge { source: s, target: t, stiffness: e.stiffness, distance: e.distance }
        })
        .collect();
    let sub = PreparedGraph::from_parts(
        ids,
        edges,
        forces.to_vec(),
        graph.dimension_names().to_vec(),
    )
    .map_err(|e| Error::UnsolvedBlock { block: b, nodes: block.nodes.len(), source: Box::new(e) })?;
    let block_tune = AutoTuneParams { tolerance: Tolerance::Absolute(lambda_block), ..*tune };
    let (emb, _) = auto_setse(&sub, &block_tune).map_err(|e| Error::UnsolvedBlock {
        block: b,
        nodes: block.nodes.len(),
        source: Box::new(e),
    })?;
    Ok(BlockSolution {
        z: emb.node_elevation,
        edges: emb.edge_tension.into_iter().zip(emb.edge_strain).collect(),
        iterations: emb.iterations,
    })
}

/// Solve a connected graph block by block and reassemble.
///
/// Blocks are solved independently (in parallel; results do not depend on
/// the thread count), the per-block tolerance budget is the parent tolerance
/// split in proportion to each block's share of the absolute force, and the
/// reported `eta`/residuals are re-evaluated on the parent graph at the
/// final (mean-centered) elevations.
pub fn setse_biconnected(
    graph: &PreparedGraph,
    tune: &AutoTuneParams,
) -> Result<(Embeddings, BlockCutTree)> {
    let tree = decompose(graph)?;
    let lambda = tune.tolerance.lambda(graph);
    let dims = graph.n_dims();
    let n = graph.n_nodes();

    let block_forces = balance_block_forces(&tree, graph);
    let force_mass: Vec<f64> = block_forces
        .iter()
        .map(|f| f.iter().flatten().map(|x| x.abs()).sum())
        .collect();
    let total_mass: f64 = force_mass.iter().sum();

    let solutions: Vec<BlockSolution> = tree
        .blocks
        .par_iter()
        .enumerate()
        .map(|(b, block)| {
            let share = if total_mass > 0.0 {
                lambda * force_mass[b] / total_mass
            } else {
                lambda
            };
            solve_block(b, block, &block_forces[b], graph, tune, share)
        })
        .collect::<Result<_>>()?;

    let block_z: Vec<Vec<Vec<f64>>> = solutions.iter().map(|s| s.z.clone()).collect();
    let mut node_elevation = abs_elevation(&tree, &block_z, n, dims);
    for dim in &mut node_elevation {
        let mean = dim.iter().sum::<f64>() / dim.len() as f64;
        dim.iter_mut().for_each(|v| *v -= mean);
    }

    let mut edge_tension = vec![0.0; graph.n_edges()];
    let mut edge_strain = vec![0.0; graph.n_edges()];
    for (block, sol) in tree.blocks.iter().zip(&solutions) {
        for (&(_, _, pe), &(tension, strain)) in block.edges.iter().zip(&sol.edges) {
            edge_tension[pe as usize] = tension;
            edge_strain[pe as usize] = strain;
        }
    }

    // Residuals on the parent graph at the assembled elevations.
    let geometry = crate::engine::edge_geometry(graph, &node_elevation);
    let mut residual: Vec<Vec<f64>> = graph.forces().to_vec();
    for (e, geo) in graph.edges().iter().zip(&geometry) {
        for (row, &vertical) in residual.iter_mut().zip(&geo.vertical) {
            row[e.source as usize] -= vertical;
            row[e.target as usize] += vertical;
        }
    }
    let node_static_force: Vec<f64> =
        (0..n).map(|i| (0..dims).map(|d| residual[d][i].abs()).sum()).collect();
    let eta: f64 = node_static_force.iter().sum();
    let iterations = solutions.iter().map(|s| s.iterations).sum();

    Ok((
        Embeddings {
            dimension_names: graph.dimension_names().to_vec(),
            node_elevation,
            edge_tension,
            edge_strain,
            node_static_force,
            converged: eta <= lambda,
            eta,
            iterations,
        },
        tree,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{four_node_star, path_graph, single_spring_offset};

    fn line_graph(forces: Vec<f64>) -> PreparedGraph {
        path_graph(&forces)
    }

    #[test]
    fn triangle_is_one_block() {
        let g = PreparedGraph::from_parts(
            (0..3).map(|i| i.to_string()).collect(),
            vec![
                Edge { source: 0, target: 1, stiffness: 1.0, distance: 1.0 },
                Edge { source: 1, target: 2, stiffness: 1.0, distance: 1.0 },
                Edge { source: 0, target: 2, stiffness: 1.0, distance: 1.0 },
            ],
            vec![vec![1.0, 0.0, -1.0]],
            vec!["f".into()],
        )
        .unwrap();
        let tree = decompose(&g).unwrap();
        assert_eq!(tree.blocks.len(), 1);
        assert!(tree.articulation.is_empty());
        assert_eq!(tree.blocks[0].edges.len(), 3);
    }

    #[test]
    fn three_node_path_splits_at_the_middle() {
        let g = line_graph(vec![1.0, 0.0, -1.0]);
        let tree = decompose(&g).unwrap();
        assert_eq!(tree.blocks.len(), 2);
        assert_eq!(tree.articulation, vec![1]);
        assert_eq!(tree.membership, vec![vec![0, 1]]);

        // The articulation node absorbs the far side's force in each block:
        // (+1, -1) with the outer node in both cases.
        let forces = balance_block_forces(&tree, &g);
        for (block, f) in tree.blocks.iter().zip(&forces) {
            let sum: f64 = f[0].iter().sum();
            assert!(sum.abs() < 1e-12);
            for (local, &p) in block.nodes.iter().enumerate() {
                let expect = if p == 1 {
                    if block.nodes.contains(&0) { -1.0 } else { 1.0 }
                } else if p == 0 {
                    1.0
                } else {
                    -1.0
                };
                assert!((f[0][local] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chain_of_triangles_and_bridges() {
        // triangle(0,1,2) - bridge 2-3 - triangle(3,4,5) - bridge 5-6:
        // four blocks, articulation nodes 2, 3 and 5.
        let edges = [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5), (5, 6)]
            .iter()
            .map(|&(s, t)| Edge { source: s, target: t, stiffness: 1.0, distance: 1.0 })
            .collect();
        let g = PreparedGraph::from_parts(
            (0..7).map(|i| i.to_string()).collect(),
            edges,
            vec![vec![0.0; 7]],
            vec!["f".into()],
        )
        .unwrap();
        let tree = decompose(&g).unwrap();
        assert_eq!(tree.blocks.len(), 4);
        assert_eq!(tree.articulation, vec![2, 3, 5]);
        let mut seen = [0u32; 8];
        for b in &tree.blocks {
            for &(_, _, pe) in &b.edges {
                seen[pe as usize] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1), "each edge in exactly one block");
    }

    #[test]
    fn disconnected_input_is_rejected() {
        let g = PreparedGraph::from_parts(
            (0..4).map(|i| i.to_string()).collect(),
            vec![
                Edge { source: 0, target: 1, stiffness: 1.0, distance: 1.0 },
                Edge { source: 2, target: 3, stiffness: 1.0, distance: 1.0 },
            ],
            vec![vec![0.0; 4]],
            vec!["f".into()],
        )
        .unwrap();
        assert!(matches!(decompose(&g), Err(Error::Disconnected)));
    }

    #[test]
    fn single_edge_solution_balances_to_machine_precision() {
        let (dz, tension, strain) = solve_single_edge(1000.0, 1.0, &[1.0]);
        let expect = single_spring_offset(1000.0, 1.0);
        assert!((dz[0] - expect).abs() < 1e-12);
        let h = (dz[0] * dz[0] + 1.0).sqrt();
        let residual = 1.0 - tension * dz[0] / h;
        assert!(residual.abs() < 1e-10);
        assert!((strain - (h - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn path_reassembles_to_the_whole_graph_solution() {
        let g = line_graph(vec![1.0, 0.0, -1.0]);
        let (emb, tree) = setse_biconnected(&g, &AutoTuneParams::default()).unwrap();
        assert_eq!(tree.blocks.len(), 2);
        assert!(emb.converged);
        // Both springs carry vertical force 1, so the profile is the
        // single-spring offset mirrored around the middle node.
        let offset = single_spring_offset(1000.0, 1.0);
        let z = &emb.node_elevation[0];
        assert!((z[0] - offset).abs() < 1e-9);
        assert!(z[1].abs() < 1e-9);
        assert!((z[2] + offset).abs() < 1e-9);
        // Pendant residuals are analytic, far below the dynamic tolerance.
        assert!(emb.node_static_force[0] < 1e-8);
        assert!(emb.node_static_force[2] < 1e-8);

        let (mut whole, _) = auto_setse(&g, &AutoTuneParams::default()).unwrap();
        whole.mean_center();
        for (a, b) in z.iter().zip(&whole.node_elevation[0]) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn star_matches_published_profile() {
        let g = four_node_star();
        let (emb, _) = setse_biconnected(&g, &AutoTuneParams::default()).unwrap();
        assert!(emb.converged);
        let expect = [0.1450, 0.0185, -0.0818, -0.0818];
        for (have, want) in emb.node_elevation[0].iter().zip(expect) {
            assert!((have - want).abs() < 5e-4, "{have} vs {want}");
        }
    }

    #[test]
    fn two_connected_graph_equals_plain_auto() {
        let g = PreparedGraph::from_parts(
            (0..4).map(|i| i.to_string()).collect(),
            vec![
                Edge { source: 0, target: 1, stiffness: 1000.0, distance: 1.0 },
                Edge { source: 1, target: 2, stiffness: 1000.0, distance: 1.0 },
                Edge { source: 2, target: 3, stiffness: 1000.0, distance: 1.0 },
                Edge { source: 3, target: 0, stiffness: 1000.0, distance: 1.0 },
            ],
            vec![vec![1.0, -0.25, -0.5, -0.25]],
            vec!["f".into()],
        )
        .unwrap();
        let (bi, tree) = setse_biconnected(&g, &AutoTuneParams::default()).unwrap();
        assert_eq!(tree.blocks.len(), 1);
        let (mut plain, _) = auto_setse(&g, &AutoTuneParams::default()).unwrap();
        plain.mean_center();
        for (a, b) in bi.node_elevation[0].iter().zip(&plain.node_elevation[0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reassembly_preserves_block_differences_exactly() {
        let g = line_graph(vec![1.5, -0.5, -1.0]);
        let tree = decompose(&g).unwrap();
        let forces = balance_block_forces(&tree, &g);
        let solutions: Vec<Vec<Vec<f64>>> = tree
            .blocks
            .iter()
            .enumerate()
            .map(|(b, block)| {
                solve_block(b, block, &forces[b], &g, &AutoTuneParams::default(), 1e-9)
                    .unwrap()
                    .z
            })
            .collect();
        let z = abs_elevation(&tree, &solutions, g.n_nodes(), 1);
        for (b, block) in tree.blocks.iter().enumerate() {
            for &(ls, lt, pe) in &block.edges {
                let e = g.edges()[pe as usize];
                let parent_diff = z[0][e.source as usize] - z[0][e.target as usize];
                let local_diff = solutions[b][0][ls as usize] - solutions[b][0][lt as usize];
                assert!((parent_diff - local_diff).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn relabeling_nodes_does_not_change_the_profile() {
        // Solve, then solve the same graph with nodes renumbered, and map
        // the result back: block processing order must not matter.
        let forces = [0.8, -0.3, 0.1, -0.6, 0.25, -0.25];
        let edges = [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (3, 5)];
        let perm = [3usize, 5, 0, 1, 4, 2];
        let build = |relabel: bool| {
            let map = |v: usize| if relabel { perm[v] as u32 } else { v as u32 };
            let mut f = vec![0.0; 6];
            for (i, &x) in forces.iter().enumerate() {
                f[map(i) as usize] = x;
            }
            let mut es: Vec<Edge> = edges
                .iter()
                .map(|&(s, t)| Edge {
                    source: map(s),
                    target: map(t),
                    stiffness: 1000.0,
                    distance: 1.0,
                })
                .collect();
            es.sort_by_key(|e| (e.source.min(e.target), e.source.max(e.target)));
            PreparedGraph::from_parts(
                (0..6).map(|i| i.to_string()).collect(),
                es,
                vec![f],
                vec!["f".into()],
            )
            .unwrap()
        };
        let tune = AutoTuneParams { tolerance: Tolerance::Absolute(1e-8), ..Default::default() };
        let (a, _) = setse_biconnected(&build(false), &tune).unwrap();
        let (b, _) = setse_biconnected(&build(true), &tune).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert!(
                (a.node_elevation[0][i] - b.node_elevation[0][p]).abs() < 1e-6,
                "node {i}"
            );
        }
    }
}
