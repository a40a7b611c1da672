//! Shared support for the integration suites: an independent equilibrium
//! oracle (the spring-network potential, its analytic derivatives and a
//! damped Newton minimizer over bead positions) plus random graph and
//! force helpers. Nothing here calls the dynamics engine, so agreement
//! between the two is meaningful.

// Each integration binary compiles this module separately and uses a subset.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use setse::graph::Edge;
use setse::synth::{generate_random_graph, RandomGraphSpec};
use setse::PreparedGraph;

/// Potential energy at flat node-major positions `z[node * q + dim]`:
/// the elastic term `sum 1/2 k (H - d)^2` minus the work term `sum F . z`.
pub fn energy(graph: &PreparedGraph, z: &[f64]) -> f64 {
    let q = graph.n_dims();
    let mut u = 0.0;
    for e in graph.edges() {
        let (s, t) = (e.source as usize * q, e.target as usize * q);
        let mut hsq = e.distance * e.distance;
        for dim in 0..q {
            let dz = z[s + dim] - z[t + dim];
            hsq += dz * dz;
        }
        let stretch = hsq.sqrt() - e.distance;
        u += 0.5 * e.stiffness * stretch * stretch;
    }
    for (dim, values) in graph.forces().iter().enumerate() {
        for (node, f) in values.iter().enumerate() {
            u -= f * z[node * q + dim];
        }
    }
    u
}

/// Analytic gradient of [`energy`]. Equals vertical tension minus the node
/// force, so the solver's static force is exactly its negation.
pub fn gradient(graph: &PreparedGraph, z: &[f64]) -> Vec<f64> {
    let q = graph.n_dims();
    let mut g = vec![0.0; z.len()];
    for e in graph.edges() {
        let (s, t) = (e.source as usize * q, e.target as usize * q);
        let mut hsq = e.distance * e.distance;
        for dim in 0..q {
            let dz = z[s + dim] - z[t + dim];
            hsq += dz * dz;
        }
        let h = hsq.sqrt();
        let coef = e.stiffness * (1.0 - e.distance / h);
        for dim in 0..q {
            let w = coef * (z[s + dim] - z[t + dim]);
            g[s + dim] += w;
            g[t + dim] -= w;
        }
    }
    for (dim, values) in graph.forces().iter().enumerate() {
        for (node, f) in values.iter().enumerate() {
            g[node * q + dim] -= f;
        }
    }
    g
}

/// Central-difference gradient of [`energy`] with step `h`.
pub fn fd_gradient(graph: &PreparedGraph, z: &[f64], h: f64) -> Vec<f64> {
    let mut probe = z.to_vec();
    (0..z.len())
        .map(|i| {
            probe[i] = z[i] + h;
            let up = energy(graph, &probe);
            probe[i] = z[i] - h;
            let down = energy(graph, &probe);
            probe[i] = z[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Sum of absolute static forces at the given positions, computed from the
/// potential alone.
pub fn eta_at(graph: &PreparedGraph, z: &[f64]) -> f64 {
    gradient(graph, z).iter().map(|g| g.abs()).sum()
}

/// Dense Hessian of [`energy`]. Each edge contributes the block
/// `k ((1 - d/H) I + d u u^T / H^3)` with `u = z_s - z_t`, added on the
/// diagonal pairs and subtracted off-diagonal.
pub fn hessian(graph: &PreparedGraph, z: &[f64]) -> Vec<Vec<f64>> {
    let q = graph.n_dims();
    let dim_total = z.len();
    let mut h = vec![vec![0.0; dim_total]; dim_total];
    let mut u = vec![0.0; q];
    for e in graph.edges() {
        let (s, t) = (e.source as usize * q, e.target as usize * q);
        let mut hsq = e.distance * e.distance;
        for (dim, slot) in u.iter_mut().enumerate() {
            *slot = z[s + dim] - z[t + dim];
            hsq += *slot * *slot;
        }
        let len = hsq.sqrt();
        let radial = e.stiffness * e.distance / (len * len * len);
        let tangent = e.stiffness * (1.0 - e.distance / len);
        for p in 0..q {
            for r in 0..q {
                let block = radial * u[p] * u[r] + if p == r { tangent } else { 0.0 };
                h[s + p][s + r] += block;
                h[t + p][t + r] += block;
                h[s + p][t + r] -= block;
                h[t + p][s + r] -= block;
            }
        }
    }
    h
}

/// Gaussian elimination with partial pivoting; `None` when singular to
/// working precision.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|x| x.abs()))
        .fold(0.0_f64, f64::max)
        .max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (pivot_part, rest) = a.split_at_mut(col + 1);
        let pivot_row = &pivot_part[col];
        let pivot_b = b[col];
        for (offset, row) in rest.iter_mut().enumerate() {
            let factor = row[col] / pivot_row[col];
            if factor == 0.0 {
                continue;
            }
            for (x, &p) in row.iter_mut().zip(pivot_row).skip(col) {
                *x -= factor * p;
            }
            b[col + 1 + offset] -= factor * pivot_b;
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in col + 1..n {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Some(x)
}

/// Minimize [`energy`] by Levenberg-damped Newton from `z0`. The potential
/// is convex (each edge block has eigenvalues `k (1 - d^3/H^3)` and
/// `k (1 - d/H)`, both non-negative), but its Hessian vanishes at the flat
/// start, so the damping term carries the first steps. Returns positions
/// with `max |grad| <= grad_tol`, or `None` if the descent stalls.
pub fn newton_minimize(
    graph: &PreparedGraph,
    mut z: Vec<f64>,
    grad_tol: f64,
    max_steps: usize,
) -> Option<Vec<f64>> {
    let mut mu = 1e-3;
    for _ in 0..max_steps {
        let g = gradient(graph, &z);
        if g.iter().fold(0.0_f64, |m, x| m.max(x.abs())) <= grad_tol {
            return Some(z);
        }
        let hess = hessian(graph, &z);
        let here = energy(graph, &z);
        let diag = hess
            .iter()
            .enumerate()
            .map(|(i, row)| row[i].abs())
            .sum::<f64>()
            / z.len() as f64;
        let damping_scale = diag.max(1.0);
        let mut moved = false;
        for _ in 0..60 {
            let mut a = hess.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += mu * damping_scale;
            }
            let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
            if let Some(step) = solve_dense(a, rhs) {
                let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + b).collect();
                let there = energy(graph, &trial);
                if there.is_finite() && there <= here {
                    z = trial;
                    mu = (mu / 3.0).max(1e-12);
                    moved = true;
                    break;
                }
            }
            mu *= 4.0;
            if mu > 1e16 {
                break;
            }
        }
        if !moved {
            return None;
        }
    }
    let g = gradient(graph, &z);
    if g.iter().fold(0.0_f64, |m, x| m.max(x.abs())) <= grad_tol {
        Some(z)
    } else {
        None
    }
}

/// Equilibrium by Newton descent from a flat start plus `extra_starts`
/// random ones, keeping the lowest-energy solution. Mean-centered,
/// `[dim][node]` layout.
pub fn oracle_equilibrium(
    graph: &PreparedGraph,
    extra_starts: usize,
    grad_tol: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Vec<f64>>> {
    let len = graph.n_nodes() * graph.n_dims();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for attempt in 0..=extra_starts {
        let start = if attempt == 0 {
            vec![0.0; len]
        } else {
            (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect()
        };
        if let Some(z) = newton_minimize(graph, start, grad_tol, 500) {
            let u = energy(graph, &z);
            if best.as_ref().is_none_or(|(b, _)| u < *b) {
                best = Some((u, z));
            }
        }
    }
    let (_, z) = best?;
    let mut dims = dims_from_flat(&z, graph.n_dims());
    mean_center_dims(&mut dims);
    Some(dims)
}

/// Reshape flat node-major positions into `[dim][node]`.
pub fn dims_from_flat(z: &[f64], q: usize) -> Vec<Vec<f64>> {
    let n = z.len() / q;
    (0..q)
        .map(|dim| (0..n).map(|node| z[node * q + dim]).collect())
        .collect()
}

/// Flatten `[dim][node]` elevations into the node-major layout.
pub fn flat_from_dims(elevations: &[Vec<f64>]) -> Vec<f64> {
    let q = elevations.len();
    let n = elevations[0].len();
    let mut z = vec![0.0; n * q];
    for (dim, values) in elevations.iter().enumerate() {
        for (node, v) in values.iter().enumerate() {
            z[node * q + dim] = *v;
        }
    }
    z
}

/// Shift every dimension to mean zero in place.
pub fn mean_center_dims(elevations: &mut [Vec<f64>]) {
    for dim in elevations.iter_mut() {
        let mean = dim.iter().sum::<f64>() / dim.len() as f64;
        dim.iter_mut().for_each(|z| *z -= mean);
    }
}

/// Largest absolute entry-wise difference between two `[dim][node]` arrays.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()))
        .fold(0.0_f64, f64::max)
}

/// Zero-sum force vector with entries of order one; resampled until the
/// total magnitude is comfortably away from degenerate.
pub fn random_balanced_forces(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = f.iter().sum::<f64>() / n as f64;
        f.iter_mut().for_each(|x| *x -= mean);
        if f.iter().map(|x| x.abs()).sum::<f64>() > 0.2 {
            return f;
        }
    }
}

/// Assemble a [`PreparedGraph`] over nodes `v0..v(n-1)` with uniform
/// stiffness and distance and the given force dimensions.
pub fn graph_from_edges(
    n: usize,
    edges: &[(u32, u32)],
    stiffness: f64,
    distance: f64,
    forces: Vec<Vec<f64>>,
) -> PreparedGraph {
    let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let resolved: Vec<Edge> = edges
        .iter()
        .map(|&(s, t)| Edge { source: s, target: t, stiffness, distance })
        .collect();
    let names = (0..forces.len()).map(|d| format!("f{d}")).collect();
    PreparedGraph::from_parts(ids, resolved, forces, names).expect("test graph must validate")
}

/// Connected `G(n, m)` test graph with one balanced random force dimension.
pub fn random_connected_graph(
    nodes: usize,
    edges: usize,
    stiffness: f64,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> PreparedGraph {
    let spec = RandomGraphSpec::Gnm { nodes, edges };
    let edge_list = generate_random_graph(&spec, seed).expect("G(n,m) parameters are valid");
    let forces = vec![random_balanced_forces(nodes, rng)];
    graph_from_edges(nodes, &edge_list, stiffness, 1.0, forces)
}

/// A connected core with pendant chains hung off random core nodes: the
/// shape that exercises the block solver's bridge handling. Returns the
/// graph and the total node count.
pub fn pendant_chain_graph(
    core_nodes: usize,
    core_edges: usize,
    chains: &[usize],
    stiffness: f64,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> PreparedGraph {
    let spec = RandomGraphSpec::Gnm { nodes: core_nodes, edges: core_edges };
    let mut edge_list = generate_random_graph(&spec, seed).expect("core parameters are valid");
    let mut next = core_nodes as u32;
    for &len in chains {
        let mut anchor = rng.gen_range(0..core_nodes as u32);
        for _ in 0..len {
            edge_list.push((anchor.min(next), anchor.max(next)));
            anchor = next;
            next += 1;
        }
    }
    let total = next as usize;
    let forces = vec![random_balanced_forces(total, rng)];
    graph_from_edges(total, &edge_list, stiffness, 1.0, forces)
}

/// Fresh deterministic RNG for a test, keyed by a label.
pub fn test_rng(label: &str) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut seed = [0u8; 32];
    for (slot, byte) in seed.iter_mut().zip(label.bytes()) {
        *slot = byte;
    }
    ChaCha8Rng::from_seed(seed)
}
