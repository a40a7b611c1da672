//! Fixtures shared by the unit tests: tiny graphs with known equilibria.

use crate::engine::SolverParams;
use crate::graph::{Edge, PreparedGraph};

/// Fixed parameters inside the smooth-convergence regime for the k = 1000
/// fixtures here. The acceleration uses the force from before the position
/// update, so a run is stable only when `drag > 1.5 k_eff dt` (with
/// `k_eff` the local vertical stiffness, a few tens for these graphs);
/// the documented defaults (dt 0.1, drag 1) sit outside that regime and
/// need the auto-tuner.
pub(crate) fn stable_params() -> SolverParams {
    SolverParams { dt: 0.02, drag: 6.0, ..Default::default() }
}

/// Two beads joined by one spring, forces +1/-1, k = 1000, d = 1.
pub(crate) fn two_node() -> PreparedGraph {
    PreparedGraph::from_parts(
        vec!["a".into(), "b".into()],
        vec![Edge { source: 0, target: 1, stiffness: 1000.0, distance: 1.0 }],
        vec![vec![1.0, -1.0]],
        vec!["f".into()],
    )
    .unwrap()
}

/// The four-bead star: hub b, leaves a, c, d; forces (1, 0, -1/2, -1/2).
pub(crate) fn four_node_star() -> PreparedGraph {
    PreparedGraph::from_parts(
        vec!["a".into(), "b".into(), "c".into(), "d".into()],
        vec![
            Edge { source: 0, target: 1, stiffness: 1000.0, distance: 1.0 },
            Edge { source: 1, target: 2, stiffness: 1000.0, distance: 1.0 },
            Edge { source: 1, target: 3, stiffness: 1000.0, distance: 1.0 },
        ],
        vec![vec![1.0, 0.0, -0.5, -0.5]],
        vec!["f".into()],
    )
    .unwrap()
}

/// A path 0 - 1 - ... with unit springs (k = 1000) and the given forces.
pub(crate) fn path_graph(forces: &[f64]) -> PreparedGraph {
    let n = forces.len();
    let edges = (0..n - 1)
        .map(|i| Edge {
            source: i as u32,
            target: i as u32 + 1,
            stiffness: 1000.0,
            distance: 1.0,
        })
        .collect();
    PreparedGraph::from_parts(
        (0..n).map(|i| i.to_string()).collect(),
        edges,
        vec![forces.to_vec()],
        vec!["f".into()],
    )
    .unwrap()
}

/// Root of `k * x * (1 - 1 / sqrt(1 + x^2)) = target`: the offset at which
/// one unit spring's vertical tension balances `target`.
pub(crate) fn single_spring_offset(k: f64, target: f64) -> f64 {
    let g = |x: f64| k * x * (1.0 - 1.0 / (1.0 + x * x).sqrt()) - target;
    let (mut lo, mut hi) = (0.0, 1.0);
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
    0.5 * (lo + hi)
}
