//! The spring dynamics: damped kinematics driven by static force.
//!
//! Nodes are unit beads confined to move along one axis per force dimension;
//! along the extra graph-space axis every edge keeps its rest distance `d`.
//! An edge whose endpoints sit at vertical offsets `dz` therefore has length
//! `H = sqrt(|dz|^2 + d^2) >= d` and carries tension `k (H - d)`, of which
//! the component `k (H - d) dz_q / H` acts vertically in dimension `q`.
//!
//! One iteration, in order: evaluate spring forces at the current positions;
//! move every node using the velocity and acceleration from the previous
//! iteration (`z += v dt + a dt^2 / 2`); update velocities (`v += a dt`);
//! take `f_static = F - f_vten` from the pre-move evaluation; apply drag
//! against the updated velocity; set `a = (f_static - c v) / m`. The run
//! converges when the summed absolute static force `eta = sum |f_static|`
//! drops to the tolerance `lambda`; the convergence test is made against the
//! same positions the reported forces were evaluated at, so the elevations,
//! residuals and `eta` of a finished run are mutually consistent.

use crate::error::{Error, Result};
use crate::graph::PreparedGraph;

/// Static-force threshold that counts as converged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// `lambda = fraction * sum |F|`; the default fraction is
    /// [`DEFAULT_TOLERANCE_FRACTION`].
    ForceFraction(f64),
    /// A fixed `lambda`.
    Absolute(f64),
}

/// Default convergence tolerance: one thousandth of the total absolute force.
pub const DEFAULT_TOLERANCE_FRACTION: f64 = 1e-3;

/// A run whose static force grows past `eta0 * DIVERGENCE_FACTOR` is
/// declared divergent even while all values are still finite.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

impl Tolerance {
    /// Resolve against a graph's force scale.
    pub fn lambda(&self, graph: &PreparedGraph) -> f64 {
        match *self {
            Tolerance::ForceFraction(f) => f * graph.total_abs_force(),
            Tolerance::Absolute(a) => a,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::ForceFraction(DEFAULT_TOLERANCE_FRACTION)
    }
}

/// Fixed parameters for one dynamics run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Integration time step.
    pub dt: f64,
    /// Bead mass `m`.
    pub mass: f64,
    /// Drag coefficient `c`.
    pub drag: f64,
    pub max_iterations: u64,
    pub tolerance: Tolerance,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            dt: 0.1,
            mass: 1.0,
            drag: 1.0,
            max_iterations: 100_000,
            tolerance: Tolerance::default(),
        }
    }
}

impl SolverParams {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step {} must be positive", self.dt)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass {} must be positive", self.mass)));
        }
        if !(self.drag >= 0.0 && self.drag.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "drag {} must be non-negative",
                self.drag
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        let frac = match self.tolerance {
            Tolerance::ForceFraction(f) => f,
            Tolerance::Absolute(a) => a,
        };
        if !(frac >= 0.0 && frac.is_finite()) {
            return Err(Error::InvalidParameter("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// The kinematic state of every bead. All vectors are node-major flat
/// arrays of length `n_nodes * n_dims`; entry `node * n_dims + dim`.
///
/// At initialization `z`, `v` and `a` are all zero and `f_static` equals
/// the balanced node forces: motion starts on the second iteration, once
/// the first has turned static force into acceleration.
#[derive(Debug, Clone)]
pub struct DynamicsState {
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub f_static: Vec<f64>,
    pub t: f64,
    pub iteration: u64,
}

impl DynamicsState {
    fn new(forces_flat: &[f64]) -> Self {
        let len = forces_flat.len();
        DynamicsState {
            z: vec![0.0; len],
            v: vec![0.0; len],
            a: vec![0.0; len],
            f_static: forces_flat.to_vec(),
            t: 0.0,
            iteration: 0,
        }
    }
}

/// Per-edge geometry at a given set of elevations.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGeometry {
    /// Vertical offset per dimension, source minus target.
    pub dz: Vec<f64>,
    /// Edge length `H = sqrt(|dz|^2 + d^2)`.
    pub length: f64,
    /// Scalar tension `k (H - d)`, never negative.
    pub tension: f64,
    /// Vertical tension component per dimension, `tension * dz_q / length`,
    /// as felt by the source node (the target feels the negative).
    pub vertical: Vec<f64>,
}

/// Dimensionless extension `(H - d) / d`; tension is `k d` times this.
pub fn strain(length: f64, distance: f64) -> f64 {
    (length - distance) / distance
}

/// Geometry of every edge for elevations laid out `[dim][node]`.
pub fn edge_geometry(graph: &PreparedGraph, elevations: &[Vec<f64>]) -> Vec<EdgeGeometry> {
    let q = elevations.len();
    graph
        .edges()
        .iter()
        .map(|e| {
            let (s, t) = (e.source as usize, e.target as usize);
            let dz: Vec<f64> = (0..q).map(|d| elevations[d][s] - elevations[d][t]).collect();
            let hsq = dz.iter().map(|x| x * x).sum::<f64>() + e.distance * e.distance;
            let length = hsq.sqrt();
            let tension = e.stiffness * (length - e.distance);
            let vertical = dz.iter().map(|x| tension * x / length).collect();
            EdgeGeometry { dz, length, tension, vertical }
        })
        .collect()
}

/// Net force per bead at an arbitrary state: `F - f_vten - c v`,
/// in the same flat layout as [`DynamicsState`].
pub fn net_force(state: &DynamicsState, graph: &PreparedGraph, params: &SolverParams) -> Vec<f64> {
    let q = graph.n_dims();
    let mut f_vten = vec![0.0; state.z.len()];
    accumulate_vertical_tension(graph, q, &state.z, &mut f_vten);
    let forces = flatten_forces(graph);
    (0..state.z.len())
        .map(|i| forces[i] - f_vten[i] - params.drag * state.v[i])
        .collect()
}

fn flatten_forces(graph: &PreparedGraph) -> Vec<f64> {
    let (n, q) = (graph.n_nodes(), graph.n_dims());
    let mut flat = vec![0.0; n * q];
    for (dim, values) in graph.forces().iter().enumerate() {
        for (node, f) in values.iter().enumerate() {
            flat[node * q + dim] = *f;
        }
    }
    flat
}

/// Scatter-add each edge's vertical tension onto its endpoints.
/// Both endpoints receive the same value with opposite signs, so the sum
/// over all beads cancels exactly.
fn accumulate_vertical_tension(graph: &PreparedGraph, q: usize, z: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let mut dz = vec![0.0; q];
    for e in graph.edges() {
        let i = e.source as usize * q;
        let j = e.target as usize * q;
        let mut hsq = e.distance * e.distance;
        for t in 0..q {
            let x = z[i + t] - z[j + t];
            dz[t] = x;
            hsq += x * x;
        }
        let h = hsq.sqrt();
        let coef = e.stiffness * (1.0 - e.distance / h);
        for t in 0..q {
            let w = coef * dz[t];
            out[i + t] += w;
            out[j + t] -= w;
        }
    }
}

/// How a [`Simulation`] last stopped (or why it is still going).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimStatus {
    Running,
    Converged,
    Diverged { iteration: u64 },
}

/// An in-flight dynamics run. [`run_setse`] drives one to completion; the
/// tuner uses the step-wise interface to probe, abort and adapt.
pub struct Simulation<'g> {
    graph: &'g PreparedGraph,
    dt: f64,
    mass: f64,
    drag: f64,
    lambda: f64,
    state: DynamicsState,
    forces_flat: Vec<f64>,
    f_vten: Vec<f64>,
    dz_scratch: Vec<f64>,
    eta: f64,
    eta0: f64,
    status: SimStatus,
    forces_fresh: bool,
}

impl<'g> Simulation<'g> {
    /// Validates parameters and the per-component force balance. A graph
    /// whose components do not balance individually has no equilibrium, so
    /// it is rejected here rather than left to wander.
    pub fn new(graph: &'g PreparedGraph, params: &SolverParams) -> Result<Self> {
        params.validate()?;
        check_component_balance(graph)?;
        let forces_flat = flatten_forces(graph);
        let eta0: f64 = forces_flat.iter().map(|f| f.abs()).sum();
        let state = DynamicsState::new(&forces_flat);
        let len = forces_flat.len();
        Ok(Simulation {
            graph,
            dt: params.dt,
            mass: params.mass,
            drag: params.drag,
            lambda: params.tolerance.lambda(graph),
            state,
            forces_flat,
            f_vten: vec![0.0; len],
            dz_scratch: vec![0.0; graph.n_dims()],
            eta: eta0,
            eta0,
            status: SimStatus::Running,
            forces_fresh: true,
        })
    }

    fn eval_forces(&mut self) {
        if self.forces_fresh {
            return;
        }
        let q = self.graph.n_dims();
        let mut dz = std::mem::take(&mut self.dz_scratch);
        let mut f_vten = std::mem::take(&mut self.f_vten);
        f_vten.iter_mut().for_each(|x| *x = 0.0);
        for e in self.graph.edges() {
            let i = e.source as usize * q;
            let j = e.target as usize * q;
            let mut hsq = e.distance * e.distance;
            for (t, slot) in dz.iter_mut().enumerate() {
                let x = self.state.z[i + t] - self.state.z[j + t];
                *slot = x;
                hsq += x * x;
            }
            let h = hsq.sqrt();
            let coef = e.stiffness * (1.0 - e.distance / h);
            for (t, &x) in dz.iter().enumerate() {
                let w = coef * x;
                f_vten[i + t] += w;
                f_vten[j + t] -= w;
            }
        }
        let mut eta = 0.0;
        for ((out, &f), &vt) in
            self.state.f_static.iter_mut().zip(&self.forces_flat).zip(&f_vten)
        {
            let fs = f - vt;
            *out = fs;
            eta += fs.abs();
        }
        self.eta = eta;
        self.dz_scratch = dz;
        self.f_vten = f_vten;
        self.forces_fresh = true;
    }

    fn integrate(&mut self) {
        let dt = self.dt;
        let half_dt2 = 0.5 * dt * dt;
        let s = &mut self.state;
        for idx in 0..s.z.len() {
            s.z[idx] += s.v[idx] * dt + s.a[idx] * half_dt2;
            s.v[idx] += s.a[idx] * dt;
            let f_net = s.f_static[idx] - self.drag * s.v[idx];
            s.a[idx] = f_net / self.mass;
        }
        s.t += dt;
        s.iteration += 1;
        self.forces_fresh = false;
    }

    /// One full iteration, unconditionally (no convergence check). Errors
    /// if the update produced non-finite state.
    pub fn step(&mut self) -> Result<()> {
        self.eval_forces();
        self.integrate();
        if !self.state.z.iter().all(|z| z.is_finite()) {
            self.status = SimStatus::Diverged { iteration: self.state.iteration };
            return Err(Error::Diverged(self.state.iteration));
        }
        Ok(())
    }

    /// Run up to `max_steps` more iterations, stopping early on convergence
    /// or divergence. The convergence test is evaluated against the current
    /// positions before each move.
    pub fn advance(&mut self, max_steps: u64) -> SimStatus {
        for _ in 0..max_steps {
            if self.status != SimStatus::Running {
                break;
            }
            self.eval_forces();
            if self.eta <= self.lambda {
                self.status = SimStatus::Converged;
                break;
            }
            if !self.eta.is_finite() || self.eta > DIVERGENCE_FACTOR * self.eta0.max(f64::MIN_POSITIVE) {
                self.status = SimStatus::Diverged { iteration: self.state.iteration };
                break;
            }
            self.integrate();
        }
        self.status
    }

    /// `eta = sum |f_static|` for the current positions.
    pub fn current_eta(&mut self) -> f64 {
        self.eval_forces();
        self.eta
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn status(&self) -> SimStatus {
        self.status
    }

    pub fn iteration(&self) -> u64 {
        self.state.iteration
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Shrink (or otherwise change) the time step mid-run; the state is kept.
    pub fn set_dt(&mut self, dt: f64) {
        self.dt = dt;
    }

    pub fn state(&self) -> &DynamicsState {
        &self.state
    }

    /// Extract embeddings for the current positions. Forces are re-evaluated
    /// at these exact positions first, so `eta`, the residuals and the
    /// elevations always describe the same configuration.
    pub fn embeddings(&mut self) -> Embeddings {
        self.eval_forces();
        let (n, q) = (self.graph.n_nodes(), self.graph.n_dims());
        let mut node_elevation = vec![vec![0.0; n]; q];
        for (node, bead) in self.state.z.chunks_exact(q).enumerate() {
            for (dim, &z) in bead.iter().enumerate() {
                node_elevation[dim][node] = z;
            }
        }
        let mut edge_tension = Vec::with_capacity(self.graph.n_edges());
        let mut edge_strain = Vec::with_capacity(self.graph.n_edges());
        for e in self.graph.edges() {
            let i = e.source as usize * q;
            let j = e.target as usize * q;
            let mut hsq = e.distance * e.distance;
            for t in 0..q {
                let x = self.state.z[i + t] - self.state.z[j + t];
                hsq += x * x;
            }
            let ext = hsq.sqrt() - e.distance;
            edge_tension.push(e.stiffness * ext);
            edge_strain.push(ext / e.distance);
        }
        let node_static_force = (0..n)
            .map(|node| (0..q).map(|dim| self.state.f_static[node * q + dim].abs()).sum())
            .collect();
        Embeddings {
            dimension_names: self.graph.dimension_names().to_vec(),
            node_elevation,
            edge_tension,
            edge_strain,
            node_static_force,
            converged: matches!(self.status, SimStatus::Converged) || self.eta <= self.lambda,
            eta: self.eta,
            iterations: self.state.iteration,
        }
    }
}

fn check_component_balance(graph: &PreparedGraph) -> Result<()> {
    let labels = graph.component_labels();
    let n_comp = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    if n_comp <= 1 {
        return Ok(());
    }
    for (dim, values) in graph.forces().iter().enumerate() {
        let mut sum = vec![0.0; n_comp];
        let mut abs = vec![0.0; n_comp];
        for (i, f) in values.iter().enumerate() {
            sum[labels[i] as usize] += f;
            abs[labels[i] as usize] += f.abs();
        }
        for comp in 0..n_comp {
            if sum[comp].abs() > 1e-9 * abs[comp].max(1e-300) && abs[comp] > 0.0 {
                let node = labels.iter().position(|&l| l as usize == comp).unwrap();
                return Err(Error::ComponentImbalance {
                    node: graph.ids()[node].clone(),
                    dimension: graph.dimension_names()[dim].clone(),
                    sum: sum[comp],
                });
            }
        }
    }
    Ok(())
}

/// The output of a run: per-node elevations and residuals, per-edge tension
/// and strain, and how the run ended.
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub dimension_names: Vec<String>,
    /// `node_elevation[dim][node]`.
    pub node_elevation: Vec<Vec<f64>>,
    /// Scalar tension `k (H - d)` per edge, in input edge order.
    pub edge_tension: Vec<f64>,
    /// Strain `(H - d) / d` per edge.
    pub edge_strain: Vec<f64>,
    /// Residual `sum_dim |f_static|` per node.
    pub node_static_force: Vec<f64>,
    pub converged: bool,
    /// Total absolute static force at the reported elevations.
    pub eta: f64,
    pub iterations: u64,
}

impl Embeddings {
    /// Shift every dimension to mean zero. Differences across edges, and
    /// therefore tensions and strains, are unaffected.
    pub fn mean_center(&mut self) {
        for dim in &mut self.node_elevation {
            let mean = dim.iter().sum::<f64>() / dim.len() as f64;
            dim.iter_mut().for_each(|z| *z -= mean);
        }
    }

    /// Express elevations in units of the rest distance.
    pub fn normalize_elevation(&mut self, distance: f64) {
        for dim in &mut self.node_elevation {
            dim.iter_mut().for_each(|z| *z /= distance);
        }
    }
}

/// Run the dynamics with fixed parameters until convergence, divergence or
/// the iteration cap. Hitting the cap yields embeddings with
/// `converged == false`; divergence is an error.
pub fn run_setse(graph: &PreparedGraph, params: &SolverParams) -> Result<Embeddings> {
    let mut sim = Simulation::new(graph, params)?;
    match sim.advance(params.max_iterations) {
        SimStatus::Diverged { iteration } => Err(Error::Diverged(iteration)),
        _ => Ok(sim.embeddings()),
    }
}

/// Like [`run_setse`], also sampling `(iteration, eta)` every
/// `sample_every` iterations.
pub fn run_setse_traced(
    graph: &PreparedGraph,
    params: &SolverParams,
    sample_every: u64,
) -> Result<(Embeddings, Vec<(u64, f64)>)> {
    let every = sample_every.max(1);
    let mut sim = Simulation::new(graph, params)?;
    let mut trace = vec![(0, sim.current_eta())];
    while sim.status() == SimStatus::Running && sim.iteration() < params.max_iterations {
        let budget = every.min(params.max_iterations - sim.iteration());
        sim.advance(budget);
        trace.push((sim.iteration(), sim.current_eta()));
    }
    match sim.status() {
        SimStatus::Diverged { iteration } => Err(Error::Diverged(iteration)),
        _ => Ok((sim.embeddings(), trace)),
    }
}

/// Wall time per iteration with the convergence exit disabled (tolerance
/// zero), for complexity measurements. Panics if the run diverges before
/// `iterations` complete; pick stable parameters.
pub fn time_per_iteration(
    graph: &PreparedGraph,
    params: &SolverParams,
    iterations: u64,
) -> Result<std::time::Duration> {
    let timed = SolverParams {
        tolerance: Tolerance::Absolute(0.0),
        max_iterations: iterations,
        ..*params
    };
    let mut sim = Simulation::new(graph, &timed)?;
    let start = std::time::Instant::now();
    sim.advance(iterations);
    let elapsed = start.elapsed();
    if sim.iteration() < iterations {
        return Err(Error::Diverged(sim.iteration()));
    }
    Ok(elapsed / iterations as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::testutil::{four_node_star, single_spring_offset, stable_params, two_node};

    #[test]
    fn geometry_is_pythagorean() {
        let g = PreparedGraph::from_parts(
            vec!["a".into(), "b".into()],
            vec![Edge { source: 0, target: 1, stiffness: 2.0, distance: 12.0 }],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let geo = edge_geometry(&g, &[vec![3.0, 0.0], vec![4.0, 0.0]]);
        assert_eq!(geo[0].length, 13.0);
        assert_eq!(geo[0].tension, 2.0);
        assert_eq!(geo[0].dz, vec![3.0, 4.0]);
    }

    #[test]
    fn worked_edge_numbers() {
        // dz = 0.1265 across a unit spring with k = 1000.
        let g = two_node();
        let geo = edge_geometry(&g, &[vec![0.1265, 0.0]]);
        assert!((geo[0].length - 1.00797).abs() < 1e-5);
        assert!((geo[0].tension - 7.97).abs() < 0.01);
        assert!((geo[0].vertical[0] - 1.000).abs() < 5e-4);
        // Tension, strain and k d are one identity.
        let s = strain(geo[0].length, 1.0);
        assert!((1000.0 * 1.0 * s - geo[0].tension).abs() < 1e-9);
    }

    #[test]
    fn state_initializes_at_rest() {
        let g = two_node();
        let sim = Simulation::new(&g, &SolverParams::default()).unwrap();
        let s = sim.state();
        assert!(s.z.iter().all(|&x| x == 0.0));
        assert!(s.v.iter().all(|&x| x == 0.0));
        assert!(s.a.iter().all(|&x| x == 0.0));
        assert_eq!(s.f_static, vec![1.0, -1.0]);
        assert_eq!(s.t, 0.0);
        assert_eq!(s.iteration, 0);
    }

    #[test]
    fn first_motion_is_free_fall() {
        // Iteration one only converts force into acceleration (position
        // uses the previous step's a and v, which start at zero); the first
        // displacement lands after iteration two: z = F/m dt^2 / 2, with
        // springs still unstretched at z = 0.
        let g = two_node();
        let params = SolverParams { dt: 0.1, mass: 2.0, drag: 0.5, ..Default::default() };
        let mut sim = Simulation::new(&g, &params).unwrap();
        sim.step().unwrap();
        assert_eq!(sim.state().z, vec![0.0, 0.0]);
        assert_eq!(sim.state().a, vec![0.5, -0.5]);
        sim.step().unwrap();
        let expect = 0.5 * (1.0 / 2.0) * 0.1 * 0.1;
        assert!((sim.state().z[0] - expect).abs() < 1e-15);
        assert!((sim.state().z[1] + expect).abs() < 1e-15);
        assert_eq!(sim.state().iteration, 2);
    }

    #[test]
    fn zero_force_graph_only_advances_time() {
        let g = PreparedGraph::from_parts(
            vec!["a".into(), "b".into()],
            vec![Edge { source: 0, target: 1, stiffness: 10.0, distance: 1.0 }],
            vec![vec![0.0, 0.0]],
            vec!["f".into()],
        )
        .unwrap();
        let mut sim = Simulation::new(&g, &SolverParams::default()).unwrap();
        for _ in 0..5 {
            sim.step().unwrap();
        }
        assert!(sim.state().z.iter().all(|&x| x == 0.0));
        assert!(sim.state().v.iter().all(|&x| x == 0.0));
        assert!((sim.state().t - 0.5).abs() < 1e-12);

        // And a full run converges immediately at iteration zero.
        let emb = run_setse(&g, &SolverParams::default()).unwrap();
        assert!(emb.converged);
        assert_eq!(emb.iterations, 0);
        assert_eq!(emb.eta, 0.0);
    }

    #[test]
    fn two_node_run_matches_scalar_equilibrium() {
        let g = two_node();
        let emb = run_setse(&g, &stable_params()).unwrap();
        assert!(emb.converged);
        // Independent scalar solution: offset solves
        // 1000 (sqrt(4 z^2 + 1) - 1) * 2z / sqrt(4 z^2 + 1) = 1.
        let offset = single_spring_offset(1000.0, 1.0);
        assert!((offset / 2.0 - 0.063237).abs() < 1e-5);
        assert!((emb.node_elevation[0][0] - offset / 2.0).abs() < 1e-4);
        assert!((emb.node_elevation[0][1] + offset / 2.0).abs() < 1e-4);
    }

    #[test]
    fn four_node_star_reaches_published_profile() {
        let g = four_node_star();
        let emb = run_setse(&g, &stable_params()).unwrap();
        assert!(emb.converged);
        let z = &emb.node_elevation[0];
        let expect = [0.1450, 0.0185, -0.0818, -0.0818];
        for (have, want) in z.iter().zip(expect) {
            assert!((have - want).abs() < 5e-4, "{have} vs {want}");
        }
        // eta stored with the embeddings describes exactly these elevations.
        let geo = edge_geometry(&g, &emb.node_elevation);
        let mut residual = [1.0, 0.0, -0.5, -0.5];
        for (e, geom) in g.edges().iter().zip(&geo) {
            residual[e.source as usize] -= geom.vertical[0];
            residual[e.target as usize] += geom.vertical[0];
        }
        let eta: f64 = residual.iter().map(|r| r.abs()).sum();
        assert!((eta - emb.eta).abs() <= 1e-9 * emb.eta.max(1e-300));
    }

    #[test]
    fn net_force_vanishes_at_equilibrium() {
        let g = four_node_star();
        let q = 1;
        // Exact equilibrium from the scalar oracle.
        let x1 = single_spring_offset(1000.0, 1.0);
        let x2 = single_spring_offset(1000.0, 0.5);
        let zb = (2.0 * x2 - x1) / 4.0;
        let z = vec![zb + x1, zb, zb - x2, zb - x2];
        let mut state = DynamicsState::new(&vec![0.0; 4 * q]);
        state.z = z;
        let f = net_force(&state, &g, &SolverParams::default());
        for v in &f {
            assert!(v.abs() < 1e-9, "residual {v}");
        }
        // At the published 4-decimal elevations the stiff springs amplify
        // the rounding: residuals stay at the 2e-3 level, not lower.
        state.z = vec![0.1450, 0.0185, -0.0818, -0.0818];
        let f = net_force(&state, &g, &SolverParams::default());
        for v in &f {
            assert!(v.abs() < 2e-3, "residual {v}");
        }
    }

    #[test]
    fn newtons_third_law_cancels_vertical_tension() {
        let g = four_node_star();
        let mut sim = Simulation::new(&g, &stable_params()).unwrap();
        for _ in 0..50 {
            sim.step().unwrap();
        }
        sim.eval_forces();
        let total: f64 = sim.f_vten.iter().sum();
        assert!(total.abs() <= 1e-9);
    }

    #[test]
    fn divergence_is_an_error_with_iteration() {
        // A huge time step on a stiff spring explodes quickly.
        let g = two_node();
        let params = SolverParams { dt: 10.0, drag: 0.0, ..Default::default() };
        match run_setse(&g, &params) {
            Err(Error::Diverged(iter)) => assert!(iter > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn stock_parameters_cannot_hold_a_stiff_graph() {
        // With the one-step force lag, stability needs drag above about
        // 1.5 k dt: at k = 1000 the stock dt = 0.1 / drag = 1 sits far
        // outside that region, so the run must end in a divergence error,
        // never a silently wrong equilibrium. Stiff graphs want the tuner.
        let g = four_node_star();
        match run_setse(&g, &SolverParams::default()) {
            Err(Error::Diverged(_)) => {}
            other => panic!("expected divergence under stock parameters, got {other:?}"),
        }
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let g = four_node_star();
        let params = SolverParams { max_iterations: 3, ..Default::default() };
        let emb = run_setse(&g, &params).unwrap();
        assert!(!emb.converged);
        assert_eq!(emb.iterations, 3);
        assert!(emb.eta > 0.0);
    }

    #[test]
    fn negating_forces_mirrors_the_embedding() {
        let g = four_node_star();
        let neg = g
            .with_forces(
                vec![g.forces()[0].iter().map(|f| -f).collect()],
                vec!["f".into()],
            )
            .unwrap();
        let a = run_setse(&g, &stable_params()).unwrap();
        let b = run_setse(&neg, &stable_params()).unwrap();
        assert_eq!(a.iterations, b.iterations);
        for (x, y) in a.node_elevation[0].iter().zip(&b.node_elevation[0]) {
            assert_eq!(*x, -*y, "trajectories are exact mirrors");
        }
        for (x, y) in a.edge_tension.iter().zip(&b.edge_tension) {
            assert_eq!(*x, *y);
        }
    }

    #[test]
    fn converged_profile_is_parameter_invariant() {
        let g = four_node_star();
        let tol = Tolerance::Absolute(1e-6);
        let p1 = SolverParams { dt: 0.02, drag: 6.0, tolerance: tol, ..Default::default() };
        let p2 = SolverParams { dt: 0.01, drag: 4.0, mass: 0.5, tolerance: tol, ..Default::default() };
        let a = run_setse(&g, &p1).unwrap();
        let b = run_setse(&g, &p2).unwrap();
        assert!(a.converged && b.converged);
        for (x, y) in a.node_elevation[0].iter().zip(&b.node_elevation[0]) {
            assert!((x - y).abs() < 1e-3);
        }
    }

    #[test]
    fn tension_and_strain_stay_proportional() {
        let g = four_node_star();
        let emb = run_setse(&g, &stable_params()).unwrap();
        // Constant k and d: strain is tension / (k d) edge by edge, so the
        // Pearson correlation of the two vectors is 1.
        for (t, s) in emb.edge_tension.iter().zip(&emb.edge_strain) {
            assert!((1000.0 * 1.0 * s - t).abs() <= 1e-12 * t.abs().max(1.0));
        }
        let n = emb.edge_tension.len() as f64;
        let mt = emb.edge_tension.iter().sum::<f64>() / n;
        let ms = emb.edge_strain.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vt = 0.0;
        let mut vs = 0.0;
        for (t, s) in emb.edge_tension.iter().zip(&emb.edge_strain) {
            cov += (t - mt) * (s - ms);
            vt += (t - mt) * (t - mt);
            vs += (s - ms) * (s - ms);
        }
        let pearson = cov / (vt.sqrt() * vs.sqrt());
        assert!((pearson - 1.0).abs() < 1e-12);
    }

    #[test]
    fn component_imbalance_is_rejected_and_rebalance_recovers() {
        let ids: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let edges = vec![
            Edge { source: 0, target: 1, stiffness: 1000.0, distance: 1.0 },
            Edge { source: 2, target: 3, stiffness: 1000.0, distance: 1.0 },
        ];
        let g = PreparedGraph::from_parts(
            ids,
            edges,
            vec![vec![1.0, 0.0, 0.0, -1.0]],
            vec!["f".into()],
        )
        .unwrap();
        assert!(matches!(
            run_setse(&g, &stable_params()),
            Err(Error::ComponentImbalance { .. })
        ));
        let fixed = g.rebalance_per_component();
        let emb = run_setse(&fixed, &stable_params()).unwrap();
        assert!(emb.converged);
    }

    #[test]
    fn eta_trace_is_monotone_in_the_smooth_regime() {
        let g = four_node_star();
        let params = SolverParams { drag: 6.0, dt: 0.05, ..Default::default() };
        let (_, trace) = run_setse_traced(&g, &params, 100).unwrap();
        let start = trace.len() / 10 + 1;
        for w in trace[start..].windows(2) {
            assert!(
                w[1].1 <= w[0].1 * (1.0 + 1e-9),
                "eta rose from {} to {} at iteration {}",
                w[0].1,
                w[1].1,
                w[1].0
            );
        }
    }
}
