//! Drag / time-step selection by probing.
//!
//! Convergence speed is very sensitive to the drag coefficient and the
//! safe time step is graph-dependent, but the final static force of a short
//! run is close to convex in the log of the drag-to-time-step ratio. The
//! tuner exploits that shape: probe a decade ladder of drag values with
//! short runs, shrink the time step whenever no probe beats doing nothing,
//! then bisect in log-drag space around the best probe until the improvement
//! stalls. A long run with the winning pair finishes the job, halving the
//! time step on the fly if the static force starts climbing between checks.

use crate::engine::{Embeddings, SimStatus, Simulation, SolverParams, Tolerance};
use crate::error::{Error, Result};
use crate::graph::PreparedGraph;

/// Search-space and budget knobs for [`auto_setse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoTuneParams {
    /// Smallest drag coefficient the scan will try.
    pub drag_min: f64,
    /// Largest drag coefficient the scan will try.
    pub drag_max: f64,
    /// Multiplier applied to the time step when a whole scan fails.
    pub timestep_shrinker: f64,
    /// Iteration budget of one probe.
    pub hyper_iterations: u64,
    /// Iteration budget of the final run.
    pub final_iterations: u64,
    /// Hard cap on the number of probes.
    pub p_max: usize,
    /// Relative static-force change below which the bisection stops.
    pub phi: f64,
    /// Convergence tolerance, shared by probes and the final run.
    pub tolerance: Tolerance,
    /// Time step the search starts from.
    pub initial_dt: f64,
    /// Bead mass.
    pub mass: f64,
}

impl Default for AutoTuneParams {
    fn default() -> Self {
        AutoTuneParams {
            drag_min: 0.01,
            drag_max: 100.0,
            timestep_shrinker: 0.5,
            hyper_iterations: 2_000,
            final_iterations: 20_000,
            p_max: 30,
            phi: 0.02,
            tolerance: Tolerance::default(),
            initial_dt: 0.1,
            mass: 1.0,
        }
    }
}

impl AutoTuneParams {
    fn validate(&self) -> Result<()> {
        if !(self.drag_min > 0.0 && self.drag_max > self.drag_min) {
            return Err(Error::InvalidParameter(format!(
                "drag range [{}, {}] must be positive and increasing",
                self.drag_min, self.drag_max
            )));
        }
        if !(self.timestep_shrinker > 0.0 && self.timestep_shrinker < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "timestep shrinker {} must lie in (0, 1)",
                self.timestep_shrinker
            )));
        }
        if self.hyper_iterations == 0 || self.final_iterations == 0 || self.p_max == 0 {
            return Err(Error::InvalidParameter("iteration budgets must be positive".into()));
        }
        if self.phi.is_nan() || self.phi <= 0.0 {
            return Err(Error::InvalidParameter("phi must be positive".into()));
        }
        if !(self.initial_dt > 0.0 && self.mass > 0.0) {
            return Err(Error::InvalidParameter("dt and mass must be positive".into()));
        }
        Ok(())
    }

    fn solver(&self, drag: f64, dt: f64, max_iterations: u64) -> SolverParams {
        SolverParams { dt, mass: self.mass, drag, max_iterations, tolerance: self.tolerance }
    }
}

/// One probe's outcome.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProbeRecord {
    pub drag: f64,
    pub dt: f64,
    /// Static force when the probe stopped; infinite if it diverged.
    pub eta: f64,
    /// True when the probe was cut short: static force above its starting
    /// value at a check, or outright divergence.
    pub terminated_early: bool,
}

/// Everything the search did, in probe order.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct TuneTrace {
    pub probes: Vec<ProbeRecord>,
    pub chosen_drag: f64,
    pub chosen_dt: f64,
    /// Time step at the end of the final run (adaptive halving may lower it).
    pub final_dt: f64,
    pub total_probes: usize,
}

/// Iterations between the probe's "is this getting worse?" checks.
const PROBE_CHECK_EVERY: u64 = 50;
/// Iterations between the final run's noise checks.
const FINAL_CHECK_EVERY: u64 = 100;
/// Static-force growth between final-run checks that triggers dt halving.
const NOISY_GROWTH_FACTOR: f64 = 1.2;
/// Log10 gap below which the bisection considers the minimum pinned.
const MIN_LOG_GAP: f64 = 1e-2;

fn probe_impl(
    graph: &PreparedGraph,
    tune: &AutoTuneParams,
    drag: f64,
    dt: f64,
) -> Result<(ProbeRecord, Option<Embeddings>)> {
    let params = tune.solver(drag, dt, tune.hyper_iterations);
    let mut sim = Simulation::new(graph, &params)?;
    let eta0 = sim.eta0();
    loop {
        let left = tune.hyper_iterations - sim.iteration();
        if left == 0 {
            break;
        }
        match sim.advance(PROBE_CHECK_EVERY.min(left)) {
            SimStatus::Converged => {
                let emb = sim.embeddings();
                let record = ProbeRecord { drag, dt, eta: emb.eta, terminated_early: false };
                return Ok((record, Some(emb)));
            }
            SimStatus::Diverged { .. } => {
                return Ok((
                    ProbeRecord { drag, dt, eta: f64::INFINITY, terminated_early: true },
                    None,
                ));
            }
            SimStatus::Running => {
                let eta = sim.current_eta();
                if eta > eta0 {
                    return Ok((ProbeRecord { drag, dt, eta, terminated_early: true }, None));
                }
            }
        }
    }
    let eta = sim.current_eta();
    Ok((ProbeRecord { drag, dt, eta, terminated_early: false }, None))
}

/// Short exploratory run: at most `budget` iterations of (`drag`, `dt`),
/// aborted early if the static force climbs above its starting value at a
/// 50-iteration check or the run diverges.
pub fn probe(
    graph: &PreparedGraph,
    tune: &AutoTuneParams,
    drag: f64,
    dt: f64,
    budget: u64,
) -> Result<ProbeRecord> {
    let scoped = AutoTuneParams { hyper_iterations: budget, ..*tune };
    Ok(probe_impl(graph, &scoped, drag, dt)?.0)
}

fn decade_ladder(drag_min: f64, drag_max: f64) -> Vec<f64> {
    let mut ladder = vec![drag_min];
    let mut c = drag_min;
    while c * 10.0 < drag_max * (1.0 + 1e-12) {
        c *= 10.0;
        ladder.push(c);
    }
    if (ladder.last().copied().unwrap() - drag_max).abs() > 1e-12 * drag_max {
        ladder.push(drag_max);
    }
    ladder
}

/// Pick drag and time step automatically, then run to convergence.
///
/// Returns the embeddings of the final run (or of a probe that already
/// converged) together with the full probe trace. Fails with
/// [`Error::Untunable`] when no probe improves on the initial static force
/// before the probe budget runs out.
pub fn auto_setse(
    graph: &PreparedGraph,
    tune: &AutoTuneParams,
) -> Result<(Embeddings, TuneTrace)> {
    tune.validate()?;
    let lambda = tune.tolerance.lambda(graph);
    let eta0 = graph.total_abs_force();
    let mut trace = TuneTrace::default();

    // Nothing to do: record one (trivially converged) probe and return.
    if eta0 <= lambda {
        let params = tune.solver(tune.drag_min, tune.initial_dt, 1);
        let mut sim = Simulation::new(graph, &params)?;
        sim.advance(1);
        let emb = sim.embeddings();
        trace.probes.push(ProbeRecord {
            drag: tune.drag_min,
            dt: tune.initial_dt,
            eta: emb.eta,
            terminated_early: false,
        });
        trace.chosen_drag = tune.drag_min;
        trace.chosen_dt = tune.initial_dt;
        trace.final_dt = tune.initial_dt;
        trace.total_probes = 1;
        return Ok((emb, trace));
    }

    let ladder = decade_ladder(tune.drag_min, tune.drag_max);
    let mut dt = tune.initial_dt;
    let mut best: Option<(ProbeRecord, Option<Embeddings>)> = None;

    // Scan whole decades at the current dt; shrink dt until something
    // improves on eta0.
    'scan: loop {
        let mut improved = false;
        for &drag in &ladder {
            if trace.probes.len() >= tune.p_max {
                break 'scan;
            }
            let (record, emb) = probe_impl(graph, tune, drag, dt)?;
            trace.probes.push(record);
            if record.eta < best.as_ref().map_or(f64::INFINITY, |(b, _)| b.eta) {
                best = Some((record, emb));
            }
            improved |= record.eta < eta0 && !record.terminated_early;
        }
        if improved {
            break;
        }
        if trace.probes.len() >= tune.p_max {
            trace.total_probes = trace.probes.len();
            return Err(Error::Untunable { trace });
        }
        dt *= tune.timestep_shrinker;
    }

    // Bisect in log10(drag) around the best probe at the final scan dt.
    let mut points: Vec<(f64, f64)> = trace
        .probes
        .iter()
        .filter(|p| p.dt == dt)
        .map(|p| (p.drag.log10(), p.eta))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = (tune.drag_min.log10(), tune.drag_max.log10());
    while trace.probes.len() < tune.p_max {
        let best_eta = best.as_ref().map_or(f64::INFINITY, |(b, _)| b.eta);
        if best_eta <= lambda {
            break;
        }
        let best_x = best
            .as_ref()
            .map(|(b, _)| b.drag.log10())
            .unwrap_or((lo + hi) / 2.0);
        let idx = points
            .iter()
            .position(|(x, _)| (*x - best_x).abs() < 1e-12)
            .unwrap_or(0);
        let left = if idx > 0 { points[idx - 1].0 } else { lo };
        let right = if idx + 1 < points.len() { points[idx + 1].0 } else { hi };
        let gap_left = best_x - left;
        let gap_right = right - best_x;
        let (gap, target) = if gap_left >= gap_right {
            (gap_left, best_x - gap_left / 2.0)
        } else {
            (gap_right, best_x + gap_right / 2.0)
        };
        if gap < MIN_LOG_GAP {
            break;
        }
        let drag = 10f64.powf(target);
        let (record, emb) = probe_impl(graph, tune, drag, dt)?;
        trace.probes.push(record);
        points.push((target, record.eta));
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let stalled = (record.eta - best_eta).abs() / best_eta < tune.phi;
        if record.eta < best_eta {
            best = Some((record, emb));
        }
        if stalled {
            break;
        }
    }

    let (chosen, converged_probe) = best.expect("scan loop leaves a best probe");
    trace.chosen_drag = chosen.drag;
    trace.chosen_dt = chosen.dt;
    trace.total_probes = trace.probes.len();

    if let Some(emb) = converged_probe {
        trace.final_dt = chosen.dt;
        return Ok((emb, trace));
    }

    // Final run. Halve dt whenever the static force grows noticeably
    // between checks; restart with a smaller step on outright divergence.
    let mut run_dt = chosen.dt;
    for _attempt in 0..3 {
        let params = tune.solver(chosen.drag, run_dt, tune.final_iterations);
        let mut sim = Simulation::new(graph, &params)?;
        let mut prev_eta = sim.eta0();
        while sim.status() == SimStatus::Running && sim.iteration() < tune.final_iterations {
            let left = tune.final_iterations - sim.iteration();
            sim.advance(FINAL_CHECK_EVERY.min(left));
            if sim.status() != SimStatus::Running {
                break;
            }
            let eta = sim.current_eta();
            if eta > NOISY_GROWTH_FACTOR * prev_eta {
                let dt = sim.dt() / 2.0;
                sim.set_dt(dt);
            }
            prev_eta = eta;
        }
        match sim.status() {
            SimStatus::Diverged { .. } => {
                run_dt /= 2.0;
                continue;
            }
            _ => {
                trace.final_dt = sim.dt();
                return Ok((sim.embeddings(), trace));
            }
        }
    }
    Err(Error::Diverged(0))
}
