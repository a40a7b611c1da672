//! Shared plumbing: the thread-pool cap, solver parameter assembly from
//! flags, the fixed/auto/biconnected mode switch, and the instance
//! metadata format shared by `quintet` and `eval`.

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use setse::synth::QuintetType;
use setse::{
    auto_setse, run_setse, setse_biconnected, AutoTuneParams, EdgeValue, Embeddings,
    PreparedGraph, SolverParams, Tolerance,
};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// One run with explicitly chosen parameters.
    Fixed,
    /// Probe for drag and time step first.
    Auto,
    /// Solve per bi-connected block and reassemble.
    Biconnected,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::Auto => "auto",
            Mode::Biconnected => "biconnected",
        }
    }
}

/// Cap rayon's global pool when `SETSE_THREADS` is set; the machine's core
/// count applies otherwise.
pub fn init_threads() -> Result<()> {
    match std::env::var("SETSE_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let threads: usize = raw
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .with_context(|| format!("SETSE_THREADS must be a positive integer, got {raw:?}"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .context("thread pool initialized twice")
        }
    }
}

/// Solver and tuner knobs common to every embedding subcommand. Anything
/// left unset falls back to the library default.
#[derive(clap::Args, Debug, Clone)]
pub struct SolverOverrides {
    /// Integration time step (fixed mode), or the step the tuner starts from.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Drag coefficient; fixed mode only.
    #[arg(long)]
    pub drag: Option<f64>,
    /// Bead mass.
    #[arg(long)]
    pub mass: Option<f64>,
    /// Iteration cap of the fixed-mode run.
    #[arg(long)]
    pub max_iterations: Option<u64>,
    /// Absolute convergence tolerance on the total static force.
    #[arg(long, conflicts_with = "tolerance_fraction")]
    pub tolerance: Option<f64>,
    /// Convergence tolerance as a fraction of the total absolute force.
    #[arg(long)]
    pub tolerance_fraction: Option<f64>,
    /// Smallest drag the tuner scans.
    #[arg(long)]
    pub drag_min: Option<f64>,
    /// Largest drag the tuner scans.
    #[arg(long)]
    pub drag_max: Option<f64>,
    /// Iteration budget per tuner probe.
    #[arg(long)]
    pub hyper_iterations: Option<u64>,
    /// Iteration budget of the tuner's final run.
    #[arg(long)]
    pub final_iterations: Option<u64>,
    /// Probe cap before the tuner gives up.
    #[arg(long)]
    pub p_max: Option<usize>,
    /// Relative improvement below which the tuner's bisection stops.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Multiplier applied to the time step when a whole probe scan fails.
    #[arg(long)]
    pub timestep_shrinker: Option<f64>,
}

impl SolverOverrides {
    pub fn tolerance(&self) -> Tolerance {
        match (self.tolerance, self.tolerance_fraction) {
            (Some(abs), _) => Tolerance::Absolute(abs),
            (None, Some(frac)) => Tolerance::ForceFraction(frac),
            (None, None) => Tolerance::default(),
        }
    }

    pub fn solver(&self) -> SolverParams {
        let base = SolverParams::default();
        SolverParams {
            dt: self.dt.unwrap_or(base.dt),
            mass: self.mass.unwrap_or(base.mass),
            drag: self.drag.unwrap_or(base.drag),
            max_iterations: self.max_iterations.unwrap_or(base.max_iterations),
            tolerance: self.tolerance(),
        }
    }

    pub fn tuner(&self) -> AutoTuneParams {
        let base = AutoTuneParams::default();
        AutoTuneParams {
            drag_min: self.drag_min.unwrap_or(base.drag_min),
            drag_max: self.drag_max.unwrap_or(base.drag_max),
            timestep_shrinker: self.timestep_shrinker.unwrap_or(base.timestep_shrinker),
            hyper_iterations: self.hyper_iterations.unwrap_or(base.hyper_iterations),
            final_iterations: self.final_iterations.unwrap_or(base.final_iterations),
            p_max: self.p_max.unwrap_or(base.p_max),
            phi: self.phi.unwrap_or(base.phi),
            tolerance: self.tolerance(),
            initial_dt: self.dt.unwrap_or(base.initial_dt),
            mass: self.mass.unwrap_or(base.mass),
        }
    }
}

fn tolerance_json(tolerance: Tolerance) -> serde_json::Value {
    match tolerance {
        Tolerance::Absolute(a) => serde_json::json!({ "absolute": a }),
        Tolerance::ForceFraction(f) => serde_json::json!({ "force_fraction": f }),
    }
}

/// One solved embedding plus the parameter record that goes into run.json.
pub struct Solved {
    pub embeddings: Embeddings,
    pub parameters: serde_json::Value,
}

pub fn solve(graph: &PreparedGraph, mode: Mode, overrides: &SolverOverrides) -> Result<Solved> {
    match mode {
        Mode::Fixed => {
            let params = overrides.solver();
            let embeddings = run_setse(graph, &params)?;
            let parameters = serde_json::json!({
                "dt": params.dt,
                "mass": params.mass,
                "drag": params.drag,
                "max_iterations": params.max_iterations,
                "tolerance": tolerance_json(params.tolerance),
            });
            Ok(Solved { embeddings, parameters })
        }
        Mode::Auto => {
            let tune = overrides.tuner();
            let (embeddings, trace) = auto_setse(graph, &tune)?;
            let parameters = serde_json::json!({
                "tuner": tuner_json(&tune),
                "chosen_drag": trace.chosen_drag,
                "chosen_dt": trace.chosen_dt,
                "final_dt": trace.final_dt,
                "probes": trace.total_probes,
            });
            Ok(Solved { embeddings, parameters })
        }
        Mode::Biconnected => {
            let tune = overrides.tuner();
            let (embeddings, tree) = setse_biconnected(graph, &tune)?;
            let parameters = serde_json::json!({
                "tuner": tuner_json(&tune),
                "blocks": tree.blocks.len(),
                "articulation_nodes": tree.articulation.len(),
            });
            Ok(Solved { embeddings, parameters })
        }
    }
}

fn tuner_json(tune: &AutoTuneParams) -> serde_json::Value {
    serde_json::json!({
        "drag_min": tune.drag_min,
        "drag_max": tune.drag_max,
        "timestep_shrinker": tune.timestep_shrinker,
        "hyper_iterations": tune.hyper_iterations,
        "final_iterations": tune.final_iterations,
        "p_max": tune.p_max,
        "phi": tune.phi,
        "tolerance": tolerance_json(tune.tolerance),
        "initial_dt": tune.initial_dt,
        "mass": tune.mass,
    })
}

/// Parse a spring value flag: a positive number, or `column` to read the
/// per-edge CSV column.
pub fn parse_edge_value(raw: &str, what: &str) -> Result<EdgeValue> {
    if raw.eq_ignore_ascii_case("column") {
        return Ok(EdgeValue::Column);
    }
    match raw.parse::<f64>() {
        Ok(v) => Ok(EdgeValue::Constant(v)),
        Err(_) => bail!("--{what} must be a number or `column`, got {raw:?}"),
    }
}

pub fn parse_quintet_type(raw: &str) -> std::result::Result<QuintetType, String> {
    raw.parse().map_err(|e: setse::Error| e.to_string())
}

/// Sidecar metadata written next to each generated instance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct InstanceMeta {
    pub quintet_type: QuintetType,
    pub seed: u64,
    /// Disconnected draws rejected before this instance came out.
    pub resamples: u32,
    pub nodes: usize,
    pub edges: usize,
    pub stiffness: f64,
    pub distance: f64,
}
