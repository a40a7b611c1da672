//! Strain, elevation and tension spring embeddings for undirected graphs.
//!
//! A graph becomes a physical system: edges are springs with a stiffness
//! and a rest distance, nodes are frictionless beads pushed up or down by a
//! force derived from a node attribute. Damped Newtonian dynamics relax the
//! system until the net static force is negligible, and the equilibrium is
//! read back as node elevations plus edge tensions and strains — an
//! embedding whose values are comparable across graphs because they come
//! from the same mechanics everywhere.
//!
//! The pieces:
//!
//! * [`graph`] — edge lists, node attributes, force balancing, validation.
//! * [`engine`] — the damped spring dynamics and convergence machinery.
//! * [`autotune`] — drag / time-step selection when no good guess exists.
//! * [`biconnected`] — solve per bi-connected block and reassemble.
//! * [`aggregate`] — node and whole-network summaries.
//! * [`synth`] — quintet benchmark graphs and random test graphs.
//! * [`eval`] — classifiers and metrics for judging an embedding.
//! * [`io`] — CSV/JSON reading and writing.

pub mod aggregate;
pub mod autotune;
pub mod biconnected;
pub mod engine;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use autotune::{auto_setse, AutoTuneParams, TuneTrace};
pub use biconnected::{decompose, setse_biconnected, BlockCutTree};
pub use engine::{run_setse, Embeddings, SolverParams, Tolerance};
pub use error::{Error, Result};
pub use graph::{build_prepared_graph, EdgeValue, ForceSpec, PreparedGraph};
