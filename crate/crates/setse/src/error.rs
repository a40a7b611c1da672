//! Error type shared across the crate.

use crate::autotune::TuneTrace;

/// Everything that can go wrong while preparing a graph, running the
/// dynamics, tuning, decomposing, or doing file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An attribute column with no observed (non-missing) values.
    #[error("attribute '{0}' has no observed values")]
    EmptyAttribute(String),

    /// A categorical column needs at least two distinct levels.
    #[error("categorical attribute '{0}' has fewer than two distinct levels")]
    DegenerateCategorical(String),

    /// An edge endpoint that is not present in the node table.
    #[error("edge references unknown node '{0}'")]
    UnknownNode(String),

    /// Self-loops have no geometric meaning here.
    #[error("self-loop on node '{0}'")]
    SelfLoop(String),

    /// The same undirected pair appeared twice in the edge list.
    #[error("duplicate edge between '{0}' and '{1}'")]
    DuplicateEdge(String, String),

    /// Spring constants must be strictly positive.
    #[error("edge {from}-{to} has non-positive stiffness {value}")]
    NonPositiveStiffness { from: String, to: String, value: f64 },

    /// Rest distances must be strictly positive.
    #[error("edge {from}-{to} has non-positive distance {value}")]
    NonPositiveDistance { from: String, to: String, value: f64 },

    /// An edge column was requested but a row does not carry the value.
    #[error("edge {from}-{to} is missing a '{column}' value")]
    MissingEdgeValue { from: String, to: String, column: String },

    /// A node attribute column referenced by name that does not exist.
    #[error("unknown attribute column '{0}'")]
    UnknownColumn(String),

    /// Force dimensions must sum to zero before the dynamics make sense.
    #[error("force dimension '{name}' does not balance (sum {sum:e})")]
    UnbalancedDimension { name: String, sum: f64 },

    /// A degree-zero node cannot oppose a net force.
    #[error("isolated node '{0}' carries a non-zero force")]
    IsolatedNodeWithForce(String),

    /// Disconnected inputs must balance within every component.
    #[error(
        "component containing '{node}' has net force {sum:e} in dimension '{dimension}'; \
         re-balance per component or fix the attribute"
    )]
    ComponentImbalance { node: String, dimension: String, sum: f64 },

    /// Operation requires a connected graph.
    #[error("graph is disconnected; process each connected component separately")]
    Disconnected,

    /// The integrator produced non-finite state or runaway static force.
    #[error("dynamics diverged at iteration {0}")]
    Diverged(u64),

    /// No drag / time-step combination improved on the initial static force.
    #[error("untunable graph: no probe improved on the initial static force after {} probes", trace.probes.len())]
    Untunable { trace: TuneTrace },

    /// A block inside the bi-connected solve could not be tuned.
    #[error("block {block} ({nodes} nodes) failed to solve")]
    UnsolvedBlock {
        block: usize,
        nodes: usize,
        #[source]
        source: Box<Error>,
    },

    /// Aggregations and classifiers need at least one observation.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Classification metrics need at least two classes.
    #[error("labels contain a single class")]
    SingleClass,

    /// Parameter validation (time step, mass, tolerance, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Elevation normalization needs one rest distance shared by all edges.
    #[error("elevation normalization requires a constant edge distance")]
    NonConstantDistance,

    /// Malformed row in a delimited input file.
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
