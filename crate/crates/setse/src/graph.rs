//! Graph preparation: node attributes become balanced force dimensions.
//!
//! A spring network only has an equilibrium when the forces in every
//! dimension sum to zero, so raw attributes are never used directly.
//! Continuous columns are centered on the mean of their observed values;
//! categorical columns expand into one dimension per level, encoded so each
//! dimension balances by construction. The output of this module is a
//! [`PreparedGraph`]: an immutable node/edge list with per-dimension forces
//! that the solver consumes as-is.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// One undirected spring. `source`/`target` index into the node list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: u32,
    pub target: u32,
    /// Spring constant k (> 0).
    pub stiffness: f64,
    /// Rest distance d (> 0), the separation in graph space.
    pub distance: f64,
}

/// An edge as read from a file, before node ids are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEdge {
    pub from: String,
    pub to: String,
    pub stiffness: Option<f64>,
    pub distance: Option<f64>,
}

impl RawEdge {
    pub fn new(from: &str, to: &str) -> Self {
        RawEdge { from: from.to_string(), to: to.to_string(), stiffness: None, distance: None }
    }
}

/// Where an edge parameter (k or d) comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeValue {
    /// The same value for every edge.
    Constant(f64),
    /// Use the per-edge value carried by the input rows.
    Column,
}

/// A typed node attribute column. Missing entries are `None`.
#[derive(Debug, Clone, PartialEq)]
pub enum AttributeColumn {
    Continuous(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl AttributeColumn {
    pub fn len(&self) -> usize {
        match self {
            AttributeColumn::Continuous(v) => v.len(),
            AttributeColumn::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Node ids plus typed attribute columns, all aligned by node index.
/// Node order is fixed at insertion and is the node order of every graph
/// built from this table.
#[derive(Debug, Clone, Default)]
pub struct NodeAttributeTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    columns: Vec<(String, AttributeColumn)>,
}

impl NodeAttributeTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a node; duplicate ids are rejected.
    pub fn add_node(&mut self, id: &str) -> Result<usize> {
        if self.index.contains_key(id) {
            return Err(Error::Parse {
                path: String::new(),
                line: 0,
                message: format!("duplicate node id '{id}'"),
            });
        }
        let idx = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), idx);
        Ok(idx)
    }

    /// Attach a column; `values` must be aligned with the node list.
    pub fn add_column(&mut self, name: &str, column: AttributeColumn) -> Result<()> {
        if column.len() != self.ids.len() {
            return Err(Error::InvalidParameter(format!(
                "column '{}' has {} values for {} nodes",
                name,
                column.len(),
                self.ids.len()
            )));
        }
        self.columns.push((name.to_string(), column));
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&AttributeColumn> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &AttributeColumn)> {
        self.columns.iter().map(|(n, c)| (n.as_str(), c))
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Which attribute columns drive the embedding, and how categoricals expand.
#[derive(Debug, Clone)]
pub struct ForceSpec {
    /// Attribute columns used as force dimensions, in order.
    pub columns: Vec<String>,
    /// A two-level categorical normally collapses to a single dimension
    /// (the second level is the mirror image of the first). Set this to
    /// force one dimension per level anyway.
    pub expand_binary: bool,
}

impl ForceSpec {
    pub fn single(column: &str) -> Self {
        ForceSpec { columns: vec![column.to_string()], expand_binary: false }
    }
}

/// Relative slack allowed when checking that a force dimension sums to zero.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

/// A validated, immutable spring network ready for the solver.
///
/// Invariants enforced at construction: no self-loops or duplicate edges,
/// k > 0 and d > 0 everywhere, every force dimension sums to zero within
/// [`BALANCE_TOLERANCE`] of the total absolute force, and degree-zero nodes
/// carry no force.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    /// `forces[dim][node]`.
    forces: Vec<Vec<f64>>,
    dimension_names: Vec<String>,
}

/// Center a continuous attribute so it sums to zero.
///
/// The mean is taken over observed values only; missing entries become
/// exactly zero force, so they neither push the network nor skew the mean.
pub fn balance_continuous(values: &[Option<f64>]) -> Result<Vec<f64>> {
    let observed: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    if observed.is_empty() {
        return Err(Error::EmptyAttribute(String::new()));
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    Ok(values.iter().map(|v| v.map_or(0.0, |x| x - mean)).collect())
}

/// Expand a categorical attribute into one balanced dimension per level.
///
/// Levels are taken in order of first appearance. Within a level dimension,
/// members carry `1 - |level| / |observed|` and non-members
/// `-|level| / |observed|`: the one-hot encoding centered on its own mean.
/// Missing entries are zero in every dimension.
pub fn expand_categorical(values: &[Option<&str>]) -> Result<Vec<(String, Vec<f64>)>> {
    let mut levels: Vec<&str> = Vec::new();
    for v in values.iter().flatten() {
        if !levels.contains(v) {
            levels.push(v);
        }
    }
    if levels.len() < 2 {
        return Err(Error::DegenerateCategorical(String::new()));
    }
    let mut out = Vec::with_capacity(levels.len());
    for level in levels {
        let indicator: Vec<Option<f64>> = values
            .iter()
            .map(|v| v.map(|s| if s == level { 1.0 } else { 0.0 }))
            .collect();
        out.push((level.to_string(), balance_continuous(&indicator)?));
    }
    Ok(out)
}

fn named(err: Error, column: &str) -> Error {
    match err {
        Error::EmptyAttribute(_) => Error::EmptyAttribute(column.to_string()),
        Error::DegenerateCategorical(_) => Error::DegenerateCategorical(column.to_string()),
        other => other,
    }
}

/// Resolve raw edges and attributes into a [`PreparedGraph`].
pub fn build_prepared_graph(
    edges: &[RawEdge],
    table: &NodeAttributeTable,
    force: &ForceSpec,
    stiffness: EdgeValue,
    distance: EdgeValue,
) -> Result<PreparedGraph> {
    if table.is_empty() {
        return Err(Error::EmptyInput("node table"));
    }

    let mut resolved = Vec::with_capacity(edges.len());
    for raw in edges {
        let s = table.index_of(&raw.from).ok_or_else(|| Error::UnknownNode(raw.from.clone()))? as u32;
        let t = table.index_of(&raw.to).ok_or_else(|| Error::UnknownNode(raw.to.clone()))? as u32;
        let k = match stiffness {
            EdgeValue::Constant(k) => k,
            EdgeValue::Column => raw.stiffness.ok_or_else(|| Error::MissingEdgeValue {
                from: raw.from.clone(),
                to: raw.to.clone(),
                column: "k".into(),
            })?,
        };
        let d = match distance {
            EdgeValue::Constant(d) => d,
            EdgeValue::Column => raw.distance.ok_or_else(|| Error::MissingEdgeValue {
                from: raw.from.clone(),
                to: raw.to.clone(),
                column: "d".into(),
            })?,
        };
        resolved.push(Edge { source: s, target: t, stiffness: k, distance: d });
    }

    let mut forces = Vec::new();
    let mut names = Vec::new();
    for column in &force.columns {
        match table.column(column).ok_or_else(|| Error::UnknownColumn(column.clone()))? {
            AttributeColumn::Continuous(values) => {
                forces.push(balance_continuous(values).map_err(|e| named(e, column))?);
                names.push(column.clone());
            }
            AttributeColumn::Categorical(values) => {
                let refs: Vec<Option<&str>> = values.iter().map(|v| v.as_deref()).collect();
                let mut dims = expand_categorical(&refs).map_err(|e| named(e, column))?;
                if dims.len() == 2 && !force.expand_binary {
                    dims.truncate(1);
                }
                for (level, values) in dims {
                    names.push(format!("{column}={level}"));
                    forces.push(values);
                }
            }
        }
    }

    PreparedGraph::from_parts(table.ids().to_vec(), resolved, forces, names)
}

impl PreparedGraph {
    /// Assemble a graph from already-balanced forces, validating every
    /// structural invariant. This is the constructor used by generators,
    /// the block solver, and tests; [`build_prepared_graph`] reduces to it.
    pub fn from_parts(
        ids: Vec<String>,
        edges: Vec<Edge>,
        forces: Vec<Vec<f64>>,
        dimension_names: Vec<String>,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::EmptyInput("node list"));
        }
        if forces.len() != dimension_names.len() {
            return Err(Error::InvalidParameter(format!(
                "{} force dimensions but {} names",
                forces.len(),
                dimension_names.len()
            )));
        }

        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate node id '{id}'")));
            }
        }

        let mut seen = HashMap::with_capacity(edges.len());
        let mut degree = vec![0u32; n];
        for e in &edges {
            let (s, t) = (e.source as usize, e.target as usize);
            if s >= n || t >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge endpoint {} out of range",
                    s.max(t)
                )));
            }
            if s == t {
                return Err(Error::SelfLoop(ids[s].clone()));
            }
            let key = (s.min(t), s.max(t));
            if seen.insert(key, ()).is_some() {
                return Err(Error::DuplicateEdge(ids[key.0].clone(), ids[key.1].clone()));
            }
            if e.stiffness.is_nan() || e.stiffness <= 0.0 {
                return Err(Error::NonPositiveStiffness {
                    from: ids[s].clone(),
                    to: ids[t].clone(),
                    value: e.stiffness,
                });
            }
            if e.distance.is_nan() || e.distance <= 0.0 {
                return Err(Error::NonPositiveDistance {
                    from: ids[s].clone(),
                    to: ids[t].clone(),
                    value: e.distance,
                });
            }
            degree[s] += 1;
            degree[t] += 1;
        }

        for (dim, values) in forces.iter().enumerate() {
            if values.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "dimension '{}' has {} values for {} nodes",
                    dimension_names[dim],
                    values.len(),
                    n
                )));
            }
            let sum: f64 = values.iter().sum();
            let abs: f64 = values.iter().map(|f| f.abs()).sum();
            if sum.abs() > BALANCE_TOLERANCE * abs.max(1e-300) && abs > 0.0 {
                return Err(Error::UnbalancedDimension {
                    name: dimension_names[dim].clone(),
                    sum,
                });
            }
            for (i, f) in values.iter().enumerate() {
                if degree[i] == 0 && *f != 0.0 {
                    return Err(Error::IsolatedNodeWithForce(ids[i].clone()));
                }
            }
        }

        Ok(PreparedGraph { ids, index, edges, forces, dimension_names })
    }

    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_dims(&self) -> usize {
        self.forces.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `forces()[dim][node]`, balanced per dimension.
    pub fn forces(&self) -> &[Vec<f64>] {
        &self.forces
    }

    pub fn dimension_names(&self) -> &[String] {
        &self.dimension_names
    }

    /// Sum of |F| over every node and dimension; the scale that convergence
    /// tolerances are expressed against.
    pub fn total_abs_force(&self) -> f64 {
        self.forces.iter().flatten().map(|f| f.abs()).sum()
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n_nodes()];
        for e in &self.edges {
            deg[e.source as usize] += 1;
            deg[e.target as usize] += 1;
        }
        deg
    }

    /// Neighbor lists (node index -> sorted neighbor indices).
    pub fn neighbor_lists(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for e in &self.edges {
            adj[e.source as usize].push(e.target);
            adj[e.target as usize].push(e.source);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Connected-component label per node, labels numbered from zero in
    /// order of first appearance.
    pub fn component_labels(&self) -> Vec<u32> {
        let adj = self.neighbor_lists();
        let n = self.n_nodes();
        let mut label = vec![u32::MAX; n];
        let mut next = 0u32;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != u32::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if label[v as usize] == u32::MAX {
                        label[v as usize] = next;
                        stack.push(v as usize);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.component_labels().iter().all(|&l| l == 0)
    }

    /// Subtract the per-component mean from every force dimension, so a
    /// disconnected graph becomes solvable component by component.
    pub fn rebalance_per_component(&self) -> PreparedGraph {
        let labels = self.component_labels();
        let n_comp = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut forces = self.forces.clone();
        for values in &mut forces {
            let mut sum = vec![0.0; n_comp];
            let mut count = vec![0usize; n_comp];
            for (i, f) in values.iter().enumerate() {
                sum[labels[i] as usize] += f;
                count[labels[i] as usize] += 1;
            }
            for (i, f) in values.iter_mut().enumerate() {
                let c = labels[i] as usize;
                *f -= sum[c] / count[c] as f64;
            }
        }
        PreparedGraph { forces, ..self.clone() }
    }

    /// The shared rest distance, if every edge agrees.
    pub fn constant_distance(&self) -> Option<f64> {
        let d = self.edges.first()?.distance;
        self.edges.iter().all(|e| e.distance == d).then_some(d)
    }

    /// The shared stiffness, if every edge agrees.
    pub fn constant_stiffness(&self) -> Option<f64> {
        let k = self.edges.first()?.stiffness;
        self.edges.iter().all(|e| e.stiffness == k).then_some(k)
    }

    /// Same topology with different (already balanced) forces.
    pub fn with_forces(&self, forces: Vec<Vec<f64>>, names: Vec<String>) -> Result<PreparedGraph> {
        PreparedGraph::from_parts(self.ids.clone(), self.edges.clone(), forces, names)
    }
}
