//! CSV and JSON input/output.
//!
//! Edge lists are `from,to[,k][,d]` and node tables are `node,<attr>...`.
//! An attribute column whose observed cells all parse as finite numbers
//! loads as continuous; anything else is categorical. Written floats use
//! the shortest representation that parses back to the same value, so a
//! write/load cycle is lossless and byte-deterministic.

use std::io::Write as _;
use std::path::Path;

use crate::aggregate::node_tensions;
use crate::engine::Embeddings;
use crate::error::{Error, Result};
use crate::graph::{AttributeColumn, NodeAttributeTable, PreparedGraph, RawEdge};

/// Shortest round-trip decimal form of a float.
pub fn fmt_float(value: f64) -> String {
    value.to_string()
}

fn parse_err(path: &Path, line: u64, message: String) -> Error {
    Error::Parse { path: path.display().to_string(), line, message }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Read a `from,to[,k][,d]` edge list. Self-loops, repeated pairs, unknown
/// columns and unparseable numbers are reported with their line number.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Vec<RawEdge>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let mut from_col = None;
    let mut to_col = None;
    let mut k_col = None;
    let mut d_col = None;
    for (i, name) in headers.iter().enumerate() {
        match name {
            "from" => from_col = Some(i),
            "to" => to_col = Some(i),
            "k" => k_col = Some(i),
            "d" => d_col = Some(i),
            other => {
                return Err(parse_err(
                    path,
                    1,
                    format!("unknown edge column '{other}' (expected from, to, k, d)"),
                ))
            }
        }
    }
    let (from_col, to_col) = match (from_col, to_col) {
        (Some(f), Some(t)) => (f, t),
        _ => return Err(parse_err(path, 1, "edge list needs 'from' and 'to' columns".into())),
    };

    let mut edges: Vec<RawEdge> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let field = |i: usize| record.get(i).unwrap_or("");
        let from = field(from_col);
        let to = field(to_col);
        if from.is_empty() || to.is_empty() {
            return Err(parse_err(path, line, "empty node id".into()));
        }
        if from == to {
            return Err(parse_err(path, line, format!("self-loop on node '{from}'")));
        }
        let key = (from.min(to).to_string(), from.max(to).to_string());
        if !seen.insert(key) {
            return Err(parse_err(
                path,
                line,
                format!("duplicate edge between '{from}' and '{to}'"),
            ));
        }
        let number = |col: Option<usize>, what: &str| -> Result<Option<f64>> {
            let Some(i) = col else { return Ok(None) };
            let cell = field(i);
            if cell.is_empty() {
                return Ok(None);
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(parse_err(path, line, format!("bad {what} value '{cell}'"))),
            }
        };
        edges.push(RawEdge {
            from: from.to_string(),
            to: to.to_string(),
            stiffness: number(k_col, "k")?,
            distance: number(d_col, "d")?,
        });
    }
    Ok(edges)
}

/// Read a `node,<attr>...` table. Each attribute column is typed by its
/// observed cells: all finite numbers means continuous, anything else
/// categorical. Empty cells are missing values either way.
pub fn load_node_attributes(path: impl AsRef<Path>) -> Result<NodeAttributeTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("node") {
        return Err(parse_err(path, 1, "first column of a node table must be 'node'".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(parse_err(path, 1, "empty attribute column name".into()));
        }
        if names[..i].contains(name) {
            return Err(parse_err(path, 1, format!("duplicate attribute column '{name}'")));
        }
    }

    let mut table = NodeAttributeTable::new();
    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != names.len() + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", names.len() + 1, record.len()),
            ));
        }
        let id = record.get(0).unwrap_or("");
        if id.is_empty() {
            return Err(parse_err(path, line, "empty node id".into()));
        }
        if table.index_of(id).is_some() {
            return Err(parse_err(path, line, format!("duplicate node id '{id}'")));
        }
        table.add_node(id)?;
        for (col, cell) in cells.iter_mut().zip(record.iter().skip(1)) {
            col.push((!cell.is_empty()).then(|| cell.to_string()));
        }
    }

    for (name, raw) in names.iter().zip(cells) {
        let numeric: Option<Vec<Option<f64>>> = raw
            .iter()
            .map(|cell| match cell {
                None => Some(None),
                Some(s) => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(Some(v)),
                    _ => None,
                },
            })
            .collect();
        let column = match numeric {
            Some(values) if raw.iter().any(Option::is_some) => {
                AttributeColumn::Continuous(values)
            }
            _ => AttributeColumn::Categorical(raw),
        };
        table.add_column(name, column)?;
    }
    Ok(table)
}

/// Write an edge list; the k / d columns appear only if some edge uses them.
pub fn write_edge_list(path: impl AsRef<Path>, edges: &[RawEdge]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let has_k = edges.iter().any(|e| e.stiffness.is_some());
    let has_d = edges.iter().any(|e| e.distance.is_some());
    let mut header = vec!["from", "to"];
    if has_k {
        header.push("k");
    }
    if has_d {
        header.push("d");
    }
    writer.write_record(&header)?;
    for e in edges {
        let mut row = vec![e.from.clone(), e.to.clone()];
        if has_k {
            row.push(e.stiffness.map(fmt_float).unwrap_or_default());
        }
        if has_d {
            row.push(e.distance.map(fmt_float).unwrap_or_default());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_node_attributes(
    path: impl AsRef<Path>,
    table: &NodeAttributeTable,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["node".to_string()];
    header.extend(table.columns().map(|(name, _)| name.to_string()));
    writer.write_record(&header)?;
    for (i, id) in table.ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        for (_, column) in table.columns() {
            row.push(match column {
                AttributeColumn::Continuous(v) => v[i].map(fmt_float).unwrap_or_default(),
                AttributeColumn::Categorical(v) => v[i].clone().unwrap_or_default(),
            });
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Everything about one solver run that goes into `run.json`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub nodes: usize,
    pub edges: usize,
    pub dimensions: Vec<String>,
    pub converged: bool,
    pub eta: f64,
    pub lambda: f64,
    pub iterations: u64,
    pub wall_seconds: f64,
    /// Mode-specific knobs (drag, time step, probe counts, ...).
    pub parameters: serde_json::Value,
}

/// Write `nodes.csv`, `edges.csv` and `run.json` into `dir`.
///
/// `nodes.csv` holds one elevation column per dimension plus the mean
/// incident tension and the residual static force per node; `edges.csv`
/// holds tension and strain per edge. Output bytes depend only on the
/// inputs, never on timing or thread interleaving.
pub fn write_embeddings(
    dir: impl AsRef<Path>,
    graph: &PreparedGraph,
    embeddings: &Embeddings,
    report: &RunReport,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let mut nodes = csv::Writer::from_path(dir.join("nodes.csv"))?;
    let mut header = vec!["node".to_string()];
    for name in &embeddings.dimension_names {
        header.push(format!("elevation_{name}"));
    }
    header.push("node_tension".into());
    header.push("static_force".into());
    nodes.write_record(&header)?;
    let tensions = node_tensions(graph, embeddings);
    for (i, id) in graph.ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        for dim in &embeddings.node_elevation {
            row.push(fmt_float(dim[i]));
        }
        row.push(fmt_float(tensions[i]));
        row.push(fmt_float(embeddings.node_static_force[i]));
        nodes.write_record(&row)?;
    }
    nodes.flush()?;
    drop(nodes);

    let mut edges = csv::Writer::from_path(dir.join("edges.csv"))?;
    edges.write_record(["from", "to", "tension", "strain"])?;
    for (e, (t, s)) in graph
        .edges()
        .iter()
        .zip(embeddings.edge_tension.iter().zip(&embeddings.edge_strain))
    {
        edges.write_record([
            graph.ids()[e.source as usize].as_str(),
            graph.ids()[e.target as usize].as_str(),
            &fmt_float(*t),
            &fmt_float(*s),
        ])?;
    }
    edges.flush()?;
    drop(edges);

    let mut file = std::fs::File::create(dir.join("run.json"))?;
    serde_json::to_writer_pretty(&mut file, report)?;
    file.write_all(b"\n")?;
    Ok(())
}
