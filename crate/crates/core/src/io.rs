//! File formats: edge lists, label files, matrix and statistics CSV, JSON
//! records and run metadata.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::barycenter::BootstrapRecord;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::gw::{RepresentationKind, SolveResult};
use crate::landscape::LossStats;
use crate::matching::MatchRecord;
use crate::measures::Coupling;
use crate::partition::GridPoint;

/// One edge per line as two whitespace-separated node ids. Lines starting
/// with `#` and blank lines are skipped; a first content line `directed`
/// marks the graph directed.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut directed = false;
    let mut seen_content = false;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_content && line.eq_ignore_ascii_case("directed") {
            directed = true;
            seen_content = true;
            continue;
        }
        seen_content = true;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => edges.push((a.to_string(), b.to_string())),
            _ => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected two node ids, got {line:?}"),
                })
            }
        }
    }
    Graph::from_edges(&edges, directed)
}

pub fn read_edge_list(path: &Path) -> Result<Graph> {
    parse_edge_list(&fs::read_to_string(path)?)
}

pub fn format_edge_list(g: &Graph) -> String {
    let ids = g.node_ids();
    let mut s = String::new();
    if g.is_directed() {
        s.push_str("directed\n");
    }
    for (i, j) in g.edges() {
        let _ = writeln!(s, "{} {}", ids[i], ids[j]);
    }
    s
}

/// `node_id label` lines. Label names are numbered by first appearance;
/// every node of `g` needs a label.
pub fn parse_labels(text: &str, g: &Graph) -> Result<Vec<usize>> {
    let index: HashMap<&str, usize> = g.node_ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut labels = vec![None; g.n()];
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: idx + 1, msg };
        let mut parts = line.split_whitespace();
        let (Some(node), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(format!("expected node id and label, got {line:?}")));
        };
        let &i = index.get(node).ok_or_else(|| parse_err(format!("unknown node {node}")))?;
        let next = names.len();
        labels[i] = Some(*names.entry(label.to_string()).or_insert(next));
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("node {} has no label", g.node_ids()[i]),
            })
        })
        .collect()
}

pub fn read_labels(path: &Path, g: &Graph) -> Result<Vec<usize>> {
    parse_labels(&fs::read_to_string(path)?, g)
}

pub fn format_labels(g: &Graph, labels: &[usize]) -> String {
    let mut s = String::new();
    for (id, l) in g.node_ids().iter().zip(labels) {
        let _ = writeln!(s, "{id} {l}");
    }
    s
}

/// Dense matrix CSV; the header names the columns.
pub fn matrix_csv(m: &DMatrix<f64>, col_names: &[String]) -> String {
    let mut s = col_names.join(",");
    s.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| num(m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Shortest round-trip form; tiny and huge values use exponent notation.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn index_names(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Reads a dense matrix CSV, skipping the header line.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {} columns, got {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub rows: usize,
    pub cols: usize,
    /// Nonzero entries as `(i, j, value)`.
    pub entries: Vec<(usize, usize, f64)>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl From<&Coupling> for CouplingRecord {
    fn from(c: &Coupling) -> Self {
        let m = c.matrix();
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
            p: c.p().as_slice().to_vec(),
            q: c.q().as_slice().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub loss: f64,
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub coupling_csv_path: String,
}

impl SolveRecord {
    pub fn new(res: &SolveResult, coupling_csv_path: &str) -> Self {
        Self {
            loss: res.loss,
            distance: res.distance,
            iterations: res.iterations,
            converged: res.converged,
            wall_time_s: res.wall_time,
            coupling_csv_path: coupling_csv_path.to_string(),
        }
    }
}

fn kind_name_and_t(kind: RepresentationKind) -> (&'static str, String) {
    match kind {
        RepresentationKind::Adjacency => ("adjacency", String::new()),
        RepresentationKind::Spectral { t } => ("spectral", num(t)),
        RepresentationKind::Generic => ("generic", String::new()),
    }
}

/// One row per (loss kind, trial).
pub fn landscape_csv(stats: &[LossStats]) -> String {
    let mut s = String::from("loss_kind,t,trial,final_loss,min_loss,max_loss,worst_error,product_error,mean_wall_time_s\n");
    for st in stats {
        let (kind, t) = kind_name_and_t(st.loss_kind);
        for (trial, loss) in st.final_losses.iter().enumerate() {
            let _ = writeln!(
                s,
                "{kind},{t},{trial},{},{},{},{},{},{}",
                num(*loss),
                num(st.min_loss),
                num(st.max_loss),
                num(st.worst_error),
                num(st.product_error),
                num(st.mean_wall_time)
            );
        }
    }
    s
}

pub fn benchmark_csv(records: &[MatchRecord]) -> String {
    let mut s = String::from("graph_index,n,m_edges,loss_kind,t,score,wall_time_s\n");
    for r in records {
        let (kind, t) = kind_name_and_t(r.loss_kind);
        let _ = writeln!(
            s,
            "{},{},{},{kind},{t},{},{}",
            r.graph_index,
            r.n,
            r.m_edges,
            num(r.score),
            num(r.wall_time)
        );
    }
    s
}

/// `(k, t, modularity)` rows; `t` is empty for the adjacency representation.
pub fn tune_grid_csv(grid: &[GridPoint]) -> String {
    let mut s = String::from("k,t,modularity\n");
    for g in grid {
        let t = g.t.map(num).unwrap_or_default();
        let _ = writeln!(s, "{},{t},{}", g.k, num(g.modularity));
    }
    s
}

pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("iteration,loss\n");
    for (i, l) in trace.iter().enumerate() {
        let _ = writeln!(s, "{i},{}", num(*l));
    }
    s
}

pub fn bootstrap_csv(records: &[BootstrapRecord]) -> String {
    let mut s = String::from("representation,init_seed,final_loss,iterations,wall_time_s\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.representation,
            r.init_seed,
            num(r.final_loss),
            r.iterations,
            num(r.wall_time)
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    /// The resolved configuration; accepted back through `--config`.
    pub config: serde_json::Value,
    pub seed: u64,
    pub versions: HashMap<String, String>,
    pub wall_time_s: f64,
}

impl Metadata {
    pub fn new(command: &str, config: serde_json::Value, seed: u64, wall_time_s: f64) -> Self {
        let versions = HashMap::from([("specgw".to_string(), env!("CARGO_PKG_VERSION").to_string())]);
        Self {
            command: command.to_string(),
            config,
            seed,
            versions,
            wall_time_s,
        }
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
