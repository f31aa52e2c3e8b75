//! Edge-list and label TSV formats.
//!
//! Edge-list TSV: one `src<TAB>dst<TAB>weight` line per undirected edge,
//! node ids as non-negative integers, weight as a decimal. Label TSV:
//! `node<TAB>label` lines. UTF-8, LF line endings. Writers emit canonical
//! order so a write is byte-reproducible; floats use the shortest
//! round-trip representation.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::labels::LabelSet;

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Read an edge-list TSV. The node count is inferred as `max id + 1`
/// unless `node_count` supplies it (needed when trailing nodes are
/// isolated).
pub fn read_graph(path: &Path, node_count: Option<usize>) -> Result<WeightedGraph> {
    let text = read_to_string(path)?;
    let mut raw: Vec<(usize, usize, f64)> = Vec::new();
    let mut max_id = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (u, v, w) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(u), Some(v), Some(w), None) => (u, v, w),
            _ => {
                return Err(parse_err(
                    path,
                    lineno,
                    "expected exactly 3 tab-separated fields: src, dst, weight",
                ))
            }
        };
        let u: usize = u
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node id '{u}'")))?;
        let v: usize = v
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node id '{v}'")))?;
        let w: f64 = w
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad weight '{w}'")))?;
        max_id = max_id.max(u).max(v);
        raw.push((u, v, w));
    }
    if raw.is_empty() {
        return Err(Error::InvalidGraph(format!(
            "edge file {} contains no edges",
            path.display()
        )));
    }
    let n = node_count.unwrap_or(max_id + 1);
    WeightedGraph::from_edges(n, raw)
}

/// Write an edge-list TSV in canonical `(u, v)` order.
pub fn write_graph(path: &Path, graph: &WeightedGraph) -> Result<()> {
    let mut out = String::new();
    for e in graph.edges() {
        out.push_str(&format!("{}\t{}\t{}\n", e.u, e.v, e.w));
    }
    write_string(path, &out)
}

/// Read raw `node<TAB>label` pairs (may cover a subset of nodes).
pub fn read_label_pairs(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = read_to_string(path)?;
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (node, label) = match (fields.next(), fields.next(), fields.next()) {
            (Some(n), Some(l), None) => (n, l),
            _ => {
                return Err(parse_err(
                    path,
                    lineno,
                    "expected exactly 2 tab-separated fields: node, label",
                ))
            }
        };
        let node: usize = node
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node id '{node}'")))?;
        let label: usize = label
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad label '{label}'")))?;
        pairs.push((node, label));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidLabels(format!(
            "label file {} is empty",
            path.display()
        )));
    }
    Ok(pairs)
}

/// Read a full ground-truth label file covering every node `0..n` exactly
/// once. The class count is `max label + 1`.
pub fn read_labels(path: &Path) -> Result<LabelSet> {
    let pairs = read_label_pairs(path)?;
    let n = pairs.iter().map(|&(i, _)| i).max().unwrap() + 1;
    let mut labels = vec![usize::MAX; n];
    for &(node, label) in &pairs {
        if labels[node] != usize::MAX {
            return Err(Error::InvalidLabels(format!(
                "node {node} labeled twice in {}",
                path.display()
            )));
        }
        labels[node] = label;
    }
    if let Some(missing) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(Error::InvalidLabels(format!(
            "node {missing} missing from {}",
            path.display()
        )));
    }
    let c = labels.iter().max().unwrap() + 1;
    LabelSet::new(labels, c)
}

/// Write all ground-truth labels, one line per node.
pub fn write_labels(path: &Path, labels: &LabelSet) -> Result<()> {
    let mut out = String::new();
    for i in 0..labels.n() {
        out.push_str(&format!("{}\t{}\n", i, labels.label(i)));
    }
    write_string(path, &out)
}

/// Write only the labeled subset (the training split) as a label TSV.
pub fn write_train_labels(path: &Path, labels: &LabelSet) -> Result<()> {
    let mut out = String::new();
    for i in labels.labeled_nodes() {
        out.push_str(&format!("{}\t{}\n", i, labels.label(i)));
    }
    write_string(path, &out)
}

/// Apply a training-subset label file as the labeled mask of `full`,
/// verifying that subset labels agree with the ground truth.
pub fn apply_train_labels(path: &Path, full: &LabelSet) -> Result<LabelSet> {
    let pairs = read_label_pairs(path)?;
    let mut nodes = Vec::with_capacity(pairs.len());
    for (node, label) in pairs {
        if node >= full.n() {
            return Err(Error::InvalidLabels(format!(
                "training node {node} outside graph of {} nodes",
                full.n()
            )));
        }
        if full.label(node) != label {
            return Err(Error::InvalidLabels(format!(
                "training label {label} for node {node} disagrees with ground truth {}",
                full.label(node)
            )));
        }
        nodes.push(node);
    }
    full.with_labeled_nodes(&nodes)
}
