//! Attention export for external heatmap rendering.
//!
//! For each requested node the final-layer head-averaged sparse weights to
//! its strongest neighbors are written as CSV, with the softmax-baseline
//! weights of the same trained parameters side by side. Rows are padded
//! with explicit zeros when a node has fewer neighbors than requested.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::model::{forward, AttentionTopology, Hyperparameters, ModelParams};

/// One exported neighbor slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportEntry {
    pub node: usize,
    pub rank: usize,
    /// Neighbor id, or `None` for a padding slot.
    pub neighbor: Option<usize>,
    pub entmax_weight: f64,
    pub softmax_weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct AttentionExport {
    pub entries: Vec<ExportEntry>,
    pub k_neighbors: usize,
}

impl AttentionExport {
    /// CSV with header `node,rank,neighbor,entmax_weight,softmax_weight`;
    /// padding slots leave the neighbor field empty.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("node,rank,neighbor,entmax_weight,softmax_weight\n");
        for e in &self.entries {
            let neighbor = e.neighbor.map(|j| j.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.node, e.rank, neighbor, e.entmax_weight, e.softmax_weight
            ));
        }
        out
    }

    /// Retained (non-padding) weights of one node's row.
    pub fn row_weights(&self, node: usize) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.node == node && e.neighbor.is_some())
            .map(|e| e.entmax_weight)
            .collect()
    }
}

/// Export final-layer attention for the requested nodes, `k_neighbors`
/// slots each, strongest entmax weight first (ties toward the lower
/// neighbor id).
pub fn export_attention(
    params: &ModelParams,
    graph: &WeightedGraph,
    hyper: &Hyperparameters,
    node_ids: &[usize],
    k_neighbors: usize,
) -> Result<AttentionExport> {
    for &i in node_ids {
        if i >= graph.n() {
            return Err(Error::UnknownExportNode(i));
        }
    }
    let topo = AttentionTopology::build(graph, hyper.self_loop_mode, false);
    let sparse_rows = forward(params, &topo, hyper.alpha)?.final_attention_average();
    let softmax_rows = forward(params, &topo, 1.0)?.final_attention_average();

    let mut export = AttentionExport {
        entries: Vec::with_capacity(node_ids.len() * k_neighbors),
        k_neighbors,
    };
    for &node in node_ids {
        let self_slot = topo.self_slot(node);
        let mut slots: Vec<(usize, usize)> = (0..topo.row_targets(node).len())
            .filter(|&s| s != self_slot)
            .map(|s| (s, topo.row_targets(node)[s]))
            .collect();
        slots.sort_by(|&(sa, ja), &(sb, jb)| {
            sparse_rows[node][sb]
                .partial_cmp(&sparse_rows[node][sa])
                .unwrap()
                .then(ja.cmp(&jb))
        });
        for rank in 0..k_neighbors {
            let entry = match slots.get(rank) {
                Some(&(slot, j)) => ExportEntry {
                    node,
                    rank,
                    neighbor: Some(j),
                    entmax_weight: sparse_rows[node][slot],
                    softmax_weight: softmax_rows[node][slot],
                },
                None => ExportEntry {
                    node,
                    rank,
                    neighbor: None,
                    entmax_weight: 0.0,
                    softmax_weight: 0.0,
                },
            };
            export.entries.push(entry);
        }
    }
    Ok(export)
}
