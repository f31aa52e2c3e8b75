//! Ablation variants: toggling the edge-aware impact factors and the
//! sparse normalizer independently, trained on identical data and splits.

use crate::error::Result;
use crate::graph::WeightedGraph;
use crate::labels::LabelSet;
use crate::metrics::{evaluate, mean_std, EvalReport};
use crate::model::{AttentionTopology, Hyperparameters};
use crate::train::{train_on_topology, TrainResult};

/// The four ablation configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationVariant {
    /// Edge-aware impact factors + entmax rows.
    Full,
    /// Edge-aware impact factors + softmax rows.
    WeightsOnly,
    /// Uniform impact factors + entmax rows.
    SparsityOnly,
    /// Uniform impact factors + softmax rows (plain attention baseline).
    Vanilla,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 4] = [
        AblationVariant::Full,
        AblationVariant::WeightsOnly,
        AblationVariant::SparsityOnly,
        AblationVariant::Vanilla,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::WeightsOnly => "weights-only",
            AblationVariant::SparsityOnly => "sparsity-only",
            AblationVariant::Vanilla => "vanilla",
        }
    }

    /// Replace the edge weights by 1 when the variant drops weight
    /// awareness.
    pub fn uniform_impact(self) -> bool {
        matches!(
            self,
            AblationVariant::SparsityOnly | AblationVariant::Vanilla
        )
    }

    /// Softmax variants pin alpha to 1.
    pub fn effective_alpha(self, alpha: f64) -> f64 {
        match self {
            AblationVariant::Full | AblationVariant::SparsityOnly => alpha,
            AblationVariant::WeightsOnly | AblationVariant::Vanilla => 1.0,
        }
    }
}

/// Train one variant on a fixed graph and split.
pub fn train_variant(
    graph: &WeightedGraph,
    labels: &LabelSet,
    hyper: &Hyperparameters,
    variant: AblationVariant,
) -> Result<TrainResult> {
    let topo = AttentionTopology::build(graph, hyper.self_loop_mode, variant.uniform_impact());
    train_on_topology(&topo, variant.effective_alpha(hyper.alpha), labels, hyper)
}

/// One (variant, seed) evaluation.
#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: AblationVariant,
    pub seed: u64,
    pub report: EvalReport,
}

/// Results of a full ablation sweep.
#[derive(Debug, Clone, Default)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

/// Per-variant aggregate of a metric.
#[derive(Debug, Clone, Copy)]
pub struct VariantSummary {
    pub variant: AblationVariant,
    pub mean_acc: f64,
    pub std_acc: f64,
    pub mean_micro_f1: f64,
    pub std_micro_f1: f64,
    pub runs: usize,
}

impl AblationTable {
    pub fn push(&mut self, variant: AblationVariant, seed: u64, report: EvalReport) {
        self.rows.push(AblationRow {
            variant,
            seed,
            report,
        });
    }

    pub fn summary(&self) -> Vec<VariantSummary> {
        AblationVariant::ALL
            .iter()
            .filter_map(|&variant| {
                let accs: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.variant == variant)
                    .map(|r| r.report.acc)
                    .collect();
                if accs.is_empty() {
                    return None;
                }
                let f1s: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.variant == variant)
                    .map(|r| r.report.micro_f1)
                    .collect();
                let (mean_acc, std_acc) = mean_std(&accs);
                let (mean_micro_f1, std_micro_f1) = mean_std(&f1s);
                Some(VariantSummary {
                    variant,
                    mean_acc,
                    std_acc,
                    mean_micro_f1,
                    std_micro_f1,
                    runs: accs.len(),
                })
            })
            .collect()
    }

    /// Fixed-width comparison table for terminal output.
    pub fn render(&self) -> String {
        let mut out =
            String::from("variant        runs  mean_acc  std_acc  mean_micro_f1  std_micro_f1\n");
        for s in self.summary() {
            out.push_str(&format!(
                "{:<14} {:>4}  {:>8.4}  {:>7.4}  {:>13.4}  {:>12.4}\n",
                s.variant.name(),
                s.runs,
                s.mean_acc,
                s.std_acc,
                s.mean_micro_f1,
                s.std_micro_f1
            ));
        }
        out
    }

    /// Long-format CSV: one row per (variant, seed).
    pub fn render_csv(&self) -> String {
        let mut out = String::from("variant,seed,acc,micro_f1,macro_f1,weighted_f1\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.variant.name(),
                r.seed,
                r.report.acc,
                r.report.micro_f1,
                r.report.macro_f1,
                r.report.weighted_f1
            ));
        }
        out
    }
}

/// Run all four variants over the given seeds on one prepared dataset per
/// seed. `prepare` maps a seed to the (graph, split labels) pair so every
/// variant sees identical data.
pub fn run_ablation<F>(
    seeds: &[u64],
    hyper: &Hyperparameters,
    mut prepare: F,
) -> Result<AblationTable>
where
    F: FnMut(u64) -> Result<(WeightedGraph, LabelSet)>,
{
    let mut table = AblationTable::default();
    for &seed in seeds {
        let (graph, labels) = prepare(seed)?;
        for variant in AblationVariant::ALL {
            let hyper_seeded = Hyperparameters {
                seed,
                ..hyper.clone()
            };
            let result = train_variant(&graph, &labels, &hyper_seeded, variant)?;
            let report = evaluate(&result.membership.y_hat, &labels)?;
            table.push(variant, seed, report);
        }
    }
    Ok(table)
}
