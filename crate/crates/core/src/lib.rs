//! Node classification on noisy weighted graphs.
//!
//! Edge weights are folded into attention scores through per-node impact
//! factors, the score rows are sparsified with alpha-entmax so noisy edges
//! can be pruned outright, and training combines cross-entropy over the
//! labeled nodes with a contrastive loss weighted by the intra/inter-class
//! attention statistics of the denoised graph.
//!
//! The crate covers the full pipeline: weighted-graph handling and noise
//! injection, dataset builders (a MovieLens co-rating graph and a weighted
//! planted-partition surrogate), the entmax kernel with exact oracles, the
//! attention network and its hand-written backward pass, the Adam training
//! loop, evaluation metrics, ablation variants, and attention export.

// Index-based loops mirror the row/slot layout of the math; iterator
// rewrites obscure it.
#![allow(clippy::needless_range_loop)]

pub mod ablation;
pub mod backprop;
pub mod checkpoint;
pub mod config;
pub mod entmax;
pub mod error;
pub mod export;
pub mod graph;
pub mod io;
pub mod labels;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod movielens;
pub mod seeding;
pub mod synthetic;
pub mod train;

pub use ablation::{run_ablation, train_variant, AblationTable, AblationVariant};
pub use backprop::{backward_through_network, Gradients};
pub use checkpoint::{load_model, save_model};
pub use config::{DatasetSource, ExperimentConfig};
pub use entmax::{entmax, entmax_sorted_oracle, entmax_vjp, softmax, EntmaxResult};
pub use error::{Error, Result};
pub use export::{export_attention, AttentionExport};
pub use graph::{
    assign_self_loop_weights, build_impact_factors, inject_noise_edges, Edge, ImpactFactors,
    LoopedGraph, SelfLoopMode, WeightedGraph,
};
pub use labels::{split_labels, LabelSet};
pub use loss::{
    compute_lambda, cross_entropy_loss, info_nce_loss, sample_contrastive, total_loss,
    ContrastiveContext, ContrastiveSample, LossBreakdown,
};
pub use metrics::{evaluate, mean_std, EvalReport};
pub use model::{
    attention_scores, forward, infer_labels, layer_forward, sparsify_attention, AttentionState,
    AttentionTopology, ForwardTrace, Hyperparameters, LayerParams, Membership, ModelParams,
};
pub use movielens::{build_ml100k_graph, BuildReport};
pub use synthetic::{generate_synthetic_graph, SyntheticSpec, WeightLaw};
pub use train::{train, train_on_topology, EpochRecord, TrainResult};
