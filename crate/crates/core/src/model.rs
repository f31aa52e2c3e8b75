//! The attention network: edge-aware scoring, per-row entmax
//! sparsification, neighborhood aggregation, learnable multi-head
//! combination, layer stacking, and membership inference.
//!
//! Node features are one-hot identity vectors, so the stack runs
//! n -> hidden ... -> c and the first projection is just a transposed
//! weight matrix. Raw scores scale the usual additive-attention logit by
//! the impact factor of the edge, and every score row (neighbors plus
//! self) is normalized independently; entries the normalizer zeroes out
//! prune the edge for that layer and head.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::entmax::{self, EntmaxResult};
use crate::error::{Error, Result};
use crate::graph::{
    assign_self_loop_weights, build_impact_factors, ImpactFactors, LoopedGraph, SelfLoopMode,
    WeightedGraph,
};
use crate::seeding;

const LEAKY_SLOPE: f64 = 0.2;

/// Training and model-shape knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Entmax alpha in [1, 2]; 1 is softmax, 2 is sparsemax.
    pub alpha: f64,
    /// Attention heads per layer.
    pub heads: usize,
    /// Contrastive balance weight.
    pub eta: f64,
    /// Contrastive temperature.
    pub temperature: f64,
    pub lr: f64,
    pub epochs: usize,
    pub hidden_dims: Vec<usize>,
    pub self_loop_mode: SelfLoopMode,
    pub negatives_per_node: usize,
    /// Include the positive pair in the contrastive denominator (the
    /// textbook form); off by default.
    pub include_positive_in_denominator: bool,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            heads: 6,
            eta: 0.1,
            temperature: 0.5,
            lr: 0.005,
            epochs: 100,
            hidden_dims: vec![256, 128],
            self_loop_mode: SelfLoopMode::Max,
            negatives_per_node: 5,
            include_positive_in_denominator: false,
            seed: 0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidHyperparameters(msg));
        if !(1.0..=2.0).contains(&self.alpha) {
            return fail(format!("alpha {} outside [1, 2]", self.alpha));
        }
        if self.heads == 0 {
            return fail("heads must be at least 1".into());
        }
        if self.eta < 0.0 || !self.eta.is_finite() {
            return fail(format!("eta {} must be non-negative", self.eta));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return fail(format!("temperature {} must be positive", self.temperature));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return fail(format!("learning rate {} must be positive", self.lr));
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return fail("hidden_dims must be non-empty positive sizes".into());
        }
        if self.negatives_per_node == 0 {
            return fail("negatives_per_node must be at least 1".into());
        }
        Ok(())
    }

    /// Layer dimensions for a graph of `n` nodes and `c` classes.
    pub fn dims(&self, n: usize, c: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(n);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(c);
        dims
    }
}

/// Attention row layout per node: the sorted neighbors followed by the
/// node itself, with the matching impact factors.
#[derive(Debug, Clone)]
pub struct AttentionTopology {
    targets: Vec<Vec<usize>>,
    rho: Vec<Vec<f64>>,
}

impl AttentionTopology {
    pub fn new(looped: &LoopedGraph, impact: &ImpactFactors) -> Self {
        let g = looped.graph();
        let mut targets = Vec::with_capacity(g.n());
        let mut rho = Vec::with_capacity(g.n());
        for i in 0..g.n() {
            let mut t: Vec<usize> = g.neighbors(i).iter().map(|&(j, _)| j).collect();
            let mut r: Vec<f64> = impact.neighbor_row(i).to_vec();
            t.push(i);
            r.push(impact.self_loop(i));
            targets.push(t);
            rho.push(r);
        }
        Self { targets, rho }
    }

    /// Build straight from a graph: self-loop weighting, impact factors,
    /// row layout. With `uniform_impact` the weights are ignored (every
    /// weight treated as 1), which is the ablation baseline.
    pub fn build(graph: &WeightedGraph, mode: SelfLoopMode, uniform_impact: bool) -> Self {
        let effective = if uniform_impact {
            graph.unit_weights()
        } else {
            graph.clone()
        };
        let looped = assign_self_loop_weights(effective, mode);
        let impact = build_impact_factors(&looped);
        Self::new(&looped, &impact)
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }

    /// Targets of row `i`: neighbors in id order, then `i` itself.
    pub fn row_targets(&self, i: usize) -> &[usize] {
        &self.targets[i]
    }

    pub fn row_rho(&self, i: usize) -> &[f64] {
        &self.rho[i]
    }

    /// Slot index of the self-loop in row `i`.
    pub fn self_slot(&self, i: usize) -> usize {
        self.targets[i].len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Elu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp() - 1.0
                }
            }
            Activation::Identity => x,
        }
    }

    pub(crate) fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One attention head: projection matrix (`d_out x d_in`) and the additive
/// attention vector (`2 * d_out`, source half then target half).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub weight: Array2<f64>,
    pub attn: Array1<f64>,
}

/// One layer: its heads, the learnable head weights, and the activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub heads: Vec<HeadParams>,
    pub beta: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dims: Vec<usize>,
    pub layers: Vec<LayerParams>,
}

impl ModelParams {
    /// Seeded uniform Glorot-style init; head weights start at one.
    pub fn init(n: usize, c: usize, hyper: &Hyperparameters) -> Self {
        let dims = hyper.dims(n, c);
        let mut rng = seeding::stream_rng(hyper.seed, seeding::streams::PARAM_INIT);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (d_in, d_out) = (dims[l], dims[l + 1]);
            let w_bound = (6.0 / (d_in + d_out) as f64).sqrt();
            let a_bound = (6.0 / (2 * d_out + 1) as f64).sqrt();
            let heads = (0..hyper.heads)
                .map(|_| HeadParams {
                    weight: Array2::from_shape_fn((d_out, d_in), |_| {
                        rng.random_range(-w_bound..w_bound)
                    }),
                    attn: Array1::from_shape_fn(2 * d_out, |_| rng.random_range(-a_bound..a_bound)),
                })
                .collect();
            let activation = if l + 1 == dims.len() - 1 {
                Activation::Identity
            } else {
                Activation::Elu
            };
            layers.push(LayerParams {
                heads,
                beta: Array1::ones(hyper.heads),
                activation,
            });
        }
        Self { dims, layers }
    }

    pub fn head_count(&self) -> usize {
        self.layers[0].heads.len()
    }

    pub fn class_count(&self) -> usize {
        *self.dims.last().expect("dims non-empty")
    }

    pub fn node_count(&self) -> usize {
        self.dims[0]
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                l.beta.len()
                    + l.heads
                        .iter()
                        .map(|h| h.weight.len() + h.attn.len())
                        .sum::<usize>()
            })
            .sum()
    }

    /// All parameters as one flat vector (layer, then heads' weights and
    /// attention vectors, then beta). The layout is the contract shared
    /// with [`ModelParams::assign_from_flat`] and gradient flattening.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for head in &layer.heads {
                out.extend(head.weight.iter());
                out.extend(head.attn.iter());
            }
            out.extend(layer.beta.iter());
        }
        out
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter size");
        let mut k = 0;
        for layer in &mut self.layers {
            for head in &mut layer.heads {
                for w in head.weight.iter_mut() {
                    *w = flat[k];
                    k += 1;
                }
                for a in head.attn.iter_mut() {
                    *a = flat[k];
                    k += 1;
                }
            }
            for b in layer.beta.iter_mut() {
                *b = flat[k];
                k += 1;
            }
        }
    }
}

/// Raw and sparsified attention for one layer, per head, in row layout.
#[derive(Debug, Clone)]
pub struct AttentionState {
    /// Raw scores, `[head][node][slot]`.
    pub raw: Vec<Vec<Vec<f64>>>,
    /// Sparsified scores; zero means the edge is pruned here.
    pub sparse: Vec<Vec<Vec<f64>>>,
    /// Per-head, per-node normalizer thresholds.
    pub tau: Vec<Vec<f64>>,
}

impl AttentionState {
    /// Plain average of the sparse rows over heads.
    pub fn head_average(&self) -> Vec<Vec<f64>> {
        let heads = self.sparse.len() as f64;
        let n = self.sparse[0].len();
        (0..n)
            .map(|i| {
                let slots = self.sparse[0][i].len();
                (0..slots)
                    .map(|s| self.sparse.iter().map(|h| h[i][s]).sum::<f64>() / heads)
                    .collect()
            })
            .collect()
    }
}

/// Class probabilities per node plus the argmax labels.
#[derive(Debug, Clone)]
pub struct Membership {
    /// Row-stochastic `n x c` matrix.
    pub m: Array2<f64>,
    pub y_hat: Vec<usize>,
}

/// First-layer inputs are the identity; deeper layers carry features.
#[derive(Clone, Copy)]
pub enum LayerInput<'a> {
    Identity,
    Features(&'a Array2<f64>),
}

/// Everything the forward pass computed for one layer, kept for reuse by
/// the backward pass.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    /// Projected features per head, `n x d_out`.
    pub z: Vec<Array2<f64>>,
    /// Additive attention logits before the leaky rectifier,
    /// `[head][node][slot]`.
    pub score_pre: Vec<Vec<Vec<f64>>>,
    pub attention: AttentionState,
    /// Aggregated output per head, `n x d_out`.
    pub head_out: Vec<Array2<f64>>,
    /// Beta-weighted head average before the activation.
    pub combined: Array2<f64>,
    pub output: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub layers: Vec<LayerTrace>,
    pub membership: Membership,
}

impl ForwardTrace {
    /// Final node representations (the matrix the membership rows are the
    /// softmax of).
    pub fn embeddings(&self) -> &Array2<f64> {
        &self.layers.last().expect("at least one layer").output
    }

    pub fn attention_states(&self) -> Vec<&AttentionState> {
        self.layers.iter().map(|l| &l.attention).collect()
    }

    /// Head-averaged sparse attention of the final layer, the rows the
    /// contrastive weights are computed from.
    pub fn final_attention_average(&self) -> Vec<Vec<f64>> {
        self.layers
            .last()
            .expect("at least one layer")
            .attention
            .head_average()
    }
}

fn project(head: &HeadParams, input: LayerInput<'_>, n: usize) -> Result<Array2<f64>> {
    match input {
        // Identity features: row i of Z is column i of W.
        LayerInput::Identity => {
            if head.weight.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "projection expects {} input columns, graph has {} nodes",
                    head.weight.ncols(),
                    n
                )));
            }
            Ok(head.weight.t().to_owned())
        }
        LayerInput::Features(h) => {
            if head.weight.ncols() != h.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "projection expects {} input columns, features have {}",
                    head.weight.ncols(),
                    h.ncols()
                )));
            }
            Ok(h.dot(&head.weight.t()))
        }
    }
}

fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

pub(crate) fn leaky_relu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Per-node score rows in the topology's slot layout.
pub type ScoreRows = Vec<Vec<f64>>;

/// Raw edge-aware scores for one head: the impact factor times the leaky
/// rectified additive logit. Returns `(raw rows, pre-rectifier rows)` in
/// the topology's slot layout; non-edges are never materialized.
pub fn attention_scores(
    head: &HeadParams,
    z: &Array2<f64>,
    topo: &AttentionTopology,
) -> Result<(ScoreRows, ScoreRows)> {
    let d_out = z.ncols();
    if head.attn.len() != 2 * d_out {
        return Err(Error::DimensionMismatch(format!(
            "attention vector has {} entries, expected {}",
            head.attn.len(),
            2 * d_out
        )));
    }
    let n = topo.n();
    if z.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "projected features have {} rows, topology has {n} nodes",
            z.nrows()
        )));
    }
    let a_src = head.attn.slice(ndarray::s![..d_out]);
    let a_dst = head.attn.slice(ndarray::s![d_out..]);
    let src_score: Vec<f64> = (0..n).map(|i| z.row(i).dot(&a_src)).collect();
    let dst_score: Vec<f64> = (0..n).map(|j| z.row(j).dot(&a_dst)).collect();

    let mut raw = Vec::with_capacity(n);
    let mut pre = Vec::with_capacity(n);
    for i in 0..n {
        let rho = topo.row_rho(i);
        let row_pre: Vec<f64> = topo
            .row_targets(i)
            .iter()
            .map(|&j| src_score[i] + dst_score[j])
            .collect();
        let row_raw: Vec<f64> = row_pre
            .iter()
            .zip(rho)
            .map(|(&u, &r)| r * leaky_relu(u))
            .collect();
        pre.push(row_pre);
        raw.push(row_raw);
    }
    Ok((raw, pre))
}

/// Normalize every score row independently; alpha = 1 is the softmax
/// (dense) baseline, larger alpha produces exact zeros. Returns the
/// sparse rows and the per-row thresholds.
pub fn sparsify_attention(raw: &[Vec<f64>], alpha: f64) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut sparse = Vec::with_capacity(raw.len());
    let mut taus = Vec::with_capacity(raw.len());
    for row in raw {
        let EntmaxResult { p, tau, .. } = entmax::entmax(row, alpha, entmax::DEFAULT_TOL)?;
        sparse.push(p);
        taus.push(tau);
    }
    Ok((sparse, taus))
}

/// One layer: per-head scoring, sparsification, neighborhood aggregation,
/// then the beta-weighted head average and the activation.
pub fn layer_forward(
    layer: &LayerParams,
    input: LayerInput<'_>,
    topo: &AttentionTopology,
    alpha: f64,
) -> Result<LayerTrace> {
    let n = topo.n();
    let head_count = layer.heads.len();
    if layer.beta.len() != head_count {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries for {} heads",
            layer.beta.len(),
            head_count
        )));
    }
    let mut z_all = Vec::with_capacity(head_count);
    let mut pre_all = Vec::with_capacity(head_count);
    let mut raw_all = Vec::with_capacity(head_count);
    let mut sparse_all = Vec::with_capacity(head_count);
    let mut tau_all = Vec::with_capacity(head_count);
    let mut head_out = Vec::with_capacity(head_count);

    for head in &layer.heads {
        let z = project(head, input, n)?;
        let (raw, pre) = attention_scores(head, &z, topo)?;
        let (sparse, taus) = sparsify_attention(&raw, alpha)?;

        let d_out = z.ncols();
        let mut agg = Array2::<f64>::zeros((n, d_out));
        for i in 0..n {
            let mut acc = agg.row_mut(i);
            for (slot, &j) in topo.row_targets(i).iter().enumerate() {
                let w = sparse[i][slot];
                if w != 0.0 {
                    acc.scaled_add(w, &z.row(j));
                }
            }
        }

        z_all.push(z);
        pre_all.push(pre);
        raw_all.push(raw);
        sparse_all.push(sparse);
        tau_all.push(taus);
        head_out.push(agg);
    }

    let d_out = head_out[0].ncols();
    let mut combined = Array2::<f64>::zeros((n, d_out));
    for (k, agg) in head_out.iter().enumerate() {
        combined.scaled_add(layer.beta[k] / head_count as f64, agg);
    }
    let output = combined.mapv(|x| layer.activation.apply(x));

    Ok(LayerTrace {
        z: z_all,
        score_pre: pre_all,
        attention: AttentionState {
            raw: raw_all,
            sparse: sparse_all,
            tau: tau_all,
        },
        head_out,
        combined,
        output,
    })
}

/// Membership from final representations: row-wise softmax plus argmax
/// labels (ties to the lowest class).
pub fn membership_from(output: &Array2<f64>) -> Result<Membership> {
    let n = output.nrows();
    let c = output.ncols();
    let mut m = Array2::<f64>::zeros((n, c));
    for i in 0..n {
        let row: Vec<f64> = output.row(i).to_vec();
        let soft = entmax::softmax(&row)?;
        for (j, &p) in soft.p.iter().enumerate() {
            m[[i, j]] = p;
        }
    }
    let y_hat = infer_labels(&m);
    Ok(Membership { m, y_hat })
}

/// Argmax per row with ties broken toward the lowest class index.
pub fn infer_labels(m: &Array2<f64>) -> Vec<usize> {
    (0..m.nrows())
        .map(|i| {
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (j, &v) in m.row(i).iter().enumerate() {
                if v > best_val {
                    best_val = v;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Full forward pass from identity features through every layer to the
/// membership matrix.
pub fn forward(params: &ModelParams, topo: &AttentionTopology, alpha: f64) -> Result<ForwardTrace> {
    if params.node_count() != topo.n() {
        return Err(Error::DimensionMismatch(format!(
            "model built for {} nodes, topology has {}",
            params.node_count(),
            topo.n()
        )));
    }
    let mut layers: Vec<LayerTrace> = Vec::with_capacity(params.layers.len());
    for (l, layer) in params.layers.iter().enumerate() {
        let input = if l == 0 {
            LayerInput::Identity
        } else {
            LayerInput::Features(&layers[l - 1].output)
        };
        let trace = layer_forward(layer, input, topo, alpha)?;
        layers.push(trace);
    }
    let membership = membership_from(&layers.last().expect("layers").output)?;
    Ok(ForwardTrace { layers, membership })
}
