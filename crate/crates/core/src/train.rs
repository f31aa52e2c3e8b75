//! The training loop: per-epoch forward, label/statistics refresh,
//! combined objective, backpropagation, and Adam updates.

use std::path::Path;

use ndarray::Array2;

use crate::backprop::{backward_through_network, Gradients};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::labels::LabelSet;
use crate::loss::{
    compute_lambda, cross_entropy_embedding_grad, cross_entropy_loss, info_nce_embedding_grad,
    info_nce_loss, sample_contrastive, total_loss, ContrastiveContext, LossBreakdown,
};
use crate::model::{
    forward, AttentionTopology, ForwardTrace, Hyperparameters, Membership, ModelParams,
};
use crate::seeding;

/// Loss change below this for [`STABLE_EPOCHS`] consecutive epochs stops
/// training early.
const STABLE_TOL: f64 = 1e-6;
const STABLE_EPOCHS: usize = 10;

/// One row of the loss history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub cross_entropy: f64,
    pub contrastive: f64,
    pub lambda_p: f64,
    pub lambda_n: f64,
    pub train_acc: f64,
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    /// Membership and predictions from the trained parameters.
    pub membership: Membership,
}

/// Adam with conventional defaults (beta1 0.9, beta2 0.999, eps 1e-8)
/// over the flat parameter layout.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: usize,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, dim: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) {
        let mut flat = params.flatten();
        let g = grads.flatten();
        assert_eq!(flat.len(), g.len(), "gradient layout mismatch");
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..flat.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            flat[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        params.assign_from_flat(&flat);
    }
}

/// Objective value at fixed contrastive context (labels, lambdas, and
/// samples frozen), the function the parameter gradient differentiates.
pub fn epoch_loss(
    params: &ModelParams,
    topo: &AttentionTopology,
    alpha: f64,
    labels: &LabelSet,
    ctx: &ContrastiveContext,
    hyper: &Hyperparameters,
) -> Result<(LossBreakdown, ForwardTrace)> {
    let trace = forward(params, topo, alpha)?;
    let breakdown = breakdown_at(&trace, labels, ctx, hyper)?;
    Ok((breakdown, trace))
}

fn breakdown_at(
    trace: &ForwardTrace,
    labels: &LabelSet,
    ctx: &ContrastiveContext,
    hyper: &Hyperparameters,
) -> Result<LossBreakdown> {
    let cross_entropy = cross_entropy_loss(&trace.membership.m, labels)?;
    let contrastive = if hyper.eta > 0.0 {
        info_nce_loss(
            trace.embeddings(),
            &ctx.samples,
            ctx.lambda_p,
            ctx.lambda_n,
            hyper.temperature,
            hyper.include_positive_in_denominator,
        )
    } else {
        0.0
    };
    Ok(LossBreakdown {
        total: total_loss(cross_entropy, contrastive, hyper.eta),
        cross_entropy,
        contrastive,
        lambda_p: ctx.lambda_p,
        lambda_n: ctx.lambda_n,
    })
}

/// Gradient of [`epoch_loss`] with respect to every parameter.
pub fn epoch_gradients(
    params: &ModelParams,
    topo: &AttentionTopology,
    alpha: f64,
    labels: &LabelSet,
    ctx: &ContrastiveContext,
    hyper: &Hyperparameters,
    trace: &ForwardTrace,
) -> Result<Gradients> {
    let mut grad_emb: Array2<f64> = cross_entropy_embedding_grad(&trace.membership, labels);
    if hyper.eta > 0.0 {
        let nce = info_nce_embedding_grad(
            trace.embeddings(),
            ctx,
            hyper.temperature,
            hyper.include_positive_in_denominator,
        );
        grad_emb.scaled_add(hyper.eta, &nce);
    }
    backward_through_network(params, topo, alpha, trace, &grad_emb)
}

/// Fresh contrastive context for one epoch: lambdas from the final-layer
/// head-averaged attention, and seeded resampled anchors. With eta = 0 the
/// sample set stays empty and only the lambda statistics are recorded.
pub fn build_context(
    trace: &ForwardTrace,
    topo: &AttentionTopology,
    hyper: &Hyperparameters,
    epoch: usize,
) -> ContrastiveContext {
    let attention_avg = trace.final_attention_average();
    let (lambda_p, lambda_n) = compute_lambda(&attention_avg, topo, &trace.membership.y_hat);
    let samples = if hyper.eta > 0.0 {
        let mut rng = seeding::epoch_rng(hyper.seed, seeding::streams::CONTRASTIVE, epoch);
        sample_contrastive(&trace.membership.y_hat, hyper.negatives_per_node, &mut rng)
    } else {
        Vec::new()
    };
    ContrastiveContext {
        lambda_p,
        lambda_n,
        samples,
    }
}

fn labeled_accuracy(y_hat: &[usize], labels: &LabelSet) -> f64 {
    let labeled = labels.labeled_nodes();
    if labeled.is_empty() {
        return 0.0;
    }
    let hits = labeled
        .iter()
        .filter(|&&i| y_hat[i] == labels.label(i))
        .count();
    hits as f64 / labeled.len() as f64
}

/// Train on a prepared topology; `alpha` may differ from `hyper.alpha`
/// for the ablation variants.
pub fn train_on_topology(
    topo: &AttentionTopology,
    alpha: f64,
    labels: &LabelSet,
    hyper: &Hyperparameters,
) -> Result<TrainResult> {
    hyper.validate()?;
    if labels.labeled_count() == 0 {
        return Err(Error::NoLabeledNodes);
    }
    let n = topo.n();
    let c = labels.class_count();
    let mut params = ModelParams::init(n, c, hyper);
    let mut adam = Adam::new(hyper.lr, params.param_count());
    let mut history = Vec::with_capacity(hyper.epochs);
    let mut prev_total: Option<f64> = None;
    let mut stable = 0usize;

    for epoch in 0..hyper.epochs {
        let trace = forward(&params, topo, alpha)?;
        let ctx = build_context(&trace, topo, hyper, epoch);
        let breakdown = breakdown_at(&trace, labels, &ctx, hyper)?;
        if !breakdown.total.is_finite() {
            return Err(Error::Diverged {
                epoch,
                msg: format!(
                    "loss {} (cross-entropy {}, contrastive {})",
                    breakdown.total, breakdown.cross_entropy, breakdown.contrastive
                ),
            });
        }
        history.push(EpochRecord {
            epoch,
            total: breakdown.total,
            cross_entropy: breakdown.cross_entropy,
            contrastive: breakdown.contrastive,
            lambda_p: breakdown.lambda_p,
            lambda_n: breakdown.lambda_n,
            train_acc: labeled_accuracy(&trace.membership.y_hat, labels),
        });

        let grads = epoch_gradients(&params, topo, alpha, labels, &ctx, hyper, &trace)?;
        adam.step(&mut params, &grads);

        if let Some(prev) = prev_total {
            if (breakdown.total - prev).abs() < STABLE_TOL {
                stable += 1;
            } else {
                stable = 0;
            }
        }
        prev_total = Some(breakdown.total);
        if stable >= STABLE_EPOCHS {
            break;
        }
    }

    let final_trace = forward(&params, topo, alpha)?;
    Ok(TrainResult {
        params,
        history,
        membership: final_trace.membership,
    })
}

/// Train with the standard edge-aware setup.
pub fn train(
    graph: &WeightedGraph,
    labels: &LabelSet,
    hyper: &Hyperparameters,
) -> Result<TrainResult> {
    let topo = AttentionTopology::build(graph, hyper.self_loop_mode, false);
    train_on_topology(&topo, hyper.alpha, labels, hyper)
}

/// Loss history in CSV form: `epoch,L,L_C,L_I,lambda_p,lambda_n,train_acc`.
pub fn render_loss_history(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,L,L_C,L_I,lambda_p,lambda_n,train_acc\n");
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.epoch, r.total, r.cross_entropy, r.contrastive, r.lambda_p, r.lambda_n, r.train_acc
        ));
    }
    out
}

pub fn write_loss_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    std::fs::write(path, render_loss_history(history)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
