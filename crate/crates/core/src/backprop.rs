//! Reverse-mode differentiation of the forward pass.
//!
//! Walks the stored layer traces backwards: activation, beta-weighted head
//! average, neighborhood aggregation, the entmax rows via their closed-form
//! Jacobian, the rectified additive logits, and finally the projections.
//! The contrastive weights and predicted labels are constants of the
//! current iterate, so no gradient flows through them.

use ndarray::{Array1, Array2};

use crate::entmax;
use crate::error::{Error, Result};
use crate::model::{
    leaky_relu_derivative, AttentionTopology, ForwardTrace, LayerTrace, ModelParams,
};

#[derive(Debug, Clone)]
pub struct HeadGrad {
    pub weight: Array2<f64>,
    pub attn: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub heads: Vec<HeadGrad>,
    pub beta: Array1<f64>,
}

/// Parameter gradients, mirroring [`ModelParams`] shape and flat layout.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|layer| LayerGrad {
                heads: layer
                    .heads
                    .iter()
                    .map(|h| HeadGrad {
                        weight: Array2::zeros(h.weight.dim()),
                        attn: Array1::zeros(h.attn.len()),
                    })
                    .collect(),
                beta: Array1::zeros(layer.beta.len()),
            })
            .collect();
        Self { layers }
    }

    /// Flat layout identical to [`ModelParams::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for head in &layer.heads {
                out.extend(head.weight.iter());
                out.extend(head.attn.iter());
            }
            out.extend(layer.beta.iter());
        }
        out
    }

    pub fn check_finite(&self) -> Result<()> {
        for (l, layer) in self.layers.iter().enumerate() {
            for (k, head) in layer.heads.iter().enumerate() {
                if head.weight.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteGradient {
                        location: format!("layer {l} head {k} projection"),
                    });
                }
                if head.attn.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteGradient {
                        location: format!("layer {l} head {k} attention vector"),
                    });
                }
            }
            if layer.beta.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    location: format!("layer {l} beta"),
                });
            }
        }
        Ok(())
    }
}

/// Backpropagate `grad_output = dL/d(final representations)` through every
/// layer, returning gradients for all projections, attention vectors, and
/// head weights.
pub fn backward_through_network(
    params: &ModelParams,
    topo: &AttentionTopology,
    alpha: f64,
    trace: &ForwardTrace,
    grad_output: &Array2<f64>,
) -> Result<Gradients> {
    let n = topo.n();
    let mut grads = Gradients::zeros_like(params);
    let mut g_out = grad_output.clone();

    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let lt: &LayerTrace = &trace.layers[l];
        let head_count = layer.heads.len();
        let d_out = lt.combined.ncols();
        let d_in = layer.heads[0].weight.ncols();

        // Through the activation.
        let mut g_pre = g_out.clone();
        for (g, &x) in g_pre.iter_mut().zip(lt.combined.iter()) {
            *g *= layer.activation.derivative(x);
        }

        let mut g_input = if l > 0 {
            Some(Array2::<f64>::zeros((n, d_in)))
        } else {
            None
        };

        for k in 0..head_count {
            let head = &layer.heads[k];
            let z = &lt.z[k];
            let sparse = &lt.attention.sparse[k];
            let pre = &lt.score_pre[k];

            // Head combination: combined = sum_k beta_k/K * head_out_k.
            grads.layers[l].beta[k] = g_pre
                .iter()
                .zip(lt.head_out[k].iter())
                .map(|(&g, &h)| g * h)
                .sum::<f64>()
                / head_count as f64;
            let scale = layer.beta[k] / head_count as f64;

            let mut g_z = Array2::<f64>::zeros((n, d_out));
            // Incoming rectified-logit gradient per target node.
            let mut du_incoming = vec![0.0; n];
            let a_src = head.attn.slice(ndarray::s![..d_out]);
            let a_dst = head.attn.slice(ndarray::s![d_out..]);
            let mut g_attn = Array1::<f64>::zeros(2 * d_out);

            for i in 0..n {
                let targets = topo.row_targets(i);
                let rho = topo.row_rho(i);
                let g_agg_row = g_pre.row(i);

                // Aggregation: d/d e'_ij = <g_agg_i, z_j>, d/d z_j += e'_ij g_agg_i.
                let mut g_sparse_row = Vec::with_capacity(targets.len());
                for (slot, &j) in targets.iter().enumerate() {
                    g_sparse_row.push(scale * g_agg_row.dot(&z.row(j)));
                    let w = sparse[i][slot];
                    if w != 0.0 {
                        g_z.row_mut(j).scaled_add(scale * w, &g_agg_row);
                    }
                }

                // Through the row normalizer (closed-form Jacobian).
                let g_raw_row = entmax::entmax_vjp_parts(&sparse[i], alpha, &g_sparse_row);

                // Raw score: e_ij = rho_ij * leaky(u_ij).
                let mut du_row_sum = 0.0;
                for (slot, &j) in targets.iter().enumerate() {
                    let du = g_raw_row[slot] * rho[slot] * leaky_relu_derivative(pre[i][slot]);
                    du_row_sum += du;
                    du_incoming[j] += du;
                }
                // u_ij = a_src . z_i + a_dst . z_j: source side grouped per row.
                if du_row_sum != 0.0 {
                    g_attn
                        .slice_mut(ndarray::s![..d_out])
                        .scaled_add(du_row_sum, &z.row(i));
                    g_z.row_mut(i).scaled_add(du_row_sum, &a_src);
                }
            }
            // Target side grouped per node.
            for (j, &du) in du_incoming.iter().enumerate() {
                if du != 0.0 {
                    g_attn
                        .slice_mut(ndarray::s![d_out..])
                        .scaled_add(du, &z.row(j));
                    g_z.row_mut(j).scaled_add(du, &a_dst);
                }
            }
            grads.layers[l].heads[k].attn = g_attn;

            // Projection: Z = H W^T, identity input on the first layer.
            if l == 0 {
                grads.layers[l].heads[k].weight = g_z.t().to_owned();
            } else {
                let h_prev = &trace.layers[l - 1].output;
                grads.layers[l].heads[k].weight = g_z.t().dot(h_prev);
                g_input
                    .as_mut()
                    .expect("hidden layers propagate input gradient")
                    .scaled_add(1.0, &g_z.dot(&head.weight));
            }
        }

        if let Some(g) = g_input {
            g_out = g;
        }
    }

    grads.check_finite()?;
    Ok(grads)
}
