//! Training objectives: cross-entropy over labeled nodes and the
//! attention-weighted contrastive loss, plus the intra/inter-class
//! attention statistics that weight it.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::labels::LabelSet;
use crate::model::{AttentionTopology, Membership};

/// Floor for membership probabilities inside the log.
const LOG_CLAMP: f64 = 1e-12;

/// Floor for embedding norms in the cosine similarity.
const NORM_FLOOR: f64 = 1e-12;

/// Components of one epoch's objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub cross_entropy: f64,
    pub contrastive: f64,
    pub lambda_p: f64,
    pub lambda_n: f64,
}

/// One anchor with its same-class positive and different-class negatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastiveSample {
    pub anchor: usize,
    pub positive: usize,
    pub negatives: Vec<usize>,
}

/// Per-epoch contrastive state, held fixed while gradients are taken.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveContext {
    pub lambda_p: f64,
    pub lambda_n: f64,
    pub samples: Vec<ContrastiveSample>,
}

/// Cross-entropy over the labeled nodes, with the log clamped below for
/// stability.
pub fn cross_entropy_loss(m: &Array2<f64>, labels: &LabelSet) -> Result<f64> {
    let labeled = labels.labeled_nodes();
    if labeled.is_empty() {
        return Err(Error::NoLabeledNodes);
    }
    let mut loss = 0.0;
    for i in labeled {
        loss -= m[[i, labels.label(i)]].max(LOG_CLAMP).ln();
    }
    Ok(loss)
}

/// Gradient of the cross-entropy (through the row softmax) with respect to
/// the final representations: `m_i - onehot(y_i)` on labeled rows.
pub fn cross_entropy_embedding_grad(membership: &Membership, labels: &LabelSet) -> Array2<f64> {
    let (n, c) = membership.m.dim();
    let mut grad = Array2::<f64>::zeros((n, c));
    for i in 0..n {
        if labels.is_labeled(i) {
            for j in 0..c {
                grad[[i, j]] = membership.m[[i, j]];
            }
            grad[[i, labels.label(i)]] -= 1.0;
        }
    }
    grad
}

/// Mean sparse attention over intra-class and inter-class pairs.
///
/// Pairs are directed `(i, j)` with `i != j` and a strictly positive
/// head-averaged attention entry; an empty pair set falls back to the
/// neutral value 1.
pub fn compute_lambda(
    attention_avg: &[Vec<f64>],
    topo: &AttentionTopology,
    y_hat: &[usize],
) -> (f64, f64) {
    let mut intra = (0.0, 0usize);
    let mut inter = (0.0, 0usize);
    for i in 0..topo.n() {
        let self_slot = topo.self_slot(i);
        for (slot, &j) in topo.row_targets(i).iter().enumerate() {
            if slot == self_slot {
                continue;
            }
            let e = attention_avg[i][slot];
            if e <= 0.0 {
                continue;
            }
            if y_hat[i] == y_hat[j] {
                intra.0 += e;
                intra.1 += 1;
            } else {
                inter.0 += e;
                inter.1 += 1;
            }
        }
    }
    let lambda_p = if intra.1 > 0 {
        intra.0 / intra.1 as f64
    } else {
        1.0
    };
    let lambda_n = if inter.1 > 0 {
        inter.0 / inter.1 as f64
    } else {
        1.0
    };
    (lambda_p, lambda_n)
}

/// Draw one positive and `negatives_per_node` negatives per anchor from
/// the predicted classes. Anchors whose class has no other member, or with
/// no differently-classed node available, are skipped.
pub fn sample_contrastive<R: Rng>(
    y_hat: &[usize],
    negatives_per_node: usize,
    rng: &mut R,
) -> Vec<ContrastiveSample> {
    let n = y_hat.len();
    let class_count = y_hat.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &y) in y_hat.iter().enumerate() {
        members[y].push(i);
    }
    let mut others: Vec<Vec<usize>> = Vec::with_capacity(class_count);
    for c in 0..class_count {
        others.push((0..n).filter(|&i| y_hat[i] != c).collect());
    }

    let mut samples = Vec::with_capacity(n);
    for anchor in 0..n {
        let class = y_hat[anchor];
        let same = &members[class];
        let diff = &others[class];
        if same.len() < 2 || diff.is_empty() {
            continue;
        }
        let positive = loop {
            let cand = same[rng.random_range(0..same.len())];
            if cand != anchor {
                break cand;
            }
        };
        let negatives = (0..negatives_per_node)
            .map(|_| diff[rng.random_range(0..diff.len())])
            .collect();
        samples.push(ContrastiveSample {
            anchor,
            positive,
            negatives,
        });
    }
    samples
}

fn row_norms(h: &Array2<f64>) -> Vec<f64> {
    (0..h.nrows())
        .map(|i| h.row(i).dot(&h.row(i)).sqrt().max(NORM_FLOOR))
        .collect()
}

fn cosine(h: &Array2<f64>, norms: &[f64], i: usize, j: usize) -> f64 {
    h.row(i).dot(&h.row(j)) / (norms[i] * norms[j])
}

/// Shared evaluation of the contrastive objective; optionally accumulates
/// the gradient with respect to the embeddings.
fn info_nce_eval(
    h: &Array2<f64>,
    samples: &[ContrastiveSample],
    lambda_p: f64,
    lambda_n: f64,
    t: f64,
    include_positive: bool,
    mut grad: Option<&mut Array2<f64>>,
) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let norms = row_norms(h);
    let inv_n = 1.0 / samples.len() as f64;
    let mut loss = 0.0;

    for sample in samples {
        let a = sample.anchor;
        let s_pos = cosine(h, &norms, a, sample.positive);
        let s_neg: Vec<f64> = sample
            .negatives
            .iter()
            .map(|&k| cosine(h, &norms, a, k))
            .collect();

        // log-denominator via a shifted sum-exp over the negative terms
        // (plus the positive term when the textbook form is requested).
        let mut log_terms: Vec<f64> = s_neg.iter().map(|&s| lambda_n.ln() + s / t).collect();
        if include_positive {
            log_terms.push(lambda_p.ln() + s_pos / t);
        }
        let m = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let denom_sum: f64 = log_terms.iter().map(|&lt| (lt - m).exp()).sum();
        let log_denom = m + denom_sum.ln();

        loss += inv_n * (log_denom - (lambda_p.ln() + s_pos / t));

        if let Some(g) = grad.as_deref_mut() {
            // d(term)/d(sim): -1/t on the positive, softmax weights /t on
            // each denominator occurrence.
            let mut coef_pos = -inv_n / t;
            for (idx, &k) in sample.negatives.iter().enumerate() {
                let w = (log_terms[idx] - log_denom).exp();
                accumulate_cosine_grad(h, &norms, a, k, inv_n * w / t, g);
            }
            if include_positive {
                let w = (log_terms[sample.negatives.len()] - log_denom).exp();
                coef_pos += inv_n * w / t;
            }
            accumulate_cosine_grad(h, &norms, a, sample.positive, coef_pos, g);
        }
    }
    loss
}

/// Add `coef * d cos(h_i, h_j) / dH` into `grad`.
fn accumulate_cosine_grad(
    h: &Array2<f64>,
    norms: &[f64],
    i: usize,
    j: usize,
    coef: f64,
    grad: &mut Array2<f64>,
) {
    let c = cosine(h, norms, i, j);
    let d = h.ncols();
    for k in 0..d {
        let ui = h[[i, k]] / norms[i];
        let vj = h[[j, k]] / norms[j];
        grad[[i, k]] += coef * (vj - c * ui) / norms[i];
        grad[[j, k]] += coef * (ui - c * vj) / norms[j];
    }
}

/// Contrastive loss over the sampled anchors, averaged over the anchors
/// that survived sampling; 0 when none did.
pub fn info_nce_loss(
    h: &Array2<f64>,
    samples: &[ContrastiveSample],
    lambda_p: f64,
    lambda_n: f64,
    t: f64,
    include_positive: bool,
) -> f64 {
    info_nce_eval(h, samples, lambda_p, lambda_n, t, include_positive, None)
}

/// Gradient of the contrastive loss with respect to the embeddings.
pub fn info_nce_embedding_grad(
    h: &Array2<f64>,
    ctx: &ContrastiveContext,
    t: f64,
    include_positive: bool,
) -> Array2<f64> {
    let mut grad = Array2::<f64>::zeros(h.dim());
    info_nce_eval(
        h,
        &ctx.samples,
        ctx.lambda_p,
        ctx.lambda_n,
        t,
        include_positive,
        Some(&mut grad),
    );
    grad
}

/// Total objective: cross-entropy plus the weighted contrastive term.
pub fn total_loss(cross_entropy: f64, contrastive: f64, eta: f64) -> f64 {
    cross_entropy + eta * contrastive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{SelfLoopMode, WeightedGraph};
    use crate::model::AttentionTopology;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::Rng;

    fn labeled_set(labels: Vec<usize>, c: usize, labeled: &[usize]) -> LabelSet {
        LabelSet::new(labels, c)
            .unwrap()
            .with_labeled_nodes(labeled)
            .unwrap()
    }

    #[test]
    fn perfect_predictions_give_zero_cross_entropy() {
        let labels = labeled_set(vec![0, 1, 2], 3, &[0, 1, 2]);
        let m = Array2::from_shape_vec((3, 3), vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        assert_abs_diff_eq!(cross_entropy_loss(&m, &labels).unwrap(), 0.0);
    }

    #[test]
    fn uniform_membership_costs_count_times_log_c() {
        let labels = labeled_set(vec![0, 1, 2, 0, 1], 3, &[0, 1, 2, 3]);
        let m = Array2::from_elem((5, 3), 1.0 / 3.0);
        let lc = cross_entropy_loss(&m, &labels).unwrap();
        assert_abs_diff_eq!(lc, 4.0 * 3.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn cross_entropy_matches_double_loop_oracle() {
        let mut rng = crate::seeding::stream_rng(31, 0);
        let n = 8;
        let c = 4;
        let labels = labeled_set(
            (0..n).map(|i| i % c).collect(),
            c,
            &(0..n).collect::<Vec<_>>(),
        );
        // Random row-stochastic matrix.
        let mut m = Array2::<f64>::zeros((n, c));
        for i in 0..n {
            let mut row: Vec<f64> = (0..c).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            for (j, v) in row.iter().enumerate() {
                m[[i, j]] = *v;
            }
        }
        // Naive double loop over one-hot targets.
        let mut oracle = 0.0;
        for i in 0..n {
            for j in 0..c {
                let y = if labels.label(i) == j { 1.0 } else { 0.0 };
                oracle -= y * m[[i, j]].max(1e-12).ln();
            }
        }
        assert_abs_diff_eq!(
            cross_entropy_loss(&m, &labels).unwrap(),
            oracle,
            epsilon = 1e-12
        );
    }

    #[test]
    fn empty_labeled_set_is_an_error() {
        let labels = LabelSet::new(vec![0, 1], 2).unwrap();
        let m = Array2::from_elem((2, 2), 0.5);
        assert!(matches!(
            cross_entropy_loss(&m, &labels).unwrap_err(),
            Error::NoLabeledNodes
        ));
    }

    fn path_topology() -> (AttentionTopology, WeightedGraph) {
        let g = WeightedGraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        (AttentionTopology::build(&g, SelfLoopMode::Max, false), g)
    }

    #[test]
    fn lambda_means_simple_case() {
        // Path 0-1-2; rows: 0 -> [1, self], 1 -> [0, 2, self], 2 -> [1, self].
        let (topo, _) = path_topology();
        let attention = vec![
            vec![0.2, 0.8],      // 0->1 intra
            vec![0.4, 0.0, 0.6], // 1->0 intra, 1->2 pruned
            vec![0.5, 0.5],      // 2->1 inter
        ];
        let y_hat = vec![0, 0, 1];
        let (lp, ln_) = compute_lambda(&attention, &topo, &y_hat);
        assert_abs_diff_eq!(lp, (0.2 + 0.4) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ln_, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn lambda_falls_back_to_one_when_sets_empty() {
        let (topo, _) = path_topology();
        let attention = vec![vec![0.2, 0.8], vec![0.4, 0.1, 0.5], vec![0.5, 0.5]];
        // Everyone in the same predicted class: no inter pairs.
        let (_, ln_) = compute_lambda(&attention, &topo, &[0, 0, 0]);
        assert_abs_diff_eq!(ln_, 1.0);
        // Fully pruned attention: no intra pairs either.
        let zeros = vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0]];
        let (lp, _) = compute_lambda(&zeros, &topo, &[0, 0, 0]);
        assert_abs_diff_eq!(lp, 1.0);
    }

    #[test]
    fn lambda_matches_exhaustive_enumeration() {
        let mut rng = crate::seeding::stream_rng(77, 1);
        let mut edges = Vec::new();
        for u in 0..10usize {
            for v in (u + 1)..10 {
                if rng.random::<f64>() < 0.4 {
                    edges.push((u, v, rng.random_range(0.5..3.0)));
                }
            }
        }
        let g = WeightedGraph::from_edges(10, edges).unwrap();
        let topo = AttentionTopology::build(&g, SelfLoopMode::Avg, false);
        let attention: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                topo.row_targets(i)
                    .iter()
                    .map(|_| {
                        if rng.random::<f64>() < 0.3 {
                            0.0
                        } else {
                            rng.random_range(0.0..0.5)
                        }
                    })
                    .collect()
            })
            .collect();
        let y_hat: Vec<usize> = (0..10).map(|_| rng.random_range(0..3)).collect();
        let (lp, ln_) = compute_lambda(&attention, &topo, &y_hat);

        // Brute force over all ordered node pairs.
        let mut sums = [(0.0, 0usize), (0.0, 0usize)];
        for i in 0..10 {
            for j in 0..10 {
                if i == j {
                    continue;
                }
                if let Some(slot) = topo.row_targets(i).iter().position(|&x| x == j) {
                    let e = attention[i][slot];
                    if e > 0.0 {
                        let bucket = usize::from(y_hat[i] != y_hat[j]);
                        sums[bucket].0 += e;
                        sums[bucket].1 += 1;
                    }
                }
            }
        }
        let expect = |(s, k): (f64, usize)| if k > 0 { s / k as f64 } else { 1.0 };
        assert_abs_diff_eq!(lp, expect(sums[0]), epsilon = 1e-12);
        assert_abs_diff_eq!(ln_, expect(sums[1]), epsilon = 1e-12);
    }

    #[test]
    fn single_negative_unit_lambdas_reduce_to_sim_difference() {
        // h rows chosen so the cosines are easy; t = 1.
        let h = Array2::from_shape_vec((3, 2), vec![1.0, 0.0, 0.6, 0.8, 0.0, 1.0]).unwrap();
        let samples = vec![ContrastiveSample {
            anchor: 0,
            positive: 1,
            negatives: vec![2],
        }];
        let s_pos = 0.6;
        let s_neg = 0.0;
        let li = info_nce_loss(&h, &samples, 1.0, 1.0, 1.0, false);
        assert_abs_diff_eq!(li, s_neg - s_pos, epsilon = 1e-12);
    }

    #[test]
    fn identical_embeddings_cost_log_m() {
        let h = Array2::from_elem((6, 3), 0.7);
        let samples: Vec<ContrastiveSample> = (0..6)
            .map(|a| ContrastiveSample {
                anchor: a,
                positive: (a + 1) % 6,
                negatives: vec![(a + 2) % 6, (a + 3) % 6, (a + 4) % 6],
            })
            .collect();
        let li = info_nce_loss(&h, &samples, 0.4, 0.4, 0.7, false);
        assert_abs_diff_eq!(li, 3.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn info_nce_matches_direct_formula_oracle() {
        let mut rng = crate::seeding::stream_rng(13, 2);
        let n = 8;
        let d = 5;
        let h = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
        let samples: Vec<ContrastiveSample> = (0..n)
            .map(|a| ContrastiveSample {
                anchor: a,
                positive: (a + 3) % n,
                negatives: (0..4).map(|_| rng.random_range(0..n)).collect(),
            })
            .collect();
        let (lp, ln_, t) = (0.37, 0.11, 0.5);
        let li = info_nce_loss(&h, &samples, lp, ln_, t, false);

        // Direct transcription of the formula, no shifted exponentials.
        let cos = |i: usize, j: usize| {
            let (ri, rj) = (h.row(i), h.row(j));
            ri.dot(&rj) / (ri.dot(&ri).sqrt() * rj.dot(&rj).sqrt())
        };
        let mut oracle = 0.0;
        for s in &samples {
            let num = lp * (cos(s.anchor, s.positive) / t).exp();
            let den: f64 = s
                .negatives
                .iter()
                .map(|&k| ln_ * (cos(s.anchor, k) / t).exp())
                .sum();
            oracle -= (num / den).ln();
        }
        oracle /= samples.len() as f64;
        assert_abs_diff_eq!(li, oracle, epsilon = 1e-12);
    }

    #[test]
    fn no_samples_means_zero_loss() {
        let h = Array2::from_elem((3, 2), 1.0);
        assert_eq!(info_nce_loss(&h, &[], 1.0, 1.0, 0.5, false), 0.0);
    }

    #[test]
    fn sampling_skips_degenerate_anchors() {
        let mut rng = crate::seeding::stream_rng(3, 3);
        // Node 3 is the only member of class 1: skipped as anchor.
        let y_hat = vec![0, 0, 0, 1];
        let samples = sample_contrastive(&y_hat, 2, &mut rng);
        assert!(samples.iter().all(|s| s.anchor != 3));
        for s in &samples {
            assert_ne!(s.positive, s.anchor);
            assert_eq!(y_hat[s.positive], y_hat[s.anchor]);
            assert_eq!(s.negatives.len(), 2);
            for &k in &s.negatives {
                assert_ne!(y_hat[k], y_hat[s.anchor]);
            }
        }
        // One class only: nobody has negatives.
        let none = sample_contrastive(&[0, 0, 0], 2, &mut rng);
        assert!(none.is_empty());
    }

    #[test]
    fn total_loss_is_affine_in_eta() {
        assert_abs_diff_eq!(total_loss(1.0, 2.0, 0.0), 1.0);
        assert_abs_diff_eq!(total_loss(1.0, 2.0, 0.1), 1.2, epsilon = 1e-15);
        // Linearity identity at fixed components.
        let (lc, li) = (0.8, 1.7);
        let l = |eta: f64| total_loss(lc, li, eta);
        let (e1, e2) = (0.05, 0.4);
        assert_abs_diff_eq!(
            l(e1) + l(e2) - 2.0 * l((e1 + e2) / 2.0),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn info_nce_gradient_matches_finite_differences() {
        let mut rng = crate::seeding::stream_rng(8, 4);
        let n = 6;
        let d = 4;
        let h = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.5..1.5));
        let samples: Vec<ContrastiveSample> = (0..n)
            .map(|a| ContrastiveSample {
                anchor: a,
                positive: (a + 2) % n,
                negatives: vec![(a + 1) % n, (a + 4) % n],
            })
            .collect();
        let ctx = ContrastiveContext {
            lambda_p: 0.6,
            lambda_n: 0.2,
            samples,
        };
        for include_positive in [false, true] {
            let grad = info_nce_embedding_grad(&h, &ctx, 0.5, include_positive);
            let eps = 1e-6;
            for i in 0..n {
                for k in 0..d {
                    let mut plus = h.clone();
                    plus[[i, k]] += eps;
                    let mut minus = h.clone();
                    minus[[i, k]] -= eps;
                    let fd = (info_nce_loss(&plus, &ctx.samples, 0.6, 0.2, 0.5, include_positive)
                        - info_nce_loss(&minus, &ctx.samples, 0.6, 0.2, 0.5, include_positive))
                        / (2.0 * eps);
                    assert_abs_diff_eq!(grad[[i, k]], fd, epsilon = 1e-6);
                }
            }
        }
    }
}
