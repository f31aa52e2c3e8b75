//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with its measured numbers. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::Instant;

use ndarray::Array2;
use rand::Rng;

use ewgsl_core::ablation::{train_variant, AblationVariant};
use ewgsl_core::entmax::{entmax, entmax_sorted_oracle, softmax, DEFAULT_TOL};
use ewgsl_core::graph::{inject_noise_edges, SelfLoopMode, WeightedGraph};
use ewgsl_core::labels::{split_labels, LabelSet};
use ewgsl_core::loss::{
    compute_lambda, cross_entropy_loss, info_nce_loss, sample_contrastive, ContrastiveContext,
};
use ewgsl_core::metrics::{evaluate, mean_std};
use ewgsl_core::model::{
    attention_scores, forward, sparsify_attention, AttentionTopology, Hyperparameters, ModelParams,
};
use ewgsl_core::movielens::build_ml100k_graph;
use ewgsl_core::seeding;
use ewgsl_core::synthetic::{generate_synthetic_graph, SyntheticSpec, WeightLaw};
use ewgsl_core::train::{build_context, epoch_gradients, epoch_loss, render_loss_history, train};

fn random_vec(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(lo..hi)).collect()
}

/// Criterion 1: bisection matches the exact sorting-based solver to 1e-6
/// on 1,000 random rows (dims 2-64, entries U[-5,5]), alpha in {1.5, 2},
/// in under 2 seconds.
#[test]
fn criterion_1_entmax_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = seeding::stream_rng(1001, 1);
    let mut max_gap = 0.0f64;
    for case in 0..1000 {
        let dim = rng.random_range(2..=64);
        let e = random_vec(&mut rng, dim, -5.0, 5.0);
        let alpha = if case % 2 == 0 { 1.5 } else { 2.0 };
        let bis = entmax(&e, alpha, DEFAULT_TOL).unwrap();
        let exact = entmax_sorted_oracle(&e, alpha).unwrap();
        for (a, b) in bis.p.iter().zip(&exact.p) {
            max_gap = max_gap.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    assert!(max_gap <= 1e-6, "max component gap {max_gap}");
    assert!(elapsed.as_secs_f64() < 2.0, "took {elapsed:?}");
    println!(
        "PASS criterion 1: entmax oracle equivalence (max gap {max_gap:.2e}, {:.3}s)",
        elapsed.as_secs_f64()
    );
}

/// Criterion 2: normalization to 1e-8, translation invariance to 1e-9,
/// alpha = 1.001 within 1e-2 of softmax, and support shrinking with alpha.
#[test]
fn criterion_2_entmax_invariants() {
    let mut rng = seeding::stream_rng(1002, 1);

    // Normalization and translation invariance across the alpha range.
    let mut worst_norm = 0.0f64;
    let mut worst_shift = 0.0f64;
    for _ in 0..500 {
        let dim = rng.random_range(1..=32);
        let e = random_vec(&mut rng, dim, -10.0, 10.0);
        let alpha = rng.random_range(1.0..=2.0);
        let r = entmax(&e, alpha, DEFAULT_TOL).unwrap();
        worst_norm = worst_norm.max((r.p.iter().sum::<f64>() - 1.0).abs());
        let c = rng.random_range(-20.0..20.0);
        let shifted: Vec<f64> = e.iter().map(|x| x + c).collect();
        let r2 = entmax(&shifted, alpha, 1e-12).unwrap();
        let r1 = entmax(&e, alpha, 1e-12).unwrap();
        for (a, b) in r1.p.iter().zip(&r2.p) {
            worst_shift = worst_shift.max((a - b).abs());
        }
    }
    assert!(worst_norm <= 1e-8, "normalization gap {worst_norm}");
    assert!(worst_shift <= 1e-9, "translation gap {worst_shift}");

    // Softmax limit at alpha = 1.001 on small inputs.
    let mut worst_limit = 0.0f64;
    for _ in 0..200 {
        let dim = rng.random_range(1..=10);
        let e = random_vec(&mut rng, dim, -3.0, 3.0);
        let ent = entmax(&e, 1.001, 1e-12).unwrap();
        let soft = softmax(&e).unwrap();
        for (a, b) in ent.p.iter().zip(&soft.p) {
            worst_limit = worst_limit.max((a - b).abs());
        }
    }
    assert!(worst_limit <= 1e-2, "softmax limit gap {worst_limit}");

    // Sparsity ordering over 1,000 dim-16 samples.
    let (mut support_20, mut support_12) = (0usize, 0usize);
    for _ in 0..1000 {
        let e = random_vec(&mut rng, 16, -5.0, 5.0);
        support_20 += entmax(&e, 2.0, DEFAULT_TOL).unwrap().support_size();
        support_12 += entmax(&e, 1.2, DEFAULT_TOL).unwrap().support_size();
        assert_eq!(softmax(&e).unwrap().support_size(), 16);
    }
    assert!(
        support_20 <= support_12,
        "mean support at alpha 2 ({support_20}) exceeds alpha 1.2 ({support_12})"
    );
    println!(
        "PASS criterion 2: entmax invariants (norm {worst_norm:.2e}, shift {worst_shift:.2e}, softmax limit {worst_limit:.2e}, support {:.2} vs {:.2})",
        support_20 as f64 / 1000.0,
        support_12 as f64 / 1000.0
    );
}

/// Criterion 3: analytic gradients of the total objective match central
/// finite differences (step 1e-4) with relative error <= 1e-3 on >= 95%
/// of coordinates, for eta in {0, 0.1} and alpha in {1.2, 1.5, 2.0},
/// on a seeded 12-node, 3-class, 2-layer, 2-head model, in under 60 s.
#[test]
fn criterion_3_gradient_check() {
    let start = Instant::now();
    let mut rng = seeding::stream_rng(1003, 1);
    let mut edges = Vec::new();
    for u in 0..12usize {
        for v in (u + 1)..12 {
            if rng.random::<f64>() < 0.35 {
                edges.push((u, v, rng.random_range(0.5..4.0)));
            }
        }
    }
    edges.push((0, 1, 2.0));
    let graph = WeightedGraph::from_edges(12, edges).unwrap();
    let labels = LabelSet::new((0..12).map(|i| i % 3).collect(), 3)
        .unwrap()
        .with_labeled_nodes(&[0, 1, 2, 3, 4, 5])
        .unwrap();
    let topo = AttentionTopology::build(&graph, SelfLoopMode::Max, false);

    let mut worst_fraction = 1.0f64;
    for eta in [0.0, 0.1] {
        for alpha in [1.2, 1.5, 2.0] {
            let hyper = Hyperparameters {
                alpha,
                eta,
                heads: 2,
                hidden_dims: vec![8],
                negatives_per_node: 3,
                seed: 77,
                ..Hyperparameters::default()
            };
            let params = ModelParams::init(12, 3, &hyper);
            let base_trace = forward(&params, &topo, alpha).unwrap();
            let ctx = build_context(&base_trace, &topo, &hyper, 0);

            let grads =
                epoch_gradients(&params, &topo, alpha, &labels, &ctx, &hyper, &base_trace).unwrap();
            let flat_grad = grads.flatten();
            let flat_params = params.flatten();

            let loss_at = |theta: &[f64], ctx: &ContrastiveContext| -> f64 {
                let mut p = params.clone();
                p.assign_from_flat(theta);
                epoch_loss(&p, &topo, alpha, &labels, ctx, &hyper)
                    .unwrap()
                    .0
                    .total
            };

            let step = 1e-4;
            let total = flat_params.len();
            let mut agree = 0usize;
            for idx in 0..total {
                let mut plus = flat_params.clone();
                plus[idx] += step;
                let mut minus = flat_params.clone();
                minus[idx] -= step;
                let fd = (loss_at(&plus, &ctx) - loss_at(&minus, &ctx)) / (2.0 * step);
                let denom = fd.abs().max(flat_grad[idx].abs()).max(1e-8);
                if ((fd - flat_grad[idx]) / denom).abs() <= 1e-3 {
                    agree += 1;
                }
            }
            let fraction = agree as f64 / total as f64;
            worst_fraction = worst_fraction.min(fraction);
            assert!(
                fraction >= 0.95,
                "eta {eta} alpha {alpha}: only {agree}/{total} coordinates agree"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 3: gradient check (worst agreement {:.1}%, {:.1}s)",
        worst_fraction * 100.0,
        elapsed.as_secs_f64()
    );
}

/// Criterion 4: loss components match naive brute-force enumeration to
/// 1e-12 on 100 random 10-node instances.
#[test]
fn criterion_4_loss_component_oracles() {
    let mut rng = seeding::stream_rng(1004, 1);
    for case in 0..100 {
        let n = 10;
        let c = rng.random_range(2..=4);
        // Random graph.
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < 0.4 {
                    edges.push((u, v, rng.random_range(0.5..3.0)));
                }
            }
        }
        edges.push((0, 1, 1.0));
        let graph = WeightedGraph::from_edges(n, edges).unwrap();
        let topo = AttentionTopology::build(&graph, SelfLoopMode::Max, false);

        // Random row-stochastic membership and labels.
        let mut m = Array2::<f64>::zeros((n, c));
        for i in 0..n {
            let row: Vec<f64> = (0..c).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = row.iter().sum();
            for (j, v) in row.iter().enumerate() {
                m[[i, j]] = v / s;
            }
        }
        let truth: Vec<usize> = (0..n).map(|i| i % c).collect();
        let labeled: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.7).collect();
        let labeled = if labeled.is_empty() { vec![0] } else { labeled };
        let labels = LabelSet::new(truth.clone(), c)
            .unwrap()
            .with_labeled_nodes(&labeled)
            .unwrap();

        // Cross-entropy against the double loop.
        let lc = cross_entropy_loss(&m, &labels).unwrap();
        let mut lc_oracle = 0.0;
        for &i in &labeled {
            for j in 0..c {
                if labels.label(i) == j {
                    lc_oracle -= m[[i, j]].max(1e-12).ln();
                }
            }
        }
        assert!(
            (lc - lc_oracle).abs() <= 1e-12,
            "case {case}: cross-entropy {lc} vs oracle {lc_oracle}"
        );

        // Lambda against exhaustive ordered-pair enumeration.
        let y_hat: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let attention: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                topo.row_targets(i)
                    .iter()
                    .map(|_| {
                        if rng.random::<f64>() < 0.25 {
                            0.0
                        } else {
                            rng.random_range(0.0..0.4)
                        }
                    })
                    .collect()
            })
            .collect();
        let (lp, ln_) = compute_lambda(&attention, &topo, &y_hat);
        let mut buckets = [(0.0f64, 0usize), (0.0f64, 0usize)];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let Some(slot) = topo.row_targets(i).iter().position(|&t| t == j) {
                    let e = attention[i][slot];
                    if e > 0.0 {
                        let b = usize::from(y_hat[i] != y_hat[j]);
                        buckets[b].0 += e;
                        buckets[b].1 += 1;
                    }
                }
            }
        }
        let expect = |(s, k): (f64, usize)| if k > 0 { s / k as f64 } else { 1.0 };
        assert!(
            (lp - expect(buckets[0])).abs() <= 1e-12,
            "case {case}: lambda_p"
        );
        assert!(
            (ln_ - expect(buckets[1])).abs() <= 1e-12,
            "case {case}: lambda_n"
        );

        // Contrastive loss against the direct formula.
        let d = 6;
        let h = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
        let samples = sample_contrastive(&y_hat, 4, &mut rng);
        let t = rng.random_range(0.2..1.5);
        let li = info_nce_loss(&h, &samples, lp, ln_, t, false);
        let cos = |i: usize, j: usize| {
            let (ri, rj) = (h.row(i), h.row(j));
            ri.dot(&rj) / (ri.dot(&ri).sqrt() * rj.dot(&rj).sqrt())
        };
        let li_oracle = if samples.is_empty() {
            0.0
        } else {
            let mut acc = 0.0;
            for s in &samples {
                let num = lp * (cos(s.anchor, s.positive) / t).exp();
                let den: f64 = s
                    .negatives
                    .iter()
                    .map(|&k| ln_ * (cos(s.anchor, k) / t).exp())
                    .sum();
                acc -= (num / den).ln();
            }
            acc / samples.len() as f64
        };
        assert!(
            (li - li_oracle).abs() <= 1e-12,
            "case {case}: contrastive {li} vs oracle {li_oracle}"
        );
    }
    println!("PASS criterion 4: loss-component oracles (100 cases at 1e-12)");
}

fn benchmark_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        nodes: 200,
        classes: 4,
        intra_p: 0.2,
        inter_p: 0.02,
        intra_law: WeightLaw::OnePlusPoisson { mean: 5.0 },
        inter_law: WeightLaw::OnePlusPoisson { mean: 1.0 },
        seed,
    }
}

/// Criterion 5: the synthetic end-to-end benchmark with 15% noise and 10%
/// labels: mean test accuracy over 5 seeds at least 0.85 and at least 2
/// percentage points above the softmax-normalization ablation, in under
/// 10 minutes.
#[test]
fn criterion_5_synthetic_end_to_end() {
    let start = Instant::now();
    let seeds = [0u64, 1, 2, 3, 4];
    let mut full_accs = Vec::new();
    let mut softmax_accs = Vec::new();
    for &seed in &seeds {
        let (graph, labels) = generate_synthetic_graph(&benchmark_spec(seed)).unwrap();
        let graph = inject_noise_edges(&graph, 0.15, seed).unwrap();
        let labels = split_labels(&labels, 0.1, seed).unwrap();
        let hyper = Hyperparameters {
            alpha: 1.5,
            heads: 6,
            eta: 0.1,
            seed,
            ..Hyperparameters::default()
        };
        let full = train_variant(&graph, &labels, &hyper, AblationVariant::Full).unwrap();
        let soft = train_variant(&graph, &labels, &hyper, AblationVariant::WeightsOnly).unwrap();
        full_accs.push(evaluate(&full.membership.y_hat, &labels).unwrap().acc);
        softmax_accs.push(evaluate(&soft.membership.y_hat, &labels).unwrap().acc);
    }
    let (full_mean, full_std) = mean_std(&full_accs);
    let (soft_mean, soft_std) = mean_std(&softmax_accs);
    let elapsed = start.elapsed();
    println!(
        "criterion 5 measurements: full acc {full_mean:.4} (std {full_std:.4}), softmax ablation {soft_mean:.4} (std {soft_std:.4}), {:.0}s",
        elapsed.as_secs_f64()
    );
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    assert!(
        full_mean >= 0.85,
        "FAIL criterion 5: mean accuracy {full_mean:.4} below 0.85"
    );
    assert!(
        full_mean >= soft_mean + 0.02,
        "FAIL criterion 5: full {full_mean:.4} does not beat softmax ablation {soft_mean:.4} by 2 points"
    );
    println!(
        "PASS criterion 5: synthetic end-to-end (full {full_mean:.4} vs softmax {soft_mean:.4})"
    );
}

/// Criterion 6: the MovieLens builder yields exactly 9 classes and
/// node/edge counts within +-10% of 1,612 / 58,439. Runs against the real
/// raw files when present (ML100K_DIR or <workspace>/data/ml-100k);
/// otherwise validates the builder on a bundled miniature fixture and
/// reports the count check as skipped.
#[test]
fn criterion_6_ml100k_construction() {
    let candidates = [
        std::env::var("ML100K_DIR")
            .ok()
            .map(std::path::PathBuf::from),
        Some(std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k")),
    ];
    let found = candidates
        .into_iter()
        .flatten()
        .find(|dir| dir.join("u.data").exists() && dir.join("u.item").exists());

    match found {
        Some(dir) => {
            let (graph, labels, report) =
                build_ml100k_graph(&dir.join("u.data"), &dir.join("u.item")).unwrap();
            println!(
                "criterion 6 realized counts: nodes={} edges={} classes={}",
                report.nodes, report.edges, report.classes
            );
            assert_eq!(labels.class_count(), 9, "expected exactly 9 classes");
            let nodes = graph.n() as f64;
            let edges = graph.edge_count() as f64;
            assert!(
                (nodes - 1612.0).abs() <= 161.2,
                "node count {nodes} outside 1612 +- 10%"
            );
            assert!(
                (edges - 58439.0).abs() <= 5843.9,
                "edge count {edges} outside 58439 +- 10%"
            );
            println!(
                "PASS criterion 6: movie graph construction ({} nodes, {} edges, {} classes)",
                report.nodes, report.edges, report.classes
            );
        }
        None => {
            // Mechanics-only fixture: three users, five movies.
            let dir = std::env::temp_dir().join("ewgsl_ml100k_fixture");
            std::fs::create_dir_all(&dir).unwrap();
            let udata = dir.join("u.data");
            let uitem = dir.join("u.item");
            std::fs::write(
                &udata,
                "1\t1\t4\t10\n1\t2\t3\t20\n1\t3\t5\t30\n2\t2\t4\t5\n2\t4\t2\t6\n3\t4\t3\t1\n3\t5\t4\t2\n",
            )
            .unwrap();
            let mut items = String::new();
            for (id, genre) in [(1u32, 1usize), (2, 1), (3, 2), (4, 2), (5, 2)] {
                let mut flags = [0u8; 19];
                flags[genre] = 1;
                let rendered: Vec<String> = flags.iter().map(|f| f.to_string()).collect();
                items.push_str(&format!(
                    "{id}|Movie {id}|01-Jan-1995||http://x|{}\n",
                    rendered.join("|")
                ));
            }
            std::fs::write(&uitem, items).unwrap();
            let (graph, labels, report) = build_ml100k_graph(&udata, &uitem).unwrap();
            assert_eq!(report.nodes, 5);
            assert_eq!(graph.edge_count(), 4);
            assert_eq!(labels.class_count(), 2);
            println!(
                "SKIP criterion 6 count check: MovieLens-100K raw files not present (set ML100K_DIR or place u.data/u.item under data/ml-100k); builder mechanics verified on a fixture"
            );
        }
    }
}

/// Criterion 7: noise injection adds exactly ceil(f * |E|) edges for
/// f in {0.05, 0.10, 0.15}, never duplicating an existing pair.
#[test]
fn criterion_7_noise_injection_contract() {
    let (graph, _) = generate_synthetic_graph(&benchmark_spec(99)).unwrap();
    for fraction in [0.05, 0.10, 0.15] {
        let noisy = inject_noise_edges(&graph, fraction, 1234).unwrap();
        let expected = (fraction * graph.edge_count() as f64).ceil() as usize;
        assert_eq!(
            noisy.edge_count(),
            graph.edge_count() + expected,
            "fraction {fraction}"
        );
        // No duplicates (canonical edge list is deduplicated by
        // construction) and all original edges intact.
        for e in graph.edges() {
            assert_eq!(noisy.weight(e.u, e.v), Some(e.w));
        }
        let mut seen = std::collections::HashSet::new();
        for e in noisy.edges() {
            assert!(seen.insert((e.u, e.v)), "duplicate pair ({}, {})", e.u, e.v);
        }
    }
    println!("PASS criterion 7: noise-injection contract at 5/10/15%");
}

/// Criterion 8: identical config and seed reproduce metrics to 1e-10 and
/// byte-identical loss-history files.
#[test]
fn criterion_8_determinism() {
    let spec = SyntheticSpec {
        nodes: 60,
        classes: 3,
        intra_p: 0.4,
        inter_p: 0.04,
        intra_law: WeightLaw::OnePlusPoisson { mean: 5.0 },
        inter_law: WeightLaw::OnePlusPoisson { mean: 1.0 },
        seed: 17,
    };
    let hyper = Hyperparameters {
        heads: 3,
        hidden_dims: vec![32, 16],
        epochs: 30,
        seed: 17,
        ..Hyperparameters::default()
    };
    let run = || {
        let (graph, labels) = generate_synthetic_graph(&spec).unwrap();
        let graph = inject_noise_edges(&graph, 0.1, 17).unwrap();
        let labels = split_labels(&labels, 0.2, 17).unwrap();
        let result = train(&graph, &labels, &hyper).unwrap();
        let report = evaluate(&result.membership.y_hat, &labels).unwrap();
        (render_loss_history(&result.history), report)
    };
    let (history_a, report_a) = run();
    let (history_b, report_b) = run();
    assert_eq!(history_a, history_b, "loss-history files differ");
    assert!((report_a.acc - report_b.acc).abs() <= 1e-10);
    assert!((report_a.micro_f1 - report_b.micro_f1).abs() <= 1e-10);
    assert!((report_a.macro_f1 - report_b.macro_f1).abs() <= 1e-10);
    assert!((report_a.weighted_f1 - report_b.weighted_f1).abs() <= 1e-10);
    println!("PASS criterion 8: determinism (identical histories and metrics)");
}

/// Criterion 9: eta = 0 training equals pure cross-entropy training, and
/// the alpha = 1 + uniform-impact variant reproduces vanilla softmax
/// attention rows within 1e-9.
#[test]
fn criterion_9_reduction_checks() {
    // (a) eta = 0 must be insensitive to every contrastive knob: the run
    // IS pure cross-entropy training.
    let spec = SyntheticSpec {
        nodes: 40,
        classes: 3,
        intra_p: 0.4,
        inter_p: 0.05,
        intra_law: WeightLaw::OnePlusPoisson { mean: 4.0 },
        inter_law: WeightLaw::Constant(1.0),
        seed: 3,
    };
    let (graph, labels) = generate_synthetic_graph(&spec).unwrap();
    let labels = split_labels(&labels, 0.2, 3).unwrap();
    let base = Hyperparameters {
        eta: 0.0,
        heads: 2,
        hidden_dims: vec![16],
        epochs: 25,
        seed: 3,
        ..Hyperparameters::default()
    };
    let tweaked = Hyperparameters {
        negatives_per_node: 11,
        temperature: 2.5,
        include_positive_in_denominator: true,
        ..base.clone()
    };
    let a = train(&graph, &labels, &base).unwrap();
    let b = train(&graph, &labels, &tweaked).unwrap();
    assert_eq!(
        render_loss_history(&a.history),
        render_loss_history(&b.history),
        "eta = 0 histories differ when contrastive knobs change"
    );
    for r in &a.history {
        assert_eq!(r.contrastive, 0.0);
        assert_eq!(r.total, r.cross_entropy);
    }

    // (b) alpha = 1 with uniform impact factors equals an independent
    // softmax attention-row implementation.
    let mut rng = seeding::stream_rng(9, 9);
    let mut edges = Vec::new();
    for u in 0..15usize {
        for v in (u + 1)..15 {
            if rng.random::<f64>() < 0.3 {
                edges.push((u, v, rng.random_range(0.5..5.0)));
            }
        }
    }
    edges.push((0, 1, 1.0));
    let graph = WeightedGraph::from_edges(15, edges).unwrap();
    let topo = AttentionTopology::build(&graph, SelfLoopMode::Max, true);
    let hyper = Hyperparameters {
        heads: 1,
        hidden_dims: vec![6],
        seed: 31,
        ..Hyperparameters::default()
    };
    let params = ModelParams::init(15, 3, &hyper);
    let head = &params.layers[0].heads[0];
    let z = head.weight.t().to_owned();
    let (raw, _) = attention_scores(head, &z, &topo).unwrap();
    let (rows, _) = sparsify_attention(&raw, 1.0).unwrap();

    let mut worst = 0.0f64;
    let d = z.ncols();
    for i in 0..15 {
        // Reference: plain softmax over uniform-impact leaky-rectified
        // additive logits, written independently of the library path.
        let degree = graph.degree(i) as f64;
        let uniform_rho = if degree > 0.0 { 1.0 / degree } else { 1.0 };
        let logits: Vec<f64> = topo
            .row_targets(i)
            .iter()
            .map(|&j| {
                let mut s = 0.0;
                for k in 0..d {
                    s += head.attn[k] * z[[i, k]] + head.attn[d + k] * z[[j, k]];
                }
                uniform_rho * if s > 0.0 { s } else { 0.2 * s }
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for (slot, &e) in exps.iter().enumerate() {
            worst = worst.max((rows[i][slot] - e / sum).abs());
        }
    }
    assert!(worst <= 1e-9, "softmax reduction gap {worst}");
    println!(
        "PASS criterion 9: reduction checks (eta=0 pure cross-entropy; softmax rows gap {worst:.2e})"
    );
}
