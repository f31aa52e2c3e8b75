//! Classification metrics over the unlabeled evaluation nodes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::labels::LabelSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True instances of the class among evaluated nodes.
    pub support: usize,
}

/// Multi-class report; all metrics cover only the unlabeled nodes, the
/// labeled training nodes are never counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub acc: f64,
    /// Micro-averaged F1. For exhaustive single-label prediction this is
    /// identically the accuracy; emitted separately so either convention
    /// can be compared.
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[true][predicted]` counts.
    pub confusion: Vec<Vec<usize>>,
    pub evaluated: usize,
}

/// Score predictions against the ground truth of the unlabeled nodes.
pub fn evaluate(y_hat: &[usize], labels: &LabelSet) -> Result<EvalReport> {
    if y_hat.len() != labels.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} nodes",
            y_hat.len(),
            labels.n()
        )));
    }
    let eval_nodes = labels.unlabeled_nodes();
    if eval_nodes.is_empty() {
        return Err(Error::NoUnlabeledNodes);
    }
    let c = labels.class_count();
    let mut confusion = vec![vec![0usize; c]; c];
    for &i in &eval_nodes {
        let pred = y_hat[i];
        if pred >= c {
            return Err(Error::InvalidLabels(format!(
                "prediction {pred} outside [0, {c}) for node {i}"
            )));
        }
        confusion[labels.label(i)][pred] += 1;
    }

    let total = eval_nodes.len();
    let correct: usize = (0..c).map(|k| confusion[k][k]).sum();
    let acc = correct as f64 / total as f64;

    let mut per_class = Vec::with_capacity(c);
    let mut macro_sum = 0.0;
    let mut weighted_sum = 0.0;
    // Micro counts pool true/false positives over all classes.
    let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
    for k in 0..c {
        let tp = confusion[k][k];
        let fp: usize = (0..c).filter(|&t| t != k).map(|t| confusion[t][k]).sum();
        let fn_: usize = (0..c).filter(|&p| p != k).map(|p| confusion[k][p]).sum();
        let support = tp + fn_;
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if support > 0 {
            tp as f64 / support as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        macro_sum += f1;
        weighted_sum += f1 * support as f64;
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support,
        });
    }
    let micro_p = tp_all as f64 / (tp_all + fp_all) as f64;
    let micro_r = tp_all as f64 / (tp_all + fn_all) as f64;
    let micro_f1 = if micro_p + micro_r > 0.0 {
        2.0 * micro_p * micro_r / (micro_p + micro_r)
    } else {
        0.0
    };

    Ok(EvalReport {
        acc,
        micro_f1,
        macro_f1: macro_sum / c as f64,
        weighted_f1: weighted_sum / total as f64,
        per_class,
        confusion,
        evaluated: total,
    })
}

/// Mean and (population) standard deviation of a metric across seeds.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn labels_with_split(truth: Vec<usize>, c: usize, labeled: &[usize]) -> LabelSet {
        LabelSet::new(truth, c)
            .unwrap()
            .with_labeled_nodes(labeled)
            .unwrap()
    }

    #[test]
    fn all_correct_gives_ones() {
        let labels = labels_with_split(vec![0, 1, 2, 0, 1, 2], 3, &[0]);
        let y_hat = vec![0, 1, 2, 0, 1, 2];
        let r = evaluate(&y_hat, &labels).unwrap();
        assert_abs_diff_eq!(r.acc, 1.0);
        assert_abs_diff_eq!(r.micro_f1, 1.0);
        assert_abs_diff_eq!(r.macro_f1, 1.0);
        assert_eq!(r.evaluated, 5);
    }

    #[test]
    fn micro_f1_equals_accuracy_for_exhaustive_single_label() {
        let labels = labels_with_split(vec![0, 1, 2, 0, 1, 2, 0, 2], 3, &[7]);
        let y_hat = vec![0, 2, 2, 1, 1, 0, 0, 2];
        let r = evaluate(&y_hat, &labels).unwrap();
        assert_abs_diff_eq!(r.micro_f1, r.acc, epsilon = 1e-12);
    }

    #[test]
    fn matches_hand_computed_confusion() {
        // Evaluation nodes: truths [0,0,1,1,1], preds [0,1,1,1,0].
        let labels = labels_with_split(vec![0, 0, 1, 1, 1, 0], 2, &[5]);
        let y_hat = vec![0, 1, 1, 1, 0, 0];
        let r = evaluate(&y_hat, &labels).unwrap();
        assert_eq!(r.confusion, vec![vec![1, 1], vec![1, 2]]);
        assert_abs_diff_eq!(r.acc, 3.0 / 5.0, epsilon = 1e-12);
        // Class 0: precision 1/2, recall 1/2, f1 1/2.
        assert_abs_diff_eq!(r.per_class[0].f1, 0.5, epsilon = 1e-12);
        // Class 1: precision 2/3, recall 2/3.
        assert_abs_diff_eq!(r.per_class[1].precision, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.macro_f1, (0.5 + 2.0 / 3.0) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            r.weighted_f1,
            (0.5 * 2.0 + (2.0 / 3.0) * 3.0) / 5.0,
            epsilon = 1e-12
        );
        let trace: usize = (0..2).map(|k| r.confusion[k][k]).sum();
        assert_eq!(trace, 3);
    }

    #[test]
    fn everything_labeled_is_an_error() {
        let labels = labels_with_split(vec![0, 1], 2, &[0, 1]);
        assert!(matches!(
            evaluate(&[0, 1], &labels).unwrap_err(),
            Error::NoUnlabeledNodes
        ));
    }

    #[test]
    fn mean_std_basics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(m, 2.0);
        assert_abs_diff_eq!(s, (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }
}
