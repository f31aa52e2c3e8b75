//! Node labels and labeled/unlabeled splits.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seeding;

/// Per-node class assignments plus the labeled mask that partitions the
/// nodes into a labeled training set and an unlabeled evaluation set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<usize>,
    labeled: Vec<bool>,
    class_count: usize,
}

impl LabelSet {
    /// Build from ground-truth labels with nothing marked labeled yet.
    pub fn new(labels: Vec<usize>, class_count: usize) -> Result<Self> {
        Self::with_mask(labels.clone(), vec![false; labels.len()], class_count)
    }

    pub fn with_mask(labels: Vec<usize>, labeled: Vec<bool>, class_count: usize) -> Result<Self> {
        if labels.len() != labeled.len() {
            return Err(Error::InvalidLabels(format!(
                "labels ({}) and mask ({}) lengths differ",
                labels.len(),
                labeled.len()
            )));
        }
        if class_count == 0 {
            return Err(Error::InvalidLabels("class count must be positive".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidLabels(format!(
                "label {bad} outside [0, {class_count})"
            )));
        }
        Ok(Self {
            labels,
            labeled,
            class_count,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        self.labeled[i]
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labeled[i]).collect()
    }

    pub fn unlabeled_nodes(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.labeled[i]).collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled.iter().filter(|&&b| b).count()
    }

    /// Mark exactly the listed nodes as labeled.
    pub fn with_labeled_nodes(&self, nodes: &[usize]) -> Result<Self> {
        let mut labeled = vec![false; self.n()];
        for &i in nodes {
            if i >= self.n() {
                return Err(Error::InvalidLabels(format!(
                    "labeled node {i} outside graph of {} nodes",
                    self.n()
                )));
            }
            labeled[i] = true;
        }
        Self::with_mask(self.labels.clone(), labeled, self.class_count)
    }
}

/// Stratified labeled split totalling `ceil(fraction * n)` nodes.
///
/// Class quotas are `fraction * class_size` apportioned by largest
/// remainder with a floor of one labeled node per class, so a fraction of
/// 0.1 on 100 nodes labels exactly 10. Deterministic per seed.
pub fn split_labels(labels: &LabelSet, labeled_fraction: f64, seed: u64) -> Result<LabelSet> {
    if !(labeled_fraction > 0.0 && labeled_fraction < 1.0) {
        return Err(Error::BadLabeledFraction(labeled_fraction));
    }
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); labels.class_count()];
    for i in 0..labels.n() {
        per_class[labels.label(i)].push(i);
    }
    if let Some(empty) = per_class.iter().position(|m| m.is_empty()) {
        return Err(Error::EmptyClass { class: empty });
    }

    let counts = apportion(
        &per_class.iter().map(|m| m.len()).collect::<Vec<_>>(),
        labeled_fraction,
    );

    let mut rng = seeding::stream_rng(seed, seeding::streams::SPLIT);
    let mut mask = vec![false; labels.n()];
    for (members, &take) in per_class.iter_mut().zip(&counts) {
        members.shuffle(&mut rng);
        for &i in members.iter().take(take) {
            mask[i] = true;
        }
    }
    LabelSet::with_mask(labels.labels().to_vec(), mask, labels.class_count())
}

/// Largest-remainder apportionment of `ceil(fraction * total)` across the
/// class sizes, at least one per class, never more than the class size.
fn apportion(sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = ((fraction * total as f64).ceil() as usize)
        .max(sizes.len())
        .min(total);
    let mut counts: Vec<usize> = Vec::with_capacity(sizes.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(sizes.len());
    for (class, &size) in sizes.iter().enumerate() {
        let quota = fraction * size as f64;
        let base = (quota.floor() as usize).max(1).min(size);
        counts.push(base);
        remainders.push((class, quota - quota.floor()));
    }
    // Hand out any shortfall by largest fractional remainder, ties toward
    // the lower class index.
    let mut assigned: usize = counts.iter().sum();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut cursor = 0;
    while assigned < target && cursor < remainders.len() {
        let class = remainders[cursor].0;
        if counts[class] < sizes[class] {
            counts[class] += 1;
            assigned += 1;
        }
        cursor += 1;
        if cursor == remainders.len() && assigned < target {
            cursor = 0; // remainders exhausted; keep topping up round-robin
        }
    }
    counts
}
