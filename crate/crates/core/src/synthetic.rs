//! Weighted planted-partition benchmark graphs.
//!
//! Nodes are split into near-equal class blocks; intra-block pairs connect
//! with a higher probability and heavier weights than inter-block pairs, so
//! inter-block edges play the role of noise a denoiser should suppress.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::labels::LabelSet;
use crate::seeding;

/// Integer-valued edge-weight distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightLaw {
    Constant(f64),
    /// Uniform over `lo..=hi`.
    UniformInt {
        lo: u64,
        hi: u64,
    },
    /// `1 + Poisson(mean)`; always positive.
    OnePlusPoisson {
        mean: f64,
    },
}

impl WeightLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            WeightLaw::Constant(c) => c,
            WeightLaw::UniformInt { lo, hi } => (lo + hi) as f64 / 2.0,
            WeightLaw::OnePlusPoisson { mean } => 1.0 + mean,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            WeightLaw::Constant(c) => c,
            WeightLaw::UniformInt { lo, hi } => rng.random_range(lo..=hi) as f64,
            WeightLaw::OnePlusPoisson { mean } => {
                let pois = Poisson::new(mean).expect("validated mean");
                1.0 + pois.sample(rng)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            WeightLaw::Constant(c) => c > 0.0 && c.is_finite(),
            WeightLaw::UniformInt { lo, hi } => lo >= 1 && hi >= lo,
            WeightLaw::OnePlusPoisson { mean } => mean > 0.0 && mean.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSyntheticSpec(format!(
                "invalid weight law {self:?}"
            )))
        }
    }

    /// Parse `const(C)`, `uniform(LO,HI)`, or `1+poisson(MEAN)`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse weight law '{s}'"));
        let s = s.trim();
        let inner = |prefix: &str| -> Option<&str> { s.strip_prefix(prefix)?.strip_suffix(')') };
        if let Some(arg) = inner("const(") {
            return Ok(WeightLaw::Constant(arg.trim().parse().map_err(|_| bad())?));
        }
        if let Some(arg) = inner("uniform(") {
            let mut parts = arg.split(',');
            let lo = parts.next().ok_or_else(bad)?.trim();
            let hi = parts.next().ok_or_else(bad)?.trim();
            if parts.next().is_some() {
                return Err(bad());
            }
            return Ok(WeightLaw::UniformInt {
                lo: lo.parse().map_err(|_| bad())?,
                hi: hi.parse().map_err(|_| bad())?,
            });
        }
        if let Some(arg) = inner("1+poisson(") {
            return Ok(WeightLaw::OnePlusPoisson {
                mean: arg.trim().parse().map_err(|_| bad())?,
            });
        }
        Err(bad())
    }

    pub fn render(&self) -> String {
        match *self {
            WeightLaw::Constant(c) => format!("const({c})"),
            WeightLaw::UniformInt { lo, hi } => format!("uniform({lo},{hi})"),
            WeightLaw::OnePlusPoisson { mean } => format!("1+poisson({mean})"),
        }
    }
}

/// Parameters of the planted-partition generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub nodes: usize,
    pub classes: usize,
    pub intra_p: f64,
    pub inter_p: f64,
    pub intra_law: WeightLaw,
    pub inter_law: WeightLaw,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.nodes < self.classes {
            return Err(Error::InvalidSyntheticSpec(format!(
                "need nodes >= classes >= 1, got {} nodes / {} classes",
                self.nodes, self.classes
            )));
        }
        for p in [self.intra_p, self.inter_p] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidSyntheticSpec(format!(
                    "edge probability {p} outside [0, 1]"
                )));
            }
        }
        if self.intra_p <= self.inter_p {
            return Err(Error::InvalidSyntheticSpec(format!(
                "intra_p {} must exceed inter_p {}",
                self.intra_p, self.inter_p
            )));
        }
        self.intra_law.validate()?;
        self.inter_law.validate()?;
        if self.intra_law.mean() <= self.inter_law.mean() {
            return Err(Error::InvalidSyntheticSpec(format!(
                "expected intra weight {} must exceed inter weight {}",
                self.intra_law.mean(),
                self.inter_law.mean()
            )));
        }
        Ok(())
    }

    /// Class of node `i` under contiguous near-equal blocks.
    pub fn block_of(&self, i: usize) -> usize {
        let base = self.nodes / self.classes;
        let extra = self.nodes % self.classes;
        // The first `extra` blocks hold `base + 1` nodes.
        let boundary = extra * (base + 1);
        if i < boundary {
            i / (base + 1)
        } else {
            extra + (i - boundary) / base
        }
    }

    /// Analytic expected edge count, used by the 3-sigma sanity oracle.
    pub fn expected_edges(&self) -> f64 {
        let mut intra_pairs = 0.0;
        let base = self.nodes / self.classes;
        let extra = self.nodes % self.classes;
        for c in 0..self.classes {
            let size = if c < extra { base + 1 } else { base } as f64;
            intra_pairs += size * (size - 1.0) / 2.0;
        }
        let total_pairs = self.nodes as f64 * (self.nodes as f64 - 1.0) / 2.0;
        let inter_pairs = total_pairs - intra_pairs;
        intra_pairs * self.intra_p + inter_pairs * self.inter_p
    }
}

/// Generate a planted-partition graph plus its ground-truth labels
/// (nothing marked labeled yet). Deterministic per spec seed.
pub fn generate_synthetic_graph(spec: &SyntheticSpec) -> Result<(WeightedGraph, LabelSet)> {
    spec.validate()?;
    let mut rng = seeding::stream_rng(spec.seed, seeding::streams::SYNTHETIC);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for u in 0..spec.nodes {
        for v in (u + 1)..spec.nodes {
            let intra = spec.block_of(u) == spec.block_of(v);
            let p = if intra { spec.intra_p } else { spec.inter_p };
            if rng.random::<f64>() < p {
                let law = if intra {
                    spec.intra_law
                } else {
                    spec.inter_law
                };
                edges.push((u, v, law.sample(&mut rng)));
            }
        }
    }
    if edges.is_empty() {
        return Err(Error::EmptySyntheticGraph);
    }
    let graph = WeightedGraph::from_edges(spec.nodes, edges)?;
    let labels = LabelSet::new(
        (0..spec.nodes).map(|i| spec.block_of(i)).collect(),
        spec.classes,
    )?;
    Ok((graph, labels))
}
