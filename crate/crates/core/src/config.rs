//! Experiment configuration: a flat `key = value` text format with typed
//! validation. Unknown keys are rejected; command-line flags reuse
//! [`ExperimentConfig::apply`] so file values and overrides share one
//! parser.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::graph::SelfLoopMode;
use crate::model::Hyperparameters;
use crate::synthetic::{SyntheticSpec, WeightLaw};

/// Where the experiment's graph and labels come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Planted-partition generator (seeded per run).
    Synthetic,
    /// Edge-list and label TSVs on disk.
    Files { graph: PathBuf, labels: PathBuf },
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub synthetic_nodes: usize,
    pub synthetic_classes: usize,
    pub synthetic_intra_p: f64,
    pub synthetic_inter_p: f64,
    pub synthetic_intra_law: WeightLaw,
    pub synthetic_inter_law: WeightLaw,
    pub hyper: Hyperparameters,
    pub noise_fraction: f64,
    pub labeled_fraction: f64,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic,
            synthetic_nodes: 200,
            synthetic_classes: 4,
            synthetic_intra_p: 0.2,
            synthetic_inter_p: 0.02,
            synthetic_intra_law: WeightLaw::OnePlusPoisson { mean: 5.0 },
            synthetic_inter_law: WeightLaw::OnePlusPoisson { mean: 1.0 },
            hyper: Hyperparameters::default(),
            noise_fraction: 0.0,
            labeled_fraction: 0.1,
            seeds: vec![0],
            out_dir: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for key '{key}'")))
}

impl ExperimentConfig {
    /// Parse a config file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut graph_path: Option<PathBuf> = None;
        let mut labels_path: Option<PathBuf> = None;
        let mut dataset_kind: Option<String> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", idx + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "dataset" => dataset_kind = Some(value.to_string()),
                "graph" => graph_path = Some(PathBuf::from(value)),
                "labels" => labels_path = Some(PathBuf::from(value)),
                _ => config.apply(key, value)?,
            }
        }

        match dataset_kind.as_deref() {
            None | Some("synthetic") => {
                if graph_path.is_some() || labels_path.is_some() {
                    return Err(Error::Config(
                        "graph/labels paths given but dataset is synthetic".into(),
                    ));
                }
            }
            Some("files") => {
                let graph = graph_path
                    .ok_or_else(|| Error::Config("dataset = files requires 'graph'".into()))?;
                let labels = labels_path
                    .ok_or_else(|| Error::Config("dataset = files requires 'labels'".into()))?;
                config.dataset = DatasetSource::Files { graph, labels };
            }
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown dataset kind '{other}' (expected synthetic or files)"
                )))
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Set one scalar key; shared by the file parser and flag overrides.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "synthetic.nodes" => self.synthetic_nodes = parse_num(key, value)?,
            "synthetic.classes" => self.synthetic_classes = parse_num(key, value)?,
            "synthetic.intra_p" => self.synthetic_intra_p = parse_num(key, value)?,
            "synthetic.inter_p" => self.synthetic_inter_p = parse_num(key, value)?,
            "synthetic.intra_law" => self.synthetic_intra_law = WeightLaw::parse(value)?,
            "synthetic.inter_law" => self.synthetic_inter_law = WeightLaw::parse(value)?,
            "alpha" => self.hyper.alpha = parse_num(key, value)?,
            "heads" => self.hyper.heads = parse_num(key, value)?,
            "eta" => self.hyper.eta = parse_num(key, value)?,
            "temperature" => self.hyper.temperature = parse_num(key, value)?,
            "lr" => self.hyper.lr = parse_num(key, value)?,
            "epochs" => self.hyper.epochs = parse_num(key, value)?,
            "hidden_dims" => {
                let dims: Result<Vec<usize>> = value
                    .split(',')
                    .map(|d| parse_num("hidden_dims", d))
                    .collect();
                self.hyper.hidden_dims = dims?;
            }
            "self_loop_mode" => self.hyper.self_loop_mode = SelfLoopMode::parse(value)?,
            "negatives_per_node" => self.hyper.negatives_per_node = parse_num(key, value)?,
            "include_positive_in_denominator" => {
                self.hyper.include_positive_in_denominator = match value {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(Error::Config(format!(
                            "bad value '{value}' for key '{key}' (expected true/false)"
                        )))
                    }
                }
            }
            "noise_fraction" => self.noise_fraction = parse_num(key, value)?,
            "labeled_fraction" => self.labeled_fraction = parse_num(key, value)?,
            "seeds" => {
                let seeds: Result<Vec<u64>> =
                    value.split(',').map(|s| parse_num("seeds", s)).collect();
                self.seeds = seeds?;
            }
            "out" => self.out_dir = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if !(0.0..=1.0).contains(&self.noise_fraction) {
            return Err(Error::Config(format!(
                "noise_fraction {} outside [0, 1]",
                self.noise_fraction
            )));
        }
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction < 1.0) {
            return Err(Error::Config(format!(
                "labeled_fraction {} must lie strictly between 0 and 1",
                self.labeled_fraction
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds list is empty".into()));
        }
        if self.dataset == DatasetSource::Synthetic {
            self.synthetic_spec(0).validate()?;
        }
        Ok(())
    }

    /// The generator spec for one run seed.
    pub fn synthetic_spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            nodes: self.synthetic_nodes,
            classes: self.synthetic_classes,
            intra_p: self.synthetic_intra_p,
            inter_p: self.synthetic_inter_p,
            intra_law: self.synthetic_intra_law,
            inter_law: self.synthetic_inter_law,
            seed,
        }
    }

    /// Canonical text of the resolved config (stable key order); hashed
    /// into run manifests.
    pub fn render_canonical(&self) -> String {
        let mut out = String::new();
        match &self.dataset {
            DatasetSource::Synthetic => out.push_str("dataset = synthetic\n"),
            DatasetSource::Files { graph, labels } => {
                out.push_str("dataset = files\n");
                out.push_str(&format!("graph = {}\n", graph.display()));
                out.push_str(&format!("labels = {}\n", labels.display()));
            }
        }
        out.push_str(&format!("synthetic.nodes = {}\n", self.synthetic_nodes));
        out.push_str(&format!("synthetic.classes = {}\n", self.synthetic_classes));
        out.push_str(&format!("synthetic.intra_p = {}\n", self.synthetic_intra_p));
        out.push_str(&format!("synthetic.inter_p = {}\n", self.synthetic_inter_p));
        out.push_str(&format!(
            "synthetic.intra_law = {}\n",
            self.synthetic_intra_law.render()
        ));
        out.push_str(&format!(
            "synthetic.inter_law = {}\n",
            self.synthetic_inter_law.render()
        ));
        out.push_str(&format!("alpha = {}\n", self.hyper.alpha));
        out.push_str(&format!("heads = {}\n", self.hyper.heads));
        out.push_str(&format!("eta = {}\n", self.hyper.eta));
        out.push_str(&format!("temperature = {}\n", self.hyper.temperature));
        out.push_str(&format!("lr = {}\n", self.hyper.lr));
        out.push_str(&format!("epochs = {}\n", self.hyper.epochs));
        let dims: Vec<String> = self
            .hyper
            .hidden_dims
            .iter()
            .map(|d| d.to_string())
            .collect();
        out.push_str(&format!("hidden_dims = {}\n", dims.join(",")));
        out.push_str(&format!(
            "self_loop_mode = {}\n",
            self.hyper.self_loop_mode.name()
        ));
        out.push_str(&format!(
            "negatives_per_node = {}\n",
            self.hyper.negatives_per_node
        ));
        out.push_str(&format!(
            "include_positive_in_denominator = {}\n",
            self.hyper.include_positive_in_denominator
        ));
        out.push_str(&format!("noise_fraction = {}\n", self.noise_fraction));
        out.push_str(&format!("labeled_fraction = {}\n", self.labeled_fraction));
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        out.push_str(&format!("seeds = {}\n", seeds.join(",")));
        if let Some(dir) = &self.out_dir {
            out.push_str(&format!("out = {}\n", dir.display()));
        }
        out
    }
}
