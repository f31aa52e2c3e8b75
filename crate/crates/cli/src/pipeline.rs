//! Shared run machinery: config resolution, per-seed dataset assembly,
//! metrics lines, and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use ewgsl_core::config::{DatasetSource, ExperimentConfig};
use ewgsl_core::graph::{inject_noise_edges, WeightedGraph};
use ewgsl_core::io;
use ewgsl_core::labels::{split_labels, LabelSet};
use ewgsl_core::metrics::EvalReport;
use ewgsl_core::synthetic::generate_synthetic_graph;

/// Flag overrides shared by the experiment subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct CommonOpts {
    /// Experiment config file (flat key = value).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge-list TSV; together with --labels switches to a file dataset.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Ground-truth label TSV covering every node.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Pre-made training split (label TSV of the labeled subset).
    #[arg(long = "train-labels")]
    pub train_labels: Option<PathBuf>,
    /// Single seed override (replaces the config seed list).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Fraction of noise edges to inject before training.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long = "labeled-fraction")]
    pub labeled_fraction: Option<f64>,
    /// Output directory for all artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Resolve the experiment config: file values first, then flag overrides.
pub fn resolve_config(opts: &CommonOpts) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::from_text(&text)?
        }
        None => ExperimentConfig::default(),
    };
    match (&opts.graph, &opts.labels) {
        (Some(graph), Some(labels)) => {
            config.dataset = DatasetSource::Files {
                graph: graph.clone(),
                labels: labels.clone(),
            };
        }
        (None, None) => {}
        _ => bail!("--graph and --labels must be given together"),
    }
    if let Some(alpha) = opts.alpha {
        config.apply("alpha", &alpha.to_string())?;
    }
    if let Some(heads) = opts.heads {
        config.apply("heads", &heads.to_string())?;
    }
    if let Some(eta) = opts.eta {
        config.apply("eta", &eta.to_string())?;
    }
    if let Some(noise) = opts.noise {
        config.apply("noise_fraction", &noise.to_string())?;
    }
    if let Some(fraction) = opts.labeled_fraction {
        config.apply("labeled_fraction", &fraction.to_string())?;
    }
    if let Some(seed) = opts.seed {
        config.seeds = vec![seed];
    }
    if let Some(out) = &opts.out {
        config.out_dir = Some(out.clone());
    }
    config.validate()?;
    let out = config.out_dir.clone().ok_or_else(|| {
        anyhow::anyhow!("no output directory; pass --out or set 'out' in the config")
    })?;
    std::fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    Ok((config, out))
}

/// Counts recorded per prepared dataset.
#[derive(Debug, Clone)]
pub struct DatasetStats {
    pub nodes: usize,
    pub edges_before_noise: usize,
    pub edges: usize,
    pub classes: usize,
    pub labeled: usize,
}

/// Assemble the per-seed dataset: load or generate, inject noise, split.
pub fn prepare_dataset(
    config: &ExperimentConfig,
    seed: u64,
    train_labels: Option<&Path>,
) -> Result<(WeightedGraph, LabelSet, DatasetStats)> {
    let (graph, labels) = match &config.dataset {
        DatasetSource::Synthetic => generate_synthetic_graph(&config.synthetic_spec(seed))?,
        DatasetSource::Files { graph, labels } => {
            let full = io::read_labels(labels)?;
            let g = io::read_graph(graph, Some(full.n()))?;
            (g, full)
        }
    };
    let edges_before_noise = graph.edge_count();
    let graph = if config.noise_fraction > 0.0 {
        inject_noise_edges(&graph, config.noise_fraction, seed)?
    } else {
        graph
    };
    let labels = match train_labels {
        Some(path) => io::apply_train_labels(path, &labels)?,
        None => split_labels(&labels, config.labeled_fraction, seed)?,
    };
    let stats = DatasetStats {
        nodes: graph.n(),
        edges_before_noise,
        edges: graph.edge_count(),
        classes: labels.class_count(),
        labeled: labels.labeled_count(),
    };
    Ok((graph, labels, stats))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

/// One metrics line per seed, JSON-encoded with a stable field order.
#[derive(serde::Serialize)]
pub struct MetricsLine<'a> {
    pub seed: u64,
    pub variant: &'a str,
    pub acc: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub evaluated: usize,
    pub epochs_ran: usize,
    pub final_loss: f64,
}

impl<'a> MetricsLine<'a> {
    pub fn new(
        seed: u64,
        variant: &'a str,
        report: &EvalReport,
        epochs_ran: usize,
        final_loss: f64,
    ) -> Self {
        Self {
            seed,
            variant,
            acc: report.acc,
            micro_f1: report.micro_f1,
            macro_f1: report.macro_f1,
            weighted_f1: report.weighted_f1,
            evaluated: report.evaluated,
            epochs_ran,
            final_loss,
        }
    }

    pub fn render(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Builds the run manifest: command, tool version, config hash, the
/// resolved config itself, and per-seed notes.
pub struct Manifest {
    lines: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config_text: &str) -> Self {
        let mut lines = vec![
            format!("command = {command}"),
            format!("version = {}", env!("CARGO_PKG_VERSION")),
            format!("config_sha256 = {}", sha256_hex(config_text.as_bytes())),
            String::from("config:"),
        ];
        for line in config_text.lines() {
            lines.push(format!("  {line}"));
        }
        Self { lines }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    pub fn note_dataset(&mut self, seed: u64, stats: &DatasetStats) {
        self.note(format!(
            "seed {seed}: nodes={} edges={} (before noise {}) classes={} labeled={}",
            stats.nodes, stats.edges, stats.edges_before_noise, stats.classes, stats.labeled
        ));
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.txt");
        std::fs::write(&path, self.lines.join("\n") + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Format a float for human-facing summaries.
pub fn pct(x: f64) -> String {
    format!("{:.4}", x)
}
