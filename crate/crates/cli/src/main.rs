//! Command-line pipeline: dataset construction, noise injection, label
//! splits, training, evaluation, ablations, and attention export.

mod pipeline;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ewgsl_core::ablation::run_ablation;
use ewgsl_core::checkpoint::{load_model, save_model};
use ewgsl_core::export::export_attention;
use ewgsl_core::graph::inject_noise_edges;
use ewgsl_core::io;
use ewgsl_core::labels::split_labels;
use ewgsl_core::metrics::{evaluate, mean_std};
use ewgsl_core::model::{forward, AttentionTopology};
use ewgsl_core::movielens::build_ml100k_graph;
use ewgsl_core::seeding;
use ewgsl_core::synthetic::generate_synthetic_graph;
use ewgsl_core::train::{train, write_loss_history};

use pipeline::{
    pct, prepare_dataset, resolve_config, sha256_hex, CommonOpts, Manifest, MetricsLine,
};

#[derive(Parser)]
#[command(
    name = "ewgsl",
    version,
    about = "Node classification on noisy weighted graphs with edge-aware sparse attention"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the movie co-rating graph from MovieLens-100K raw files.
    BuildDataset {
        /// Path to u.data (tab-separated user, item, rating, timestamp).
        #[arg(long)]
        ratings: PathBuf,
        /// Path to u.item (pipe-separated metadata with 19 genre flags).
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a weighted planted-partition benchmark graph.
    MakeSynthetic {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Add random edges between unconnected pairs, weights drawn from the
    /// existing weight multiset.
    InjectNoise {
        #[arg(long)]
        graph: PathBuf,
        /// Optional label file fixing the node count.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified labeled/unlabeled split of a ground-truth label file.
    Split {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long = "labeled-fraction")]
        labeled_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train over the configured seeds and report test metrics.
    Train {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate a saved model on a graph and label split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long = "train-labels")]
        train_labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train all four attention variants on identical data per seed.
    Ablate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Export final-layer attention rows (entmax vs softmax baseline) as CSV.
    ExportAttention {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Nodes to export, comma-separated; defaults to 5 seeded picks.
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<usize>,
        /// Neighbor slots per node.
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::BuildDataset {
            ratings,
            items,
            out,
        } => build_dataset(&ratings, &items, &out),
        Command::MakeSynthetic { common } => make_synthetic(&common),
        Command::InjectNoise {
            graph,
            labels,
            fraction,
            seed,
            out,
        } => inject_noise(&graph, labels.as_deref(), fraction, seed, &out),
        Command::Split {
            labels,
            labeled_fraction,
            seed,
            out,
        } => split(&labels, labeled_fraction, seed, &out),
        Command::Train { common } => train_command(&common),
        Command::Evaluate {
            model,
            graph,
            labels,
            train_labels,
            out,
        } => evaluate_command(&model, &graph, &labels, &train_labels, &out),
        Command::Ablate { common } => ablate_command(&common),
        Command::ExportAttention {
            model,
            graph,
            nodes,
            k,
            seed,
            out,
        } => export_command(&model, &graph, &nodes, k, seed, &out),
    }
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))
}

fn build_dataset(ratings: &Path, items: &Path, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let (graph, labels, report) = build_ml100k_graph(ratings, items)?;
    io::write_graph(&out.join("graph.tsv"), &graph)?;
    io::write_labels(&out.join("labels.tsv"), &labels)?;
    let summary = format!(
        "nodes={} edges={} classes={} (from {} movies, {} ratings, {} users)",
        report.nodes,
        report.edges,
        report.classes,
        report.movies_listed,
        report.ratings,
        report.users
    );
    println!("{summary}");
    let config_text = format!(
        "ratings = {}\nitems = {}\n",
        ratings.display(),
        items.display()
    );
    let mut manifest = Manifest::new("build-dataset", &config_text);
    manifest.note(summary);
    manifest.write(out)?;
    Ok(())
}

fn make_synthetic(common: &CommonOpts) -> Result<()> {
    let (config, out) = resolve_config(common)?;
    let seed = *config.seeds.first().expect("validated non-empty");
    let spec = config.synthetic_spec(seed);
    let (graph, labels) = generate_synthetic_graph(&spec)?;
    io::write_graph(&out.join("graph.tsv"), &graph)?;
    io::write_labels(&out.join("labels.tsv"), &labels)?;
    println!(
        "generated {} nodes, {} edges, {} classes (seed {seed})",
        graph.n(),
        graph.edge_count(),
        labels.class_count()
    );
    let mut manifest = Manifest::new("make-synthetic", &config.render_canonical());
    manifest.note(format!(
        "seed {seed}: nodes={} edges={} classes={}",
        graph.n(),
        graph.edge_count(),
        labels.class_count()
    ));
    manifest.write(&out)?;
    Ok(())
}

fn inject_noise(
    graph_path: &Path,
    labels_path: Option<&Path>,
    fraction: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    ensure_dir(out)?;
    let node_count = match labels_path {
        Some(path) => Some(io::read_labels(path)?.n()),
        None => None,
    };
    let graph = io::read_graph(graph_path, node_count)?;
    let before = graph.edge_count();
    let noisy = inject_noise_edges(&graph, fraction, seed)?;
    io::write_graph(&out.join("graph.tsv"), &noisy)?;
    println!(
        "edges {before} -> {} (+{})",
        noisy.edge_count(),
        noisy.edge_count() - before
    );
    let config_text = format!(
        "graph = {}\nfraction = {fraction}\nseed = {seed}\n",
        graph_path.display()
    );
    let mut manifest = Manifest::new("inject-noise", &config_text);
    manifest.note(format!(
        "edges before={before} after={} added={}",
        noisy.edge_count(),
        noisy.edge_count() - before
    ));
    manifest.write(out)?;
    Ok(())
}

fn split(labels_path: &Path, labeled_fraction: f64, seed: u64, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let labels = io::read_labels(labels_path)?;
    let split = split_labels(&labels, labeled_fraction, seed)?;
    io::write_train_labels(&out.join("train_labels.tsv"), &split)?;
    println!(
        "labeled {} of {} nodes across {} classes",
        split.labeled_count(),
        split.n(),
        split.class_count()
    );
    let config_text = format!(
        "labels = {}\nlabeled_fraction = {labeled_fraction}\nseed = {seed}\n",
        labels_path.display()
    );
    let mut manifest = Manifest::new("split", &config_text);
    manifest.note(format!(
        "labeled={} of {}",
        split.labeled_count(),
        split.n()
    ));
    manifest.write(out)?;
    Ok(())
}

fn train_command(common: &CommonOpts) -> Result<()> {
    let (mut config, out) = resolve_config(common)?;
    let mut manifest = Manifest::new("train", &config.render_canonical());
    let metrics_path = out.join("metrics.jsonl");
    let mut metrics_file = std::fs::File::create(&metrics_path)
        .with_context(|| format!("creating {}", metrics_path.display()))?;
    let mut accs = Vec::new();
    let mut f1s = Vec::new();

    let seeds = config.seeds.clone();
    for &seed in &seeds {
        let (graph, labels, stats) =
            prepare_dataset(&config, seed, common.train_labels.as_deref())?;
        manifest.note_dataset(seed, &stats);

        io::write_graph(&out.join(format!("graph_seed{seed}.tsv")), &graph)?;
        io::write_labels(&out.join(format!("labels_seed{seed}.tsv")), &labels)?;
        io::write_train_labels(&out.join(format!("train_labels_seed{seed}.tsv")), &labels)?;

        config.hyper.seed = seed;
        let result = train(&graph, &labels, &config.hyper)?;
        save_model(
            &out.join(format!("model_seed{seed}.json")),
            &result.params,
            &config.hyper,
        )?;
        write_loss_history(
            &out.join(format!("loss_history_seed{seed}.csv")),
            &result.history,
        )?;
        let predictions = ewgsl_core::labels::LabelSet::new(
            result.membership.y_hat.clone(),
            labels.class_count(),
        )?;
        io::write_labels(
            &out.join(format!("predictions_seed{seed}.tsv")),
            &predictions,
        )?;

        let report = evaluate(&result.membership.y_hat, &labels)?;
        let final_loss = result.history.last().map_or(f64::NAN, |r| r.total);
        let line = MetricsLine::new(seed, "full", &report, result.history.len(), final_loss);
        writeln!(metrics_file, "{}", line.render()?)?;
        println!(
            "seed {seed}: acc={} micro_f1={} ({} epochs, final loss {:.6})",
            pct(report.acc),
            pct(report.micro_f1),
            result.history.len(),
            final_loss
        );
        accs.push(report.acc);
        f1s.push(report.micro_f1);
    }

    let (acc_mean, acc_std) = mean_std(&accs);
    let (f1_mean, f1_std) = mean_std(&f1s);
    let summary = format!(
        "summary over {} seeds: acc mean={} std={}; micro_f1 mean={} std={}",
        seeds.len(),
        pct(acc_mean),
        pct(acc_std),
        pct(f1_mean),
        pct(f1_std)
    );
    println!("{summary}");
    manifest.note(summary);
    manifest.write(&out)?;
    Ok(())
}

fn evaluate_command(
    model_path: &Path,
    graph_path: &Path,
    labels_path: &Path,
    train_labels_path: &Path,
    out: &Path,
) -> Result<()> {
    ensure_dir(out)?;
    let (params, hyper) = load_model(model_path)?;
    let full = io::read_labels(labels_path)?;
    let graph = io::read_graph(graph_path, Some(full.n()))?;
    let labels = io::apply_train_labels(train_labels_path, &full)?;
    if graph.n() != params.node_count() {
        bail!(
            "model was trained on {} nodes but the graph has {}",
            params.node_count(),
            graph.n()
        );
    }
    let topo = AttentionTopology::build(&graph, hyper.self_loop_mode, false);
    let trace = forward(&params, &topo, hyper.alpha)?;
    let report = evaluate(&trace.membership.y_hat, &labels)?;

    let metrics_path = out.join("metrics.jsonl");
    let line = MetricsLine::new(hyper.seed, "full", &report, 0, f64::NAN);
    std::fs::write(&metrics_path, line.render()? + "\n")
        .with_context(|| format!("writing {}", metrics_path.display()))?;

    println!(
        "acc={} micro_f1={} macro_f1={} weighted_f1={} over {} nodes",
        pct(report.acc),
        pct(report.micro_f1),
        pct(report.macro_f1),
        pct(report.weighted_f1),
        report.evaluated
    );
    let config_text = format!(
        "model = {}\ngraph = {}\nlabels = {}\ntrain_labels = {}\n",
        model_path.display(),
        graph_path.display(),
        labels_path.display(),
        train_labels_path.display()
    );
    let mut manifest = Manifest::new("evaluate", &config_text);
    manifest.note(format!(
        "acc={} micro_f1={} evaluated={}",
        pct(report.acc),
        pct(report.micro_f1),
        report.evaluated
    ));
    manifest.write(out)?;
    Ok(())
}

fn ablate_command(common: &CommonOpts) -> Result<()> {
    let (config, out) = resolve_config(common)?;
    let mut manifest = Manifest::new("ablate", &config.render_canonical());
    let table = run_ablation(&config.seeds, &config.hyper, |seed| {
        let (graph, labels, _) = prepare_dataset(&config, seed, common.train_labels.as_deref())
            .map_err(|e| {
                ewgsl_core::error::Error::Config(format!("dataset for seed {seed}: {e}"))
            })?;
        Ok((graph, labels))
    })?;

    let csv_path = out.join("ablation.csv");
    std::fs::write(&csv_path, table.render_csv())
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let rendered = table.render();
    print!("{rendered}");
    for line in rendered.lines() {
        manifest.note(line.to_string());
    }
    manifest.write(&out)?;
    Ok(())
}

fn export_command(
    model_path: &Path,
    graph_path: &Path,
    nodes: &[usize],
    k: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    ensure_dir(out)?;
    let (params, hyper) = load_model(model_path)?;
    let graph = io::read_graph(graph_path, Some(params.node_count()))?;
    let nodes: Vec<usize> = if nodes.is_empty() {
        // The case-study default: five seeded picks.
        use rand::seq::SliceRandom;
        let mut rng = seeding::stream_rng(seed, seeding::streams::EXPORT);
        let mut all: Vec<usize> = (0..graph.n()).collect();
        all.shuffle(&mut rng);
        all.truncate(5.min(graph.n()));
        all.sort_unstable();
        all
    } else {
        nodes.to_vec()
    };
    let export = export_attention(&params, &graph, &hyper, &nodes, k)?;
    let csv = export.render_csv();
    let csv_path = out.join("attention.csv");
    std::fs::write(&csv_path, &csv).with_context(|| format!("writing {}", csv_path.display()))?;
    println!(
        "exported {} rows ({} nodes x {k} slots) to {}",
        export.entries.len(),
        nodes.len(),
        csv_path.display()
    );
    let config_text = format!(
        "model = {}\ngraph = {}\nnodes = {:?}\nk = {k}\nseed = {seed}\n",
        model_path.display(),
        graph_path.display(),
        nodes
    );
    let mut manifest = Manifest::new("export-attention", &config_text);
    manifest.note(format!("csv_sha256 = {}", sha256_hex(csv.as_bytes())));
    manifest.write(out)?;
    Ok(())
}
