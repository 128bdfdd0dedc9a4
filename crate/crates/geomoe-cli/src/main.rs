//! `geomoe`: generate synthetic heterogeneous graphs, analyze their
//! sectional curvature, train the mixture-of-curvature-experts embedding,
//! and re-evaluate saved runs.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geomoe::graph::curvature::curvature_histogram;
use geomoe::graph::io;
use geomoe::graph::synth::{generate_heterogeneous, structural_node_features, SyntheticSpec};
use geomoe::graph::Graph;
use geomoe::mixture::{export_embeddings_csv, export_gating_csv};
use geomoe::report::{
    average_distortion, emit_report, DistortionOptions, PairMode,
};
use geomoe::training::{
    build_model, evaluate, log_csv, train, Checkpoint, TaskKind, TrainConfig,
};
use geomoe::ParamStore;

const THREADS_ENV: &str = "GEOMOE_THREADS";

#[derive(Parser)]
#[command(
    name = "geomoe",
    version,
    about = "Heterogeneous-curvature graph embedding: curvature-expert mixture with topology-aware gating",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ThreadOpts {
    /// Worker threads for parallel evaluation (default: GEOMOE_THREADS or
    /// all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Force single-threaded, ordered execution for bit-reproducible runs.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph with mixed topological substructures.
    Generate {
        /// Approximate node count.
        #[arg(long)]
        nodes: usize,
        /// Substructure mix, e.g. `tree:0.5,cycle:0.4,inter:0.1`.
        /// tree/cycle/grid fractions partition the nodes; `inter` is the
        /// count of random cross-substructure edges as a fraction of nodes.
        #[arg(long, default_value = "tree:0.5,cycle:0.4,inter:0.1")]
        mix: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Feature dimension for the structural node features.
        #[arg(long, default_value_t = 32)]
        feat_dim: usize,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Sectional-curvature histogram of a graph.
    AnalyzeCurvature {
        /// Edge-list path.
        #[arg(long)]
        graph: PathBuf,
        /// Triangle sample budget (full enumeration when the graph has
        /// fewer triangles).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Histogram CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train link prediction or node classification on a graph.
    Train {
        /// `lp` or `nc`.
        #[arg(long)]
        task: String,
        /// Edge-list path.
        #[arg(long)]
        graph: PathBuf,
        /// Feature file (`N d` header); synthesized structural features are
        /// used when omitted.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Label file (`node_id class_id` lines); required for `nc`.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Config file with dotted keys (see README).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Run directory for config echo, checkpoint, log, and report.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        threads: ThreadOpts,
    },
    /// Recompute metrics for a finished run directory.
    Evaluate {
        /// Run directory containing config.echo and checkpoint.json.
        #[arg(long)]
        run: PathBuf,
        /// Edge-list path of the dataset the run was trained on.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Pair mode for average distortion: `full`, `sampled`, or `auto`.
        #[arg(long, default_value = "auto")]
        pairs: String,
        #[command(flatten)]
        threads: ThreadOpts,
    },
}

/// Errors mapped to exit codes.
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(format!("{e}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn init_threads(opts: &ThreadOpts) {
    let n = if opts.deterministic {
        1
    } else if let Some(n) = opts.threads {
        n.max(1)
    } else if let Ok(env) = std::env::var(THREADS_ENV) {
        env.parse().unwrap_or(0)
    } else {
        0 // rayon default: all cores
    };
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { nodes, mix, seed, feat_dim, out } => {
            cmd_generate(nodes, &mix, seed, feat_dim, &out)
        }
        Command::AnalyzeCurvature { graph, samples, seed, out } => {
            cmd_analyze_curvature(&graph, samples, seed, out.as_deref())
        }
        Command::Train { task, graph, features, labels, config, seed, out, threads } => {
            init_threads(&threads);
            cmd_train(
                &task,
                &graph,
                features.as_deref(),
                labels.as_deref(),
                config.as_deref(),
                seed,
                threads.deterministic,
                &out,
            )
        }
        Command::Evaluate { run, graph, features, labels, pairs, threads } => {
            init_threads(&threads);
            cmd_evaluate(&run, &graph, features.as_deref(), labels.as_deref(), &pairs)
        }
    }
}

fn cmd_generate(
    nodes: usize,
    mix: &str,
    seed: u64,
    feat_dim: usize,
    out: &Path,
) -> Result<(), CliError> {
    let spec = SyntheticSpec::from_mix(nodes, mix, seed).map_err(usage)?;
    let g = generate_heterogeneous(&spec).map_err(usage)?;
    let feats = structural_node_features(&g, feat_dim, seed);

    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    io::write_edge_list(&out.join("edges.txt"), &g)
        .map_err(|e| CliError::Runtime(format!("{e}")))?;
    io::write_features(&out.join("features.txt"), &feats)
        .map_err(|e| CliError::Runtime(format!("{e}")))?;

    let manifest = serde_json::json!({
        "spec": spec,
        "seed": seed,
        "n_nodes": g.n_nodes(),
        "n_edges": g.n_edges(),
        "part_ranges": spec
            .part_ranges()
            .iter()
            .map(|r| [r.start, r.end])
            .collect::<Vec<_>>(),
        "feat_dim": feat_dim,
    });
    std::fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(|e| CliError::Runtime(format!("{e}")))?;

    println!(
        "generated {} nodes, {} edges ({} substructures, {} inter edges) -> {}",
        g.n_nodes(),
        g.n_edges(),
        spec.parts.len(),
        spec.inter_edges,
        out.display()
    );
    Ok(())
}

fn cmd_analyze_curvature(
    graph: &Path,
    samples: Option<usize>,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let g = io::load_dataset(graph, None, None).map_err(usage)?;
    if g.n_nodes() == 0 || g.n_edges() == 0 {
        return Err(CliError::Usage("graph has no edges to analyze".into()));
    }
    let hist = curvature_histogram(&g, samples, seed);
    if hist.degenerate {
        return Err(CliError::Usage(
            "no node of degree >= 2; curvature histogram is empty".into(),
        ));
    }
    println!("samples = {}", hist.n_samples);
    println!("mean = {:.6}", hist.mean);
    println!("fraction_negative = {:.6}", hist.fraction_negative);
    println!("fraction_nonnegative = {:.6}", hist.fraction_nonnegative);
    if let Some(path) = out {
        std::fs::write(path, hist.to_csv())
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        println!("histogram -> {}", path.display());
    }
    Ok(())
}

fn load_graph_for_training(
    task: TaskKind,
    graph: &Path,
    features: Option<&Path>,
    labels: Option<&Path>,
    cfg: &TrainConfig,
) -> Result<Graph, CliError> {
    if task == TaskKind::NodeClassification && labels.is_none() {
        return Err(CliError::Usage("--task nc requires --labels".into()));
    }
    let mut g = io::load_dataset(graph, features, labels).map_err(usage)?;
    if g.features().is_none() {
        let dim = cfg.d_in.unwrap_or(32);
        log::info!("no feature file given; synthesizing {dim}-dim structural features");
        let feats = structural_node_features(&g, dim, cfg.seed);
        g.set_features(feats).map_err(usage)?;
    }
    Ok(g)
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    task: &str,
    graph: &Path,
    features: Option<&Path>,
    labels: Option<&Path>,
    config: Option<&Path>,
    seed: Option<u64>,
    deterministic: bool,
    out: &Path,
) -> Result<(), CliError> {
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            TrainConfig::from_toml_str(&text).map_err(usage)?
        }
        None => TrainConfig::default(),
    };
    cfg.task = task.parse().map_err(usage)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if deterministic {
        cfg.deterministic = true;
    }
    cfg.validate().map_err(usage)?;

    let g = load_graph_for_training(cfg.task, graph, features, labels, &cfg)?;

    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;

    let outcome = train(&g, &cfg).map_err(|e| match e {
        geomoe::TrainingError::Usage(m) => CliError::Usage(m),
        geomoe::TrainingError::Config(e) => CliError::Usage(format!("{e}")),
        geomoe::TrainingError::Graph(e) => CliError::Usage(format!("{e}")),
        other => CliError::Runtime(format!("{other}")),
    })?;

    write_run_dir(out, &outcome).map_err(|e| CliError::Runtime(format!("{e}")))?;

    if outcome.diverged {
        eprintln!("training diverged; partial artifacts retained in {}", out.display());
        return Err(CliError::Runtime("training diverged".into()));
    }

    println!("{}", summary_line(&outcome.report));
    println!("run artifacts -> {}", out.display());
    Ok(())
}

fn summary_line(report: &geomoe::EvalReport) -> String {
    let mut parts = vec![format!("task={}", report.task)];
    if let Some(a) = report.auc {
        parts.push(format!("auc={a:.4}"));
    }
    if let Some(a) = report.ap {
        parts.push(format!("ap={a:.4}"));
    }
    if let Some(w) = report.weighted_f1 {
        parts.push(format!("weighted_f1={w:.4}"));
    }
    if let Some(m) = report.macro_f1 {
        parts.push(format!("macro_f1={m:.4}"));
    }
    parts.push(format!("avg_distortion={:.4}", report.avg_distortion));
    parts.join(" ")
}

fn write_run_dir(out: &Path, outcome: &geomoe::TrainOutcome) -> anyhow::Result<()> {
    std::fs::write(out.join("config.echo"), outcome.resolved.echo_string())?;
    Checkpoint::from_store(&outcome.store).save(&out.join("checkpoint.json"))?;
    std::fs::write(out.join("log.csv"), log_csv(&outcome.log))?;
    emit_report(&outcome.report, &outcome.log, &outcome.per_node_distortion, out)?;
    let spaces = outcome.model.bank.spaces(&outcome.store);
    export_embeddings_csv(&out.join("embeddings.csv"), &spaces, &outcome.values.z)?;
    export_gating_csv(&out.join("gating.csv"), &outcome.values.gates)?;
    Ok(())
}

fn cmd_evaluate(
    run: &Path,
    graph: &Path,
    features: Option<&Path>,
    labels: Option<&Path>,
    pairs: &str,
) -> Result<(), CliError> {
    let pair_mode = match pairs {
        "full" => PairMode::Full,
        "sampled" => PairMode::Sampled,
        "auto" => PairMode::Auto,
        other => {
            return Err(CliError::Usage(format!(
                "--pairs must be full|sampled|auto, got `{other}`"
            )))
        }
    };

    let echo_path = run.join("config.echo");
    let echo = std::fs::read_to_string(&echo_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", echo_path.display())))?;
    let cfg = TrainConfig::from_toml_str(&echo).map_err(usage)?;

    let g = load_graph_for_training(cfg.task, graph, features, labels, &cfg)?;

    let checkpoint = Checkpoint::load(&run.join("checkpoint.json")).map_err(usage)?;
    let mut store = ParamStore::new();
    let n_classes = match cfg.task {
        TaskKind::NodeClassification => {
            let labels = g
                .labels()
                .ok_or_else(|| CliError::Usage("node classification requires labels".into()))?;
            Some(
                labels.iter().flatten().copied().max().map(|m| m as usize + 1).ok_or_else(
                    || CliError::Usage("label file contains no labeled nodes".into()),
                )?,
            )
        }
        TaskKind::LinkPrediction => None,
    };
    let model = build_model(&mut store, &cfg, n_classes).map_err(usage)?;
    checkpoint.restore_into(&mut store).map_err(usage)?;

    let (mut report, per_node, values) =
        evaluate(&g, &cfg, &store, &model).map_err(|e| CliError::Runtime(format!("{e}")))?;

    // Recompute distortion under the requested pair mode when it differs
    // from the auto policy used inside `evaluate`.
    if pair_mode != PairMode::Auto {
        let spaces = model.bank.spaces(&store);
        let opts = DistortionOptions {
            mode: pair_mode,
            budget: cfg.pair_budget,
            seed: cfg.seed,
            tau: cfg.tau,
        };
        let d = average_distortion(&spaces, &values.z, &values.gates, &g, &opts)
            .map_err(|e| CliError::Runtime(format!("{e}")))?;
        report.avg_distortion = d.mean;
        emit_report(&report, &read_curves(run), &d.per_node, run)
            .map_err(|e| CliError::Runtime(format!("{e}")))?;
    } else {
        emit_report(&report, &read_curves(run), &per_node, run)
            .map_err(|e| CliError::Runtime(format!("{e}")))?;
    }

    println!("{}", summary_line(&report));
    Ok(())
}

/// Existing per-epoch curves are preserved on re-evaluation.
fn read_curves(run: &Path) -> Vec<geomoe::EpochRow> {
    let path = run.join("log.csv");
    let Ok(text) = std::fs::read_to_string(&path) else {
        return Vec::new();
    };
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            continue;
        }
        let (Ok(epoch), Ok(task_loss), Ok(distortion_loss), Ok(val_metric)) = (
            cells[0].parse(),
            cells[1].parse(),
            cells[2].parse(),
            cells[3].parse(),
        ) else {
            continue;
        };
        rows.push(geomoe::EpochRow { epoch, task_loss, distortion_loss, val_metric });
    }
    rows
}
