//! `stancegraph` command line: each subcommand is one pipeline stage and
//! they chain through files in the run directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::autoenc::GaeCheckpoint;
use crate::classifier::{evaluate_examples, prepare_examples, train_classifier, ClassifierCheckpoint, Prediction};
use crate::config::{ProtocolMode, RunConfig};
use crate::error::{Error, Result};
use crate::gradcheck::{run_grad_checks, GradCheckConfig};
use crate::ingest::{parse_dataset, write_dataset, Format, InteractionRecord};
use crate::pipeline::{build_relation_graph, per_topic_reports, pretrain, run_pipeline, split_records, text_source, GraphStats};
use crate::protocol::{run_protocol, sanitize};
use crate::relgraph::RelationGraph;
use crate::synth::{fusion_dataset, two_community_graph, FusionSynthConfig};
use crate::textfeat::featurize_records;

#[derive(Parser, Debug)]
#[command(name = "stancegraph", version, about = "Relation-graph features for (dis)agreement classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    /// `per-edge` or a window length in seconds.
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    fusion: Option<String>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the relation graph from the training split.
    BuildGraph {
        #[command(flatten)]
        common: Common,
        /// Output path (default: <run dir>/graph.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pretrain the relational graph autoencoder on a graph.
    PretrainGae {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write hashed text features for every record as an embedding table.
    Featurize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the fused classifier.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graph: PathBuf,
        /// Pretrained autoencoder checkpoint; omitted means a seeded
        /// initialization.
        #[arg(long)]
        gae: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a trained classifier, or run the whole pipeline, a sweep or
    /// a protocol.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "graph")]
        model: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// `rho=0,0.1,...` or `tau=per-edge,3600,...`
        #[arg(long, value_name = "KEY=V1,V2,...", conflicts_with = "model")]
        sweep: Option<String>,
        #[arg(long, value_enum, conflicts_with_all = ["model", "sweep"])]
        protocol: Option<ProtocolArg>,
    },
    /// Compare analytic gradients with central differences.
    GradCheck {
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = crate::gradcheck::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a deterministic synthetic dataset or graph.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Two-community graph size.
        #[arg(long, default_value_t = 60)]
        nodes: usize,
        #[arg(long, default_value_t = 2000)]
        records: usize,
        #[arg(long, default_value_t = 800)]
        authors: usize,
        #[arg(long, default_value_t = 5)]
        topics: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProtocolArg {
    InDomain,
    CrossDomain,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthKind {
    /// Signed graph: supporters within, opponents across two communities.
    TwoCommunity,
    /// Dataset whose label follows the pair's relation.
    Fusion,
}

impl Common {
    fn flags(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let named: [(&str, Option<String>); 9] = [
            ("data", self.data.as_ref().map(|p| p.display().to_string())),
            ("format", self.format.clone()),
            ("rho", self.rho.clone()),
            ("tau", self.tau.clone()),
            ("seed", self.seed.clone()),
            ("decoder", self.decoder.clone()),
            ("fusion", self.fusion.clone()),
            ("embeddings", self.embeddings.as_ref().map(|p| p.display().to_string())),
            ("out_dir", self.out_dir.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        }
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {pair:?}")))?;
            out.push((k.to_string(), v.to_string()));
        }
        Ok(out)
    }

    fn resolve(&self) -> Result<RunConfig> {
        RunConfig::resolve(self.config.as_deref(), std::env::vars(), &self.flags()?)
    }
}

fn records(cfg: &RunConfig) -> Result<Vec<InteractionRecord>> {
    let path = cfg.data.as_ref().ok_or_else(|| Error::Config("no dataset: pass --data".into()))?;
    let format = cfg.format.unwrap_or_else(|| Format::from_path(path));
    parse_dataset(path, format)
}

fn run_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.run_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(cfg)?).map_err(|e| Error::io(&p, e))?;
    Ok(dir)
}

// Refuses to write over any input of the invocation.
fn output_path(out: Option<&Path>, default: PathBuf, inputs: &[Option<&Path>]) -> Result<PathBuf> {
    let path = out.map_or(default, Path::to_path_buf);
    let same = |a: &Path| match (a.canonicalize(), path.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == path,
    };
    if inputs.iter().flatten().any(|i| same(i)) {
        return Err(Error::Config(format!("refusing to overwrite input file {}", path.display())));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(path)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let mut text = String::new();
    for p in predictions {
        text.push_str(&serde_json::to_string(p)?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_graph_for(cfg: &RunConfig, path: &Path) -> Result<RelationGraph> {
    let graph = RelationGraph::load_json(path)?;
    if let Some(built) = &graph.meta.config {
        let built: RunConfig = serde_json::from_value(built.clone()).map_err(|e| Error::Config(e.to_string()))?;
        if built.rho != cfg.rho || built.tau != cfg.tau || built.split != cfg.split || built.seed != cfg.seed {
            eprintln!("warning: {} was built with a different rho, tau, split or seed", path.display());
        }
    }
    Ok(graph)
}

fn build_graph_cmd(common: &Common, out: Option<&Path>) -> Result<()> {
    let cfg = common.resolve()?;
    let split = split_records(&records(&cfg)?, &cfg)?;
    let graph = build_relation_graph(&split, &cfg)?;
    let path = output_path(out, run_dir(&cfg)?.join("graph.json"), &[cfg.data.as_deref()])?;
    graph.save_json(&path)?;
    println!("{}", serde_json::to_string(&GraphStats::of(&graph))?);
    println!("graph: {}", path.display());
    Ok(())
}

fn pretrain_cmd(common: &Common, graph_path: &Path, out: Option<&Path>) -> Result<()> {
    let cfg = common.resolve()?;
    let graph = load_graph_for(&cfg, graph_path)?;
    let (params, final_loss) = pretrain(&graph, &cfg)?;
    let mut ckpt = GaeCheckpoint::new(&params, graph.nodes(), cfg.seed);
    ckpt.final_loss = final_loss;
    ckpt.config = Some(cfg.to_value());
    let path = output_path(out, run_dir(&cfg)?.join("gae.json"), &[Some(graph_path)])?;
    ckpt.save(&path)?;
    if let Some(l) = final_loss {
        println!("final loss {l}");
    }
    println!("gae: {}", path.display());
    Ok(())
}

fn featurize_cmd(common: &Common, out: Option<&Path>) -> Result<()> {
    let cfg = common.resolve()?;
    let table = featurize_records(&records(&cfg)?, cfg.text_dim)?;
    let path = output_path(out, run_dir(&cfg)?.join("embeddings.txt"), &[cfg.data.as_deref()])?;
    table.write(&path)?;
    println!("embeddings: {} rows x {} -> {}", table.len(), table.dim(), path.display());
    Ok(())
}

fn check_nodes(ckpt_nodes: &[String], graph: &RelationGraph) -> Result<()> {
    if ckpt_nodes != graph.nodes() {
        return Err(Error::Config("checkpoint node map does not match the graph".into()));
    }
    Ok(())
}

fn train_cmd(common: &Common, graph_path: &Path, gae_path: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let cfg = common.resolve()?;
    let graph = load_graph_for(&cfg, graph_path)?;
    let gae = match gae_path {
        Some(p) => {
            let ckpt = GaeCheckpoint::load(p)?;
            check_nodes(&ckpt.node_index_map, &graph)?;
            ckpt.params()?
        }
        None => {
            let g = cfg.gae_config(cfg.seed);
            let mut init = crate::autoenc::GaeParams::init(graph.num_nodes(), g.d, g.decoder, g.seed)?;
            init.margin = g.margin;
            init
        }
    };
    let split = split_records(&records(&cfg)?, &cfg)?;
    let text = text_source(&cfg)?;
    let train = prepare_examples(&split.train, &graph, &text)?;
    let dev = prepare_examples(&split.dev, &graph, &text)?;
    let cls_cfg = cfg.classifier_config(cfg.seed);
    let trained = train_classifier(&train, &dev, &graph, &gae, &cls_cfg)?;
    let mut ckpt = ClassifierCheckpoint::new(
        &trained.params,
        GaeCheckpoint::new(&trained.gae, graph.nodes(), cfg.seed),
        cls_cfg.query_edge,
        cfg.seed,
    );
    ckpt.best_epoch = trained.best_epoch;
    ckpt.config = Some(cfg.to_value());
    let inputs = [Some(graph_path), gae_path, cfg.data.as_deref(), cfg.embeddings.as_deref()];
    let path = output_path(out, run_dir(&cfg)?.join("classifier.json"), &inputs)?;
    ckpt.save(&path)?;
    if let (Some(e), Some(f1)) = (trained.best_epoch, trained.best_dev_macro_f1) {
        println!("best epoch {e}, dev macro-F1 {f1:.4}");
    }
    println!("classifier: {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct ModelReport<'a> {
    config: &'a RunConfig,
    config_hash: String,
    model: &'a Path,
    test: &'a crate::eval::MetricsReport,
    per_topic: Vec<crate::eval::MetricsReport>,
    by_length: &'a [crate::eval::MetricsReport],
}

fn evaluate_model(cfg: &RunConfig, model: &Path, graph_path: &Path) -> Result<()> {
    let graph = load_graph_for(cfg, graph_path)?;
    let ckpt = ClassifierCheckpoint::load(model)?;
    check_nodes(&ckpt.gae.node_index_map, &graph)?;
    let (params, gae) = (ckpt.params()?, ckpt.gae.params()?);
    let split = split_records(&records(cfg)?, cfg)?;
    let test = prepare_examples(&split.test, &graph, &text_source(cfg)?)?;
    let eval = evaluate_examples(&test, &graph, &gae, &params, ckpt.query_edge)?;
    let preds: Vec<_> = eval.predictions.iter().map(|p| p.pred).collect();
    let dir = run_dir(cfg)?;
    let report = ModelReport {
        config: cfg,
        config_hash: cfg.hash(),
        model,
        test: &eval.report,
        per_topic: per_topic_reports(&test, &preds)?,
        by_length: &eval.by_length,
    };
    write_json(&dir.join("report.json"), &report)?;
    write_predictions(&dir.join("predictions.jsonl"), &eval.predictions)?;
    println!(
        "test accuracy {:.4}, macro-F1 {:.4} ({} examples)",
        eval.report.accuracy, eval.report.macro_f1, eval.report.total
    );
    println!("report: {}", dir.join("report.json").display());
    Ok(())
}

fn evaluate_pipeline(cfg: &RunConfig) -> Result<()> {
    let out = run_pipeline(&records(cfg)?, cfg)?;
    let dir = run_dir(cfg)?.join("pipeline");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_json(&dir.join("report.json"), &out.report)?;
    write_predictions(&dir.join("predictions.jsonl"), &out.evaluation.predictions)?;
    println!(
        "test accuracy {:.4}, macro-F1 {:.4} ({} examples)",
        out.report.test.accuracy, out.report.test.macro_f1, out.report.test.total
    );
    println!("report: {}", dir.join("report.json").display());
    Ok(())
}

/// Runs one pipeline per sweep value on worker threads; reports keep the
/// order of the values.
pub fn sweep(records: &[InteractionRecord], base: &RunConfig, key: &str, values: &[&str]) -> Result<Vec<(String, crate::pipeline::RunReport)>> {
    let configs = values
        .iter()
        .map(|v| {
            let mut c = base.clone();
            c.set(key, v)?;
            c.validate()?;
            Ok((v.to_string(), c))
        })
        .collect::<Result<Vec<_>>>()?;
    std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(v, c)| s.spawn(move || run_pipeline(records, c).map(|o| (v.clone(), o.report))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Config("sweep worker panicked".into()))))
            .collect()
    })
}

fn evaluate_sweep(cfg: &RunConfig, spec: &str) -> Result<()> {
    let (key, list) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--sweep expects KEY=V1,V2,..., got {spec:?}")))?;
    let key = key.trim().replace('-', "_");
    if key != "rho" && key != "tau" {
        return Err(Error::Config(format!("only rho and tau can be swept, got {key:?}")));
    }
    let values: Vec<&str> = list.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    let reports = sweep(&records(cfg)?, cfg, &key, &values)?;
    let dir = run_dir(cfg)?.join(format!("sweep-{key}"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (v, report) in &reports {
        write_json(&dir.join(format!("{key}={}.json", sanitize(v))), report)?;
        println!(
            "{key}={v}: macro-F1 {:.4}, accuracy {:.4}, retyped {:.4}",
            report.test.macro_f1, report.test.accuracy, report.graph.retyped_fraction
        );
    }
    println!("sweep: {} reports in {}", reports.len(), dir.display());
    Ok(())
}

fn evaluate_protocol(cfg: &RunConfig, mode: ProtocolMode) -> Result<()> {
    let report = run_protocol(&records(cfg)?, mode, cfg)?;
    let dir = run_dir(cfg)?.join(match mode {
        ProtocolMode::InDomain => "in-domain",
        ProtocolMode::CrossDomain => "cross-domain",
    });
    report.write_dir(&dir)?;
    for m in &report.mean_std {
        println!(
            "{}: macro-F1 {:.4} ± {:.4}, accuracy {:.4} ± {:.4} ({} runs)",
            m.topic, m.macro_f1_mean, m.macro_f1_std, m.accuracy_mean, m.accuracy_std, m.runs
        );
    }
    println!("protocol: {}", dir.display());
    Ok(())
}

fn grad_check_cmd(cfg: GradCheckConfig, out: Option<&Path>) -> Result<bool> {
    let report = run_grad_checks(&cfg)?;
    for e in &report.entries {
        let status = if e.max_rel_error < report.tolerance { "pass" } else { "FAIL" };
        println!("{status} {:<28} max relative error {:.3e} ({} probes)", e.name, e.max_rel_error, e.probes);
    }
    println!("max relative error {:.3e} (tolerance {:e})", report.max_error(), report.tolerance);
    if let Some(p) = out {
        write_json(&output_path(Some(p), p.to_path_buf(), &[])?, &report)?;
    }
    Ok(report.passed())
}

fn synth_cmd(kind: SynthKind, out: &Path, cfg: FusionSynthConfig, nodes: usize) -> Result<()> {
    let out = output_path(Some(out), out.to_path_buf(), &[])?;
    match kind {
        SynthKind::TwoCommunity => {
            let graph = two_community_graph(nodes)?;
            graph.save_json(&out)?;
            println!("{} nodes, {} edges -> {}", graph.num_nodes(), graph.num_edges(), out.display());
        }
        SynthKind::Fusion => {
            let records = fusion_dataset(&cfg)?;
            write_dataset(&records, &out, Format::from_path(&out))?;
            println!("{} records -> {}", records.len(), out.display());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::BuildGraph { common, out } => build_graph_cmd(&common, out.as_deref())?,
        Command::PretrainGae { common, graph, out } => pretrain_cmd(&common, &graph, out.as_deref())?,
        Command::Featurize { common, out } => featurize_cmd(&common, out.as_deref())?,
        Command::Train { common, graph, gae, out } => train_cmd(&common, &graph, gae.as_deref(), out.as_deref())?,
        Command::Evaluate {
            common,
            model,
            graph,
            sweep,
            protocol,
        } => {
            let cfg = common.resolve()?;
            match (model, sweep, protocol) {
                (Some(model), _, _) => evaluate_model(&cfg, &model, graph.as_deref().expect("clap requires graph"))?,
                (_, Some(spec), _) => evaluate_sweep(&cfg, &spec)?,
                (_, _, Some(p)) => evaluate_protocol(
                    &cfg,
                    match p {
                        ProtocolArg::InDomain => ProtocolMode::InDomain,
                        ProtocolArg::CrossDomain => ProtocolMode::CrossDomain,
                    },
                )?,
                _ if !cfg.seeds.is_empty() || cfg.mode == ProtocolMode::CrossDomain => evaluate_protocol(&cfg, cfg.mode)?,
                _ => evaluate_pipeline(&cfg)?,
            }
        }
        Command::GradCheck {
            probes,
            eps,
            tolerance,
            seed,
            out,
        } => {
            let cfg = GradCheckConfig {
                probes,
                eps,
                tolerance,
                seed,
                ..Default::default()
            };
            return grad_check_cmd(cfg, out.as_deref());
        }
        Command::Synth {
            kind,
            out,
            seed,
            nodes,
            records,
            authors,
            topics,
        } => synth_cmd(
            kind,
            &out,
            FusionSynthConfig {
                records,
                authors,
                topics,
                seed,
                ..Default::default()
            },
            nodes,
        )?,
    }
    Ok(true)
}

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// process exit code: 0 on success, 1 on a failed stage or check, 2 on a
/// usage error.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            1
        }
    }
}
