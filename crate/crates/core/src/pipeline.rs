//! The end-to-end run: split → graph → interaction edges → autoencoder
//! pretraining → classifier training → test evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autoenc::{train_gae, GaeParams};
use crate::classifier::{
    evaluate_examples, prepare_examples, train_classifier, Evaluation, PairExample, TrainedClassifier,
};
use crate::config::RunConfig;
use crate::error::Result;
use crate::eval::{compute_metrics, MetricsReport};
use crate::ingest::{temporal_split, temporal_split_per_topic, DatasetSplit, InteractionRecord, Label};
use crate::relgraph::{build_graph, heldout_pairs, inject_interaction_edges, RelationGraph, RelationType};
use crate::textfeat::{EmbeddingTable, TextSource};

pub fn split_records(records: &[InteractionRecord], cfg: &RunConfig) -> Result<DatasetSplit> {
    if cfg.split_per_topic {
        temporal_split_per_topic(records, cfg.ratios())
    } else {
        temporal_split(records, cfg.ratios())
    }
}

/// Training-record graph with interaction edges for every dev/test pair and
/// ρ-retyped training edges. The resolved config is stored in the metadata.
pub fn build_relation_graph(split: &DatasetSplit, cfg: &RunConfig) -> Result<RelationGraph> {
    let graph = build_graph(&split.train, cfg.tau)?;
    let mut graph = inject_interaction_edges(graph, &heldout_pairs(split.heldout()), cfg.rho, cfg.seed)?;
    graph.meta.config = Some(cfg.to_value());
    Ok(graph)
}

/// Pretrained encoder parameters (or the seeded initialization under the
/// no-pretraining ablation) and the final pretraining loss.
pub fn pretrain(graph: &RelationGraph, cfg: &RunConfig) -> Result<(GaeParams, Option<f64>)> {
    let gae_cfg = cfg.gae_config(cfg.seed);
    if cfg.no_pretrain || graph.num_edges() == 0 {
        let mut init = GaeParams::init(graph.num_nodes(), gae_cfg.d, gae_cfg.decoder, gae_cfg.seed)?;
        init.margin = gae_cfg.margin;
        return Ok((init, None));
    }
    let trained = train_gae(graph, &gae_cfg)?;
    Ok((trained.params, Some(trained.final_loss)))
}

pub fn text_source(cfg: &RunConfig) -> Result<TextSource> {
    Ok(match &cfg.embeddings {
        Some(path) => TextSource::Table(EmbeddingTable::load(path)?),
        None => TextSource::Hash { dim: cfg.text_dim },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub relation_counts: BTreeMap<String, usize>,
    /// Edges built from training records (before held-out pairs were added).
    pub training_edges: usize,
    pub retyped: usize,
    pub retyped_fraction: f64,
    pub heldout_edges: usize,
}

impl GraphStats {
    pub fn of(graph: &RelationGraph) -> Self {
        let counts = graph.relation_counts();
        let heldout = graph.heldout_pairs().len();
        let training = graph.num_edges() - heldout;
        let retyped = graph.retyped().len();
        GraphStats {
            nodes: graph.num_nodes(),
            edges: graph.num_edges(),
            relation_counts: RelationType::ALL
                .iter()
                .map(|r| (r.name().to_string(), counts[r.index()]))
                .collect(),
            training_edges: training,
            retyped,
            retyped_fraction: if training == 0 { 0.0 } else { retyped as f64 / training as f64 },
            heldout_edges: heldout,
        }
    }
}

/// Everything one pipeline run reports; serialized as the run's JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    /// Held-out topic of a cross-domain run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heldout_topic: Option<String>,
    pub split_sizes: [usize; 3],
    pub graph: GraphStats,
    pub gae_final_loss: Option<f64>,
    pub best_epoch: Option<usize>,
    pub best_dev_macro_f1: Option<f64>,
    pub dev_macro_f1: Vec<f64>,
    pub test: MetricsReport,
    pub per_topic: Vec<MetricsReport>,
    pub by_length: Vec<MetricsReport>,
}

pub struct RunOutput {
    pub split: DatasetSplit,
    pub graph: RelationGraph,
    pub pretrained: GaeParams,
    pub classifier: TrainedClassifier,
    pub evaluation: Evaluation,
    pub report: RunReport,
}

pub fn per_topic_reports(examples: &[PairExample], preds: &[Label]) -> Result<Vec<MetricsReport>> {
    let mut groups: BTreeMap<&str, (Vec<Label>, Vec<Label>)> = BTreeMap::new();
    for (ex, &p) in examples.iter().zip(preds) {
        let g = groups.entry(ex.topic.as_str()).or_default();
        g.0.push(p);
        g.1.push(ex.label);
    }
    groups
        .into_iter()
        .map(|(topic, (p, g))| Ok(compute_metrics(&p, &g)?.with_key(topic)))
        .collect()
}

/// Runs every stage on an existing split.
pub fn run_split(split: DatasetSplit, cfg: &RunConfig, heldout_topic: Option<&str>) -> Result<RunOutput> {
    cfg.validate()?;
    let graph = build_relation_graph(&split, cfg)?;
    let (pretrained, gae_loss) = pretrain(&graph, cfg)?;
    let text = text_source(cfg)?;
    let train = prepare_examples(&split.train, &graph, &text)?;
    let dev = prepare_examples(&split.dev, &graph, &text)?;
    let test = prepare_examples(&split.test, &graph, &text)?;
    let cls_cfg = cfg.classifier_config(cfg.seed);
    let classifier = train_classifier(&train, &dev, &graph, &pretrained, &cls_cfg)?;
    let evaluation = evaluate_examples(&test, &graph, &classifier.gae, &classifier.params, cls_cfg.query_edge)?;
    let preds: Vec<Label> = evaluation.predictions.iter().map(|p| p.pred).collect();
    let report = RunReport {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        heldout_topic: heldout_topic.map(str::to_string),
        split_sizes: [split.train.len(), split.dev.len(), split.test.len()],
        graph: GraphStats::of(&graph),
        gae_final_loss: gae_loss,
        best_epoch: classifier.best_epoch,
        best_dev_macro_f1: classifier.best_dev_macro_f1,
        dev_macro_f1: classifier.dev_macro_f1.clone(),
        test: evaluation.report.clone(),
        per_topic: per_topic_reports(&test, &preds)?,
        by_length: evaluation.by_length.clone(),
    };
    Ok(RunOutput {
        split,
        graph,
        pretrained,
        classifier,
        evaluation,
        report,
    })
}

/// Splits `records` per the config and runs every stage.
pub fn run_pipeline(records: &[InteractionRecord], cfg: &RunConfig) -> Result<RunOutput> {
    run_split(split_records(records, cfg)?, cfg, None)
}
