//! Analytic-vs-numeric gradient checks over the encoder, every decoder and
//! the fused classifier, on a small seeded graph with all four relations.

use serde::{Deserialize, Serialize};

use crate::autoenc::{finite_diff_check, DecoderKind, GaeParams};
use crate::classifier::{classifier_grad_check, prepare_examples, ClassifierConfig, ClassifierParams, FusionMode};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::pipeline::{build_relation_graph, split_records};
use crate::ingest::{InteractionRecord, Label};
use crate::relgraph::RelationGraph;
use crate::synth::{fusion_dataset, FusionSynthConfig};
use crate::textfeat::TextSource;

pub const DEFAULT_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckEntry {
    pub name: String,
    pub probes: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub eps: f64,
    pub tolerance: f64,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.entries.iter().map(|e| e.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.max_rel_error < self.tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckConfig {
    pub probes: usize,
    pub eps: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub d: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            probes: 100,
            eps: 1e-5,
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
            d: 6,
        }
    }
}

/// Fusion dataset graph of about a dozen authors: training edges of all three signed types
/// plus interaction edges for held-out pairs.
fn probe_graph(seed: u64) -> Result<(RelationGraph, Vec<InteractionRecord>)> {
    let mut records = fusion_dataset(&FusionSynthConfig {
        records: 48,
        authors: 10,
        topics: 2,
        seed,
        ..Default::default()
    })?;
    // pairs whose opinions cancel out become acquaintances
    for i in 0..3 {
        for (j, label) in [Label::Agree, Label::Disagree].into_iter().enumerate() {
            let mut r = records[0].clone();
            r.id = format!("mixed{i}_{j}");
            r.reply_author = format!("m{i}");
            r.comment_author = format!("u{i}");
            r.label = label;
            r.timestamp = j as u64;
            records.push(r);
        }
    }
    let cfg = RunConfig {
        seed,
        ..Default::default()
    };
    let split = split_records(&records, &cfg)?;
    let graph = build_relation_graph(&split, &cfg)?;
    if graph.relation_counts().contains(&0) {
        return Err(Error::Empty(format!("probe graph is missing a relation type: {:?}", graph.relation_counts())));
    }
    Ok((graph, split.train))
}

/// Encoder + each decoder on the pretraining loss, then the full classifier
/// path (concat and add fusion) with the encoder unfrozen.
pub fn run_grad_checks(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let (graph, train) = probe_graph(cfg.seed)?;
    let mut entries = Vec::new();
    for decoder in DecoderKind::ALL {
        let params = GaeParams::init(graph.num_nodes(), cfg.d, decoder, cfg.seed)?;
        entries.push(GradCheckEntry {
            name: format!("encoder+{decoder}"),
            probes: cfg.probes,
            max_rel_error: finite_diff_check(&params, &graph, cfg.probes, cfg.eps)?,
        });
    }
    let text = TextSource::Hash { dim: 8 };
    let examples = prepare_examples(&train[..12.min(train.len())], &graph, &text)?;
    let gae = GaeParams::init(graph.num_nodes(), cfg.d, DecoderKind::DistMult, cfg.seed)?;
    for fusion in [FusionMode::Concat, FusionMode::Add] {
        let d_rel_out = if fusion == FusionMode::Add { 8 } else { 5 };
        let params = ClassifierParams::init(cfg.d, 8, d_rel_out, fusion, cfg.seed)?;
        let cls_cfg = ClassifierConfig {
            fusion,
            d_rel_out,
            seed: cfg.seed,
            ..Default::default()
        };
        entries.push(GradCheckEntry {
            name: format!("classifier-{fusion}+encoder"),
            probes: cfg.probes,
            max_rel_error: classifier_grad_check(&examples, &graph, &gae, &params, &cls_cfg, cfg.probes, cfg.eps)?,
        });
    }
    Ok(GradCheckReport {
        eps: cfg.eps,
        tolerance: cfg.tolerance,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_path_passes() {
        let report = run_grad_checks(&GradCheckConfig::default()).unwrap();
        assert_eq!(report.entries.len(), 5);
        assert!(report.passed(), "{report:?}");
    }
}
