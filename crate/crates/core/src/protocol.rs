//! In-domain and cross-domain experiment protocols over seeds and topics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ProtocolMode, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{average_reports, MetricsReport};
use crate::ingest::{cut, sort_temporally, DatasetSplit, InteractionRecord};
use crate::pipeline::{run_split, split_records, RunReport};

/// Topics seen by one run's training records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heldout_topic: Option<String>,
    pub train_topics: BTreeSet<String>,
    /// True when no training or dev record carries the held-out topic.
    pub clean: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub topic: String,
    pub runs: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub mode: ProtocolMode,
    pub runs: Vec<RunReport>,
    /// Per seed: the cross-domain unweighted average over topics, or the
    /// in-domain overall test report.
    pub summary: Vec<(u64, MetricsReport)>,
    pub mean_std: Vec<MeanStd>,
    pub audit: Vec<AuditEntry>,
}

fn mean_std(topic: &str, reports: &[&MetricsReport]) -> MeanStd {
    let n = reports.len() as f64;
    let stats = |f: &dyn Fn(&MetricsReport) -> f64| {
        let mean = reports.iter().map(|r| f(r)).sum::<f64>() / n;
        let var = reports.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (am, asd) = stats(&|r| r.accuracy);
    let (fm, fsd) = stats(&|r| r.macro_f1);
    MeanStd {
        topic: topic.to_string(),
        runs: reports.len(),
        accuracy_mean: am,
        accuracy_std: asd,
        macro_f1_mean: fm,
        macro_f1_std: fsd,
    }
}

fn audit(split: &DatasetSplit, seed: u64, heldout: Option<&str>) -> AuditEntry {
    let train_topics: BTreeSet<String> = split.train.iter().map(|r| r.topic.clone()).collect();
    let clean = heldout.is_none_or(|t| split.train.iter().chain(&split.dev).all(|r| r.topic != t));
    AuditEntry {
        seed,
        heldout_topic: heldout.map(str::to_string),
        train_topics,
        clean,
    }
}

/// Split for testing on `topic`: the other topics are split in time into
/// train and dev with the configured train:dev proportion, and every record
/// of `topic` is test data.
pub fn cross_domain_split(records: &[InteractionRecord], topic: &str, cfg: &RunConfig) -> Result<DatasetSplit> {
    let (others, test): (Vec<InteractionRecord>, Vec<InteractionRecord>) =
        records.iter().cloned().partition(|r| r.topic != topic);
    if test.is_empty() {
        return Err(Error::Empty(format!("no records for topic {topic:?}")));
    }
    let (a, b, _) = cfg.ratios();
    let mut train = sort_temporally(&others);
    let n = train.len();
    let n_train = cut(a / (a + b), n);
    if n_train == 0 || n_train >= n {
        return Err(Error::Empty(format!(
            "{n} records outside topic {topic:?} are too few for a train/dev split"
        )));
    }
    let dev = train.split_off(n_train);
    Ok(DatasetSplit {
        train,
        dev,
        test: sort_temporally(&test),
    })
}

pub fn topics(records: &[InteractionRecord]) -> BTreeSet<String> {
    records.iter().map(|r| r.topic.clone()).collect()
}

/// Runs the configured protocol once per seed (and, cross-domain, once per
/// held-out topic), each run an independent pipeline.
pub fn run_protocol(records: &[InteractionRecord], mode: ProtocolMode, cfg: &RunConfig) -> Result<ProtocolReport> {
    let mut runs = Vec::new();
    let mut summary = Vec::new();
    let mut audit_log = Vec::new();
    let mut by_topic: BTreeMap<String, Vec<MetricsReport>> = BTreeMap::new();
    match mode {
        ProtocolMode::InDomain => {
            for seed in cfg.seed_list() {
                let run_cfg = cfg.with_seed(seed);
                let split = split_records(records, &run_cfg)?;
                audit_log.push(audit(&split, seed, None));
                let out = run_split(split, &run_cfg, None)?;
                summary.push((seed, out.report.test.clone().with_key("all")));
                by_topic.entry("all".into()).or_default().push(out.report.test.clone());
                for t in &out.report.per_topic {
                    by_topic.entry(t.key.clone().unwrap_or_default()).or_default().push(t.clone());
                }
                runs.push(out.report);
            }
        }
        ProtocolMode::CrossDomain => {
            let all = topics(records);
            if all.len() < 2 {
                return Err(Error::Config(format!(
                    "cross-domain evaluation needs at least 2 topics, found {}",
                    all.len()
                )));
            }
            for seed in cfg.seed_list() {
                let run_cfg = cfg.with_seed(seed);
                let mut per_topic = Vec::new();
                for topic in &all {
                    let split = cross_domain_split(records, topic, &run_cfg)?;
                    let entry = audit(&split, seed, Some(topic));
                    if !entry.clean {
                        return Err(Error::Config(format!("topic {topic:?} leaked into training")));
                    }
                    audit_log.push(entry);
                    let out = run_split(split, &run_cfg, Some(topic))?;
                    let report = out.report.test.clone().with_key(topic.clone());
                    by_topic.entry(topic.clone()).or_default().push(report.clone());
                    per_topic.push(report);
                    runs.push(out.report);
                }
                let avg = average_reports(&per_topic, "average")?;
                by_topic.entry("average".into()).or_default().push(avg.clone());
                summary.push((seed, avg));
            }
        }
    }
    let mean_std = by_topic
        .iter()
        .map(|(t, rs)| mean_std(t, &rs.iter().collect::<Vec<_>>()))
        .collect();
    Ok(ProtocolReport {
        mode,
        runs,
        summary,
        mean_std,
        audit: audit_log,
    })
}

fn mode_name(mode: ProtocolMode) -> &'static str {
    match mode {
        ProtocolMode::InDomain => "in-domain",
        ProtocolMode::CrossDomain => "cross-domain",
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "mode",
    "topic",
    "seed",
    "acc",
    "macro_f1",
    "agree_p",
    "agree_r",
    "agree_f1",
    "disagree_p",
    "disagree_r",
    "disagree_f1",
    "neutral_p",
    "neutral_r",
    "neutral_f1",
];

fn csv_row(mode: ProtocolMode, topic: &str, seed: u64, r: &MetricsReport) -> Vec<String> {
    let mut row = vec![
        mode_name(mode).to_string(),
        topic.to_string(),
        seed.to_string(),
        r.accuracy.to_string(),
        r.macro_f1.to_string(),
    ];
    for c in &r.per_class {
        row.extend([c.precision.to_string(), c.recall.to_string(), c.f1.to_string()]);
    }
    row
}

impl ProtocolReport {
    /// One row per (topic, seed) report, plus the per-seed summary rows.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for run in &self.runs {
            match &run.heldout_topic {
                Some(t) => rows.push(csv_row(self.mode, t, run.seed, &run.test)),
                None => {
                    rows.push(csv_row(self.mode, "all", run.seed, &run.test));
                    for t in &run.per_topic {
                        rows.push(csv_row(self.mode, t.key.as_deref().unwrap_or(""), run.seed, t));
                    }
                }
            }
        }
        if self.mode == ProtocolMode::CrossDomain {
            for (seed, avg) in &self.summary {
                rows.push(csv_row(self.mode, "average", *seed, avg));
            }
        }
        rows
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(CSV_HEADER)?;
        for row in self.csv_rows() {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// `<dir>/protocol.json`, `<dir>/aggregate.csv` and one JSON report per
    /// run under `<dir>/runs/`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let runs = dir.join("runs");
        std::fs::create_dir_all(&runs).map_err(|e| Error::io(&runs, e))?;
        for run in &self.runs {
            let name = match &run.heldout_topic {
                Some(t) => format!("{}-seed{}.json", sanitize(t), run.seed),
                None => format!("all-seed{}.json", run.seed),
            };
            let p = runs.join(name);
            std::fs::write(&p, serde_json::to_string_pretty(run)?).map_err(|e| Error::io(&p, e))?;
        }
        let p = dir.join("protocol.json");
        std::fs::write(&p, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&p, e))?;
        self.write_csv(dir.join("aggregate.csv"))
    }
}

pub(crate) fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{fusion_dataset, FusionSynthConfig};

    fn tiny_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.apply([
            ("d", "4"),
            ("d_rel_out", "4"),
            ("text_dim", "8"),
            ("gae_epochs", "3"),
            ("cls_epochs", "2"),
        ])
        .unwrap();
        cfg
    }

    fn records(topics: usize) -> Vec<InteractionRecord> {
        fusion_dataset(&FusionSynthConfig {
            records: 150,
            authors: 60,
            topics,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn cross_domain_reports_each_topic_and_an_average() {
        let recs = records(3);
        let report = run_protocol(&recs, ProtocolMode::CrossDomain, &tiny_config()).unwrap();
        assert_eq!(report.runs.len(), 3);
        assert_eq!(report.summary.len(), 1);
        for (run, entry) in report.runs.iter().zip(&report.audit) {
            let t = run.heldout_topic.as_ref().unwrap();
            assert!(entry.clean && !entry.train_topics.contains(t));
            assert_eq!(run.split_sizes[2], recs.iter().filter(|r| &r.topic == t).count());
        }
        let avg = &report.summary[0].1;
        let mean = report.runs.iter().map(|r| r.test.macro_f1).sum::<f64>() / 3.0;
        assert!((avg.macro_f1 - mean).abs() < 1e-12);
        assert_eq!(report.csv_rows().len(), 4);
    }

    #[test]
    fn cross_domain_needs_two_topics() {
        let recs = records(1);
        assert!(run_protocol(&recs, ProtocolMode::CrossDomain, &tiny_config()).is_err());
    }

    #[test]
    fn in_domain_topic_supports_sum_to_test_size() {
        let mut cfg = tiny_config();
        cfg.set("seeds", "0,1").unwrap();
        let report = run_protocol(&records(3), ProtocolMode::InDomain, &cfg).unwrap();
        assert_eq!(report.runs.len(), 2);
        for run in &report.runs {
            let total: usize = run.per_topic.iter().map(|r| r.total).sum();
            assert_eq!(total, run.split_sizes[2]);
        }
        let all = report.mean_std.iter().find(|m| m.topic == "all").unwrap();
        assert_eq!(all.runs, 2);
        let dir = tempfile::tempdir().unwrap();
        report.write_dir(dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
        assert!(csv.starts_with("mode,topic,seed,acc,macro_f1,agree_p"));
        let back: ProtocolReport =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("protocol.json")).unwrap()).unwrap();
        assert_eq!(back, report);
    }
}
