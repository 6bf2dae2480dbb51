//! Classification metrics and breakdowns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;

pub const NUM_CLASSES: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class precision / recall / F1, accuracy and macro-F1. Class order is
/// agree, disagree, neutral.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub per_class: [ClassMetrics; NUM_CLASSES],
    pub accuracy: f64,
    pub macro_f1: f64,
    pub total: usize,
    /// `confusion[gold][pred]`
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

impl MetricsReport {
    /// Zero-support report.
    pub fn empty(key: Option<String>) -> Self {
        MetricsReport {
            key,
            ..Default::default()
        }
    }

    pub fn with_key(mut self, key: impl Into<String>) -> Self {
        self.key = Some(key.into());
        self
    }

    fn from_confusion(confusion: [[usize; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        let total: usize = confusion.iter().flatten().sum();
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let mut per_class = [ClassMetrics::default(); NUM_CLASSES];
        for (c, m) in per_class.iter_mut().enumerate() {
            let tp = confusion[c][c];
            let predicted: usize = (0..NUM_CLASSES).map(|g| confusion[g][c]).sum();
            let support: usize = confusion[c].iter().sum();
            m.precision = ratio(tp, predicted);
            m.recall = ratio(tp, support);
            m.f1 = if m.precision + m.recall == 0.0 {
                0.0
            } else {
                2.0 * m.precision * m.recall / (m.precision + m.recall)
            };
            m.support = support;
        }
        let correct: usize = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
        MetricsReport {
            key: None,
            per_class,
            accuracy: ratio(correct, total),
            macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / NUM_CLASSES as f64,
            total,
            confusion,
        }
    }
}

pub fn compute_metrics(preds: &[Label], golds: &[Label]) -> Result<MetricsReport> {
    if preds.len() != golds.len() {
        return Err(Error::Dimension(format!("{} predictions for {} gold labels", preds.len(), golds.len())));
    }
    if preds.is_empty() {
        return Err(Error::Empty("no predictions to score".into()));
    }
    let mut confusion = [[0usize; NUM_CLASSES]; NUM_CLASSES];
    for (p, g) in preds.iter().zip(golds) {
        confusion[g.index()][p.index()] += 1;
    }
    Ok(MetricsReport::from_confusion(confusion))
}

pub const LENGTH_BUCKETS: [&str; 3] = ["(0,100]", "(100,200]", ">200"];

/// Bucket index of a token count. Zero-token pairs fall into the first
/// bucket so the buckets partition every example.
pub fn length_bucket(tokens: usize) -> usize {
    match tokens {
        0..=100 => 0,
        101..=200 => 1,
        _ => 2,
    }
}

/// One report per token-length bucket, keyed by the bucket label.
pub fn bucket_by_length(token_counts: &[usize], preds: &[Label], golds: &[Label]) -> Result<Vec<MetricsReport>> {
    if token_counts.len() != preds.len() || preds.len() != golds.len() {
        return Err(Error::Dimension("token counts, predictions and gold labels differ in length".into()));
    }
    let mut confusion = [[[0usize; NUM_CLASSES]; NUM_CLASSES]; 3];
    for ((&n, p), g) in token_counts.iter().zip(preds).zip(golds) {
        confusion[length_bucket(n)][g.index()][p.index()] += 1;
    }
    Ok(confusion
        .into_iter()
        .zip(LENGTH_BUCKETS)
        .map(|(c, key)| MetricsReport::from_confusion(c).with_key(key))
        .collect())
}

/// Unweighted mean of each metric across reports (a Table-5 style average).
pub fn average_reports(reports: &[MetricsReport], key: &str) -> Result<MetricsReport> {
    if reports.is_empty() {
        return Err(Error::Empty("no reports to average".into()));
    }
    let n = reports.len() as f64;
    let mut avg = MetricsReport::empty(Some(key.to_string()));
    for r in reports {
        avg.accuracy += r.accuracy / n;
        avg.macro_f1 += r.macro_f1 / n;
        avg.total += r.total;
        for c in 0..NUM_CLASSES {
            avg.per_class[c].precision += r.per_class[c].precision / n;
            avg.per_class[c].recall += r.per_class[c].recall / n;
            avg.per_class[c].f1 += r.per_class[c].f1 / n;
            avg.per_class[c].support += r.per_class[c].support;
            for p in 0..NUM_CLASSES {
                avg.confusion[c][p] += r.confusion[c][p];
            }
        }
    }
    Ok(avg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::*;

    #[test]
    fn perfect_predictions() {
        let golds = [Agree, Disagree, Neutral, Agree];
        let r = compute_metrics(&golds, &golds).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
        assert!(r.per_class.iter().all(|m| m.precision == 1.0 && m.recall == 1.0));
    }

    #[test]
    fn all_agree_on_balanced_gold() {
        let golds: Vec<Label> = (0..9).map(|i| Label::from_index(i % 3).unwrap()).collect();
        let preds = vec![Agree; 9];
        let r = compute_metrics(&preds, &golds).unwrap();
        assert!((r.accuracy - 1.0 / 3.0).abs() < 1e-15);
        // agree: P = 1/3, R = 1, F1 = 0.5; the others score 0
        assert!((r.macro_f1 - 0.5 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_example_reports_absent_classes_as_zero() {
        let r = compute_metrics(&[Disagree], &[Disagree]).unwrap();
        assert_eq!(r.per_class[1].f1, 1.0);
        assert_eq!(r.per_class[0], ClassMetrics::default());
        assert_eq!(r.per_class[2], ClassMetrics::default());
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(compute_metrics(&[], &[]).is_err());
        assert!(compute_metrics(&[Agree], &[Agree, Neutral]).is_err());
    }

    #[test]
    fn short_examples_fill_only_the_first_bucket() {
        let golds = [Agree, Neutral, Disagree];
        let b = bucket_by_length(&[3, 100, 40], &golds, &golds).unwrap();
        assert_eq!(b.iter().map(|r| r.total).collect::<Vec<_>>(), [3, 0, 0]);
        assert_eq!(b[1], MetricsReport::empty(Some("(100,200]".into())));
        assert_eq!(b[2].key.as_deref(), Some(">200"));
    }

    #[test]
    fn buckets_follow_thresholds() {
        let counts = [1usize, 99, 100, 101, 150, 200, 201, 5000];
        let golds = vec![Agree; counts.len()];
        let b = bucket_by_length(&counts, &golds, &golds).unwrap();
        let oracle = |n: usize| if n <= 100 { 0 } else if n <= 200 { 1 } else { 2 };
        for k in 0..3 {
            assert_eq!(b[k].total, counts.iter().filter(|&&n| oracle(n) == k).count());
        }
    }

    #[test]
    fn average_is_unweighted() {
        let a = compute_metrics(&[Agree], &[Agree]).unwrap();
        let b = compute_metrics(&[Agree, Agree], &[Disagree, Disagree]).unwrap();
        let avg = average_reports(&[a, b], "average").unwrap();
        assert_eq!(avg.accuracy, 0.5);
        assert_eq!(avg.total, 3);
    }

    fn labels(n: usize) -> impl Strategy<Value = Vec<Label>> {
        prop::collection::vec((0usize..3).prop_map(|i| Label::from_index(i).unwrap()), n)
    }

    proptest! {
        #[test]
        fn metrics_properties(pairs in (1usize..60).prop_flat_map(|n| (labels(n), labels(n))), perm in 0usize..6) {
            let (preds, golds) = pairs;
            let r = compute_metrics(&preds, &golds).unwrap();
            let trace: usize = (0..3).map(|c| r.confusion[c][c]).sum();
            prop_assert_eq!(r.accuracy, trace as f64 / preds.len() as f64);
            for m in &r.per_class {
                prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.f1));
            }
            let mean = r.per_class.iter().map(|m| m.f1).sum::<f64>() / 3.0;
            prop_assert_eq!(r.macro_f1, mean);

            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let relabel = |l: &Label| Label::from_index(perms[perm][l.index()]).unwrap();
            let p2: Vec<Label> = preds.iter().map(relabel).collect();
            let g2: Vec<Label> = golds.iter().map(relabel).collect();
            let r2 = compute_metrics(&p2, &g2).unwrap();
            prop_assert!((r.macro_f1 - r2.macro_f1).abs() < 1e-12);

            let counts: Vec<usize> = (0..preds.len()).map(|i| i * 7).collect();
            let b = bucket_by_length(&counts, &preds, &golds).unwrap();
            prop_assert_eq!(b.iter().map(|r| r.total).sum::<usize>(), preds.len());

            let text = serde_json::to_string(&r).unwrap();
            prop_assert_eq!(serde_json::from_str::<MetricsReport>(&text).unwrap(), r);
        }
    }
}
