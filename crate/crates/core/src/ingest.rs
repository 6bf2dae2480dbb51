//! Interaction datasets: parsing, serialization and temporal splitting.
//!
//! A dataset row is one labeled comment/reply pair. The canonical on-disk
//! form is JSON lines with the keys `id`, `comment`, `reply`,
//! `comment_author`, `reply_author`, `label`, `timestamp` and `topic`; CSV
//! files with the same header names are accepted too. Row numbers in errors
//! are 1-based line numbers in the source file.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stance of a reply toward the comment it answers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Agree,
    Disagree,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Agree, Label::Disagree, Label::Neutral];

    /// Dense class index used by the classifier and the metrics.
    pub fn index(self) -> usize {
        match self {
            Label::Agree => 0,
            Label::Disagree => 1,
            Label::Neutral => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    /// Signed opinion carried into a snapshot cell.
    pub fn sign(self) -> i8 {
        match self {
            Label::Agree => 1,
            Label::Disagree => -1,
            Label::Neutral => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Agree => "agree",
            Label::Disagree => "disagree",
            Label::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "agree" => Ok(Label::Agree),
            "disagree" => Ok(Label::Disagree),
            "neutral" => Ok(Label::Neutral),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// One labeled comment/reply interaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub id: String,
    #[serde(rename = "comment")]
    pub comment_text: String,
    #[serde(rename = "reply")]
    pub reply_text: String,
    pub comment_author: String,
    pub reply_author: String,
    pub label: Label,
    pub timestamp: u64,
    pub topic: String,
}

impl InteractionRecord {
    pub fn is_self_reply(&self) -> bool {
        self.comment_author == self.reply_author
    }

    /// Whitespace token count of comment and reply together.
    pub fn token_count(&self) -> usize {
        crate::textfeat::token_count(&self.comment_text, &self.reply_text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension, defaulting to JSON lines.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown dataset format {other:?}")),
        }
    }
}

const REQUIRED: [&str; 7] = [
    "comment",
    "reply",
    "comment_author",
    "reply_author",
    "label",
    "timestamp",
    "topic",
];

/// A row before validation: field name to textual value.
struct RawRow {
    line: usize,
    fields: BTreeMap<String, String>,
}

impl RawRow {
    fn take(&mut self, key: &str) -> Result<String> {
        self.fields
            .remove(key)
            .ok_or_else(|| Error::parse(self.line, format!("missing field {key:?}")))
    }
}

pub fn parse_dataset(path: impl AsRef<Path>, format: Format) -> Result<Vec<InteractionRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = match format {
        Format::Jsonl => read_jsonl_rows(BufReader::new(file), path)?,
        Format::Csv => read_csv_rows(file)?,
    };
    finish_records(rows)
}

/// Parses JSON-lines text already in memory.
pub fn parse_jsonl_str(text: &str) -> Result<Vec<InteractionRecord>> {
    finish_records(read_jsonl_rows(text.as_bytes(), Path::new("<memory>"))?)
}

fn read_jsonl_rows(reader: impl BufRead, path: &Path) -> Result<Vec<RawRow>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::parse(line_no, format!("invalid JSON: {e}")))?;
        let object = value
            .as_object()
            .ok_or_else(|| Error::parse(line_no, "expected a JSON object"))?;
        let mut fields = BTreeMap::new();
        for (key, value) in object {
            let text = match value {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Null => continue,
                other => {
                    return Err(Error::parse(
                        line_no,
                        format!("field {key:?} has unsupported value {other}"),
                    ))
                }
            };
            fields.insert(key.clone(), text);
        }
        rows.push(RawRow {
            line: line_no,
            fields,
        });
    }
    Ok(rows)
}

fn read_csv_rows(reader: impl std::io::Read) -> Result<Vec<RawRow>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let fields = headers
            .iter()
            .zip(record.iter())
            .filter(|(key, value)| !(*key == "id" && value.is_empty()))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        rows.push(RawRow { line, fields });
    }
    Ok(rows)
}

fn parse_timestamp(line: usize, text: &str) -> Result<u64> {
    let text = text.trim();
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 && v <= u64::MAX as f64 => Ok(v.floor() as u64),
        Ok(v) => Err(Error::parse(line, format!("timestamp {v} is not a finite non-negative number"))),
        Err(_) => Err(Error::parse(line, format!("non-numeric timestamp {text:?}"))),
    }
}

fn finish_records(rows: Vec<RawRow>) -> Result<Vec<InteractionRecord>> {
    let mut records = Vec::with_capacity(rows.len());
    let mut seen = HashSet::new();
    for (index, mut row) in rows.into_iter().enumerate() {
        let line = row.line;
        for key in REQUIRED {
            if !row.fields.contains_key(key) {
                return Err(Error::parse(line, format!("missing field {key:?}")));
            }
        }
        let id = row.fields.remove("id").unwrap_or_else(|| index.to_string());
        let label: Label = row.take("label")?.parse().map_err(|e| Error::parse(line, e))?;
        let timestamp = parse_timestamp(line, &row.take("timestamp")?)?;
        let comment_author = row.take("comment_author")?;
        let reply_author = row.take("reply_author")?;
        if comment_author.is_empty() || reply_author.is_empty() {
            return Err(Error::parse(line, "author ids must be non-empty"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, row: line });
        }
        records.push(InteractionRecord {
            id,
            comment_text: row.take("comment")?,
            reply_text: row.take("reply")?,
            comment_author,
            reply_author,
            label,
            timestamp,
            topic: row.take("topic")?,
        });
    }
    Ok(records)
}

pub fn write_dataset(records: &[InteractionRecord], path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    match format {
        Format::Jsonl => {
            let mut out = BufWriter::new(file);
            for record in records {
                serde_json::to_writer(&mut out, record)?;
                out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
            out.flush().map_err(|e| Error::io(path, e))?;
        }
        Format::Csv => {
            let mut out = csv::Writer::from_writer(file);
            for record in records {
                out.serialize(record)?;
            }
            out.flush().map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}

/// Train / dev / test partition in temporal order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<InteractionRecord>,
    pub dev: Vec<InteractionRecord>,
    pub test: Vec<InteractionRecord>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dev and test records, the pairs that only ever contribute
    /// type-erased edges to the relation graph.
    pub fn heldout(&self) -> impl Iterator<Item = &InteractionRecord> {
        self.dev.iter().chain(self.test.iter())
    }

    pub fn ids(&self) -> SplitIds {
        let ids = |rs: &[InteractionRecord]| rs.iter().map(|r| r.id.clone()).collect();
        SplitIds {
            train: ids(&self.train),
            dev: ids(&self.dev),
            test: ids(&self.test),
        }
    }
}

/// Record ids of a split, the on-disk handoff between pipeline stages.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIds {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

impl SplitIds {
    /// Rebuilds the split from the full record list; unknown ids are an error.
    pub fn resolve(&self, records: &[InteractionRecord]) -> Result<DatasetSplit> {
        let by_id: std::collections::HashMap<&str, &InteractionRecord> =
            records.iter().map(|r| (r.id.as_str(), r)).collect();
        let pick = |ids: &[String]| -> Result<Vec<InteractionRecord>> {
            let missing: Vec<String> = ids
                .iter()
                .filter(|id| !by_id.contains_key(id.as_str()))
                .cloned()
                .collect();
            if !missing.is_empty() {
                return Err(Error::Config(format!(
                    "split references ids absent from the dataset: {}",
                    missing.join(", ")
                )));
            }
            Ok(ids.iter().map(|id| by_id[id.as_str()].clone()).collect())
        };
        Ok(DatasetSplit {
            train: pick(&self.train)?,
            dev: pick(&self.dev)?,
            test: pick(&self.test)?,
        })
    }
}

/// Default 80/10/10 ratios.
pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.8, 0.1, 0.1);

fn check_ratios(ratios: (f64, f64, f64)) -> Result<()> {
    let (a, b, c) = ratios;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::Config(format!("split ratios must be positive, got {ratios:?}")));
    }
    if ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios must sum to 1, got {ratios:?}")));
    }
    Ok(())
}

/// Stable sort by timestamp; equal timestamps keep file order.
pub fn sort_temporally(records: &[InteractionRecord]) -> Vec<InteractionRecord> {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.timestamp);
    sorted
}

// floor(ratio * n), tolerant of representation error such as 0.29 * 100.
pub(crate) fn cut(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// Sorts records by time and cuts them into train, dev and test.
pub fn temporal_split(records: &[InteractionRecord], ratios: (f64, f64, f64)) -> Result<DatasetSplit> {
    check_ratios(ratios)?;
    if records.is_empty() {
        return Err(Error::Empty("cannot split an empty dataset".into()));
    }
    let sorted = sort_temporally(records);
    let n = sorted.len();
    let n_train = cut(ratios.0, n);
    let n_dev = cut(ratios.1, n);
    if n_train == 0 || n_dev == 0 || n_train + n_dev >= n {
        return Err(Error::Empty(format!(
            "{n} records are too few for ratios {ratios:?}: a split would be empty"
        )));
    }
    let mut rest = sorted;
    let test = rest.split_off(n_train + n_dev);
    let dev = rest.split_off(n_train);
    Ok(DatasetSplit {
        train: rest,
        dev,
        test,
    })
}

/// Splits every topic independently and merges the per-topic parts.
///
/// Each merged part is re-sorted by time. The global boundary invariant of
/// [`temporal_split`] only holds within a topic here.
pub fn temporal_split_per_topic(records: &[InteractionRecord], ratios: (f64, f64, f64)) -> Result<DatasetSplit> {
    check_ratios(ratios)?;
    if records.is_empty() {
        return Err(Error::Empty("cannot split an empty dataset".into()));
    }
    let mut by_topic: BTreeMap<&str, Vec<InteractionRecord>> = BTreeMap::new();
    for r in records {
        by_topic.entry(r.topic.as_str()).or_default().push(r.clone());
    }
    let mut merged = DatasetSplit::default();
    for (_, topic_records) in by_topic {
        let part = temporal_split(&topic_records, ratios)?;
        merged.train.extend(part.train);
        merged.dev.extend(part.dev);
        merged.test.extend(part.test);
    }
    let order: std::collections::HashMap<&str, usize> =
        records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    for part in [&mut merged.train, &mut merged.dev, &mut merged.test] {
        part.sort_by_key(|r| (r.timestamp, order[r.id.as_str()]));
    }
    Ok(merged)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(id: &str, from: &str, to: &str, label: Label, ts: u64) -> InteractionRecord {
        InteractionRecord {
            id: id.into(),
            comment_text: format!("comment {id}"),
            reply_text: format!("reply {id}"),
            comment_author: to.into(),
            reply_author: from.into(),
            label,
            timestamp: ts,
            topic: "t".into(),
        }
    }

    const FIXTURE: &str = r#"{"id":"a","comment":"x","reply":"y","comment_author":"u1","reply_author":"u2","label":"agree","timestamp":10,"topic":"r/Brexit"}
{"id":"b","comment":"x","reply":"y","comment_author":"u2","reply_author":"u3","label":"disagree","timestamp":5,"topic":"r/Brexit"}
{"id":"c","comment":"x","reply":"y","comment_author":"u3","reply_author":"u3","label":"neutral","timestamp":7,"topic":"r/Climate"}
"#;

    #[test]
    fn three_row_fixture_in_order() {
        let records = parse_jsonl_str(FIXTURE).unwrap();
        let ids: Vec<_> = records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(records[1].label, Label::Disagree);
        assert!(records[2].is_self_reply());
    }

    #[test]
    fn unknown_label_names_the_row() {
        let text = FIXTURE.replace("\"disagree\"", "\"maybe\"");
        match parse_jsonl_str(&text) {
            Err(Error::Parse { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains("maybe"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_and_bad_timestamp() {
        let text = FIXTURE.replace(",\"topic\":\"r/Climate\"", "");
        assert!(matches!(parse_jsonl_str(&text), Err(Error::Parse { row: 3, .. })));
        let text = FIXTURE.replace("\"timestamp\":5", "\"timestamp\":\"soon\"");
        assert!(matches!(parse_jsonl_str(&text), Err(Error::Parse { row: 2, .. })));
        let text = FIXTURE.replace("\"timestamp\":5", "\"timestamp\":-5");
        assert!(matches!(parse_jsonl_str(&text), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn ids_are_generated_and_checked() {
        let text = FIXTURE.replace("\"id\":\"b\",", "");
        let records = parse_jsonl_str(&text).unwrap();
        assert_eq!(records[1].id, "1");
        let text = FIXTURE.replace("\"id\":\"b\"", "\"id\":\"a\"");
        assert!(matches!(parse_jsonl_str(&text), Err(Error::DuplicateId { row: 2, .. })));
    }

    #[test]
    fn empty_author_rejected() {
        let text = FIXTURE.replace("\"reply_author\":\"u2\"", "\"reply_author\":\"\"");
        assert!(matches!(parse_jsonl_str(&text), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn csv_matches_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let records = parse_jsonl_str(FIXTURE).unwrap();
        let path = dir.path().join("d.csv");
        write_dataset(&records, &path, Format::Csv).unwrap();
        assert_eq!(parse_dataset(&path, Format::Csv).unwrap(), records);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("id,comment,reply,comment_author,reply_author,label,timestamp,topic"));
    }

    #[test]
    fn split_sizes() {
        let records: Vec<_> = (0..10)
            .map(|i| record(&i.to_string(), "a", "b", Label::Agree, i))
            .collect();
        let s = temporal_split(&records, DEFAULT_RATIOS).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (8, 1, 1));
        let s = temporal_split(&records[..4], (0.5, 0.25, 0.25)).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (2, 1, 1));
    }

    #[test]
    fn split_errors() {
        assert!(matches!(temporal_split(&[], DEFAULT_RATIOS), Err(Error::Empty(_))));
        let records: Vec<_> = (0..3)
            .map(|i| record(&i.to_string(), "a", "b", Label::Agree, i))
            .collect();
        assert!(matches!(temporal_split(&records, DEFAULT_RATIOS), Err(Error::Empty(_))));
        assert!(matches!(temporal_split(&records, (0.5, 0.5, 0.1)), Err(Error::Config(_))));
        assert!(matches!(temporal_split(&records, (1.0, 0.0, 0.0)), Err(Error::Config(_))));
    }

    #[test]
    fn ties_keep_file_order() {
        let records: Vec<_> = (0..10)
            .map(|i| record(&i.to_string(), "a", "b", Label::Agree, 100 - (i / 5)))
            .collect();
        let s = temporal_split(&records, DEFAULT_RATIOS).unwrap();
        let order: Vec<_> = s.train.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(order, ["5", "6", "7", "8", "9", "0", "1", "2"]);
    }

    #[test]
    fn per_topic_split_keeps_topics_balanced() {
        let mut records = Vec::new();
        for topic in ["x", "y"] {
            for i in 0..10 {
                let mut r = record(&format!("{topic}{i}"), "a", "b", Label::Agree, i);
                r.topic = topic.into();
                records.push(r);
            }
        }
        let s = temporal_split_per_topic(&records, DEFAULT_RATIOS).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (16, 2, 2));
        assert!(s.test.iter().any(|r| r.topic == "x"));
        assert!(s.test.iter().any(|r| r.topic == "y"));
    }
}
