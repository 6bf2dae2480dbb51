//! Text feature vectors: a deterministic hashing featurizer and the
//! embedding-table file used to bring in externally computed vectors.
//!
//! Table format (UTF-8):
//!
//! ```text
//! dim=<d> count=<n>
//! <id>\t<f1>,<f2>,...,<fd>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::ingest::InteractionRecord;

pub const MIN_HASH_DIM: usize = 8;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const COMMENT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const REPLY_SALT: u64 = 0xc2b2_ae3d_27d4_eb4f;

fn fnv1a(salt: u64, token: &str) -> u64 {
    let mut h = FNV_OFFSET ^ salt;
    for b in token.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Lowercased runs of alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Whitespace token count of the comment and reply together.
pub fn token_count(comment: &str, reply: &str) -> usize {
    comment.split_whitespace().count() + reply.split_whitespace().count()
}

/// Signed feature hashing. Comment tokens land in the first `dim / 2`
/// buckets and reply tokens in the rest, each with its own salt; the top
/// hash bit picks the sign. The result is L2-normalized (zero if there are
/// no tokens).
pub fn hash_featurize(comment: &str, reply: &str, dim: usize) -> Result<Vec<f64>> {
    if dim < MIN_HASH_DIM {
        return Err(Error::Config(format!("hash dimension must be at least {MIN_HASH_DIM}, got {dim}")));
    }
    let half = dim / 2;
    let mut v = vec![0.0; dim];
    for (text, salt, offset, width) in [(comment, COMMENT_SALT, 0, half), (reply, REPLY_SALT, half, dim - half)] {
        for tok in tokenize(text) {
            let h = fnv1a(salt, &tok);
            let bucket = offset + (h % width as u64) as usize;
            v[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(v)
}

/// Example id → fixed-width text vector, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    rows: IndexMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            dim,
            rows: IndexMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, id: &str, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension(format!("{id}: {} values, table dim {}", vector.len(), self.dim)));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{id}: non-finite value")));
        }
        if self.rows.contains_key(id) {
            return Err(Error::DuplicateId {
                id: id.to_string(),
                row: self.rows.len() + 2,
            });
        }
        self.rows.insert(id.to_string(), vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    /// Widened copies of the vectors for `ids`; every missing id is listed
    /// in the error.
    pub fn lookup_all<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Vec<Vec<f64>>> {
        let mut missing = Vec::new();
        let mut out = Vec::new();
        for id in ids {
            match self.get(id) {
                Some(v) => out.push(v.iter().map(|&x| f64::from(x)).collect()),
                None => missing.push(id.to_string()),
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(Error::MissingFeatures(missing))
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("dim={} count={}\n", self.dim, self.rows.len());
        for (id, v) in &self.rows {
            s.push_str(id);
            s.push('\t');
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                // Display prints the shortest string that parses back to the same f32
                write!(s, "{x}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let (dim, count) = parse_header(header)?;
        let mut table = EmbeddingTable::new(dim).map_err(|e| Error::parse(1, e.to_string()))?;
        for (i, line) in lines.enumerate() {
            let row = i + 2;
            if line.is_empty() {
                continue;
            }
            let (id, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(row, "expected <id><TAB><values>"))?;
            if id.is_empty() {
                return Err(Error::parse(row, "empty id"));
            }
            let vector = values
                .split(',')
                .map(|f| f.trim().parse::<f32>())
                .collect::<std::result::Result<Vec<f32>, _>>()
                .map_err(|e| Error::parse(row, format!("bad value: {e}")))?;
            if vector.len() != dim {
                return Err(Error::parse(row, format!("{} values, header says dim={dim}", vector.len())));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(row, "non-finite value"));
            }
            if table.rows.contains_key(id) {
                return Err(Error::DuplicateId {
                    id: id.to_string(),
                    row,
                });
            }
            table.rows.insert(id.to_string(), vector);
        }
        if table.len() != count {
            return Err(Error::parse(1, format!("header says count={count}, found {} rows", table.len())));
        }
        Ok(table)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let mut dim = None;
    let mut count = None;
    for part in header.split_whitespace() {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("bad header field {part:?}")))?;
        let value: usize = value
            .parse()
            .map_err(|_| Error::parse(1, format!("bad header value {part:?}")))?;
        match key {
            "dim" => dim = Some(value),
            "count" => count = Some(value),
            _ => return Err(Error::parse(1, format!("unknown header field {key:?}"))),
        }
    }
    match (dim, count) {
        (Some(d), Some(c)) => Ok((d, c)),
        _ => Err(Error::parse(1, "header must be `dim=<d> count=<n>`")),
    }
}

pub fn load_embedding_table(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    EmbeddingTable::load(path)
}

pub fn write_table(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    table.write(path)
}

/// Hash-featurizes every record into a table keyed by record id.
pub fn featurize_records(records: &[InteractionRecord], dim: usize) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(dim)?;
    for r in records {
        let v = hash_featurize(&r.comment_text, &r.reply_text, dim)?;
        table.insert(&r.id, v.into_iter().map(|x| x as f32).collect())?;
    }
    Ok(table)
}

/// Where text vectors come from during training and evaluation.
#[derive(Clone, Debug)]
pub enum TextSource {
    Hash { dim: usize },
    Table(EmbeddingTable),
}

impl TextSource {
    pub fn dim(&self) -> usize {
        match self {
            TextSource::Hash { dim } => *dim,
            TextSource::Table(t) => t.dim(),
        }
    }

    pub fn vectors(&self, records: &[&InteractionRecord]) -> Result<Vec<Vec<f64>>> {
        match self {
            TextSource::Hash { dim } => records
                .iter()
                .map(|r| hash_featurize(&r.comment_text, &r.reply_text, *dim))
                .collect(),
            TextSource::Table(t) => t.lookup_all(records.iter().map(|r| r.id.as_str())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_is_zero() {
        assert!(hash_featurize("", "", 16).unwrap().iter().all(|&v| v == 0.0));
        assert!(hash_featurize("  ,. ", "!", 16).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn small_dim_is_rejected() {
        assert!(hash_featurize("a", "b", 7).is_err());
        assert!(hash_featurize("a", "b", 8).is_ok());
    }

    #[test]
    fn comment_and_reply_use_separate_halves() {
        let c = hash_featurize("brexit vote", "", 32).unwrap();
        let r = hash_featurize("", "brexit vote", 32).unwrap();
        assert!(c[16..].iter().all(|&v| v == 0.0));
        assert!(r[..16].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tokenization_lowercases_and_splits_punctuation() {
        let toks: Vec<String> = tokenize("Hello, WORLD!it's").collect();
        assert_eq!(toks, ["hello", "world", "it", "s"]);
        assert_eq!(hash_featurize("HELLO world", "", 16).unwrap(), hash_featurize("hello, world", "", 16).unwrap());
    }

    #[test]
    fn token_count_is_whitespace_based() {
        assert_eq!(token_count("a b  c", "d,e"), 4);
        assert_eq!(token_count("", ""), 0);
    }

    proptest! {
        #[test]
        fn nonempty_input_is_unit_norm(c in "[a-z ]{0,40}", r in "[a-z]{1,10}( [a-z]{1,10}){0,5}", dim in 8usize..80) {
            let v = hash_featurize(&c, &r, dim).unwrap();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);
            prop_assert_eq!(v, hash_featurize(&c, &r, dim).unwrap());
        }

        #[test]
        fn table_round_trip_is_bit_exact(vals in prop::collection::vec(-1e6f32..1e6, 12)) {
            let mut t = EmbeddingTable::new(4).unwrap();
            for (i, chunk) in vals.chunks(4).enumerate() {
                t.insert(&format!("id{i}"), chunk.to_vec()).unwrap();
            }
            let back = EmbeddingTable::from_text(&t.to_text()).unwrap();
            for id in t.ids() {
                let a = t.get(id).unwrap();
                let b = back.get(id).unwrap();
                prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }

    #[test]
    fn well_formed_table_loads() {
        let t = EmbeddingTable::from_text("dim=4 count=2\na\t1,2,3,4\nb\t0.5,-0.25,1e-3,0\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("b").unwrap(), &[0.5, -0.25, 0.001, 0.0]);
    }

    #[test]
    fn short_row_reports_its_line() {
        let err = EmbeddingTable::from_text("dim=4 count=2\na\t1,2,3,4\nb\t1,2,3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn duplicates_and_count_mismatch_are_rejected() {
        let dup = EmbeddingTable::from_text("dim=1 count=2\na\t1\na\t2\n").unwrap_err();
        assert!(matches!(dup, Error::DuplicateId { row: 3, .. }));
        assert!(EmbeddingTable::from_text("dim=1 count=3\na\t1\n").is_err());
        assert!(EmbeddingTable::from_text("dim=x count=1\na\t1\n").is_err());
    }

    #[test]
    fn missing_ids_are_listed() {
        let mut t = EmbeddingTable::new(2).unwrap();
        t.insert("a", vec![1.0, 2.0]).unwrap();
        match t.lookup_all(["a", "b", "c"]) {
            Err(Error::MissingFeatures(ids)) => assert_eq!(ids, ["b", "c"]),
            other => panic!("{other:?}"),
        }
    }
}
