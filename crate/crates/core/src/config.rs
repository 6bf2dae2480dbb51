//! Run configuration: every tunable as a flat key, resolved from built-in
//! defaults, a `key = value` file, `STANCEGRAPH_*` environment variables and
//! command-line flags, in increasing order of precedence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::autoenc::{DecoderKind, GaeTrainConfig, MessagePassing};
use crate::classifier::{ClassifierConfig, FusionMode};
use crate::error::{Error, Result};
use crate::ingest::Format;
use crate::relgraph::Tau;

pub const ENV_PREFIX: &str = "STANCEGRAPH_";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolMode {
    #[default]
    InDomain,
    CrossDomain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub tau: Tau,
    pub rho: f64,
    pub seed: u64,
    /// Seeds for repeated protocol runs; empty means just `seed`.
    pub seeds: Vec<u64>,
    /// Train / dev / test fractions.
    pub split: Vec<f64>,
    pub split_per_topic: bool,
    pub mode: ProtocolMode,

    pub d: usize,
    pub decoder: DecoderKind,
    pub margin: f64,
    pub gae_lr: f64,
    pub gae_epochs: usize,
    pub triplet_batch: usize,
    pub edge_keep_fraction: f64,
    pub message_passing: MessagePassing,

    pub fusion: FusionMode,
    pub lambda_recon: f64,
    pub cls_lr: f64,
    pub cls_epochs: usize,
    pub batch_size: usize,
    pub d_rel_out: usize,
    pub freeze_encoder: bool,
    pub query_edge: bool,
    /// Ablation: drop the reconstruction term.
    pub no_recon: bool,
    /// Ablation: skip pretraining and train the encoder jointly from its
    /// random initialization.
    pub no_pretrain: bool,

    pub text_dim: usize,
    pub embeddings: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub format: Option<Format>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let gae = GaeTrainConfig::default();
        let cls = ClassifierConfig::default();
        RunConfig {
            tau: Tau::PerEdge,
            rho: 0.3,
            seed: 0,
            seeds: Vec::new(),
            split: vec![0.8, 0.1, 0.1],
            split_per_topic: false,
            mode: ProtocolMode::InDomain,
            d: gae.d,
            decoder: gae.decoder,
            margin: gae.margin,
            gae_lr: gae.learning_rate,
            gae_epochs: gae.epochs,
            triplet_batch: gae.triplet_batch,
            edge_keep_fraction: gae.edge_keep_fraction,
            message_passing: gae.message_passing,
            fusion: cls.fusion,
            lambda_recon: cls.lambda_recon,
            cls_lr: cls.learning_rate,
            cls_epochs: cls.epochs,
            batch_size: cls.batch_size,
            d_rel_out: cls.d_rel_out,
            freeze_encoder: !cls.fine_tune,
            query_edge: cls.query_edge,
            no_recon: false,
            no_pretrain: false,
            text_dim: 64,
            embeddings: None,
            data: None,
            format: None,
            out_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    pub fn keys() -> Vec<String> {
        match serde_json::to_value(RunConfig::default()) {
            Ok(Value::Object(map)) => map.keys().cloned().collect(),
            _ => unreachable!("config serializes to an object"),
        }
    }

    /// Applies `key = value` pairs in order. Values are read according to
    /// the key's type; lists are comma separated and `none` clears an
    /// optional path.
    pub fn apply<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        let Value::Object(mut map) = serde_json::to_value(&*self)? else {
            unreachable!("config serializes to an object")
        };
        for (key, raw) in pairs {
            let key = key.trim().replace('-', "_");
            let current = map
                .get(&key)
                .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?;
            let value = coerce(&key, current, raw.trim())?;
            map.insert(key, value);
        }
        *self = from_map(map)?;
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.apply([(key, value)])
    }

    /// Parses a flat `key = value` file (blank lines and `#` comments
    /// ignored) on top of `self`.
    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, got {line:?}")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        self.apply(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    /// Applies every `STANCEGRAPH_<KEY>` variable among `vars`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
        let pairs: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_ascii_lowercase(), v)))
            .collect();
        self.apply(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    /// Defaults, then the optional file, then the environment, then flags.
    pub fn resolve(
        file: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
        flags: &[(String, String)],
    ) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(f) = file {
            cfg.apply_file(f)?;
        }
        cfg.apply_env(env)?;
        cfg.apply(flags.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if self.split.len() != 3 {
            return Err(Error::Config(format!("split needs three fractions, got {:?}", self.split)));
        }
        if self.text_dim < crate::textfeat::MIN_HASH_DIM && self.embeddings.is_none() {
            return Err(Error::Config(format!(
                "text_dim must be at least {}",
                crate::textfeat::MIN_HASH_DIM
            )));
        }
        self.gae_config(self.seed).validate()?;
        self.classifier_config(self.seed).validate()
    }

    pub fn ratios(&self) -> (f64, f64, f64) {
        (self.split[0], self.split[1], self.split[2])
    }

    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> RunConfig {
        RunConfig {
            seed,
            seeds: Vec::new(),
            ..self.clone()
        }
    }

    pub fn gae_config(&self, seed: u64) -> GaeTrainConfig {
        GaeTrainConfig {
            learning_rate: self.gae_lr,
            epochs: self.gae_epochs,
            triplet_batch: self.triplet_batch,
            edge_keep_fraction: self.edge_keep_fraction,
            seed,
            d: self.d,
            decoder: self.decoder,
            margin: self.margin,
            message_passing: self.message_passing,
        }
    }

    pub fn classifier_config(&self, seed: u64) -> ClassifierConfig {
        ClassifierConfig {
            learning_rate: self.cls_lr,
            epochs: self.cls_epochs,
            batch_size: self.batch_size,
            seed,
            lambda_recon: if self.no_recon { 0.0 } else { self.lambda_recon },
            d_rel_out: self.d_rel_out,
            fusion: self.fusion,
            fine_tune: !self.freeze_encoder || self.no_pretrain,
            query_edge: self.query_edge,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Hex SHA-256 prefix over the canonical JSON of every key except
    /// `out_dir`.
    pub fn hash(&self) -> String {
        let Value::Object(mut map) = self.to_value() else {
            unreachable!("config serializes to an object")
        };
        map.remove("out_dir");
        let digest = Sha256::digest(Value::Object(map).to_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(self.hash())
    }
}

fn from_map(map: Map<String, Value>) -> Result<RunConfig> {
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))
}

fn coerce(key: &str, current: &Value, raw: &str) -> Result<Value> {
    let bad = |what: &str| Error::Config(format!("{key}: expected {what}, got {raw:?}"));
    Ok(match current {
        Value::Bool(_) => match raw.to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" | "on" => Value::Bool(true),
            "false" | "0" | "no" | "off" => Value::Bool(false),
            _ => return Err(bad("a boolean")),
        },
        Value::Number(n) if n.is_u64() => Value::from(raw.parse::<u64>().map_err(|_| bad("an integer"))?),
        Value::Number(_) => {
            let v: f64 = raw.parse().map_err(|_| bad("a number"))?;
            if !v.is_finite() {
                return Err(bad("a finite number"));
            }
            Value::from(v)
        }
        Value::Array(_) => {
            if raw.is_empty() {
                Value::Array(Vec::new())
            } else {
                let items = raw
                    .split(',')
                    .map(|s| {
                        let s = s.trim();
                        s.parse::<u64>()
                            .map(Value::from)
                            .or_else(|_| s.parse::<f64>().map(Value::from))
                            .map_err(|_| bad("a comma-separated list of numbers"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Value::Array(items)
            }
        }
        Value::Null | Value::String(_) if raw.eq_ignore_ascii_case("none") => Value::Null,
        _ => Value::String(raw.to_string()),
    })
}
