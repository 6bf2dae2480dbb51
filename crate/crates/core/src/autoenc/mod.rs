//! Relational graph autoencoder.
//!
//! A two-layer relational graph convolution encodes every author from its
//! own embedding and the mean-normalized messages arriving over each
//! relation type. A triplet decoder (DistMult, TransE or HolE) scores
//! `(src, relation, dst)` triplets, and the whole model is trained as a
//! binary classifier of observed against corrupted triplets.

mod decoder;
mod encoder;
mod sampling;
mod train;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::Parameters;
use crate::relgraph::RelationType;

pub use decoder::{raw_score, raw_score_backward, score_triplet};
pub use encoder::{encode_nodes, EncoderCache, MessageGraph};
pub(crate) use encoder::{backward as encoder_backward, forward as encoder_forward};
pub use sampling::{build_training_triplets, Triplet, TripletSampler};
pub use train::{
    finite_diff_check, gae_loss, gae_loss_and_grad, train_gae, train_gae_from, GaeTrainConfig, MessagePassing,
    TrainedGae,
};

pub const NUM_LAYERS: usize = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    #[default]
    DistMult,
    TransE,
    HolE,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 3] = [DecoderKind::DistMult, DecoderKind::TransE, DecoderKind::HolE];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::DistMult => "distmult",
            DecoderKind::TransE => "transe",
            DecoderKind::HolE => "hole",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        DecoderKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown decoder {s:?} (expected distmult, transe or hole)"))
    }
}

/// Weights of one relational convolution layer, stored output-major: the
/// layer maps `x` to `self_weight · x + Σ_r relation_weights[r] · mean(x_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgcnLayer {
    pub self_weight: Array2<f64>,
    pub relation_weights: Vec<Array2<f64>>,
}

impl RgcnLayer {
    fn zeros(d: usize) -> Self {
        RgcnLayer {
            self_weight: Array2::zeros((d, d)),
            relation_weights: vec![Array2::zeros((d, d)); RelationType::COUNT],
        }
    }
}

/// Learnable state of the autoencoder.
#[derive(Clone, Debug, PartialEq)]
pub struct GaeParams {
    pub node_embeddings: Array2<f64>,
    pub layers: Vec<RgcnLayer>,
    /// One row per relation: the DistMult diagonal or the TransE / HolE
    /// relation vector.
    pub relations: Array2<f64>,
    pub decoder: DecoderKind,
    /// TransE margin; fixed, not trained.
    pub margin: f64,
}

impl GaeParams {
    pub fn zeros(num_nodes: usize, d: usize, decoder: DecoderKind) -> Self {
        GaeParams {
            node_embeddings: Array2::zeros((num_nodes, d)),
            layers: (0..NUM_LAYERS).map(|_| RgcnLayer::zeros(d)).collect(),
            relations: Array2::zeros((RelationType::COUNT, d)),
            decoder,
            margin: 1.0,
        }
    }

    /// Seeded initialization: embeddings and relation vectors ~ N(0, 0.1²),
    /// weights uniform in ±sqrt(6 / (fan_in + fan_out)).
    pub fn init(num_nodes: usize, d: usize, decoder: DecoderKind, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("embedding width d must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.1).expect("valid std");
        let limit = (6.0 / (2 * d) as f64).sqrt();
        let mut p = Self::zeros(num_nodes, d, decoder);
        p.node_embeddings.mapv_inplace(|_| normal.sample(&mut rng));
        for layer in &mut p.layers {
            layer.self_weight.mapv_inplace(|_| rng.random_range(-limit..limit));
            for w in &mut layer.relation_weights {
                w.mapv_inplace(|_| rng.random_range(-limit..limit));
            }
        }
        p.relations.mapv_inplace(|_| normal.sample(&mut rng));
        Ok(p)
    }

    pub fn d(&self) -> usize {
        self.node_embeddings.ncols()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_embeddings.nrows()
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = Self::zeros(self.num_nodes(), self.d(), self.decoder);
        z.margin = self.margin;
        z
    }

    /// Copy with embeddings for `extra` appended nodes, drawn like `init`.
    pub fn with_extra_nodes(&self, extra: usize, seed: u64) -> Self {
        if extra == 0 {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.1).expect("valid std");
        let d = self.d();
        let mut emb = Array2::zeros((self.num_nodes() + extra, d));
        emb.slice_mut(ndarray::s![..self.num_nodes(), ..]).assign(&self.node_embeddings);
        for v in emb.slice_mut(ndarray::s![self.num_nodes().., ..]).iter_mut() {
            *v = normal.sample(&mut rng);
        }
        GaeParams {
            node_embeddings: emb,
            ..self.clone()
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.all_finite() {
            Ok(())
        } else {
            Err(Error::Config("autoencoder parameters contain non-finite values".into()))
        }
    }
}

impl Parameters for GaeParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.node_embeddings.as_slice().expect("standard layout")];
        for layer in &self.layers {
            out.push(layer.self_weight.as_slice().expect("standard layout"));
            for w in &layer.relation_weights {
                out.push(w.as_slice().expect("standard layout"));
            }
        }
        out.push(self.relations.as_slice().expect("standard layout"));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.node_embeddings.as_slice_mut().expect("standard layout")];
        for layer in &mut self.layers {
            out.push(layer.self_weight.as_slice_mut().expect("standard layout"));
            for w in &mut layer.relation_weights {
                out.push(w.as_slice_mut().expect("standard layout"));
            }
        }
        out.push(self.relations.as_slice_mut().expect("standard layout"));
        out
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub self_weight: Vec<f64>,
    pub relation_weights: Vec<Vec<f64>>,
}

/// JSON checkpoint of a trained autoencoder. Arrays are row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaeCheckpoint {
    pub version: u32,
    pub section: String,
    pub d: usize,
    pub decoder_kind: DecoderKind,
    pub relation_names: Vec<String>,
    pub node_index_map: Vec<String>,
    pub margin: f64,
    pub node_embeddings: Vec<f64>,
    pub layers: Vec<LayerRecord>,
    pub relations: Vec<f64>,
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

pub const GAE_SECTION: &str = "gae";

impl GaeCheckpoint {
    pub fn new(params: &GaeParams, node_ids: &[String], rng_seed: u64) -> Self {
        let flat = |a: &Array2<f64>| a.iter().copied().collect::<Vec<f64>>();
        GaeCheckpoint {
            version: CHECKPOINT_VERSION,
            section: GAE_SECTION.to_string(),
            d: params.d(),
            decoder_kind: params.decoder,
            relation_names: RelationType::ALL.iter().map(|r| r.name().to_string()).collect(),
            node_index_map: node_ids.to_vec(),
            margin: params.margin,
            node_embeddings: flat(&params.node_embeddings),
            layers: params
                .layers
                .iter()
                .map(|l| LayerRecord {
                    self_weight: flat(&l.self_weight),
                    relation_weights: l.relation_weights.iter().map(flat).collect(),
                })
                .collect(),
            relations: flat(&params.relations),
            rng_seed,
            final_loss: None,
            config: None,
        }
    }

    pub fn params(&self) -> Result<GaeParams> {
        if self.section != GAE_SECTION {
            return Err(Error::Config(format!("expected a {GAE_SECTION} checkpoint, found {:?}", self.section)));
        }
        let expected: Vec<&str> = RelationType::ALL.iter().map(|r| r.name()).collect();
        if self.relation_names != expected {
            return Err(Error::Config(format!("unexpected relation names {:?}", self.relation_names)));
        }
        let d = self.d;
        let shaped = |rows: usize, data: &[f64], what: &str| -> Result<Array2<f64>> {
            Array2::from_shape_vec((rows, d), data.to_vec())
                .map_err(|_| Error::Dimension(format!("{what}: {} values for {rows}x{d}", data.len())))
        };
        let layers = self
            .layers
            .iter()
            .map(|l| {
                if l.relation_weights.len() != RelationType::COUNT {
                    return Err(Error::Dimension("one weight matrix per relation expected".into()));
                }
                Ok(RgcnLayer {
                    self_weight: shaped(d, &l.self_weight, "self weight")?,
                    relation_weights: l
                        .relation_weights
                        .iter()
                        .map(|w| shaped(d, w, "relation weight"))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if layers.len() != NUM_LAYERS {
            return Err(Error::Dimension(format!("expected {NUM_LAYERS} layers, found {}", layers.len())));
        }
        let params = GaeParams {
            node_embeddings: shaped(self.node_index_map.len(), &self.node_embeddings, "node embeddings")?,
            layers,
            relations: shaped(RelationType::COUNT, &self.relations, "relations")?,
            decoder: self.decoder_kind,
            margin: self.margin,
        };
        params.check_finite()?;
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
