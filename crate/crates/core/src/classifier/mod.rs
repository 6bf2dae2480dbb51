//! Relation/text fusion classifier.
//!
//! For a reply author `a` and comment author `b` the relation feature is the
//! mean encoder output over the radius-1 subgraph around the pair (`h_rg`),
//! projected to `h_r = W_R h_rg + b_R`. A softmax layer over the fused text
//! and relation features yields agree / disagree / neutral probabilities; a
//! linear decoder reconstructs `h_rg` from `h_r` as an auxiliary penalty.

mod train;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autoenc::{EncoderCache, GaeCheckpoint, GaeParams, MessageGraph};
use crate::error::{Error, Result};
use crate::eval::NUM_CLASSES;
use crate::ingest::Label;
use crate::optim::{softmax, Parameters};
use crate::relgraph::{neighborhood, Edge, RelationGraph, RelationType};

pub use train::{
    classifier_grad_check, evaluate_examples, prepare_examples, train_classifier, training_loss, ClassifierConfig,
    Evaluation, FusionParams, LossBreakdown, PairExample, Prediction, TrainedClassifier,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionMode {
    /// `W [h_text ; h_r] + b`
    #[default]
    Concat,
    /// `W (h_text + h_r) + b`; needs equal widths.
    Add,
    /// `W h_text + b`: the text-only baseline.
    TextOnly,
}

impl FusionMode {
    pub const ALL: [FusionMode; 3] = [FusionMode::Concat, FusionMode::Add, FusionMode::TextOnly];

    pub fn name(self) -> &'static str {
        match self {
            FusionMode::Concat => "concat",
            FusionMode::Add => "add",
            FusionMode::TextOnly => "text-only",
        }
    }

    pub fn uses_relations(self) -> bool {
        self != FusionMode::TextOnly
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FusionMode::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown fusion mode {s:?} (expected concat, add or text-only)"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    /// `d_rel_out × d`
    pub w_r: Array2<f64>,
    pub b_r: Array1<f64>,
    /// `d × d_rel_out`
    pub d_recon: Array2<f64>,
    pub d_recon_bias: Array1<f64>,
    /// `3 × fused width`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub fusion: FusionMode,
}

fn fused_width(fusion: FusionMode, d_text: usize, d_rel_out: usize) -> usize {
    match fusion {
        FusionMode::Concat => d_text + d_rel_out,
        FusionMode::Add | FusionMode::TextOnly => d_text,
    }
}

impl ClassifierParams {
    pub fn zeros(d: usize, d_text: usize, d_rel_out: usize, fusion: FusionMode) -> Result<Self> {
        if d == 0 || d_text == 0 || d_rel_out == 0 {
            return Err(Error::Config("classifier widths must be positive".into()));
        }
        if fusion == FusionMode::Add && d_text != d_rel_out {
            return Err(Error::Dimension(format!(
                "add fusion needs equal text and relation widths, got {d_text} and {d_rel_out}"
            )));
        }
        Ok(ClassifierParams {
            w_r: Array2::zeros((d_rel_out, d)),
            b_r: Array1::zeros(d_rel_out),
            d_recon: Array2::zeros((d, d_rel_out)),
            d_recon_bias: Array1::zeros(d),
            w: Array2::zeros((NUM_CLASSES, fused_width(fusion, d_text, d_rel_out))),
            b: Array1::zeros(NUM_CLASSES),
            fusion,
        })
    }

    /// Weight matrices uniform in ±sqrt(6 / (fan_in + fan_out)); zero biases.
    pub fn init(d: usize, d_text: usize, d_rel_out: usize, fusion: FusionMode, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(d, d_text, d_rel_out, fusion)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in [&mut p.w_r, &mut p.d_recon, &mut p.w] {
            let (rows, cols) = m.dim();
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            m.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
        }
        Ok(p)
    }

    pub fn d(&self) -> usize {
        self.w_r.ncols()
    }

    pub fn d_rel_out(&self) -> usize {
        self.w_r.nrows()
    }

    pub fn d_text(&self) -> usize {
        match self.fusion {
            FusionMode::Concat => self.w.ncols() - self.d_rel_out(),
            FusionMode::Add | FusionMode::TextOnly => self.w.ncols(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.d(), self.d_text(), self.d_rel_out(), self.fusion).expect("shapes already validated")
    }

    /// `W_R h_rg + b_R`
    pub fn project(&self, h_rg: ArrayView1<f64>) -> Array1<f64> {
        self.w_r.dot(&h_rg) + &self.b_r
    }

    /// `D h_r + c`
    pub fn reconstruct(&self, h_r: ArrayView1<f64>) -> Array1<f64> {
        self.d_recon.dot(&h_r) + &self.d_recon_bias
    }

    pub(crate) fn fuse(&self, h_text: &[f64], h_r: Option<ArrayView1<f64>>) -> Result<Array1<f64>> {
        if h_text.len() != self.d_text() {
            return Err(Error::Dimension(format!("text vector of {} for d_text={}", h_text.len(), self.d_text())));
        }
        let text = ArrayView1::from(h_text);
        let rel = || -> Result<ArrayView1<f64>> {
            let h_r = h_r.ok_or_else(|| Error::Dimension("relation feature required by this fusion mode".into()))?;
            if h_r.len() != self.d_rel_out() {
                return Err(Error::Dimension(format!(
                    "relation vector of {} for d_rel_out={}",
                    h_r.len(),
                    self.d_rel_out()
                )));
            }
            Ok(h_r)
        };
        Ok(match self.fusion {
            FusionMode::Concat => ndarray::concatenate(Axis(0), &[text, rel()?]).expect("1-d concatenation"),
            FusionMode::Add => &text + &rel()?,
            FusionMode::TextOnly => text.to_owned(),
        })
    }
}

impl Parameters for ClassifierParams {
    fn tensors(&self) -> Vec<&[f64]> {
        [
            self.w_r.as_slice(),
            self.b_r.as_slice(),
            self.d_recon.as_slice(),
            self.d_recon_bias.as_slice(),
            self.w.as_slice(),
            self.b.as_slice(),
        ]
        .into_iter()
        .map(|s| s.expect("standard layout"))
        .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        [
            self.w_r.as_slice_mut(),
            self.b_r.as_slice_mut(),
            self.d_recon.as_slice_mut(),
            self.d_recon_bias.as_slice_mut(),
            self.w.as_slice_mut(),
            self.b.as_slice_mut(),
        ]
        .into_iter()
        .map(|s| s.expect("standard layout"))
        .collect()
    }
}

/// The encoder input around one query pair: the original node ids of the
/// subgraph and its message structure in local indices.
#[derive(Clone, Debug)]
pub struct QueryGraph {
    pub nodes: Vec<usize>,
    mg: MessageGraph,
}

impl QueryGraph {
    /// Radius-`radius` induced subgraph around `a` and `b`. With
    /// `query_edge`, a pair that has no `a → b` edge gets a transient
    /// interaction edge, the same shape held-out pairs receive from
    /// injection.
    pub fn new(graph: &RelationGraph, a: usize, b: usize, radius: usize, query_edge: bool) -> Result<Self> {
        let hood = neighborhood(graph, a, b, radius)?;
        let mut edges = hood.edges.clone();
        if query_edge && a != b && graph.edge_between(a, b).is_none() {
            let (la, lb) = (hood.local(a).expect("query node"), hood.local(b).expect("query node"));
            edges.push(Edge::new(la, RelationType::Interaction, lb));
        }
        Ok(QueryGraph {
            mg: MessageGraph::new(hood.nodes.len(), &edges),
            nodes: hood.nodes,
        })
    }

    pub(crate) fn encode(&self, gae: &GaeParams) -> Result<(EncoderCache, Array1<f64>)> {
        if self.nodes.iter().any(|&n| n >= gae.num_nodes()) {
            return Err(Error::Dimension("subgraph node outside the autoencoder's embedding table".into()));
        }
        let inputs = gae.node_embeddings.select(Axis(0), &self.nodes);
        let cache = crate::autoenc::encoder_forward(gae, &inputs, &self.mg)?;
        let h_rg = cache.output().mean_axis(Axis(0)).expect("subgraph contains the query pair");
        Ok((cache, h_rg))
    }

    pub(crate) fn message_graph(&self) -> &MessageGraph {
        &self.mg
    }
}

/// `(h_rg, h_r)` for the pair `(a, b)`: the mean encoder output over the
/// radius-1 induced subgraph, including both query authors, and its
/// projection.
pub fn relation_feature(
    graph: &RelationGraph,
    gae: &GaeParams,
    a: usize,
    b: usize,
    params: &ClassifierParams,
) -> Result<(Array1<f64>, Array1<f64>)> {
    if gae.num_nodes() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "{} node embeddings for a graph of {} nodes",
            gae.num_nodes(),
            graph.num_nodes()
        )));
    }
    if gae.d() != params.d() {
        return Err(Error::Dimension(format!("encoder width {} vs classifier input {}", gae.d(), params.d())));
    }
    let (_, h_rg) = QueryGraph::new(graph, a, b, 1, false)?.encode(gae)?;
    let h_r = params.project(h_rg.view());
    Ok((h_rg, h_r))
}

/// Class probabilities (agree, disagree, neutral) for the fused features.
pub fn predict(h_text: &[f64], h_r: Option<ArrayView1<f64>>, params: &ClassifierParams) -> Result<[f64; NUM_CLASSES]> {
    let fused = params.fuse(h_text, h_r)?;
    let z = params.w.dot(&fused) + &params.b;
    let p = softmax(z.as_slice().expect("contiguous"));
    Ok([p[0], p[1], p[2]])
}

pub fn argmax_label(probs: &[f64; NUM_CLASSES]) -> Label {
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if probs[c] > probs[best] {
            best = c;
        }
    }
    Label::from_index(best).expect("class index")
}

pub const CLASSIFIER_SECTION: &str = "classifier";

/// JSON checkpoint of a trained classifier, embedding the encoder it was
/// trained with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierCheckpoint {
    pub version: u32,
    pub section: String,
    pub fusion_mode: FusionMode,
    pub d: usize,
    pub d_text: usize,
    pub d_rel_out: usize,
    pub w_r: Vec<f64>,
    pub b_r: Vec<f64>,
    pub d_recon: Vec<f64>,
    pub d_recon_bias: Vec<f64>,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
    pub query_edge: bool,
    pub gae: GaeCheckpoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl ClassifierCheckpoint {
    pub fn new(params: &ClassifierParams, gae: GaeCheckpoint, query_edge: bool, rng_seed: u64) -> Self {
        let flat1 = |a: &Array1<f64>| a.to_vec();
        let flat2 = |a: &Array2<f64>| a.iter().copied().collect::<Vec<f64>>();
        ClassifierCheckpoint {
            version: crate::autoenc::CHECKPOINT_VERSION,
            section: CLASSIFIER_SECTION.to_string(),
            fusion_mode: params.fusion,
            d: params.d(),
            d_text: params.d_text(),
            d_rel_out: params.d_rel_out(),
            w_r: flat2(&params.w_r),
            b_r: flat1(&params.b_r),
            d_recon: flat2(&params.d_recon),
            d_recon_bias: flat1(&params.d_recon_bias),
            w: flat2(&params.w),
            b: flat1(&params.b),
            rng_seed,
            best_epoch: None,
            query_edge,
            gae,
            config: None,
        }
    }

    pub fn params(&self) -> Result<ClassifierParams> {
        if self.section != CLASSIFIER_SECTION {
            return Err(Error::Config(format!(
                "expected a {CLASSIFIER_SECTION} checkpoint, found {:?}",
                self.section
            )));
        }
        let mut p = ClassifierParams::zeros(self.d, self.d_text, self.d_rel_out, self.fusion_mode)?;
        let fill = |dst: &mut [f64], src: &[f64], what: &str| -> Result<()> {
            if dst.len() != src.len() {
                return Err(Error::Dimension(format!("{what}: {} values, expected {}", src.len(), dst.len())));
            }
            dst.copy_from_slice(src);
            Ok(())
        };
        let sources: [(&[f64], &str); 6] = [
            (&self.w_r, "w_r"),
            (&self.b_r, "b_r"),
            (&self.d_recon, "d_recon"),
            (&self.d_recon_bias, "d_recon_bias"),
            (&self.w, "w"),
            (&self.b, "b"),
        ];
        for (dst, (src, what)) in p.tensors_mut().into_iter().zip(sources) {
            fill(dst, src, what)?;
        }
        if !p.all_finite() {
            return Err(Error::Config("classifier checkpoint holds non-finite values".into()));
        }
        Ok(p)
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
