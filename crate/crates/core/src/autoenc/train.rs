use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::decoder::{raw_score, raw_score_backward};
use super::encoder::{backward, forward, MessageGraph};
use super::sampling::{Triplet, TripletSampler};
use super::{DecoderKind, GaeParams};
use crate::error::{Error, Result};
use crate::optim::{central_difference_check, logistic, Adam};
use crate::relgraph::{Edge, RelationGraph, RelationType};

/// Which edges carry encoder messages during pretraining.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessagePassing {
    /// The edge subsample plus every interaction edge.
    #[default]
    SampledPlusInteraction,
    AllEdges,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaeTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub triplet_batch: usize,
    pub edge_keep_fraction: f64,
    pub seed: u64,
    pub d: usize,
    pub decoder: DecoderKind,
    pub margin: f64,
    pub message_passing: MessagePassing,
}

impl Default for GaeTrainConfig {
    fn default() -> Self {
        GaeTrainConfig {
            learning_rate: 1e-2,
            epochs: 2000,
            triplet_batch: 100_000,
            edge_keep_fraction: 0.5,
            seed: 0,
            d: 64,
            decoder: DecoderKind::DistMult,
            margin: 1.0,
            message_passing: MessagePassing::SampledPlusInteraction,
        }
    }
}

impl GaeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.edge_keep_fraction > 0.0 && self.edge_keep_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "edge keep fraction must lie in (0, 1], got {}",
                self.edge_keep_fraction
            )));
        }
        if self.d == 0 || self.triplet_batch == 0 {
            return Err(Error::Config("d and triplet batch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainedGae {
    pub params: GaeParams,
    /// Loss at the start of every epoch.
    pub loss_history: Vec<f64>,
    /// Loss of the returned parameters on the last epoch's triplets.
    pub final_loss: f64,
    pub kept_edges: usize,
}

/// Binary cross-entropy over scored triplets, normalized by `2 · num_kept`.
/// Log arguments are clamped at 1e-12.
pub fn gae_loss(scored: &[(f64, bool)], num_kept: usize) -> Result<f64> {
    if scored.is_empty() || num_kept == 0 {
        return Err(Error::Empty("no scored triplets".into()));
    }
    let total: f64 = scored
        .iter()
        .map(|&(s, y)| {
            if y {
                -s.max(1e-12).ln()
            } else {
                -(1.0 - s).max(1e-12).ln()
            }
        })
        .sum();
    Ok(total / (2 * num_kept) as f64)
}

// Loss term and its derivative with respect to the raw score. `1 - s` is
// computed as logistic(-raw) so confident negatives keep their precision.
fn bce(raw: f64, truth: bool) -> (f64, f64) {
    let p = if truth { logistic(raw) } else { logistic(-raw) };
    if p < 1e-12 {
        (-(1e-12f64).ln(), 0.0)
    } else {
        let grad = if truth { p - 1.0 } else { 1.0 - p };
        (-p.ln(), grad)
    }
}

fn loss_and_maybe_grad(
    params: &GaeParams,
    mg: &MessageGraph,
    triplets: &[Triplet],
    normalizer: f64,
    want_grad: bool,
) -> Result<(f64, Option<GaeParams>)> {
    let cache = forward(params, &params.node_embeddings, mg)?;
    let h = cache.output();
    let d = params.d();
    let mut loss = 0.0;
    let mut grads = want_grad.then(|| params.zeros_like());
    let mut d_h = want_grad.then(|| Array2::<f64>::zeros(h.raw_dim()));
    let (mut g_src, mut g_rel, mut g_dst) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for t in triplets {
        let rel = params.relations.row(t.rel.index());
        let raw = raw_score(params.decoder, params.margin, h.row(t.src), rel, h.row(t.dst));
        let (l, g) = bce(raw, t.truth);
        loss += l;
        if let (Some(grads), Some(d_h)) = (grads.as_mut(), d_h.as_mut()) {
            if g == 0.0 {
                continue;
            }
            g_src.fill(0.0);
            g_rel.fill(0.0);
            g_dst.fill(0.0);
            raw_score_backward(
                params.decoder,
                h.row(t.src),
                rel,
                h.row(t.dst),
                g / normalizer,
                &mut g_src,
                &mut g_rel,
                &mut g_dst,
            );
            for k in 0..d {
                d_h[[t.src, k]] += g_src[k];
                d_h[[t.dst, k]] += g_dst[k];
                grads.relations[[t.rel.index(), k]] += g_rel[k];
            }
        }
    }
    if let (Some(mut grads), Some(d_h)) = (grads, d_h) {
        let d_inputs = backward(params, &cache, mg, &d_h, &mut grads);
        grads.node_embeddings += &d_inputs;
        return Ok((loss / normalizer, Some(grads)));
    }
    Ok((loss / normalizer, None))
}

// Per-triplet summands of the loss.
fn loss_terms(params: &GaeParams, mg: &MessageGraph, triplets: &[Triplet], normalizer: f64) -> Result<Vec<f64>> {
    let cache = forward(params, &params.node_embeddings, mg)?;
    let h = cache.output();
    Ok(triplets
        .iter()
        .map(|t| {
            let rel = params.relations.row(t.rel.index());
            bce(raw_score(params.decoder, params.margin, h.row(t.src), rel, h.row(t.dst)), t.truth).0 / normalizer
        })
        .collect())
}

/// Autoencoder loss over `triplets` and its gradient for every parameter.
pub fn gae_loss_and_grad(
    params: &GaeParams,
    mg: &MessageGraph,
    triplets: &[Triplet],
    normalizer: f64,
) -> Result<(f64, GaeParams)> {
    let (loss, grads) = loss_and_maybe_grad(params, mg, triplets, normalizer, true)?;
    Ok((loss, grads.expect("gradient requested")))
}

pub(crate) fn message_edges(graph: &RelationGraph, sampler: &TripletSampler, mode: MessagePassing) -> Vec<Edge> {
    match mode {
        MessagePassing::AllEdges => graph.edges().to_vec(),
        MessagePassing::SampledPlusInteraction => {
            let mut edges = sampler.kept().to_vec();
            let kept: std::collections::HashSet<(usize, usize)> = edges.iter().map(|e| (e.src, e.dst)).collect();
            edges.extend(
                graph
                    .edges()
                    .iter()
                    .filter(|e| e.rel == RelationType::Interaction && !kept.contains(&(e.src, e.dst))),
            );
            edges
        }
    }
}

pub fn train_gae(graph: &RelationGraph, cfg: &GaeTrainConfig) -> Result<TrainedGae> {
    cfg.validate()?;
    let mut init = GaeParams::init(graph.num_nodes(), cfg.d, cfg.decoder, cfg.seed)?;
    init.margin = cfg.margin;
    train_gae_from(graph, cfg, init)
}

/// Trains from the given starting parameters with Adam, one step per
/// triplet batch.
pub fn train_gae_from(graph: &RelationGraph, cfg: &GaeTrainConfig, init: GaeParams) -> Result<TrainedGae> {
    cfg.validate()?;
    if init.num_nodes() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "{} node embeddings for {} graph nodes",
            init.num_nodes(),
            graph.num_nodes()
        )));
    }
    let sampler = TripletSampler::new(graph, cfg.edge_keep_fraction, cfg.seed)?;
    let mg = MessageGraph::new(graph.num_nodes(), &message_edges(graph, &sampler, cfg.message_passing));
    let mut params = init;
    let mut adam = Adam::new(cfg.learning_rate);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let triplets = sampler.epoch(epoch as u64);
        let mut epoch_loss = 0.0;
        for chunk in triplets.chunks(cfg.triplet_batch) {
            let (loss, grads) = gae_loss_and_grad(&params, &mg, chunk, chunk.len() as f64)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            epoch_loss += loss * chunk.len() as f64;
            adam.step(&mut params, &grads);
        }
        history.push(epoch_loss / triplets.len() as f64);
    }
    let last = sampler.epoch(cfg.epochs.saturating_sub(1) as u64);
    let (final_loss, _) = loss_and_maybe_grad(&params, &mg, &last, last.len() as f64, false)?;
    if !final_loss.is_finite() || !crate::optim::Parameters::all_finite(&params) {
        return Err(Error::Divergence {
            epoch: cfg.epochs,
            loss: final_loss,
        });
    }
    Ok(TrainedGae {
        params,
        loss_history: history,
        final_loss,
        kept_edges: sampler.kept().len(),
    })
}

/// Largest relative error between the analytic gradient of the pretraining
/// loss and central differences, over `probe_count` random coordinates.
///
/// Uses the epoch-0 triplets of a half-edge subsample (seed 0) with the
/// default message passing.
pub fn finite_diff_check(params: &GaeParams, graph: &RelationGraph, probe_count: usize, eps: f64) -> Result<f64> {
    let sampler = TripletSampler::new(graph, 0.5, 0)?;
    let mg = MessageGraph::new(
        graph.num_nodes(),
        &message_edges(graph, &sampler, MessagePassing::SampledPlusInteraction),
    );
    let triplets = sampler.epoch(0);
    let norm = triplets.len() as f64;
    let (_, analytic) = gae_loss_and_grad(params, &mg, &triplets, norm)?;
    Ok(central_difference_check(
        params,
        &analytic,
        |p| loss_terms(p, &mg, &triplets, norm).unwrap_or_else(|_| vec![f64::NAN]),
        probe_count,
        eps,
        0x5eed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::Parameters;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(nodes: usize, edges: usize, seed: u64) -> RelationGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = RelationGraph::new();
        for i in 0..nodes {
            g.add_node(&format!("n{i}"));
        }
        while g.num_edges() < edges {
            let s = rng.random_range(0..nodes);
            let d = rng.random_range(0..nodes);
            let r = RelationType::ALL[rng.random_range(0..4)];
            if s != d && g.edge_between(s, d).is_none() {
                g.add_edge(Edge::new(s, r, d)).unwrap();
            }
        }
        g
    }

    #[test]
    fn loss_examples() {
        let l = gae_loss(&[(0.5, true), (0.5, false)], 1).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        let perfect = gae_loss(&[(1.0, true), (0.0, false)], 1).unwrap();
        assert!(perfect <= 2.8e-11);
        let terms = [(0.7, true), (0.2, false)];
        let doubled = [terms, terms].concat();
        assert_eq!(gae_loss(&terms, 1).unwrap(), gae_loss(&doubled, 2).unwrap());
        assert!(gae_loss(&[], 1).is_err());
    }

    #[test]
    fn analytic_loss_matches_gae_loss() {
        let g = random_graph(8, 12, 1);
        let p = GaeParams::init(8, 6, DecoderKind::DistMult, 2).unwrap();
        let sampler = TripletSampler::new(&g, 0.5, 0).unwrap();
        let mg = MessageGraph::new(8, &message_edges(&g, &sampler, MessagePassing::SampledPlusInteraction));
        let u = sampler.epoch(0);
        let (loss, _) = gae_loss_and_grad(&p, &mg, &u, u.len() as f64).unwrap();
        let h = super::super::encoder::forward(&p, &p.node_embeddings, &mg).unwrap().into_output();
        let scored: Vec<(f64, bool)> = u
            .iter()
            .map(|t| (super::super::score_triplet(&p, &h, t), t.truth))
            .collect();
        let reference = gae_loss(&scored, sampler.kept().len()).unwrap();
        assert!((loss - reference).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_central_differences() {
        let g = random_graph(12, 24, 7);
        for decoder in DecoderKind::ALL {
            let p = GaeParams::init(12, 8, decoder, 3).unwrap();
            let err = finite_diff_check(&p, &g, 100, 1e-5).unwrap();
            assert!(err < 1e-5, "{decoder}: {err}");
        }
    }

    #[test]
    fn zero_parameters_give_zero_gradients_for_absent_relations() {
        let mut g = random_graph(6, 0, 0);
        g.add_edge(Edge::new(0, RelationType::Supporter, 1)).unwrap();
        g.add_edge(Edge::new(2, RelationType::Supporter, 3)).unwrap();
        let p = GaeParams::zeros(6, 4, DecoderKind::DistMult);
        let sampler = TripletSampler::new(&g, 1.0, 0).unwrap();
        let mg = MessageGraph::new(6, g.edges());
        let (_, grads) = gae_loss_and_grad(&p, &mg, &sampler.epoch(0), 4.0).unwrap();
        for layer in &grads.layers {
            for r in [RelationType::Opponent, RelationType::Acquaintance, RelationType::Interaction] {
                assert!(layer.relation_weights[r.index()].iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let g = random_graph(6, 8, 2);
        let cfg = GaeTrainConfig {
            epochs: 0,
            d: 4,
            ..Default::default()
        };
        let trained = train_gae(&g, &cfg).unwrap();
        let init = GaeParams::init(6, 4, DecoderKind::DistMult, 0).unwrap();
        assert_eq!(trained.params, init);
        assert!(trained.loss_history.is_empty());
    }

    #[test]
    fn training_is_reproducible_and_descends() {
        let g = random_graph(15, 40, 4);
        let cfg = GaeTrainConfig {
            epochs: 60,
            d: 8,
            ..Default::default()
        };
        let a = train_gae(&g, &cfg).unwrap();
        let b = train_gae(&g, &cfg).unwrap();
        for (x, y) in a.params.tensors().iter().zip(b.params.tensors()) {
            assert!(x.iter().zip(y).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
        assert!(a.loss_history[59] < a.loss_history[0]);
    }

    #[test]
    fn minibatches_take_several_steps() {
        let g = random_graph(10, 30, 5);
        let cfg = GaeTrainConfig {
            epochs: 3,
            d: 4,
            triplet_batch: 8,
            ..Default::default()
        };
        let trained = train_gae(&g, &cfg).unwrap();
        assert_eq!(trained.loss_history.len(), 3);
        assert!(trained.final_loss.is_finite());
    }

    #[test]
    fn divergence_is_reported() {
        let g = random_graph(10, 30, 5);
        let cfg = GaeTrainConfig {
            epochs: 5,
            d: 4,
            ..Default::default()
        };
        let mut init = GaeParams::init(10, 4, DecoderKind::DistMult, 0).unwrap();
        init.layers[1].self_weight[[0, 0]] = f64::NAN;
        assert!(matches!(train_gae_from(&g, &cfg, init), Err(Error::Divergence { epoch: 0, .. })));
    }

    #[test]
    fn bad_configs_are_rejected() {
        let g = random_graph(4, 3, 1);
        for cfg in [
            GaeTrainConfig { learning_rate: 0.0, ..Default::default() },
            GaeTrainConfig { edge_keep_fraction: 0.0, ..Default::default() },
            GaeTrainConfig { edge_keep_fraction: 1.5, ..Default::default() },
            GaeTrainConfig { d: 0, ..Default::default() },
        ] {
            assert!(train_gae(&g, &cfg).is_err());
        }
    }
}
