use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_label, predict, ClassifierParams, FusionMode, QueryGraph};
use crate::autoenc::{encoder_backward, GaeParams};
use crate::error::{Error, Result};
use crate::eval::{bucket_by_length, compute_metrics, MetricsReport, NUM_CLASSES};
use crate::ingest::{InteractionRecord, Label};
use crate::optim::{central_difference_check, Adam, Parameters};
use crate::relgraph::RelationGraph;
use crate::textfeat::TextSource;

/// One classification example resolved against a graph and a text source.
#[derive(Clone, Debug, PartialEq)]
pub struct PairExample {
    pub id: String,
    pub label: Label,
    pub text: Vec<f64>,
    /// Reply author (stance holder).
    pub src: usize,
    /// Comment author.
    pub dst: usize,
    pub tokens: usize,
    pub topic: String,
}

pub fn prepare_examples(
    records: &[InteractionRecord],
    graph: &RelationGraph,
    text: &TextSource,
) -> Result<Vec<PairExample>> {
    let refs: Vec<&InteractionRecord> = records.iter().collect();
    let vectors = text.vectors(&refs)?;
    records
        .iter()
        .zip(vectors)
        .map(|(r, v)| {
            let idx = |a: &str| graph.node_index(a).ok_or_else(|| Error::UnknownAuthor(a.to_string()));
            Ok(PairExample {
                id: r.id.clone(),
                label: r.label,
                text: v,
                src: idx(&r.reply_author)?,
                dst: idx(&r.comment_author)?,
                tokens: r.token_count(),
                topic: r.topic.clone(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub lambda_recon: f64,
    pub d_rel_out: usize,
    pub fusion: FusionMode,
    /// Backpropagate into the encoder and node embeddings.
    pub fine_tune: bool,
    /// Give edge-less query pairs a transient interaction edge.
    pub query_edge: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            learning_rate: 1e-3,
            epochs: 30,
            batch_size: 8,
            seed: 0,
            lambda_recon: 1.0,
            d_rel_out: 64,
            fusion: FusionMode::Concat,
            fine_tune: false,
            query_edge: true,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.d_rel_out == 0 {
            return Err(Error::Config("batch size and d_rel_out must be positive".into()));
        }
        if !(self.lambda_recon >= 0.0 && self.lambda_recon.is_finite()) {
            return Err(Error::Config(format!("lambda_recon must be non-negative, got {}", self.lambda_recon)));
        }
        Ok(())
    }
}

/// Classifier and encoder parameters viewed as one set, for joint
/// fine-tuning and the end-to-end gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionParams {
    pub classifier: ClassifierParams,
    pub gae: GaeParams,
}

impl FusionParams {
    fn zeros_like(&self) -> Self {
        FusionParams {
            classifier: self.classifier.zeros_like(),
            gae: self.gae.zeros_like(),
        }
    }
}

impl Parameters for FusionParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.classifier.tensors();
        t.extend(self.gae.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.classifier.tensors_mut();
        t.extend(self.gae.tensors_mut());
        t
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub stance: f64,
    pub recon: f64,
}

struct Sample<'a> {
    ex: &'a PairExample,
    query: Option<&'a QueryGraph>,
    // precomputed mean encoding, valid while the encoder is frozen
    h_rg: Option<&'a Array1<f64>>,
}

fn outer_add(target: &mut Array2<f64>, a: ArrayView1<f64>, b: ArrayView1<f64>) {
    for (i, &ai) in a.iter().enumerate() {
        if ai != 0.0 {
            target.row_mut(i).scaled_add(ai, &b);
        }
    }
}

// L = -(1/B) Σ log p(y) + λ (1/B) Σ ‖D h_r + c - h_rg‖²
fn loss_impl(
    params: &FusionParams,
    samples: &[Sample],
    lambda: f64,
    fine_tune: bool,
    mut grads: Option<&mut FusionParams>,
) -> Result<LossBreakdown> {
    if samples.is_empty() {
        return Err(Error::Empty("empty classifier batch".into()));
    }
    let cp = &params.classifier;
    let n = samples.len() as f64;
    let mut out = LossBreakdown::default();
    for s in samples {
        let rel = if cp.fusion.uses_relations() {
            let (cache, h_rg) = match (s.h_rg, fine_tune) {
                (Some(h), false) => (None, h.clone()),
                _ => {
                    let q = s.query.ok_or_else(|| Error::Config("missing query subgraph".into()))?;
                    let (cache, h) = q.encode(&params.gae)?;
                    (Some(cache), h)
                }
            };
            let h_r = cp.project(h_rg.view());
            Some((cache, h_rg, h_r))
        } else {
            None
        };
        let fused = cp.fuse(&s.ex.text, rel.as_ref().map(|(_, _, h_r)| h_r.view()))?;
        let z = cp.w.dot(&fused) + &cp.b;
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let y = s.ex.label.index();
        out.stance += (lse - z[y]) / n;
        let recon_diff = rel.as_ref().map(|(_, h_rg, h_r)| cp.reconstruct(h_r.view()) - h_rg);
        if let Some(diff) = &recon_diff {
            out.recon += diff.dot(diff) / n;
        }

        let Some(g) = grads.as_deref_mut() else { continue };
        let mut dz: Array1<f64> = z.mapv(|v| (v - lse).exp());
        dz[y] -= 1.0;
        dz /= n;
        outer_add(&mut g.classifier.w, dz.view(), fused.view());
        g.classifier.b += &dz;
        let Some((cache, h_rg, h_r)) = rel else { continue };
        let d_fused = cp.w.t().dot(&dz);
        let mut dh_r = match cp.fusion {
            FusionMode::Concat => d_fused.slice(ndarray::s![cp.d_text()..]).to_owned(),
            FusionMode::Add => d_fused,
            FusionMode::TextOnly => unreachable!("text-only carries no relation feature"),
        };
        let diff = recon_diff.expect("relation path");
        let d_diff = diff * (2.0 * lambda / n);
        outer_add(&mut g.classifier.d_recon, d_diff.view(), h_r.view());
        g.classifier.d_recon_bias += &d_diff;
        dh_r += &cp.d_recon.t().dot(&d_diff);
        outer_add(&mut g.classifier.w_r, dh_r.view(), h_rg.view());
        g.classifier.b_r += &dh_r;
        if fine_tune {
            // the reconstruction target is not detached
            let dh_rg = cp.w_r.t().dot(&dh_r) - &d_diff;
            let q = s.query.expect("encoded above");
            let cache = cache.expect("encoded above");
            let k = q.nodes.len();
            let d_out = dh_rg.insert_axis(Axis(0)).broadcast((k, params.gae.d())).expect("row broadcast").to_owned()
                / k as f64;
            let d_in = encoder_backward(&params.gae, &cache, q.message_graph(), &d_out, &mut g.gae);
            for (local, &node) in q.nodes.iter().enumerate() {
                let mut row = g.gae.node_embeddings.row_mut(node);
                row += &d_in.row(local);
            }
        }
    }
    out.total = out.stance + lambda * out.recon;
    Ok(out)
}

fn build_queries(examples: &[PairExample], graph: &RelationGraph, query_edge: bool) -> Result<Vec<QueryGraph>> {
    examples
        .iter()
        .map(|e| QueryGraph::new(graph, e.src, e.dst, 1, query_edge))
        .collect()
}

fn check_shapes(graph: &RelationGraph, gae: &GaeParams, params: &ClassifierParams) -> Result<()> {
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
    Ok(())
}

/// Loss and gradients of one batch. Encoder gradients are filled only with
/// `cfg.fine_tune`.
pub fn training_loss(
    batch: &[PairExample],
    params: &ClassifierParams,
    gae: &GaeParams,
    graph: &RelationGraph,
    cfg: &ClassifierConfig,
) -> Result<(LossBreakdown, FusionParams)> {
    check_shapes(graph, gae, params)?;
    let queries = build_queries(batch, graph, cfg.query_edge)?;
    let samples: Vec<Sample> = batch
        .iter()
        .zip(&queries)
        .map(|(ex, q)| Sample {
            ex,
            query: Some(q),
            h_rg: None,
        })
        .collect();
    let full = FusionParams {
        classifier: params.clone(),
        gae: gae.clone(),
    };
    let mut grads = full.zeros_like();
    let loss = loss_impl(&full, &samples, cfg.lambda_recon, cfg.fine_tune, Some(&mut grads))?;
    Ok((loss, grads))
}

/// Largest relative error between analytic and central-difference gradients
/// of the classifier loss with the encoder unfrozen, so the check runs
/// through the relation features into every encoder parameter.
pub fn classifier_grad_check(
    examples: &[PairExample],
    graph: &RelationGraph,
    gae: &GaeParams,
    params: &ClassifierParams,
    cfg: &ClassifierConfig,
    probe_count: usize,
    eps: f64,
) -> Result<f64> {
    check_shapes(graph, gae, params)?;
    let queries = build_queries(examples, graph, cfg.query_edge)?;
    let samples: Vec<Sample> = examples
        .iter()
        .zip(&queries)
        .map(|(ex, q)| Sample {
            ex,
            query: Some(q),
            h_rg: None,
        })
        .collect();
    let full = FusionParams {
        classifier: params.clone(),
        gae: gae.clone(),
    };
    let mut grads = full.zeros_like();
    loss_impl(&full, &samples, cfg.lambda_recon, true, Some(&mut grads))?;
    Ok(central_difference_check(
        &full,
        &grads,
        |p| {
            let n = samples.len() as f64;
            samples
                .chunks(1)
                .map(|s| loss_impl(p, s, cfg.lambda_recon, true, None).map_or(f64::NAN, |l| l.total / n))
                .collect()
        },
        probe_count,
        eps,
        cfg.seed ^ 0x6a09_e667,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub gold: Label,
    pub pred: Label,
    pub probs: [f64; NUM_CLASSES],
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub predictions: Vec<Prediction>,
    pub report: MetricsReport,
    pub by_length: Vec<MetricsReport>,
}

fn predict_all(
    examples: &[PairExample],
    queries: Option<&[QueryGraph]>,
    gae: &GaeParams,
    params: &ClassifierParams,
) -> Result<Vec<Prediction>> {
    examples
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let h_r = match queries {
                Some(q) if params.fusion.uses_relations() => {
                    let (_, h_rg) = q[i].encode(gae)?;
                    Some(params.project(h_rg.view()))
                }
                _ => None,
            };
            let probs = predict(&ex.text, h_r.as_ref().map(|h| h.view()), params)?;
            Ok(Prediction {
                id: ex.id.clone(),
                gold: ex.label,
                pred: argmax_label(&probs),
                probs,
            })
        })
        .collect()
}

fn score(examples: &[PairExample], predictions: Vec<Prediction>) -> Result<Evaluation> {
    let preds: Vec<Label> = predictions.iter().map(|p| p.pred).collect();
    let golds: Vec<Label> = examples.iter().map(|e| e.label).collect();
    let tokens: Vec<usize> = examples.iter().map(|e| e.tokens).collect();
    Ok(Evaluation {
        report: compute_metrics(&preds, &golds)?,
        by_length: bucket_by_length(&tokens, &preds, &golds)?,
        predictions,
    })
}

pub fn evaluate_examples(
    examples: &[PairExample],
    graph: &RelationGraph,
    gae: &GaeParams,
    params: &ClassifierParams,
    query_edge: bool,
) -> Result<Evaluation> {
    check_shapes(graph, gae, params)?;
    let queries = if params.fusion.uses_relations() {
        Some(build_queries(examples, graph, query_edge)?)
    } else {
        None
    };
    score(examples, predict_all(examples, queries.as_deref(), gae, params)?)
}

#[derive(Clone, Debug)]
pub struct TrainedClassifier {
    pub params: ClassifierParams,
    /// The encoder the returned classifier expects (changed only when
    /// fine-tuning).
    pub gae: GaeParams,
    /// 1-based epoch whose parameters were kept; `None` for zero epochs.
    pub best_epoch: Option<usize>,
    pub best_dev_macro_f1: Option<f64>,
    pub dev_macro_f1: Vec<f64>,
    pub train_loss: Vec<f64>,
}

/// Adam over shuffled minibatches; after every epoch the dev macro-F1 is
/// measured and the best epoch's parameters are returned.
pub fn train_classifier(
    train: &[PairExample],
    dev: &[PairExample],
    graph: &RelationGraph,
    gae: &GaeParams,
    cfg: &ClassifierConfig,
) -> Result<TrainedClassifier> {
    cfg.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Empty("classifier training needs train and dev examples".into()));
    }
    let d_text = train[0].text.len();
    if let Some(bad) = train.iter().chain(dev).find(|e| e.text.len() != d_text) {
        return Err(Error::Dimension(format!("example {} has a text vector of {}", bad.id, bad.text.len())));
    }
    let init = ClassifierParams::init(gae.d(), d_text, cfg.d_rel_out, cfg.fusion, cfg.seed)?;
    check_shapes(graph, gae, &init)?;
    let relational = cfg.fusion.uses_relations();
    let (train_q, dev_q) = if relational {
        (build_queries(train, graph, cfg.query_edge)?, build_queries(dev, graph, cfg.query_edge)?)
    } else {
        (Vec::new(), Vec::new())
    };
    let fine_tune = cfg.fine_tune && relational;
    let frozen_cache: Vec<Array1<f64>> = if relational && !fine_tune {
        train_q.iter().map(|q| q.encode(gae).map(|(_, h)| h)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut params = FusionParams {
        classifier: init,
        gae: gae.clone(),
    };
    let mut best = (params.clone(), None, None::<f64>);
    let mut adam_cls = Adam::new(cfg.learning_rate);
    let mut adam_gae = Adam::new(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let (mut dev_history, mut loss_history) = (Vec::new(), Vec::new());

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let samples: Vec<Sample> = chunk
                .iter()
                .map(|&i| Sample {
                    ex: &train[i],
                    query: train_q.get(i),
                    h_rg: frozen_cache.get(i),
                })
                .collect();
            let mut grads = params.zeros_like();
            let loss = loss_impl(&params, &samples, cfg.lambda_recon, fine_tune, Some(&mut grads))?;
            if !loss.total.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    loss: loss.total,
                });
            }
            epoch_loss += loss.total * chunk.len() as f64;
            adam_cls.step(&mut params.classifier, &grads.classifier);
            if fine_tune {
                adam_gae.step(&mut params.gae, &grads.gae);
            }
        }
        loss_history.push(epoch_loss / train.len() as f64);
        if !params.all_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: f64::NAN,
            });
        }
        let preds = predict_all(dev, relational.then_some(dev_q.as_slice()), &params.gae, &params.classifier)?;
        let f1 = score(dev, preds)?.report.macro_f1;
        dev_history.push(f1);
        if best.2.is_none_or(|b| f1 > b) {
            best = (params.clone(), Some(epoch), Some(f1));
        }
    }
    let (kept, best_epoch, best_f1) = best;
    Ok(TrainedClassifier {
        params: kept.classifier,
        gae: kept.gae,
        best_epoch,
        best_dev_macro_f1: best_f1,
        dev_macro_f1: dev_history,
        train_loss: loss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoenc::DecoderKind;
    use crate::relgraph::{Edge, RelationType};

    fn graph() -> RelationGraph {
        let mut g = RelationGraph::new();
        for i in 0..8 {
            g.add_node(&format!("n{i}"));
        }
        let edges = [
            (0, RelationType::Supporter, 1),
            (1, RelationType::Opponent, 2),
            (3, RelationType::Acquaintance, 0),
            (4, RelationType::Interaction, 5),
            (2, RelationType::Supporter, 6),
            (6, RelationType::Opponent, 0),
        ];
        for (s, r, d) in edges {
            g.add_edge(Edge::new(s, r, d)).unwrap();
        }
        g
    }

    fn example(i: usize, src: usize, dst: usize, label: Label, d_text: usize) -> PairExample {
        PairExample {
            id: format!("e{i}"),
            label,
            text: (0..d_text).map(|k| ((i * 7 + k * 3) % 11) as f64 / 11.0 - 0.5).collect(),
            src,
            dst,
            tokens: 10,
            topic: "t".into(),
        }
    }

    fn examples(d_text: usize) -> Vec<PairExample> {
        [(0, 1, Label::Agree), (1, 2, Label::Disagree), (4, 5, Label::Neutral), (7, 3, Label::Neutral), (2, 6, Label::Agree)]
            .iter()
            .enumerate()
            .map(|(i, &(s, d, l))| example(i, s, d, l, d_text))
            .collect()
    }

    #[test]
    fn uniform_predictions_cost_ln3() {
        let g = graph();
        let gae = GaeParams::init(8, 4, DecoderKind::DistMult, 0).unwrap();
        let p = ClassifierParams::zeros(4, 6, 4, FusionMode::Concat).unwrap();
        let cfg = ClassifierConfig {
            lambda_recon: 0.0,
            ..Default::default()
        };
        let (loss, _) = training_loss(&examples(6), &p, &gae, &g, &cfg).unwrap();
        assert!((loss.stance - 3f64.ln()).abs() < 1e-12);
        assert_eq!(loss.total, loss.stance);
    }

    #[test]
    fn perfect_fit_has_zero_loss() {
        // h_rg = 0 (zero encoder), D = 0, confident logits from a text bias
        let g = graph();
        let gae = GaeParams::zeros(8, 4, DecoderKind::DistMult);
        let mut p = ClassifierParams::zeros(4, 1, 4, FusionMode::Concat).unwrap();
        p.w[[0, 0]] = 1e6;
        let ex = PairExample {
            text: vec![1.0],
            ..example(0, 0, 1, Label::Agree, 1)
        };
        let (loss, _) = training_loss(&[ex], &p, &gae, &g, &ClassifierConfig::default()).unwrap();
        assert_eq!(loss.total, 0.0);
    }

    #[test]
    fn recon_term_is_non_negative_and_scaled_by_lambda() {
        let g = graph();
        let gae = GaeParams::init(8, 4, DecoderKind::DistMult, 3).unwrap();
        let p = ClassifierParams::init(4, 6, 4, FusionMode::Concat, 1).unwrap();
        let cfg = ClassifierConfig {
            lambda_recon: 2.5,
            ..Default::default()
        };
        let (loss, _) = training_loss(&examples(6), &p, &gae, &g, &cfg).unwrap();
        assert!(loss.recon > 0.0);
        assert!((loss.total - (loss.stance + 2.5 * loss.recon)).abs() < 1e-12);
    }

    #[test]
    fn full_path_gradients_match_central_differences() {
        let g = graph();
        for (fusion, d_text) in [(FusionMode::Concat, 6), (FusionMode::Add, 4), (FusionMode::TextOnly, 6)] {
            let gae = GaeParams::init(8, 4, DecoderKind::DistMult, 5).unwrap();
            let p = ClassifierParams::init(4, d_text, 4, fusion, 2).unwrap();
            let cfg = ClassifierConfig {
                fusion,
                ..Default::default()
            };
            let err = classifier_grad_check(&examples(d_text), &g, &gae, &p, &cfg, 200, 1e-5).unwrap();
            assert!(err < 1e-5, "{fusion}: {err}");
        }
    }

    #[test]
    fn frozen_and_fine_tuned_classifier_gradients_agree() {
        let g = graph();
        let gae = GaeParams::init(8, 4, DecoderKind::DistMult, 5).unwrap();
        let p = ClassifierParams::init(4, 6, 4, FusionMode::Concat, 2).unwrap();
        let frozen = training_loss(&examples(6), &p, &gae, &g, &ClassifierConfig::default()).unwrap().1;
        let tuned_cfg = ClassifierConfig {
            fine_tune: true,
            ..Default::default()
        };
        let tuned = training_loss(&examples(6), &p, &gae, &g, &tuned_cfg).unwrap().1;
        assert_eq!(frozen.classifier, tuned.classifier);
        assert!(frozen.gae.tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
        assert!(tuned.gae.layers[0].self_weight.iter().any(|&v| v != 0.0));
    }

    fn trained(cfg: &ClassifierConfig) -> (TrainedClassifier, GaeParams) {
        let g = graph();
        let gae = GaeParams::init(8, 4, DecoderKind::DistMult, 5).unwrap();
        let ex = examples(6);
        (train_classifier(&ex, &ex[..3], &g, &gae, cfg).unwrap(), gae)
    }

    #[test]
    fn zero_epochs_return_initialization() {
        let cfg = ClassifierConfig {
            epochs: 0,
            d_rel_out: 4,
            ..Default::default()
        };
        let (t, _) = trained(&cfg);
        assert_eq!(t.params, ClassifierParams::init(4, 6, 4, FusionMode::Concat, 0).unwrap());
        assert_eq!(t.best_epoch, None);
    }

    #[test]
    fn training_is_deterministic_and_keeps_frozen_encoder() {
        let cfg = ClassifierConfig {
            epochs: 5,
            d_rel_out: 4,
            ..Default::default()
        };
        let (a, gae) = trained(&cfg);
        let (b, _) = trained(&cfg);
        assert_eq!(a.dev_macro_f1, b.dev_macro_f1);
        assert_eq!(a.params, b.params);
        assert_eq!(a.gae, gae);
        assert_eq!(a.train_loss.len(), 5);
        assert!(a.best_epoch.is_some());

        let tuned = ClassifierConfig { fine_tune: true, ..cfg };
        let (c, gae) = trained(&tuned);
        assert_ne!(c.gae, gae);
    }

    #[test]
    fn missing_text_features_are_listed() {
        let g = graph();
        let mut table = crate::textfeat::EmbeddingTable::new(2).unwrap();
        table.insert("a", vec![0.0, 1.0]).unwrap();
        let rec = |id: &str| InteractionRecord {
            id: id.into(),
            comment_text: String::new(),
            reply_text: String::new(),
            comment_author: "n0".into(),
            reply_author: "n1".into(),
            label: Label::Agree,
            timestamp: 0,
            topic: "t".into(),
        };
        let err = prepare_examples(&[rec("a"), rec("b"), rec("c")], &g, &TextSource::Table(table)).unwrap_err();
        assert!(matches!(err, Error::MissingFeatures(ids) if ids == ["b", "c"]));
    }
}
