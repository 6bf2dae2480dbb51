//! Synthetic datasets and graphs with known structure.

use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autoenc::{encode_nodes, score_triplet, GaeParams, Triplet, TripletSampler};
use crate::error::{Error, Result};
use crate::ingest::{InteractionRecord, Label};
use crate::relgraph::{Edge, RelationGraph, RelationType};

/// Complete directed graph over two equal communities: supporter edges
/// inside a community, opponent edges across.
pub fn two_community_graph(num_nodes: usize) -> Result<RelationGraph> {
    if num_nodes < 4 {
        return Err(Error::Config("two communities need at least 4 nodes".into()));
    }
    let mut g = RelationGraph::new();
    for i in 0..num_nodes {
        g.add_node(&format!("c{}_{i}", community(i, num_nodes)));
    }
    for s in 0..num_nodes {
        for d in 0..num_nodes {
            if s != d {
                let rel = if community(s, num_nodes) == community(d, num_nodes) {
                    RelationType::Supporter
                } else {
                    RelationType::Opponent
                };
                g.add_edge(Edge::new(s, rel, d))?;
            }
        }
    }
    Ok(g)
}

fn community(i: usize, n: usize) -> usize {
    usize::from(i >= n / 2)
}

/// Removes a seeded `fraction` of edges; returns the remaining graph (same
/// node set) and the removed edges in edge order.
pub fn hold_out_edges(graph: &RelationGraph, fraction: f64, seed: u64) -> Result<(RelationGraph, Vec<Edge>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!("held-out fraction must lie in [0, 1), got {fraction}")));
    }
    let n = graph.num_edges();
    let k = (fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = index::sample(&mut rng, n, k).into_vec();
    out.sort_unstable();
    let mut kept = RelationGraph::new();
    for author in graph.nodes() {
        kept.add_node(author);
    }
    let mut heldout = Vec::with_capacity(k);
    let mut next = out.iter().peekable();
    for (i, e) in graph.edges().iter().enumerate() {
        if next.peek() == Some(&&i) {
            next.next();
            heldout.push(*e);
        } else {
            kept.add_edge(*e)?;
        }
    }
    Ok((kept, heldout))
}

/// Accuracy at threshold 0.5 on held-out true triplets plus one corruption
/// each (rejected against `full`), encoding with every edge of `observed`.
pub fn heldout_triplet_accuracy(
    params: &GaeParams,
    observed: &RelationGraph,
    full: &RelationGraph,
    heldout: &[Edge],
    seed: u64,
) -> Result<f64> {
    if heldout.is_empty() {
        return Err(Error::Empty("no held-out edges".into()));
    }
    let h = encode_nodes(observed, params, observed.edges())?;
    let negatives = TripletSampler::new(full, 1.0, seed)?.corruptions(heldout, 0);
    let correct = heldout
        .iter()
        .map(Triplet::positive)
        .chain(negatives)
        .filter(|t| (score_triplet(params, &h, t) >= 0.5) == t.truth)
        .count();
    Ok(correct as f64 / (2 * heldout.len()) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionSynthConfig {
    pub records: usize,
    pub authors: usize,
    pub topics: usize,
    pub seed: u64,
    /// Span of the timestamps in seconds.
    pub horizon: u64,
}

impl Default for FusionSynthConfig {
    fn default() -> Self {
        FusionSynthConfig {
            records: 2000,
            authors: 800,
            topics: 5,
            seed: 0,
            horizon: 1_000_000,
        }
    }
}

const VOCAB: [&str; 48] = [
    "the", "policy", "vote", "deal", "market", "people", "really", "think", "never", "always", "maybe", "point",
    "source", "article", "data", "claim", "party", "leader", "trade", "border", "money", "price", "coin", "chain",
    "mask", "vaccine", "study", "result", "country", "law", "court", "rule", "news", "post", "thread", "comment",
    "year", "time", "plan", "idea", "fact", "issue", "case", "world", "state", "change", "side", "view",
];

fn noise_text(rng: &mut ChaCha8Rng) -> String {
    // mostly short texts, with a tail past the 100 and 200 token marks
    let len = match rng.random_range(0..10) {
        0 => rng.random_range(60..160),
        _ => rng.random_range(3..40),
    };
    (0..len).map(|_| *VOCAB.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

/// Comment–reply records whose label is fixed by the pair's relation.
///
/// Author pairs get a hidden relation (supporter, opponent or none) and
/// interact one or more times; every reply on a supporter pair agrees,
/// on an opponent pair disagrees and on an unrelated pair is neutral. A
/// pair's first interaction falls in the first half of the horizon, so a
/// temporal split places it in training and later pairs carry their
/// relation into dev and test. Texts are label-independent noise.
pub fn fusion_dataset(cfg: &FusionSynthConfig) -> Result<Vec<InteractionRecord>> {
    if cfg.records == 0 || cfg.authors < 2 || cfg.topics == 0 || cfg.horizon < 4 {
        return Err(Error::Config("synthetic dataset needs records, two authors, a topic and a horizon".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut used = std::collections::HashSet::new();
    let mut events: Vec<(u64, usize, usize, Label, usize)> = Vec::with_capacity(cfg.records);
    while events.len() < cfg.records {
        let a = rng.random_range(0..cfg.authors);
        let b = rng.random_range(0..cfg.authors);
        if a == b || used.contains(&(a, b)) || used.contains(&(b, a)) {
            continue;
        }
        used.insert((a, b));
        let label = Label::ALL[rng.random_range(0..3)];
        let topic = rng.random_range(0..cfg.topics);
        let first = rng.random_range(0..cfg.horizon / 2);
        let count = rng.random_range(1..=5).min(cfg.records - events.len());
        events.push((first, a, b, label, topic));
        for _ in 1..count {
            events.push((rng.random_range(first..cfg.horizon), a, b, label, topic));
        }
    }
    events.sort_by_key(|e| e.0);
    Ok(events
        .into_iter()
        .enumerate()
        .map(|(i, (ts, a, b, label, topic))| InteractionRecord {
            id: format!("s{i:05}"),
            comment_text: noise_text(&mut rng),
            reply_text: noise_text(&mut rng),
            comment_author: format!("u{b}"),
            reply_author: format!("u{a}"),
            label,
            timestamp: ts,
            topic: format!("topic{topic}"),
        })
        .collect())
}
