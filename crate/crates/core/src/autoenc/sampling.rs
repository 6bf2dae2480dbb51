use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GaeTrainConfig;
use crate::error::{Error, Result};
use crate::relgraph::{Edge, RelationGraph, RelationType};

/// A scored candidate triplet with its truth flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub src: usize,
    pub rel: RelationType,
    pub dst: usize,
    pub truth: bool,
}

impl Triplet {
    pub fn positive(edge: &Edge) -> Self {
        Triplet {
            src: edge.src,
            rel: edge.rel,
            dst: edge.dst,
            truth: true,
        }
    }
}

const MAX_RETRIES: usize = 100;

/// Holds the fixed edge subsample and draws per-epoch corruptions.
///
/// The subsample uses stream 0 of the seeded generator; epoch `e` draws its
/// negatives from stream `e + 1`, so any epoch can be reproduced on its own.
#[derive(Clone, Debug)]
pub struct TripletSampler {
    kept: Vec<Edge>,
    existing: HashSet<(usize, RelationType, usize)>,
    num_nodes: usize,
    seed: u64,
}

impl TripletSampler {
    pub fn new(graph: &RelationGraph, keep_fraction: f64, seed: u64) -> Result<Self> {
        if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
            return Err(Error::Config(format!("edge keep fraction must lie in (0, 1], got {keep_fraction}")));
        }
        let edges = graph.edges();
        if edges.is_empty() {
            return Err(Error::Empty("graph has no supervision edges".into()));
        }
        let n = edges.len();
        let k = ((keep_fraction * n as f64).round() as usize).clamp(1, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, n, k).into_vec();
        picked.sort_unstable();
        Ok(TripletSampler {
            kept: picked.into_iter().map(|i| edges[i]).collect(),
            existing: edges.iter().map(|e| (e.src, e.rel, e.dst)).collect(),
            num_nodes: graph.num_nodes(),
            seed,
        })
    }

    /// The edge subsample fed to the autoencoder.
    pub fn kept(&self) -> &[Edge] {
        &self.kept
    }

    /// True triplets of the subsample, each followed by one corruption.
    pub fn epoch(&self, epoch: u64) -> Vec<Triplet> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch + 1);
        let mut out = Vec::with_capacity(2 * self.kept.len());
        for edge in &self.kept {
            out.push(Triplet::positive(edge));
            out.push(self.corrupt(edge, &mut rng));
        }
        out
    }

    /// One corruption per given edge, rejected against this sampler's
    /// graph, drawn from stream `stream` of the seed.
    pub fn corruptions(&self, edges: &[Edge], stream: u64) -> Vec<Triplet> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        edges.iter().map(|e| self.corrupt(e, &mut rng)).collect()
    }

    // Replaces one uniformly chosen slot with a different value. Node slots
    // avoid both the current value and the other endpoint, so a corruption is
    // never the original triplet nor a self-loop.
    fn corrupt(&self, edge: &Edge, rng: &mut ChaCha8Rng) -> Triplet {
        let mut candidate = Triplet::positive(edge);
        candidate.truth = false;
        for _ in 0..MAX_RETRIES {
            let mut slot = rng.random_range(0..3);
            if slot < 2 && self.num_nodes < 3 {
                slot = 2;
            }
            candidate = Triplet {
                src: edge.src,
                rel: edge.rel,
                dst: edge.dst,
                truth: false,
            };
            match slot {
                0 => candidate.src = draw_node(rng, self.num_nodes, edge.src, edge.dst),
                1 => candidate.dst = draw_node(rng, self.num_nodes, edge.dst, edge.src),
                _ => {
                    let r = rng.random_range(0..RelationType::COUNT - 1);
                    let r = if r >= edge.rel.index() { r + 1 } else { r };
                    candidate.rel = RelationType::ALL[r];
                }
            }
            if !self.existing.contains(&(candidate.src, candidate.rel, candidate.dst)) {
                break;
            }
        }
        candidate
    }
}

// Uniform over 0..n excluding `a` and `b` (which may coincide).
fn draw_node(rng: &mut ChaCha8Rng, n: usize, a: usize, b: usize) -> usize {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let excluded = if lo == hi { 1 } else { 2 };
    let mut v = rng.random_range(0..n - excluded);
    if v >= lo {
        v += 1;
    }
    if lo != hi && v >= hi {
        v += 1;
    }
    v
}

/// The training set of one epoch: the fixed subsample and its corruptions.
pub fn build_training_triplets(graph: &RelationGraph, cfg: &GaeTrainConfig, epoch: u64) -> Result<Vec<Triplet>> {
    Ok(TripletSampler::new(graph, cfg.edge_keep_fraction, cfg.seed)?.epoch(epoch))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nodes: usize, edges: &[(usize, RelationType, usize)]) -> RelationGraph {
        let mut g = RelationGraph::new();
        for i in 0..nodes {
            g.add_node(&format!("n{i}"));
        }
        for &(s, r, d) in edges {
            g.add_edge(Edge::new(s, r, d)).unwrap();
        }
        g
    }

    #[test]
    fn one_edge_gives_two_triplets() {
        let g = graph(4, &[(0, RelationType::Supporter, 1)]);
        let u = build_training_triplets(&g, &GaeTrainConfig::default(), 0).unwrap();
        assert_eq!(u.len(), 2);
        assert_eq!(u.iter().filter(|t| t.truth).count(), 1);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = graph(3, &[]);
        assert!(build_training_triplets(&g, &GaeTrainConfig::default(), 0).is_err());
    }

    #[test]
    fn corruption_never_repeats_the_original() {
        let edges: Vec<_> = (0..10).map(|i| (i, RelationType::ALL[i % 3], (i + 1) % 10)).collect();
        let g = graph(10, &edges);
        let sampler = TripletSampler::new(&g, 1.0, 5).unwrap();
        let mut count = 0;
        for epoch in 0..1000 {
            for pair in sampler.epoch(epoch).chunks(2) {
                let (t, f) = (pair[0], pair[1]);
                assert!(t.truth && !f.truth);
                assert!((t.src, t.rel, t.dst) != (f.src, f.rel, f.dst));
                assert_ne!(f.src, f.dst);
                count += 1;
            }
        }
        assert_eq!(count, 10_000);
    }

    #[test]
    fn corruptions_avoid_observed_triplets_when_possible() {
        let edges: Vec<_> = (0..8).map(|i| (i, RelationType::Supporter, (i + 3) % 8)).collect();
        let g = graph(8, &edges);
        let sampler = TripletSampler::new(&g, 1.0, 2).unwrap();
        for epoch in 0..50 {
            for t in sampler.epoch(epoch).iter().filter(|t| !t.truth) {
                assert!(g.edge_between(t.src, t.dst).map(|e| e.rel) != Some(t.rel));
            }
        }
    }

    #[test]
    fn subsample_is_half_and_seeded() {
        let edges: Vec<_> = (0..20).map(|i| (i, RelationType::Opponent, (i + 1) % 20)).collect();
        let g = graph(20, &edges);
        let cfg = GaeTrainConfig::default();
        let a = build_training_triplets(&g, &cfg, 3).unwrap();
        let b = build_training_triplets(&g, &cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        let c = build_training_triplets(&g, &cfg, 4).unwrap();
        let positives = |u: &[Triplet]| u.iter().filter(|t| t.truth).copied().collect::<Vec<_>>();
        assert_eq!(positives(&a), positives(&c));
    }

    #[test]
    fn draw_node_excludes_both() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..2000 {
            let v = draw_node(&mut rng, 5, 3, 1);
            assert!(v < 5 && v != 3 && v != 1);
            let v = draw_node(&mut rng, 5, 2, 2);
            assert!(v < 5 && v != 2);
        }
    }
}
