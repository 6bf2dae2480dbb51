//! The inductive social relation graph.
//!
//! Interactions are bucketed into snapshots, each cell holding the signed
//! majority opinion of a reply author toward a comment author within one
//! time window. Summing the snapshots gives the aggregate weight of every
//! ordered author pair, and the sign of that sum types the edge:
//!
//! | aggregate | any signed snapshot | edge          |
//! |-----------|---------------------|---------------|
//! | `> 0`     | -                   | supporter     |
//! | `< 0`     | -                   | opponent      |
//! | `= 0`     | yes                 | acquaintance  |
//! | `= 0`     | no                  | none          |
//!
//! Edges run from the reply author (the stance holder) to the comment author.
//! Held-out pairs and a random fraction of training edges are carried as
//! type-erased *interaction* edges.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{InteractionRecord, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum RelationType {
    Supporter = 0,
    Opponent = 1,
    Acquaintance = 2,
    Interaction = 3,
}

impl RelationType {
    pub const COUNT: usize = 4;
    pub const ALL: [RelationType; 4] = [
        RelationType::Supporter,
        RelationType::Opponent,
        RelationType::Acquaintance,
        RelationType::Interaction,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<RelationType> {
        RelationType::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            RelationType::Supporter => "supporter",
            RelationType::Opponent => "opponent",
            RelationType::Acquaintance => "acquaintance",
            RelationType::Interaction => "interaction",
        }
    }

    /// Applies the typing rule to an aggregate weight.
    pub fn from_aggregate(weight: i64, any_signed: bool) -> Option<RelationType> {
        match weight.signum() {
            1 => Some(RelationType::Supporter),
            -1 => Some(RelationType::Opponent),
            _ if any_signed => Some(RelationType::Acquaintance),
            _ => None,
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        RelationType::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown relation {s:?}"))
    }
}

/// Snapshot window length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Tau {
    /// Every interaction is its own snapshot.
    #[default]
    PerEdge,
    Seconds(u64),
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tau::PerEdge => f.write_str("per-edge"),
            Tau::Seconds(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for Tau {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "per-edge" | "per_edge" | "PER_EDGE" => Ok(Tau::PerEdge),
            other => match other.parse::<i64>() {
                Ok(v) if v > 0 => Ok(Tau::Seconds(v as u64)),
                Ok(v) => Err(format!("tau must be positive, got {v}")),
                Err(_) => Err(format!("tau must be `per-edge` or a number of seconds, got {other:?}")),
            },
        }
    }
}

impl Serialize for Tau {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Tau {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Signed opinions within one time window, keyed by (reply author, comment author).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub window_index: u64,
    pub entries: BTreeMap<(String, String), i8>,
}

/// Most frequent opinion among the counts of one window cell.
///
/// A tie between agree and disagree resolves to 0; a tie between neutral
/// and a signed opinion resolves to the signed one.
pub fn window_opinion(agree: usize, disagree: usize, neutral: usize) -> i8 {
    if agree > disagree && agree >= neutral {
        1
    } else if disagree > agree && disagree >= neutral {
        -1
    } else {
        0
    }
}

pub fn build_snapshots(records: &[InteractionRecord], tau: Tau) -> Result<Vec<Snapshot>> {
    match tau {
        Tau::PerEdge => Ok(records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut entries = BTreeMap::new();
                if !r.is_self_reply() {
                    entries.insert((r.reply_author.clone(), r.comment_author.clone()), r.label.sign());
                }
                Snapshot {
                    window_index: i as u64,
                    entries,
                }
            })
            .collect()),
        Tau::Seconds(0) => Err(Error::Config("tau must be positive".into())),
        Tau::Seconds(width) => {
            let Some(start) = records.iter().map(|r| r.timestamp).min() else {
                return Ok(Vec::new());
            };
            let mut windows: BTreeMap<u64, BTreeMap<(String, String), [usize; 3]>> = BTreeMap::new();
            for r in records.iter().filter(|r| !r.is_self_reply()) {
                let k = (r.timestamp - start) / width;
                let counts = windows
                    .entry(k)
                    .or_default()
                    .entry((r.reply_author.clone(), r.comment_author.clone()))
                    .or_default();
                counts[r.label.index()] += 1;
            }
            Ok(windows
                .into_iter()
                .map(|(k, cells)| Snapshot {
                    window_index: k,
                    entries: cells
                        .into_iter()
                        .map(|(pair, c)| {
                            let opinion = window_opinion(
                                c[Label::Agree.index()],
                                c[Label::Disagree.index()],
                                c[Label::Neutral.index()],
                            );
                            (pair, opinion)
                        })
                        .collect(),
                })
                .collect())
        }
    }
}

/// A typed, directed edge between dense node indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub rel: RelationType,
    pub dst: usize,
}

impl Edge {
    pub fn new(src: usize, rel: RelationType, dst: usize) -> Self {
        Edge { src, rel, dst }
    }
}

/// Construction parameters recorded with a graph.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Tau>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Resolved run configuration that produced the graph, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// Directed typed graph over authors with at most one edge per ordered pair.
#[derive(Clone, Debug, Default)]
pub struct RelationGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    pairs: HashMap<(usize, usize), usize>,
    // edge ids touching each node, either direction
    incident: Vec<Vec<usize>>,
    aggregate_weights: BTreeMap<(usize, usize), i64>,
    retyped: BTreeMap<(usize, usize), RelationType>,
    heldout: BTreeSet<(usize, usize)>,
    pub meta: GraphMeta,
}

impl PartialEq for RelationGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.aggregate_weights == other.aggregate_weights
            && self.retyped == other.retyped
            && self.heldout == other.heldout
            && self.meta == other.meta
    }
}

impl RelationGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an author and returns its dense index; idempotent.
    pub fn add_node(&mut self, author: &str) -> usize {
        if let Some(&i) = self.index.get(author) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(author.to_string());
        self.index.insert(author.to_string(), i);
        self.incident.push(Vec::new());
        i
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, author: &str) -> Option<usize> {
        self.index.get(author).copied()
    }

    pub fn author(&self, index: usize) -> Option<&str> {
        self.nodes.get(index).map(String::as_str)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_between(&self, src: usize, dst: usize) -> Option<&Edge> {
        self.pairs.get(&(src, dst)).map(|&e| &self.edges[e])
    }

    /// Edge ids incident to `node` in either direction.
    pub fn incident_edges(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<()> {
        let n = self.nodes.len();
        if edge.src >= n || edge.dst >= n {
            return Err(Error::UnknownAuthor(format!(
                "edge endpoint ({}, {}) outside {n} nodes",
                edge.src, edge.dst
            )));
        }
        if self.pairs.contains_key(&(edge.src, edge.dst)) {
            return Err(Error::Config(format!(
                "duplicate edge for pair ({}, {})",
                edge.src, edge.dst
            )));
        }
        let id = self.edges.len();
        self.pairs.insert((edge.src, edge.dst), id);
        self.incident[edge.src].push(id);
        if edge.dst != edge.src {
            self.incident[edge.dst].push(id);
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn aggregate_weight(&self, src: usize, dst: usize) -> Option<i64> {
        self.aggregate_weights.get(&(src, dst)).copied()
    }

    pub fn aggregate_weights(&self) -> &BTreeMap<(usize, usize), i64> {
        &self.aggregate_weights
    }

    /// Original types of training edges that were retyped to interaction.
    pub fn retyped(&self) -> &BTreeMap<(usize, usize), RelationType> {
        &self.retyped
    }

    /// Pairs whose interaction edge stands in for a held-out interaction.
    pub fn heldout_pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.heldout
    }

    pub fn relation_counts(&self) -> [usize; RelationType::COUNT] {
        let mut counts = [0; RelationType::COUNT];
        for e in &self.edges {
            counts[e.rel.index()] += 1;
        }
        counts
    }

    /// Distinct nodes adjacent to `node`, ignoring direction.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.incident[node].iter().map(move |&e| {
            let edge = &self.edges[e];
            if edge.src == node {
                edge.dst
            } else {
                edge.src
            }
        })
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::UnknownAuthor(format!("node index {node} (graph has {})", self.nodes.len())))
        }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&GraphFile::from(self))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<RelationGraph> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: GraphFile = serde_json::from_str(&text)?;
        file.into_graph()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&GraphFile::from(self))?)
    }

    pub fn from_json_str(text: &str) -> Result<RelationGraph> {
        let file: GraphFile = serde_json::from_str(text)?;
        file.into_graph()
    }
}

/// Sums snapshots into the relation graph; nodes in order of first appearance.
pub fn aggregate_relations(snapshots: &[Snapshot]) -> RelationGraph {
    let mut graph = RelationGraph::new();
    aggregate_into(&mut graph, snapshots);
    graph
}

fn aggregate_into(graph: &mut RelationGraph, snapshots: &[Snapshot]) {
    let mut sums: BTreeMap<(usize, usize), (i64, bool)> = BTreeMap::new();
    for snapshot in snapshots {
        for ((src, dst), &a) in &snapshot.entries {
            let s = graph.add_node(src);
            let d = graph.add_node(dst);
            let cell = sums.entry((s, d)).or_insert((0, false));
            cell.0 += i64::from(a);
            cell.1 |= a != 0;
        }
    }
    for ((src, dst), (weight, any_signed)) in sums {
        if let Some(rel) = RelationType::from_aggregate(weight, any_signed) {
            graph
                .add_edge(Edge::new(src, rel, dst))
                .expect("pairs are unique and endpoints registered");
            graph.aggregate_weights.insert((src, dst), weight);
        }
    }
}

/// Builds the relation graph of a record list, registering every author
/// (including self-repliers) in record order.
pub fn build_graph(records: &[InteractionRecord], tau: Tau) -> Result<RelationGraph> {
    let snapshots = build_snapshots(records, tau)?;
    let mut graph = RelationGraph::new();
    for r in records {
        graph.add_node(&r.comment_author);
        graph.add_node(&r.reply_author);
    }
    aggregate_into(&mut graph, &snapshots);
    graph.meta.tau = Some(tau);
    Ok(graph)
}

/// Adds interaction edges for held-out (reply author, comment author) pairs
/// and retypes each existing training edge to interaction with probability `rho`.
///
/// Retyping happens first, one draw per training edge in edge order, so the
/// outcome depends only on the training graph and the seed.
pub fn inject_interaction_edges(
    mut graph: RelationGraph,
    heldout_pairs: &[(String, String)],
    rho: f64,
    seed: u64,
) -> Result<RelationGraph> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!("rho must lie in [0, 1], got {rho}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..graph.edges.len() {
        let edge = graph.edges[i];
        if edge.rel == RelationType::Interaction {
            continue;
        }
        let draw: f64 = rng.random();
        if draw < rho {
            graph.retyped.insert((edge.src, edge.dst), edge.rel);
            graph.edges[i].rel = RelationType::Interaction;
        }
    }
    for (src, dst) in heldout_pairs {
        let s = graph.add_node(src);
        let d = graph.add_node(dst);
        if s != d && graph.edge_between(s, d).is_none() {
            graph.add_edge(Edge::new(s, RelationType::Interaction, d))?;
            graph.heldout.insert((s, d));
        }
    }
    graph.meta.rho = Some(rho);
    graph.meta.seed = Some(seed);
    Ok(graph)
}

/// Held-out pairs of a record list in (reply author, comment author) order.
pub fn heldout_pairs<'a>(records: impl IntoIterator<Item = &'a InteractionRecord>) -> Vec<(String, String)> {
    records
        .into_iter()
        .map(|r| (r.reply_author.clone(), r.comment_author.clone()))
        .collect()
}

/// Node set and induced edges around a query pair, in local indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neighborhood {
    /// Original node indices, ascending. Local index `i` is `nodes[i]`.
    pub nodes: Vec<usize>,
    pub edges: Vec<Edge>,
}

impl Neighborhood {
    pub fn local(&self, original: usize) -> Option<usize> {
        self.nodes.binary_search(&original).ok()
    }
}

/// Nodes within `radius` hops of `a` or `b` (direction ignored) and every
/// graph edge with both endpoints among them.
pub fn neighborhood(graph: &RelationGraph, a: usize, b: usize, radius: usize) -> Result<Neighborhood> {
    graph.check_node(a)?;
    graph.check_node(b)?;
    let mut depth: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for start in [a, b] {
        if depth.insert(start, 0).is_none() {
            queue.push_back(start);
        }
    }
    while let Some(node) = queue.pop_front() {
        let d = depth[&node];
        if d == radius {
            continue;
        }
        for next in graph.neighbors(node) {
            if let std::collections::btree_map::Entry::Vacant(slot) = depth.entry(next) {
                slot.insert(d + 1);
                queue.push_back(next);
            }
        }
    }
    let nodes: Vec<usize> = depth.into_keys().collect();
    let mut edge_ids: Vec<usize> = nodes
        .iter()
        .flat_map(|&n| graph.incident_edges(n).iter().copied())
        .filter(|&e| {
            let edge = &graph.edges[e];
            nodes.binary_search(&edge.src).is_ok() && nodes.binary_search(&edge.dst).is_ok()
        })
        .collect();
    edge_ids.sort_unstable();
    edge_ids.dedup();
    let local = |n: usize| nodes.binary_search(&n).expect("endpoint in node set");
    let edges = edge_ids
        .into_iter()
        .map(|e| {
            let edge = graph.edges[e];
            Edge::new(local(edge.src), edge.rel, local(edge.dst))
        })
        .collect();
    Ok(Neighborhood { nodes, edges })
}

/// An induced subgraph together with the original index of each local node.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub graph: RelationGraph,
    pub original: Vec<usize>,
}

pub fn extract_subgraph(graph: &RelationGraph, a: usize, b: usize, radius: usize) -> Result<Subgraph> {
    let hood = neighborhood(graph, a, b, radius)?;
    let mut sub = RelationGraph::new();
    for &n in &hood.nodes {
        sub.add_node(&graph.nodes[n]);
    }
    for edge in &hood.edges {
        sub.add_edge(*edge)?;
        let key = (hood.nodes[edge.src], hood.nodes[edge.dst]);
        let local = (edge.src, edge.dst);
        if let Some(&w) = graph.aggregate_weights.get(&key) {
            sub.aggregate_weights.insert(local, w);
        }
        if let Some(&r) = graph.retyped.get(&key) {
            sub.retyped.insert(local, r);
        }
        if graph.heldout.contains(&key) {
            sub.heldout.insert(local);
        }
    }
    sub.meta = graph.meta.clone();
    Ok(Subgraph {
        graph: sub,
        original: hood.nodes,
    })
}

/// On-disk JSON form of a [`RelationGraph`].
#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<String>,
    edges: Vec<(usize, RelationType, usize)>,
    aggregate_weights: Vec<(usize, usize, i64)>,
    #[serde(default)]
    retyped: Vec<(usize, usize, RelationType)>,
    #[serde(default)]
    heldout: Vec<(usize, usize)>,
    #[serde(default)]
    meta: GraphMeta,
}

impl From<&RelationGraph> for GraphFile {
    fn from(g: &RelationGraph) -> Self {
        GraphFile {
            nodes: g.nodes.clone(),
            edges: g.edges.iter().map(|e| (e.src, e.rel, e.dst)).collect(),
            aggregate_weights: g.aggregate_weights.iter().map(|(&(s, d), &w)| (s, d, w)).collect(),
            retyped: g.retyped.iter().map(|(&(s, d), &r)| (s, d, r)).collect(),
            heldout: g.heldout.iter().copied().collect(),
            meta: g.meta.clone(),
        }
    }
}

impl GraphFile {
    fn into_graph(self) -> Result<RelationGraph> {
        let mut g = RelationGraph::new();
        for node in &self.nodes {
            if g.node_index(node).is_some() {
                return Err(Error::Config(format!("duplicate node {node:?} in graph file")));
            }
            g.add_node(node);
        }
        for (src, rel, dst) in self.edges {
            g.add_edge(Edge::new(src, rel, dst))?;
        }
        for (src, dst, w) in self.aggregate_weights {
            let edge = g.edge_between(src, dst).ok_or_else(|| {
                Error::Config(format!("aggregate weight for ({src}, {dst}) without an edge"))
            })?;
            let consistent = match edge.rel {
                RelationType::Supporter => w > 0,
                RelationType::Opponent => w < 0,
                RelationType::Acquaintance => w == 0,
                RelationType::Interaction => true,
            };
            if !consistent {
                return Err(Error::Config(format!(
                    "{} edge ({src}, {dst}) has inconsistent weight {w}",
                    edge.rel
                )));
            }
            g.aggregate_weights.insert((src, dst), w);
        }
        for (src, dst, rel) in self.retyped {
            g.retyped.insert((src, dst), rel);
        }
        g.heldout = self.heldout.into_iter().collect();
        g.meta = self.meta;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::tests::record;
    use proptest::prelude::*;

    fn labels_for_pair(labels: &[Label]) -> Vec<InteractionRecord> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| record(&i.to_string(), "r", "c", l, i as u64))
            .collect()
    }

    fn pair_type(labels: &[Label]) -> Option<RelationType> {
        let g = build_graph(&labels_for_pair(labels), Tau::PerEdge).unwrap();
        let (r, c) = (g.node_index("r").unwrap(), g.node_index("c").unwrap());
        g.edge_between(r, c).map(|e| e.rel)
    }

    #[test]
    fn single_agree_snapshot() {
        let snaps = build_snapshots(&labels_for_pair(&[Label::Agree]), Tau::PerEdge).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].entries[&("r".to_string(), "c".to_string())], 1);
    }

    #[test]
    fn window_majority() {
        let recs = labels_for_pair(&[Label::Agree, Label::Agree, Label::Disagree]);
        let snaps = build_snapshots(&recs, Tau::Seconds(100)).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].entries.values().copied().collect::<Vec<_>>(), [1]);
        let snaps = build_snapshots(&recs[1..], Tau::Seconds(100)).unwrap();
        assert_eq!(snaps[0].entries.values().copied().collect::<Vec<_>>(), [0]);
    }

    #[test]
    fn window_tie_rules() {
        // a oracle that enumerates the most frequent opinions and applies the tie rules
        for a in 0..4 {
            for d in 0..4 {
                for n in 0..4 {
                    if a + d + n == 0 {
                        continue;
                    }
                    let max = a.max(d).max(n);
                    let top: Vec<i8> = [(a, 1), (d, -1), (n, 0)]
                        .iter()
                        .filter(|(c, _)| *c == max)
                        .map(|&(_, s)| s)
                        .collect();
                    let signed: Vec<i8> = top.iter().copied().filter(|&s| s != 0).collect();
                    let expected = if signed.len() == 1 { signed[0] } else { 0 };
                    assert_eq!(window_opinion(a, d, n), expected, "counts {a} {d} {n}");
                }
            }
        }
    }

    #[test]
    fn windows_anchor_at_earliest_timestamp() {
        let mut recs = labels_for_pair(&[Label::Agree, Label::Disagree, Label::Disagree]);
        recs[0].timestamp = 1000;
        recs[1].timestamp = 1009;
        recs[2].timestamp = 1010;
        let snaps = build_snapshots(&recs, Tau::Seconds(10)).unwrap();
        let windows: Vec<_> = snaps.iter().map(|s| s.window_index).collect();
        assert_eq!(windows, [0, 1]);
        assert_eq!(snaps[0].entries.values().next(), Some(&0));
        assert_eq!(snaps[1].entries.values().next(), Some(&-1));
    }

    #[test]
    fn zero_tau_is_rejected() {
        assert!(build_snapshots(&[], Tau::Seconds(0)).is_err());
        assert!("0".parse::<Tau>().is_err());
        assert!("-3".parse::<Tau>().is_err());
        assert_eq!("per-edge".parse::<Tau>(), Ok(Tau::PerEdge));
        assert_eq!("60".parse::<Tau>(), Ok(Tau::Seconds(60)));
    }

    #[test]
    fn typing_rule_examples() {
        use Label::*;
        assert_eq!(pair_type(&[Agree, Disagree, Agree]), Some(RelationType::Supporter));
        assert_eq!(pair_type(&[Agree, Disagree]), Some(RelationType::Acquaintance));
        assert_eq!(pair_type(&[Disagree]), Some(RelationType::Opponent));
        assert_eq!(pair_type(&[Neutral, Neutral]), None);
    }

    #[test]
    fn self_replies_register_but_add_no_edge() {
        let mut recs = labels_for_pair(&[Label::Agree]);
        recs.push(record("x", "z", "z", Label::Disagree, 5));
        let g = build_graph(&recs, Tau::PerEdge).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn weights_match_types() {
        let recs = labels_for_pair(&[Label::Agree, Label::Agree]);
        let g = build_graph(&recs, Tau::PerEdge).unwrap();
        assert_eq!(g.aggregate_weight(0, 1).or(g.aggregate_weight(1, 0)), Some(2));
    }

    fn chain_graph() -> RelationGraph {
        // x -> a -> b -> y, plus an isolated node
        let recs = vec![
            record("0", "x", "a", Label::Agree, 0),
            record("1", "a", "b", Label::Disagree, 1),
            record("2", "b", "y", Label::Agree, 2),
            record("3", "lonely", "lonely", Label::Agree, 3),
        ];
        build_graph(&recs, Tau::PerEdge).unwrap()
    }

    #[test]
    fn inject_rho_extremes() {
        let g = chain_graph();
        let none = inject_interaction_edges(g.clone(), &[], 0.0, 1).unwrap();
        assert!(none.retyped().is_empty());
        assert_eq!(none.relation_counts()[RelationType::Interaction.index()], 0);
        let all = inject_interaction_edges(g.clone(), &[], 1.0, 1).unwrap();
        assert_eq!(all.retyped().len(), 3);
        assert!(all.edges().iter().all(|e| e.rel == RelationType::Interaction));
        assert!(inject_interaction_edges(g, &[], 1.5, 1).is_err());
    }

    #[test]
    fn inject_heldout_pairs() {
        let g = chain_graph();
        let pairs = vec![
            ("A".to_string(), "B".to_string()),
            ("a".to_string(), "b".to_string()),
            ("y".to_string(), "b".to_string()),
            ("q".to_string(), "q".to_string()),
        ];
        let out = inject_interaction_edges(g, &pairs, 0.0, 7).unwrap();
        let (na, nb) = (out.node_index("A").unwrap(), out.node_index("B").unwrap());
        assert_eq!(out.edge_between(na, nb).unwrap().rel, RelationType::Interaction);
        let (a, b) = (out.node_index("a").unwrap(), out.node_index("b").unwrap());
        assert_eq!(out.edge_between(a, b).unwrap().rel, RelationType::Opponent);
        let (y, b2) = (out.node_index("y").unwrap(), out.node_index("b").unwrap());
        assert_eq!(out.edge_between(y, b2).unwrap().rel, RelationType::Interaction);
        // held-out self-repliers are registered but get no edge
        let q = out.node_index("q").unwrap();
        assert!(out.incident_edges(q).is_empty());
        assert_eq!(out.heldout_pairs().len(), 2);
        assert_eq!(out.meta.rho, Some(0.0));
    }

    #[test]
    fn subgraph_examples() {
        let g = chain_graph();
        let idx = |s: &str| g.node_index(s).unwrap();
        let sub = extract_subgraph(&g, idx("a"), idx("b"), 1).unwrap();
        assert_eq!(sub.graph.num_nodes(), 4);
        assert_eq!(sub.graph.num_edges(), 3);
        let sub = extract_subgraph(&g, idx("a"), idx("b"), 0).unwrap();
        assert_eq!(sub.original, vec![idx("a"), idx("b")]);
        assert_eq!(sub.graph.num_edges(), 1);
        let sub = extract_subgraph(&g, idx("lonely"), idx("x"), 0).unwrap();
        assert_eq!(sub.graph.num_edges(), 0);
        assert!(extract_subgraph(&g, 99, 0, 1).is_err());
    }

    #[test]
    fn isolated_pair_subgraph() {
        let mut g = RelationGraph::new();
        let a = g.add_node("a");
        let b = g.add_node("b");
        let sub = extract_subgraph(&g, a, b, 1).unwrap();
        assert_eq!(sub.graph.num_nodes(), 2);
        assert_eq!(sub.graph.num_edges(), 0);
    }

    #[test]
    fn json_round_trip() {
        let g = chain_graph();
        let g = inject_interaction_edges(g, &[("n1".into(), "a".into())], 0.5, 3).unwrap();
        let text = g.to_json_string().unwrap();
        let back = RelationGraph::from_json_str(&text).unwrap();
        assert_eq!(back, g);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["meta"]["tau"], "per-edge");
        assert_eq!(v["edges"][0].as_array().unwrap().len(), 3);
    }

    #[test]
    fn json_rejects_bad_weight() {
        let bad = r#"{"nodes":["a","b"],"edges":[[0,"supporter",1]],"aggregate_weights":[[0,1,-2]]}"#;
        assert!(RelationGraph::from_json_str(bad).is_err());
        let dup = r#"{"nodes":["a","b"],"edges":[[0,"supporter",1],[0,"opponent",1]],"aggregate_weights":[]}"#;
        assert!(RelationGraph::from_json_str(dup).is_err());
    }

    fn random_records(events: &[(u8, u8, u8)]) -> Vec<InteractionRecord> {
        events
            .iter()
            .enumerate()
            .map(|(i, &(s, d, l))| {
                record(&i.to_string(), &format!("n{s}"), &format!("n{d}"), Label::ALL[l as usize], i as u64)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn subgraph_grows_with_radius(events in prop::collection::vec((0u8..8, 0u8..8, 0u8..3), 1..20)) {
            let g = build_graph(&random_records(&events), Tau::PerEdge).unwrap();
            let mut previous = Vec::new();
            for radius in 0..4 {
                let hood = neighborhood(&g, 0, g.num_nodes() - 1, radius).unwrap();
                prop_assert!(previous.iter().all(|n| hood.nodes.contains(n)));
                previous = hood.nodes;
            }
        }

        #[test]
        fn edges_stay_unique(events in prop::collection::vec((0u8..6, 0u8..6, 0u8..3), 1..30), rho in 0.0f64..=1.0, seed: u64) {
            let records = random_records(&events);
            let g = build_graph(&records, Tau::Seconds(3)).unwrap();
            let g = inject_interaction_edges(g, &heldout_pairs(&records[..records.len() / 2]), rho, seed).unwrap();
            let mut pairs = std::collections::HashSet::new();
            for e in g.edges() {
                prop_assert!(pairs.insert((e.src, e.dst)));
                prop_assert!(e.src < g.num_nodes() && e.dst < g.num_nodes());
            }
        }
    }
}
