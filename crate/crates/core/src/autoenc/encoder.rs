use ndarray::Array2;

use super::{GaeParams, RgcnLayer};
use crate::error::{Error, Result};
use crate::relgraph::{Edge, RelationGraph, RelationType};

/// Incoming messages per relation, normalized by the per-relation in-degree.
#[derive(Clone, Debug)]
pub struct MessageGraph {
    num_nodes: usize,
    // (dst, src, 1 / |N^r_dst|) per relation
    messages: Vec<Vec<(usize, usize, f64)>>,
}

impl MessageGraph {
    pub fn new<'a>(num_nodes: usize, edges: impl IntoIterator<Item = &'a Edge>) -> Self {
        let mut by_rel: Vec<Vec<(usize, usize)>> = vec![Vec::new(); RelationType::COUNT];
        for e in edges {
            by_rel[e.rel.index()].push((e.dst, e.src));
        }
        let messages = by_rel
            .into_iter()
            .map(|pairs| {
                let mut degree = vec![0usize; num_nodes];
                for &(dst, _) in &pairs {
                    degree[dst] += 1;
                }
                pairs
                    .into_iter()
                    .map(|(dst, src)| (dst, src, 1.0 / degree[dst] as f64))
                    .collect()
            })
            .collect();
        MessageGraph { num_nodes, messages }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_messages(&self) -> usize {
        self.messages.iter().map(Vec::len).sum()
    }

    /// Row `i` of the result is the mean of `x` over the relation-`r`
    /// in-neighbors of `i`; `None` when the relation carries no messages.
    fn aggregate(&self, r: usize, x: &Array2<f64>) -> Option<Array2<f64>> {
        let msgs = &self.messages[r];
        if msgs.is_empty() {
            return None;
        }
        let mut out = Array2::zeros(x.raw_dim());
        for &(dst, src, coef) in msgs {
            out.row_mut(dst).scaled_add(coef, &x.row(src));
        }
        Some(out)
    }

    /// Adjoint of `aggregate`: accumulates `coef * g[dst]` into `out[src]`.
    fn scatter_back(&self, r: usize, g: &Array2<f64>, out: &mut Array2<f64>) {
        for &(dst, src, coef) in &self.messages[r] {
            out.row_mut(src).scaled_add(coef, &g.row(dst));
        }
    }
}

#[derive(Clone, Debug)]
struct LayerCache {
    input: Array2<f64>,
    aggregates: Vec<Option<Array2<f64>>>,
    pre_activation: Array2<f64>,
}

/// Intermediate values of one encoder forward pass, kept for backprop.
#[derive(Clone, Debug)]
pub struct EncoderCache {
    layers: Vec<LayerCache>,
    output: Array2<f64>,
}

impl EncoderCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    pub fn into_output(self) -> Array2<f64> {
        self.output
    }
}

fn layer_forward(layer: &RgcnLayer, x: &Array2<f64>, mg: &MessageGraph) -> LayerCache {
    let mut pre = x.dot(&layer.self_weight.t());
    let aggregates: Vec<Option<Array2<f64>>> = (0..RelationType::COUNT).map(|r| mg.aggregate(r, x)).collect();
    for (r, agg) in aggregates.iter().enumerate() {
        if let Some(agg) = agg {
            pre += &agg.dot(&layer.relation_weights[r].t());
        }
    }
    LayerCache {
        input: x.clone(),
        aggregates,
        pre_activation: pre,
    }
}

/// Runs both layers on the given input rows: rectifier after the first,
/// identity after the second.
pub(crate) fn forward(params: &GaeParams, inputs: &Array2<f64>, mg: &MessageGraph) -> Result<EncoderCache> {
    let d = params.d();
    if inputs.ncols() != d || inputs.nrows() != mg.num_nodes() {
        return Err(Error::Dimension(format!(
            "encoder input {:?} does not match d={d} and {} nodes",
            inputs.dim(),
            mg.num_nodes()
        )));
    }
    let mut layers = Vec::with_capacity(params.layers.len());
    let mut x = inputs.clone();
    let last = params.layers.len() - 1;
    for (l, layer) in params.layers.iter().enumerate() {
        let cache = layer_forward(layer, &x, mg);
        x = if l < last {
            cache.pre_activation.mapv(|v| v.max(0.0))
        } else {
            cache.pre_activation.clone()
        };
        layers.push(cache);
    }
    Ok(EncoderCache { layers, output: x })
}

/// Backpropagates `d_output` through the encoder, accumulating weight
/// gradients into `grads` and returning the gradient for the input rows.
pub(crate) fn backward(
    params: &GaeParams,
    cache: &EncoderCache,
    mg: &MessageGraph,
    d_output: &Array2<f64>,
    grads: &mut GaeParams,
) -> Array2<f64> {
    let last = params.layers.len() - 1;
    let mut d_x = d_output.clone();
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let lc = &cache.layers[l];
        let d_pre = if l < last {
            let mut g = d_x;
            g.zip_mut_with(&lc.pre_activation, |g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            });
            g
        } else {
            d_x
        };
        let g = &mut grads.layers[l];
        g.self_weight += &d_pre.t().dot(&lc.input);
        let mut d_in = d_pre.dot(&layer.self_weight);
        for (r, agg) in lc.aggregates.iter().enumerate() {
            if let Some(agg) = agg {
                g.relation_weights[r] += &d_pre.t().dot(agg);
                let through = d_pre.dot(&layer.relation_weights[r]);
                mg.scatter_back(r, &through, &mut d_in);
            }
        }
        d_x = d_in;
    }
    d_x
}

/// Encodes every node of `graph` with messages over `message_edges`.
pub fn encode_nodes(graph: &RelationGraph, params: &GaeParams, message_edges: &[Edge]) -> Result<Array2<f64>> {
    if params.num_nodes() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "{} node embeddings for a graph of {} nodes",
            params.num_nodes(),
            graph.num_nodes()
        )));
    }
    for e in message_edges {
        if graph.edge_between(e.src, e.dst) != Some(e) {
            return Err(Error::Config(format!("message edge {e:?} is not a graph edge")));
        }
    }
    let mg = MessageGraph::new(graph.num_nodes(), message_edges);
    Ok(forward(params, &params.node_embeddings, &mg)?.into_output())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoenc::DecoderKind;
    use ndarray::array;

    fn identity_params(num_nodes: usize, d: usize) -> GaeParams {
        let mut p = GaeParams::zeros(num_nodes, d, DecoderKind::DistMult);
        for layer in &mut p.layers {
            layer.self_weight = Array2::eye(d);
        }
        p
    }

    #[test]
    fn isolated_node_identity_weights() {
        let mut g = RelationGraph::new();
        g.add_node("a");
        let mut p = identity_params(1, 2);
        p.node_embeddings = array![[1.0, -1.0]];
        let h = encode_nodes(&g, &p, &[]).unwrap();
        assert_eq!(h, array![[1.0, 0.0]]);
    }

    #[test]
    fn zero_inputs_give_zero_outputs() {
        let mut g = RelationGraph::new();
        g.add_node("a");
        g.add_node("b");
        g.add_edge(Edge::new(0, RelationType::Opponent, 1)).unwrap();
        let mut p = GaeParams::init(2, 3, DecoderKind::DistMult, 1).unwrap();
        p.node_embeddings.fill(0.0);
        for layer in &mut p.layers {
            layer.self_weight.fill(0.0);
        }
        let h = encode_nodes(&g, &p, g.edges()).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    // h_i = f(W0 x_i + Σ_r Σ_{j→i, type r} W_r x_j / n_{i,r}) with plain loops
    fn dense_oracle(p: &GaeParams, edges: &[Edge]) -> Vec<Vec<f64>> {
        let n = p.num_nodes();
        let d = p.d();
        let mut x: Vec<Vec<f64>> = (0..n).map(|i| p.node_embeddings.row(i).to_vec()).collect();
        for (l, layer) in p.layers.iter().enumerate() {
            let mut next = vec![vec![0.0; d]; n];
            for i in 0..n {
                for o in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += layer.self_weight[[o, k]] * x[i][k];
                    }
                    for r in RelationType::ALL {
                        let incoming: Vec<usize> =
                            edges.iter().filter(|e| e.dst == i && e.rel == r).map(|e| e.src).collect();
                        for &j in &incoming {
                            for k in 0..d {
                                acc += layer.relation_weights[r.index()][[o, k]] * x[j][k] / incoming.len() as f64;
                            }
                        }
                    }
                    next[i][o] = if l == 0 { acc.max(0.0) } else { acc };
                }
            }
            x = next;
        }
        x
    }

    #[test]
    fn matches_dense_oracle_on_two_nodes() {
        let mut g = RelationGraph::new();
        g.add_node("a");
        g.add_node("b");
        g.add_edge(Edge::new(0, RelationType::Supporter, 1)).unwrap();
        let mut p = GaeParams::zeros(2, 2, DecoderKind::DistMult);
        p.node_embeddings = array![[0.5, -1.0], [2.0, 0.25]];
        p.layers[0].self_weight = array![[1.0, 0.5], [-0.5, 2.0]];
        p.layers[0].relation_weights[0] = array![[0.3, -0.7], [1.1, 0.2]];
        p.layers[1].self_weight = array![[0.9, 0.1], [0.4, -1.3]];
        p.layers[1].relation_weights[0] = array![[-0.6, 0.8], [0.5, 0.5]];
        let h = encode_nodes(&g, &p, g.edges()).unwrap();
        let oracle = dense_oracle(&p, g.edges());
        for i in 0..2 {
            for k in 0..2 {
                assert!((h[[i, k]] - oracle[i][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_dense_oracle_on_random_graph() {
        let mut g = RelationGraph::new();
        for i in 0..7 {
            g.add_node(&format!("n{i}"));
        }
        let edges = [(0, 0, 1), (2, 1, 1), (3, 0, 1), (1, 2, 4), (4, 3, 5), (5, 1, 0), (6, 0, 0), (0, 3, 6)];
        for (s, r, d) in edges {
            g.add_edge(Edge::new(s, RelationType::ALL[r], d)).unwrap();
        }
        let p = GaeParams::init(7, 4, DecoderKind::DistMult, 9).unwrap();
        let h = encode_nodes(&g, &p, g.edges()).unwrap();
        let oracle = dense_oracle(&p, g.edges());
        for i in 0..7 {
            for k in 0..4 {
                assert!((h[[i, k]] - oracle[i][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_mismatched_shapes_and_foreign_edges() {
        let mut g = RelationGraph::new();
        g.add_node("a");
        g.add_node("b");
        let p = GaeParams::init(3, 2, DecoderKind::DistMult, 0).unwrap();
        assert!(matches!(encode_nodes(&g, &p, &[]), Err(Error::Dimension(_))));
        let p = GaeParams::init(2, 2, DecoderKind::DistMult, 0).unwrap();
        let foreign = [Edge::new(0, RelationType::Supporter, 1)];
        assert!(encode_nodes(&g, &p, &foreign).is_err());
    }
}
