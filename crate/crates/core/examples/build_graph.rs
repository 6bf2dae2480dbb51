//! Builds the relation graph from a handful of interactions, per interaction
//! and with hour-long windows, then adds interaction edges for unseen pairs
//! and prints the radius-1 subgraph around one pair.

use stancegraph::ingest::{parse_jsonl_str, temporal_split};
use stancegraph::relgraph::{build_graph, extract_subgraph, heldout_pairs, inject_interaction_edges, Tau};

const DATA: &str = r#"
{"id":"1","comment":"c","reply":"r","comment_author":"ann","reply_author":"ben","label":"agree","timestamp":0,"topic":"t"}
{"id":"2","comment":"c","reply":"r","comment_author":"ann","reply_author":"ben","label":"disagree","timestamp":60,"topic":"t"}
{"id":"2b","comment":"c","reply":"r","comment_author":"ann","reply_author":"ben","label":"disagree","timestamp":90,"topic":"t"}
{"id":"3","comment":"c","reply":"r","comment_author":"ann","reply_author":"ben","label":"agree","timestamp":4000,"topic":"t"}
{"id":"3b","comment":"c","reply":"r","comment_author":"ann","reply_author":"ben","label":"agree","timestamp":4050,"topic":"t"}
{"id":"4","comment":"c","reply":"r","comment_author":"cat","reply_author":"ben","label":"disagree","timestamp":4100,"topic":"t"}
{"id":"5","comment":"c","reply":"r","comment_author":"dan","reply_author":"cat","label":"agree","timestamp":4200,"topic":"t"}
{"id":"6","comment":"c","reply":"r","comment_author":"cat","reply_author":"dan","label":"disagree","timestamp":4300,"topic":"t"}
{"id":"7","comment":"c","reply":"r","comment_author":"ann","reply_author":"cat","label":"neutral","timestamp":4400,"topic":"t"}
{"id":"8","comment":"c","reply":"r","comment_author":"ann","reply_author":"eve","label":"agree","timestamp":9000,"topic":"t"}
{"id":"9","comment":"c","reply":"r","comment_author":"dan","reply_author":"ann","label":"neutral","timestamp":9100,"topic":"t"}
{"id":"10","comment":"c","reply":"r","comment_author":"ben","reply_author":"dan","label":"agree","timestamp":9200,"topic":"t"}
"#;

fn show(title: &str, g: &stancegraph::relgraph::RelationGraph) {
    println!("{title}: {} nodes, {} edges", g.num_nodes(), g.num_edges());
    for e in g.edges() {
        let w = g.aggregate_weight(e.src, e.dst).map_or(String::new(), |w| format!(" (A*={w})"));
        println!("  {} -[{}]-> {}{w}", g.nodes()[e.src], e.rel, g.nodes()[e.dst]);
    }
}

fn main() -> stancegraph::Result<()> {
    let records = parse_jsonl_str(DATA.trim())?;
    show("per interaction", &build_graph(&records, Tau::PerEdge)?);
    show("one-hour windows", &build_graph(&records, Tau::Seconds(3600))?);

    let split = temporal_split(&records, (0.7, 0.1, 0.2))?;
    let graph = build_graph(&split.train, Tau::PerEdge)?;
    let graph = inject_interaction_edges(graph, &heldout_pairs(split.heldout()), 0.3, 0)?;
    show("training graph with interaction edges (rho=0.3)", &graph);
    for ((s, d), original) in graph.retyped() {
        println!("  retyped {} -> {} (was {original})", graph.nodes()[*s], graph.nodes()[*d]);
    }

    let (a, b) = (graph.node_index("eve").expect("eve"), graph.node_index("ann").expect("ann"));
    let sub = extract_subgraph(&graph, a, b, 1)?;
    show("radius-1 subgraph around eve -> ann", &sub.graph);
    Ok(())
}
