//! Hashed text features and the embedding-table file they travel in.

use stancegraph::synth::{fusion_dataset, FusionSynthConfig};
use stancegraph::textfeat::{featurize_records, hash_featurize, load_embedding_table, tokenize};

fn main() -> stancegraph::Result<()> {
    let (comment, reply) = ("Brexit deal: vote it down!", "No, the deal is fine.");
    println!("tokens: {:?} | {:?}", tokenize(comment).collect::<Vec<_>>(), tokenize(reply).collect::<Vec<_>>());
    let v = hash_featurize(comment, reply, 16)?;
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("16-dim hash vector (norm {norm:.6}): {:?}", v.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>());

    let records = fusion_dataset(&FusionSynthConfig {
        records: 200,
        authors: 80,
        ..Default::default()
    })?;
    let table = featurize_records(&records, 64)?;
    let dir = std::env::temp_dir().join("stancegraph-featurize");
    std::fs::create_dir_all(&dir).map_err(|e| stancegraph::Error::Config(e.to_string()))?;
    let path = dir.join("embeddings.txt");
    table.write(&path)?;
    let back = load_embedding_table(&path)?;
    println!("{} rows x {} written to {} and read back equal: {}", back.len(), back.dim(), path.display(), back == table);
    Ok(())
}
