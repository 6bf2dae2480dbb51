//! Pretrains the autoencoder on a two-community signed graph with a fifth of
//! the edges hidden, then classifies the hidden triplets against corruptions.

use std::time::Instant;

use stancegraph::autoenc::{train_gae, DecoderKind, GaeTrainConfig};
use stancegraph::synth::{heldout_triplet_accuracy, hold_out_edges, two_community_graph};

fn main() -> stancegraph::Result<()> {
    let full = two_community_graph(60)?;
    let (observed, heldout) = hold_out_edges(&full, 0.2, 7)?;
    let decoder = std::env::args().nth(1).map_or(Ok(DecoderKind::DistMult), |s| s.parse()).expect("decoder name");
    let epochs = std::env::args().nth(2).map_or(2000, |s| s.parse().expect("epoch count"));
    let cfg = GaeTrainConfig {
        epochs,
        decoder,
        seed: 7,
        ..Default::default()
    };
    let start = Instant::now();
    let trained = train_gae(&observed, &cfg)?;
    println!(
        "{} epochs, {} observed / {} held-out edges, final loss {:.4} ({:.1?})",
        cfg.epochs,
        observed.num_edges(),
        heldout.len(),
        trained.final_loss,
        start.elapsed()
    );
    let acc = heldout_triplet_accuracy(&trained.params, &observed, &full, &heldout, 11)?;
    println!("held-out triplet accuracy ({decoder}): {acc:.4}");
    Ok(())
}
