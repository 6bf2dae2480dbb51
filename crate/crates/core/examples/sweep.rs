//! Sweeps the interaction-edge probability rho and the snapshot window tau
//! on the synthetic dataset, one pipeline per value on its own thread.

use stancegraph::cli::sweep;
use stancegraph::config::RunConfig;
use stancegraph::synth::{fusion_dataset, FusionSynthConfig};

fn main() -> stancegraph::Result<()> {
    let records = fusion_dataset(&FusionSynthConfig::default())?;
    let mut cfg = RunConfig::default();
    cfg.apply([("freeze_encoder", "false"), ("gae_epochs", "200")])?;
    for (key, values) in [("rho", &["0", "0.1", "0.2", "0.3", "0.4"][..]), ("tau", &["per-edge", "3600", "86400"][..])] {
        for (v, r) in sweep(&records, &cfg, key, values)? {
            println!(
                "{key}={v:<8} edges {:>4}  retyped {:.3}  macro-F1 {:.4}",
                r.graph.edges, r.graph.retyped_fraction, r.test.macro_f1
            );
        }
    }
    Ok(())
}
