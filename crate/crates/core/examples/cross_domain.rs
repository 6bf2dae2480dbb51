//! In-domain and cross-domain protocols over three seeds; writes the JSON
//! reports and the aggregate CSV under the system temp directory.
//!
//! Every synthetic author pair talks within a single topic, so a held-out
//! topic's pairs have no training history and cross-domain scores sit near
//! chance: the relation signal cannot transfer here.

use stancegraph::config::{ProtocolMode, RunConfig};
use stancegraph::protocol::run_protocol;
use stancegraph::synth::{fusion_dataset, FusionSynthConfig};

fn main() -> stancegraph::Result<()> {
    let records = fusion_dataset(&FusionSynthConfig {
        records: 1000,
        authors: 400,
        topics: 3,
        ..Default::default()
    })?;
    let mut cfg = RunConfig::default();
    cfg.apply([("seeds", "0,1,2"), ("freeze_encoder", "false"), ("gae_epochs", "200")])?;
    for mode in [ProtocolMode::InDomain, ProtocolMode::CrossDomain] {
        let report = run_protocol(&records, mode, &cfg)?;
        println!("{mode:?}:");
        for m in &report.mean_std {
            println!("  {:<8} macro-F1 {:.4} ± {:.4} over {} runs", m.topic, m.macro_f1_mean, m.macro_f1_std, m.runs);
        }
        let dir = std::env::temp_dir().join(format!("stancegraph-{mode:?}").to_lowercase());
        report.write_dir(&dir)?;
        println!("  written to {}", dir.display());
    }
    Ok(())
}
