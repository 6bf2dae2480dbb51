//! Fusion ablations on the synthetic dataset: text only, no reconstruction
//! term, no pretraining, frozen encoder and additive fusion.

use stancegraph::config::RunConfig;
use stancegraph::pipeline::run_pipeline;
use stancegraph::synth::{fusion_dataset, FusionSynthConfig};

fn main() -> stancegraph::Result<()> {
    let records = fusion_dataset(&FusionSynthConfig::default())?;
    let variants: [(&str, &[(&str, &str)]); 6] = [
        ("full (concat, fine-tuned)", &[]),
        ("text only", &[("fusion", "text-only")]),
        ("no reconstruction", &[("no_recon", "true")]),
        ("no pretraining", &[("no_pretrain", "true")]),
        ("frozen encoder", &[("freeze_encoder", "true")]),
        ("additive fusion", &[("fusion", "add"), ("d_rel_out", "64")]),
    ];
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = variants
            .iter()
            .map(|(name, kv)| {
                let records = &records;
                s.spawn(move || {
                    let mut cfg = RunConfig::default();
                    cfg.apply([("freeze_encoder", "false"), ("gae_epochs", "200")])?;
                    cfg.apply(kv.iter().copied())?;
                    run_pipeline(records, &cfg).map(|o| (*name, o.report.test))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect::<stancegraph::Result<Vec<_>>>()
    })?;
    for (name, test) in results {
        println!("{name:<28} accuracy {:.4}  macro-F1 {:.4}", test.accuracy, test.macro_f1);
    }
    Ok(())
}
