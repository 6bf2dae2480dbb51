//! Central-difference check of every analytic gradient: the encoder under
//! each decoder and the fused classifier with the encoder unfrozen.

use stancegraph::gradcheck::{run_grad_checks, GradCheckConfig};

fn main() -> stancegraph::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let report = run_grad_checks(&GradCheckConfig {
        seed,
        ..Default::default()
    })?;
    for e in &report.entries {
        println!("{:<28} {:.3e}", e.name, e.max_rel_error);
    }
    println!("passed at {:e}: {}", report.tolerance, report.passed());
    Ok(())
}
