//! Scaled L_k-error outside the normal regime, with the in-regime control.
//!
//! cargo run --release --example divergence -- [reps]

use grenlab::harness::{run_divergence, DivergencePart, ExperimentConfig, Mode};
use grenlab::DensityFamily;

fn main() -> grenlab::Result<()> {
    let reps: usize = std::env::args().nth(1).map_or(500, |s| s.parse().unwrap());
    let family = DensityFamily::Linear { f0: 1.5, f1: 0.5 };
    for (part, k) in [
        (DivergencePart::Mean, 4.0),
        (DivergencePart::NearZeroVariance, 3.0),
        (DivergencePart::Control, 2.0),
    ] {
        let mut cfg = ExperimentConfig::new(family, k, vec![1_000, 10_000, 100_000], reps, Mode::Divergence);
        cfg.divergence = Some(part);
        let report = run_divergence(&cfg)?;
        println!("{part:?}, k = {k}");
        for s in &report.summaries {
            println!("  n = {:>6}: mean {:.5e}, variance {:.5e}", s.n, s.mean, s.variance);
        }
        for c in &report.checks {
            println!("  {} {} {}", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
        }
    }
    Ok(())
}
