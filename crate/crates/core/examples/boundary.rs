//! The estimator at and near the left end of the support.
//!
//! cargo run --release --example boundary -- [reps]

use grenlab::chernoff::ArgmaxConfig;
use grenlab::harness::{self, ExperimentConfig, Mode};
use grenlab::DensityFamily;

fn main() -> grenlab::Result<()> {
    let reps: usize = std::env::args().nth(1).map_or(2000, |s| s.parse().unwrap());
    let family = DensityFamily::TruncExp { theta: 1.0 };

    let zero = ExperimentConfig::new(family, 1.0, vec![1_000, 10_000], reps, Mode::BoundaryZero);
    let report = harness::run(&zero)?;
    println!("f_n(0) / f(0) against sup_j j / Gamma_j");
    for c in &report.comparisons {
        println!("  {:<36} n = {:>6}: D = {:.4}, p = {:.4}", c.name, c.n, c.ks.statistic, c.ks.p_value);
    }

    let mut rate = ExperimentConfig::new(family, 1.0, vec![1_000, 10_000, 100_000], reps, Mode::BoundaryRate);
    rate.alpha = Some(0.5);
    let report = harness::run(&rate)?;
    println!("n^(1/4) (f_n(n^-1/2) - f(n^-1/2))");
    for s in &report.summaries {
        println!("  n = {:>6}: mean {:+.4}, variance {:.4}", s.n, s.mean, s.variance);
    }

    let mut interior = ExperimentConfig::new(family, 1.0, vec![1_000, 10_000, 100_000], reps, Mode::BoundaryRate);
    interior.alpha = Some(0.2);
    let argmax = ArgmaxConfig {
        reps: 20_000,
        ..Default::default()
    };
    let report = harness::run_interior_comparison(&interior, 0.2, &argmax)?;
    println!("n^(1/3) (f_n(n^-0.2) - f(n^-0.2)) against |4 f(0) f'(0)|^(1/3) V(0)");
    for c in &report.comparisons {
        println!("  n = {:>6}: D = {:.4}", c.n, c.ks.statistic);
    }

    let integral = ExperimentConfig::new(family, 2.0, vec![1_000, 10_000, 100_000], reps, Mode::BoundaryIntegral);
    let report = harness::run(&integral)?;
    println!("scaled boundary integrals, k = 2");
    for s in &report.summaries {
        println!("  n = {:>6}: mean {:.4e}, q95 {:.4e}", s.n, s.mean, s.quantile95);
    }
    Ok(())
}
