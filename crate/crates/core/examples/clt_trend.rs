//! Standardised L_k-error along an n-grid, for the plain error (k < 2.5)
//! or the trimmed error (k >= 2.5).
//!
//! cargo run --release --example clt_trend -- [k] [reps] [chernoff reps] [eps]

use grenlab::chernoff::{default_c_grid, estimate_chernoff, ArgmaxConfig};
use grenlab::constants::compute_constants;
use grenlab::harness::{run_clt, ExperimentConfig, Mode};
use grenlab::{DensityFamily, MonotoneDensity};

fn main() -> grenlab::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let k: f64 = args.get(1).map_or(1.0, |s| s.parse().unwrap());
    let reps: usize = args.get(2).map_or(500, |s| s.parse().unwrap());
    let chernoff_reps: usize = args.get(3).map_or(20_000, |s| s.parse().unwrap());
    let eps: Option<f64> = args.get(4).map(|s| s.parse().unwrap());
    let family = DensityFamily::Linear { f0: 1.5, f1: 0.5 };
    let d = MonotoneDensity::new(family)?;

    let argmax = ArgmaxConfig {
        reps: chernoff_reps,
        ..Default::default()
    };
    let ch = estimate_chernoff(&[k], &default_c_grid(), &argmax)?;
    let c = compute_constants(&d, k, &ch)?;
    println!("mu_k = {:.5} +- {:.5}, sigma_k = {:.5} +- {:.5}", c.mu_k, c.se.mu_k, c.sigma_k, c.se.sigma_k);

    let mode = if k < 2.5 { Mode::Plain } else { Mode::Modified };
    let mut cfg = ExperimentConfig::new(family, k, vec![1_000, 10_000, 100_000], reps, mode);
    cfg.constants = Some(c);
    cfg.eps = eps;
    let report = run_clt(&cfg)?;
    for s in &report.summaries {
        let ks = s.ks_normal.unwrap();
        println!(
            "n = {:>6}: mean T = {:+.4}, var T = {:.4}, skew = {:+.3}, KS = {:.4}",
            s.n, s.mean, s.variance, s.skewness, ks.statistic
        );
    }
    for check in &report.checks {
        println!("{:<30} {} {}", check.name, if check.passed { "pass" } else { "FAIL" }, check.detail);
    }
    println!("{:.1}s", report.metadata.runtime_seconds);
    Ok(())
}
