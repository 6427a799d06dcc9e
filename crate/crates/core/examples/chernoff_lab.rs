//! Simulate the Brownian argmax process and print its moments and
//! covariance integrals.
//!
//! cargo run --release --example chernoff_lab -- [reps]

use grenlab::chernoff::{default_c_grid, estimate_chernoff, ArgmaxConfig};

fn main() -> grenlab::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("reps must be an integer"))
        .unwrap_or(10_000);
    let cfg = ArgmaxConfig {
        reps,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let est = estimate_chernoff(&[1.0, 2.0, 3.0], &default_c_grid(), &cfg)?;
    println!("E V(0) = {:.5} +- {:.5}", est.mean_v0.value, est.mean_v0.se);
    for (i, k) in est.ks.iter().enumerate() {
        let m = est.abs_moment[i];
        let kap = est.kappa[i];
        println!(
            "k = {k}: E|V(0)|^k = {:.5} +- {:.5}, kappa = {:.5} +- {:.5} (tail {:.2e})",
            m.value, m.se, kap.value, kap.se, kap.tail
        );
    }
    println!(
        "truncated {} of {}; {:.1}s",
        est.truncated,
        cfg.reps,
        start.elapsed().as_secs_f64()
    );
    for w in &est.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
