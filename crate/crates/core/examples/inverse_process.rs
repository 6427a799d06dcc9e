//! Localized argmax processes: moment profile against its limit and the
//! cubic-exponential tail.
//!
//! cargo run --release --example inverse_process -- [reps]

use std::time::Instant;

use grenlab::chernoff::{default_c_grid, estimate_chernoff, ArgmaxConfig};
use grenlab::inverse_process::{moment_profile, sample_vn, tail_fit, LocalizedArgmaxSpec, ProcessKind};
use grenlab::MonotoneDensity;

fn main() -> grenlab::Result<()> {
    let reps: usize = std::env::args().nth(1).map_or(5000, |s| s.parse().unwrap());
    let d = MonotoneDensity::linear(1.5, 0.5)?;
    let start = Instant::now();

    let ch = estimate_chernoff(
        &[1.0],
        &default_c_grid(),
        &ArgmaxConfig {
            reps: 20_000,
            ..Default::default()
        },
    )?;
    let m = ch.abs_moment(1.0)?;
    println!("E|V(0)| = {:.4} +- {:.4}", m.value, m.se);

    let spec = LocalizedArgmaxSpec::new(d, 1.0, 100_000, ProcessKind::W);
    let grid = [0.9, 1.0, 1.1, 1.2, 1.3];
    for p in moment_profile(&spec, 1.0, &grid, reps, m)? {
        println!(
            "a = {:.2}: E|V_n| = {:.4} +- {:.4}, limit {:.4}, ratio {:.4} +- {:.4}",
            p.a, p.estimate, p.se, p.prediction, p.ratio, p.ratio_se
        );
    }

    let spec = LocalizedArgmaxSpec::new(d, 1.0, 10_000, ProcessKind::W);
    let values: Vec<f64> = sample_vn(&spec, reps)?.iter().map(|s| s.v).collect();
    let fit = tail_fit(&values, 1.0, 2.5, 7)?;
    println!(
        "log P(|V_n| >= x) ~ {:.3} + {:.3} x^3, R^2 = {:.4}",
        fit.intercept, fit.slope, fit.r_squared
    );
    println!("{:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
