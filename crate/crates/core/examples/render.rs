//! Write an SVG of a small CLT report.
//!
//! cargo run --release --example render -- [out.svg]

use grenlab::chernoff::Estimate;
use grenlab::constants::constants_from_parts;
use grenlab::harness::{run_clt, ExperimentConfig, Mode};
use grenlab::render::render_report;
use grenlab::{DensityFamily, MonotoneDensity};

fn main() -> grenlab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "clt.svg".into());
    let family = DensityFamily::Linear { f0: 1.5, f1: 0.5 };
    let d = MonotoneDensity::new(family)?;
    // Reference values of E|V(0)| and the k = 1 covariance integral.
    let c = constants_from_parts(
        &d,
        1.0,
        Estimate { value: 0.414, se: 0.0 },
        Estimate { value: 0.0225, se: 0.0 },
    )?;
    let mut cfg = ExperimentConfig::new(family, 1.0, vec![1_000, 10_000], 500, Mode::Plain);
    cfg.constants = Some(c);
    let report = run_clt(&cfg)?;
    std::fs::write(&out, render_report(&report)?)?;
    println!("wrote {out}");
    Ok(())
}
