//! L_k-errors of one fit: full range, trimmed, weighted, and through the
//! inverse process.
//!
//! cargo run --release --example lk_error -- [n]

use grenlab::functionals::{boundary_integrals, inverse_lk_error, lk_error, modified_lk_error, ErrorSpec, Weight};
use grenlab::harness::replication_fit;
use grenlab::{apply_cutoff, CutoffSpec, MonotoneDensity};

fn main() -> grenlab::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(10_000, |s| s.parse().unwrap());
    let d = MonotoneDensity::linear(1.5, 0.5)?;
    let g = replication_fit(&d, n, 1, 0)?;
    for k in [1.0, 2.0, 3.0] {
        let full = lk_error(&g, &d, &ErrorSpec::new(k))?;
        let weighted = lk_error(&g, &d, &ErrorSpec::new(k).with_weight(Weight::InverseSd))?;
        let inverse = inverse_lk_error(&g, &d, k, (d.f1(), d.f0()))?;
        let (left, right) = boundary_integrals(&g, &d, k)?;
        println!("k = {k}: full {full:.6e}, weighted {weighted:.6e}, inverse {inverse:.6e}, boundary {left:.3e} + {right:.3e}");
    }
    let trimmed = modified_lk_error(&g, &d, 3.0, 1.0 / 3.0, n)?;
    println!("k = 3 on [n^-1/3, 1 - n^-1/3]: {trimmed:.6e}");
    let cut = apply_cutoff(&g, &d, &CutoffSpec::FullRange)?;
    let direct = lk_error(&cut, &d, &ErrorSpec::new(1.0))?;
    let area = inverse_lk_error(&cut, &d, 1.0, (d.f1(), d.f0()))?;
    println!("cut-off estimate, k = 1: direct {direct:.12e}, area {area:.12e}");
    Ok(())
}
