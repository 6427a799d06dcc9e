//! Least concave majorant of a sample and the resulting step density.
//!
//! cargo run --example fit -- [n]

use grenlab::harness::replication_sample;
use grenlab::{fit_lcm, EmpiricalCdf, MonotoneDensity};

fn main() -> grenlab::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(50, |s| s.parse().unwrap());
    let d = MonotoneDensity::trunc_exp(2.0)?;
    let ecdf = EmpiricalCdf::from_sorted(replication_sample(&d, n, 1, 0))?;
    let lcm = fit_lcm(&ecdf);
    let est = lcm.estimate();
    println!("{} majorant vertices for n = {n}", lcm.vertices().len());
    for (a, b, v) in est.pieces() {
        println!("  ({a:.4}, {b:.4}]  f_n = {v:.4}   f(mid) = {:.4}", d.eval(0.5 * (a + b)));
    }
    println!("mass = {:.12}", est.mass());
    for level in [0.5, 1.0, 1.5] {
        println!("U_n({level}) = {:.4}, g({level}) = {:.4}", ecdf.inverse_un(level), d.inverse(level.clamp(d.f1(), d.f0())));
    }
    Ok(())
}
