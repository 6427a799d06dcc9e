//! Slow, obviously correct reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use grenlab::{EmpiricalCdf, GrenanderEstimate};

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn int(k: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

/// Upper hull of the ECDF candidates: an interior candidate is a vertex iff
/// every chord to a candidate on its left is strictly steeper than every
/// chord to one on its right. O(n^2).
///
/// Float slopes are within 2^-52 relative of the true ones, so only slopes
/// within 1e-12 of the float extreme can be the exact extreme; those are
/// compared in rational arithmetic.
pub fn brute_force_hull(e: &EmpiricalCdf) -> Vec<(f64, f64)> {
    let pts = e.candidates();
    let m = pts.len();
    let n = e.n() as f64;
    let exact = |i: usize, j: usize| {
        let (a, b) = (pts[i], pts[j]);
        (int(b.1) - int(a.1)) / (q(b.0) - q(a.0))
    };
    let approx = |i: usize, j: usize| (pts[j].1 - pts[i].1) as f64 / (pts[j].0 - pts[i].0);
    let near = |v: f64, best: f64| (v - best).abs() <= 1e-12 * best.abs();
    let mut out = Vec::new();
    for j in 0..m {
        let vertex = j == 0 || j == m - 1 || {
            let lmin = (0..j).map(|i| approx(i, j)).fold(f64::INFINITY, f64::min);
            let rmax = (j + 1..m).map(|l| approx(j, l)).fold(f64::NEG_INFINITY, f64::max);
            if lmin > rmax * (1.0 + 1e-11) {
                true
            } else if lmin < rmax * (1.0 - 1e-11) {
                false
            } else {
                let left = (0..j).filter(|&i| near(approx(i, j), lmin)).map(|i| exact(i, j)).min().unwrap();
                let right = (j + 1..m).filter(|&l| near(approx(j, l), rmax)).map(|l| exact(j, l)).max().unwrap();
                left > right
            }
        };
        if vertex {
            out.push((pts[j].0, pts[j].1 as f64 / n));
        }
    }
    out
}

/// Rightmost exact maximiser of `F_n(x) - a x` over the candidates.
pub fn enumerate_argmax(e: &EmpiricalCdf, a: f64) -> f64 {
    let n = int(e.n());
    let mut best: Option<BigRational> = None;
    let mut arg = 0.0;
    for (x, c) in e.candidates() {
        let v = int(c) / n.clone() - q(a) * q(x);
        if best.as_ref().is_none_or(|b| v >= *b) {
            best = Some(v);
            arg = x;
        }
    }
    arg
}

/// Switch relation at level `a`: `f_n(U_n(a)) >= a` when `U_n(a) > 0`, and
/// `f_n(x) < a` at every breakpoint `x > U_n(a)`.
pub fn switch_holds(e: &EmpiricalCdf, g: &GrenanderEstimate, a: f64) -> bool {
    let u = e.inverse_un(a);
    let left = u == 0.0 || g.value_at(u) >= a;
    let right = g.breaks.iter().filter(|&&x| x > u).all(|&x| g.value_at(x) < a);
    left && right
}
