//! Adaptive Gauss–Kronrod (7/15) quadrature with interval halving.
//!
//! Each panel is integrated with the 15-point Kronrod rule; the embedded
//! 7-point Gauss rule supplies the error estimate `|K15 - G7|`. Panels whose
//! estimate exceeds their share of the tolerance are halved, so the reported
//! error bound is the sum of the accepted panel estimates.

/// Kronrod abscissae on [-1, 1] (non-negative half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 60;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of accepted panel error estimates.
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let s = f(centre - dx) + f(centre + dx);
        kronrod += w * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// A relative floor of a few ulps of the running value keeps the recursion
/// finite for integrands whose magnitude makes `tol` unreachable.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if a == b {
        return Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
    }
    if b < a {
        let q = integrate(f, b, a, tol);
        return Quadrature {
            value: -q.value,
            ..q
        };
    }
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    // (lo, hi, tolerance share, depth)
    let mut stack = vec![(a, b, tol, 0u32)];
    while let Some((lo, hi, share, depth)) = stack.pop() {
        let (q, e) = gk15(&f, lo, hi);
        evaluations += 15;
        let floor = 4.0 * f64::EPSILON * q.abs();
        if e <= share.max(floor) || depth >= MAX_DEPTH || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            value += q;
            error += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, 0.5 * share, depth + 1));
            stack.push((lo, mid, 0.5 * share, depth + 1));
        }
    }
    Quadrature {
        value,
        error,
        evaluations,
    }
}

/// Integrate over consecutive sub-intervals given by sorted `breaks`,
/// splitting the tolerance evenly.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> Quadrature {
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    let mut total = Quadrature {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in breaks.windows(2) {
        let q = integrate(&f, w[0], w[1], tol / pieces);
        total.value += q.value;
        total.error += q.error;
        total.evaluations += q.evaluations;
    }
    total
}

/// Locate the root of a monotone function on `[lo, hi]` by bisection.
///
/// `f(lo)` and `f(hi)` must bracket zero; the returned point is within `tol`
/// of the root.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
