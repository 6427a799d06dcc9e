//! Least concave majorant of the empirical distribution function and the
//! Grenander estimator built from it.
//!
//! The majorant is the upper concave hull of `(0, 0)`, the ECDF jump points
//! `(x_(i), i/n)` and `(1, 1)`. ECDF levels are kept as integer counts so the
//! orientation predicate only ever rounds in the x-differences; near-degenerate
//! turns fall back to exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::density::MonotoneDensity;
use crate::error::{Error, Result};
use crate::quadrature;

/// Sorted sample on [0, 1] with its right-continuous ECDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    points: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        points.sort_by(f64::total_cmp);
        Self::from_sorted(points)
    }

    pub fn from_sorted(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        if let Some(bad) = points.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::OutOfRange {
                what: "sample value",
                value: *bad,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if points.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("sample is not sorted".into()));
        }
        Ok(Self { points })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `F_n(x) = #{i : x_(i) <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.points.partition_point(|&p| p <= x) as f64 / self.n() as f64
    }

    /// Argmax candidates `(x, count)`: the origin, every distinct sample value
    /// with its highest ECDF count, and `x = 1`.
    pub fn candidates(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::with_capacity(self.n() + 2);
        out.push((0.0, 0));
        for (i, &x) in self.points.iter().enumerate() {
            let count = i + 1;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = count,
                _ => out.push((x, count)),
            }
        }
        if out.last().map(|p| p.0) != Some(1.0) {
            out.push((1.0, self.n()));
        }
        out
    }

    /// Rightmost maximiser of `F_n(x) - a x` over [0, 1].
    ///
    /// Near-ties (relative 1e-12) resolve to the larger x.
    pub fn inverse_un(&self, a: f64) -> f64 {
        let n = self.n() as f64;
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0.0;
        for (x, c) in self.candidates() {
            let v = c as f64 / n - a * x;
            let tol = 1e-12 * best.abs().max(1.0);
            if v > best + tol {
                best = v;
                arg = x;
            } else if v >= best - tol {
                best = best.max(v);
                arg = x;
            }
        }
        arg
    }
}

/// Sign of the turn `a -> b -> p` for points `(t, count)`; positive means
/// counter-clockwise, so `b` lies strictly below the chord `a p`.
fn orientation(a: (f64, usize), b: (f64, usize), p: (f64, usize)) -> std::cmp::Ordering {
    let dtb = b.0 - a.0;
    let dtp = p.0 - a.0;
    let dcb = b.1 as f64 - a.1 as f64;
    let dcp = p.1 as f64 - a.1 as f64;
    let left = dtb * dcp;
    let right = dcb * dtp;
    let det = left - right;
    let bound = (3.0 + 16.0 * f64::EPSILON) * f64::EPSILON * (left.abs() + right.abs());
    if det > bound {
        return std::cmp::Ordering::Greater;
    }
    if -det > bound {
        return std::cmp::Ordering::Less;
    }
    let q = |x: f64| BigRational::from_float(x).unwrap_or_else(BigRational::zero);
    let c = |k: usize| BigRational::from_integer(BigInt::from(k));
    let exact = (q(b.0) - q(a.0)) * (c(p.1) - c(a.1)) - (c(b.1) - c(a.1)) * (q(p.0) - q(a.0));
    if exact.is_positive() {
        std::cmp::Ordering::Greater
    } else if exact.is_negative() {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Equal
    }
}

/// Vertices `(t_j, y_j)` of the least concave majorant, `y_j = count_j / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveMajorant {
    knots: Vec<(f64, usize)>,
    n: usize,
}

impl ConcaveMajorant {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let n = self.n as f64;
        self.knots.iter().map(|&(t, c)| (t, c as f64 / n)).collect()
    }

    pub fn knots(&self) -> &[(f64, usize)] {
        &self.knots
    }

    pub fn slopes(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) as f64 / n / (w[1].0 - w[0].0))
            .collect()
    }

    /// Value of the majorant at `x` (linear interpolation between vertices).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.n as f64;
        let j = self.knots.partition_point(|k| k.0 < x);
        if j == 0 {
            return self.knots[0].1 as f64 / n;
        }
        if j == self.knots.len() {
            return self.knots[j - 1].1 as f64 / n;
        }
        let (t0, c0) = self.knots[j - 1];
        let (t1, c1) = self.knots[j];
        let y0 = c0 as f64 / n;
        y0 + (c1 as f64 - c0 as f64) / n * (x - t0) / (t1 - t0)
    }

    /// Left derivative of the majorant as a step function. Its mass is
    /// `1 - F_n(0)`: sample points at 0 are an atom it cannot carry.
    pub fn estimate(&self) -> GrenanderEstimate {
        GrenanderEstimate {
            breaks: self.knots.iter().map(|k| k.0).collect(),
            values: self.slopes(),
        }
    }
}

/// Least concave majorant of the ECDF by a monotone-chain upper hull, O(n).
pub fn fit_lcm(e: &EmpiricalCdf) -> ConcaveMajorant {
    let mut hull: Vec<(f64, usize)> = Vec::with_capacity(64);
    for p in e.candidates() {
        if let Some(last) = hull.last_mut() {
            // A sample point at x = 0 lifts the starting level.
            if last.0 == p.0 {
                last.1 = last.1.max(p.1);
                continue;
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if orientation(a, b, p) == std::cmp::Ordering::Less {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    }
    ConcaveMajorant {
        knots: hull,
        n: e.n(),
    }
}

/// Left-continuous nonincreasing step function on [0, 1]: value `values[j]`
/// on `(breaks[j], breaks[j + 1]]`, and `values[0]` at `x = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrenanderEstimate {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl GrenanderEstimate {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidArgument(
                "step function needs one more break than values".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("breaks must increase strictly".into()));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("values must be nonincreasing".into()));
        }
        Ok(Self { breaks, values })
    }

    /// Constant function on [0, 1].
    pub fn constant(v: f64) -> Self {
        Self {
            breaks: vec![0.0, 1.0],
            values: vec![v],
        }
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breaks
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    pub fn lower(&self) -> f64 {
        self.breaks[0]
    }

    pub fn upper(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    /// Index of the piece containing `x` under left continuity.
    fn piece_index(&self, x: f64) -> usize {
        let j = self.breaks[1..].partition_point(|&b| b < x);
        j.min(self.values.len() - 1)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(self.lower()..=self.upper()).contains(&x) {
            return Err(Error::OutOfRange {
                what: "x",
                value: x,
                lo: self.lower(),
                hi: self.upper(),
            });
        }
        Ok(self.value_at(x))
    }

    /// Unchecked evaluation; arguments outside the support are clamped.
    pub fn value_at(&self, x: f64) -> f64 {
        self.values[self.piece_index(x)]
    }

    /// `sup { x : f(x) >= a }`, or the left end of the support if empty.
    pub fn inverse(&self, a: f64) -> f64 {
        let j = self.values.partition_point(|&v| v >= a);
        if j == 0 {
            self.lower()
        } else {
            self.breaks[j]
        }
    }

    /// `sum_j v_j (b_j - b_{j-1})`.
    pub fn mass(&self) -> f64 {
        self.pieces().map(|(a, b, v)| v * (b - a)).sum()
    }

    pub fn clip(&self, lo: f64, hi: f64) -> Self {
        let mut breaks = vec![self.breaks[0]];
        let mut values: Vec<f64> = Vec::with_capacity(self.values.len());
        for (_, b, v) in self.pieces() {
            let c = v.clamp(lo, hi);
            if values.last() == Some(&c) {
                *breaks.last_mut().unwrap() = b;
            } else {
                values.push(c);
                breaks.push(b);
            }
        }
        Self { breaks, values }
    }
}

/// Which version of the cut-off estimator to build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CutoffSpec {
    /// Clip into `[f(1), f(0)]`.
    FullRange,
    /// Clip into `[f(1 - n^-eps), f(n^-eps)]` on the domain `[n^-eps, 1 - n^-eps]`.
    EpsRange { eps: f64, n: usize },
}

impl CutoffSpec {
    pub fn validate(&self) -> Result<()> {
        if let Self::EpsRange { eps, n } = *self {
            if !(eps > 0.0) || n < 2 {
                return Err(Error::InvalidArgument(format!(
                    "eps-range cutoff needs eps > 0 and n >= 2, got eps = {eps}, n = {n}"
                )));
            }
            let edge = (n as f64).powf(-eps);
            if edge >= 0.5 {
                return Err(Error::InvalidArgument(format!(
                    "n^-eps = {edge} must be below 1/2"
                )));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> (f64, f64) {
        match *self {
            Self::FullRange => (0.0, 1.0),
            Self::EpsRange { eps, n } => {
                let edge = (n as f64).powf(-eps);
                (edge, 1.0 - edge)
            }
        }
    }

    /// Clip band `(low, high)`.
    pub fn band(&self, d: &MonotoneDensity) -> (f64, f64) {
        let (lo, hi) = self.domain();
        (d.eval(hi), d.eval(lo))
    }
}

pub fn apply_cutoff(
    g: &GrenanderEstimate,
    d: &MonotoneDensity,
    spec: &CutoffSpec,
) -> Result<GrenanderEstimate> {
    spec.validate()?;
    let (lo, hi) = spec.band(d);
    Ok(g.clip(lo, hi))
}

/// `sup { x in domain : clipped(x) >= a }` for a level inside the clip band.
pub fn inverse_cutoff(
    g: &GrenanderEstimate,
    d: &MonotoneDensity,
    spec: &CutoffSpec,
    a: f64,
) -> Result<f64> {
    spec.validate()?;
    let (lo, hi) = spec.band(d);
    if !(lo..=hi).contains(&a) {
        return Err(Error::OutOfRange {
            what: "level",
            value: a,
            lo,
            hi,
        });
    }
    let (dom_lo, dom_hi) = spec.domain();
    let clipped = g.clip(lo, hi);
    let j = clipped.values.partition_point(|&v| v >= a);
    if j == 0 {
        return Ok(dom_lo);
    }
    Ok(clipped.breaks[j].clamp(dom_lo, dom_hi))
}

/// Sign of `f~_n - f` on a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentCase {
    /// `f~_n >= f` on the segment.
    Above,
    /// `f~_n <= f` on the segment.
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub case: SegmentCase,
}

pub const CROSSING_TOL: f64 = 1e-12;

/// Partition the support of a cut-off estimate into maximal segments on which
/// `f~_n - f` keeps one sign.
pub fn segment_decomposition(g: &GrenanderEstimate, d: &MonotoneDensity) -> Result<Vec<Segment>> {
    let slack = 1e-12 * d.f0();
    if g.values.iter().any(|&v| v > d.f0() + slack || v < d.f1() - slack) {
        return Err(Error::InvalidArgument(
            "estimate must be cut off to [f(1), f(0)] before decomposition".into(),
        ));
    }
    let mut raw: Vec<Segment> = Vec::new();
    let mut push = |start: f64, end: f64, case: SegmentCase| {
        if end <= start {
            return;
        }
        match raw.last_mut() {
            Some(last) if last.case == case => last.end = end,
            _ => raw.push(Segment { start, end, case }),
        }
    };
    for (a, b, v) in g.pieces() {
        // v - f(x) increases in x because f is strictly decreasing.
        let left = v - d.eval(a);
        let right = v - d.eval(b);
        if left >= 0.0 {
            push(a, b, SegmentCase::Above);
        } else if right <= 0.0 {
            push(a, b, SegmentCase::Below);
        } else {
            let c = quadrature::bisect(|x| v - d.eval(x), a, b, CROSSING_TOL);
            push(a, c, SegmentCase::Below);
            push(c, b, SegmentCase::Above);
        }
    }
    Ok(raw)
}
