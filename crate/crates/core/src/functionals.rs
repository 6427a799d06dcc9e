//! Exact piecewise evaluation of the L_k-error functionals of a step-function
//! estimate against a smooth decreasing density.
//!
//! Integrals are split at every jump of the estimate and at the (unique)
//! crossing of `f` inside each constant piece, so quadrature only ever sees
//! smooth single-signed integrands.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::MonotoneDensity;
use crate::error::{Error, Result};
use crate::grenander::{GrenanderEstimate, Segment};
use crate::grenander::CROSSING_TOL;
use crate::quadrature;

/// Total absolute quadrature budget of one functional evaluation.
pub const ERROR_TOL: f64 = 1e-11;

/// Weight function multiplying the L_k integrand.
#[derive(Clone, Default)]
pub enum Weight {
    #[default]
    None,
    /// `w(t) = (f(t) |f'(t)| / 2)^{-1/3}`, the inverse pointwise limiting
    /// standard deviation of the estimator.
    InverseSd,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => write!(f, "None"),
            Self::InverseSd => write!(f, "InverseSd"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Weight {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "inv-sd" => Ok(Self::InverseSd),
            _ => Err(Error::InvalidArgument(format!(
                "unknown weight '{s}' (expected none or inv-sd)"
            ))),
        }
    }

    pub fn eval(&self, d: &MonotoneDensity, x: f64) -> f64 {
        match self {
            Self::None => 1.0,
            Self::InverseSd => (0.5 * d.eval(x) * d.deriv(x).abs()).powf(-1.0 / 3.0),
            Self::Custom(w) => w(x),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Self::None)
    }
}

/// Exponent, integration range and weight of an L_k-error.
#[derive(Debug, Clone)]
pub struct ErrorSpec {
    pub k: f64,
    pub lo: f64,
    pub hi: f64,
    pub weight: Weight,
}

impl ErrorSpec {
    pub fn new(k: f64) -> Self {
        Self {
            k,
            lo: 0.0,
            hi: 1.0,
            weight: Weight::None,
        }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }

    pub fn with_weight(mut self, weight: Weight) -> Self {
        self.weight = weight;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 1.0 && self.k.is_finite()) {
            return Err(Error::InvalidArgument(format!("k = {} must be >= 1", self.k)));
        }
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "range [{}, {}] must satisfy 0 <= lo < hi <= 1",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Split `[a, b]` where the increasing function `v - f(x)` changes sign.
fn crossing(d: &MonotoneDensity, v: f64, a: f64, b: f64) -> Option<f64> {
    let left = v - d.eval(a);
    let right = v - d.eval(b);
    if left < 0.0 && right > 0.0 {
        Some(quadrature::bisect(|x| v - d.eval(x), a, b, CROSSING_TOL))
    } else {
        None
    }
}

/// `int_lo^hi |g(x) - f(x)|^k w(x) dx`.
pub fn lk_error(g: &GrenanderEstimate, d: &MonotoneDensity, spec: &ErrorSpec) -> Result<f64> {
    spec.validate()?;
    let k = spec.k;
    let pieces: Vec<(f64, f64, f64)> = g
        .pieces()
        .filter_map(|(a, b, v)| {
            let a = a.max(spec.lo);
            let b = b.min(spec.hi);
            (a < b).then_some((a, b, v))
        })
        .collect();
    let tol = ERROR_TOL / (2 * pieces.len()).max(1) as f64;
    let mut total = 0.0;
    for (a, b, v) in pieces {
        let integrand = |x: f64| (v - d.eval(x)).abs().powf(k) * spec.weight.eval(d, x);
        match crossing(d, v, a, b) {
            Some(c) => {
                total += quadrature::integrate(integrand, a, c, tol).value;
                total += quadrature::integrate(integrand, c, b, tol).value;
            }
            None => total += quadrature::integrate(integrand, a, b, tol).value,
        }
    }
    Ok(total)
}

/// `int |U(a) - g(a)|^p |g'(a)|^q da` over `[a_lo, a_hi]`, where `U` is the
/// left-continuous inverse of the step function.
fn inverse_power_integral(
    g: &GrenanderEstimate,
    d: &MonotoneDensity,
    p: f64,
    q: f64,
    a_lo: f64,
    a_hi: f64,
) -> f64 {
    // Level pieces (lower, upper, U) with U constant on (lower, upper].
    let m = g.values.len();
    let mut levels = Vec::with_capacity(m + 1);
    let top = g.values[0].max(a_hi);
    levels.push((g.values[0], top, g.breaks[0]));
    for j in 1..m {
        levels.push((g.values[j], g.values[j - 1], g.breaks[j]));
    }
    let bottom = g.values[m - 1].min(a_lo);
    levels.push((bottom, g.values[m - 1], g.breaks[m]));

    let pieces: Vec<(f64, f64, f64)> = levels
        .into_iter()
        .filter_map(|(lo, hi, u)| {
            let lo = lo.max(a_lo);
            let hi = hi.min(a_hi);
            (lo < hi).then_some((lo, hi, u))
        })
        .collect();
    let tol = ERROR_TOL / (2 * pieces.len()).max(1) as f64;
    let mut total = 0.0;
    for (lo, hi, u) in pieces {
        let integrand =
            |a: f64| (u - d.inverse(a)).abs().powf(p) * d.inverse_deriv(a).abs().powf(q);
        // U - g(a) increases in a and vanishes at a = f(U).
        let root = d.eval(u.clamp(0.0, 1.0));
        if root > lo && root < hi {
            total += quadrature::integrate(integrand, lo, root, tol).value;
            total += quadrature::integrate(integrand, root, hi, tol).value;
        } else {
            total += quadrature::integrate(integrand, lo, hi, tol).value;
        }
    }
    total
}

/// `int_{a_lo}^{a_hi} |U(a) - g(a)|^k / |g'(a)|^{k-1} da` with `U` the
/// inverse of the estimate, `[a_lo, a_hi]` inside `[f(1), f(0)]`.
pub fn inverse_lk_error(
    g: &GrenanderEstimate,
    d: &MonotoneDensity,
    k: f64,
    band: (f64, f64),
) -> Result<f64> {
    if k < 1.0 {
        return Err(Error::InvalidArgument(format!("k = {k} must be >= 1")));
    }
    let (a_lo, a_hi) = band;
    let slack = 1e-12 * d.f0();
    if !(a_lo < a_hi && a_lo >= d.f1() - slack && a_hi <= d.f0() + slack) {
        return Err(Error::InvalidArgument(format!(
            "band [{a_lo}, {a_hi}] must lie inside [f(1), f(0)] = [{}, {}]",
            d.f1(),
            d.f0()
        )));
    }
    Ok(inverse_power_integral(g, d, k, 1.0 - k, a_lo, a_hi))
}

/// Outcome of the segment-wise comparison of the direct and inverse errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentComparison {
    /// Direct minus inverse-scaled error on the segment.
    pub delta: f64,
    /// `int_{f(t)}^{f(s)} |U~ - g|^{k+1} / |g'|^k da`.
    pub bound: f64,
    /// `sup_[s,t] |f~ - f|`.
    pub sup_distance: f64,
}

/// Compare both error representations on one segment of a cut-off estimate.
///
/// Returns `Ok(None)` when the sup-distance condition fails, in which case
/// the comparison has no guarantee and is skipped.
pub fn lemma31_check(
    seg: &Segment,
    g: &GrenanderEstimate,
    d: &MonotoneDensity,
    k: f64,
) -> Result<Option<SegmentComparison>> {
    let sup_distance = g
        .pieces()
        .filter_map(|(a, b, v)| {
            let a = a.max(seg.start);
            let b = b.min(seg.end);
            (a < b).then(|| (v - d.eval(a)).abs().max((v - d.eval(b)).abs()))
        })
        .fold(0.0, f64::max);
    if sup_distance >= d.segment_condition_bound() {
        return Ok(None);
    }
    let direct = lk_error(g, d, &ErrorSpec::new(k).with_range(seg.start, seg.end))?;
    let (a_lo, a_hi) = (d.eval(seg.end), d.eval(seg.start));
    let inverse = inverse_power_integral(g, d, k, 1.0 - k, a_lo, a_hi);
    let bound = inverse_power_integral(g, d, k + 1.0, -k, a_lo, a_hi);
    Ok(Some(SegmentComparison {
        delta: direct - inverse,
        bound,
        sup_distance,
    }))
}

/// `T = n^{1/6} (n^{1/3} L^{1/k} - mu_k) / sigma_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizedStatistic {
    pub raw: f64,
    pub value: f64,
}

pub fn standardize(l: f64, n: usize, k: f64, mu_k: f64, sigma_k: f64) -> Result<StandardizedStatistic> {
    if !(sigma_k > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma_k = {sigma_k} must be positive")));
    }
    if l < 0.0 {
        return Err(Error::InvalidArgument(format!("error {l} is negative")));
    }
    let n = n as f64;
    let value = n.powf(1.0 / 6.0) * (n.cbrt() * l.powf(1.0 / k) - mu_k) / sigma_k;
    Ok(StandardizedStatistic { raw: l, value })
}

/// Open window `(1/6, (k-1)/(3k-6))` of admissible trimming exponents.
pub fn eps_window(k: f64) -> Result<(f64, f64)> {
    if !(k >= 2.5) {
        return Err(Error::Regime(format!(
            "the trimmed error is defined for k >= 2.5, got k = {k}"
        )));
    }
    Ok((1.0 / 6.0, (k - 1.0) / (3.0 * k - 6.0)))
}

/// Midpoint of the admissible window.
pub fn default_eps(k: f64) -> Result<f64> {
    let (lo, hi) = eps_window(k)?;
    Ok(0.5 * (lo + hi))
}

pub fn check_eps(k: f64, eps: f64) -> Result<()> {
    let (lo, hi) = eps_window(k)?;
    if !(eps > lo && eps < hi) {
        return Err(Error::EpsilonWindow { eps, k, lo, hi });
    }
    Ok(())
}

/// L_k-error over `[n^-eps, 1 - n^-eps]`.
pub fn modified_lk_error(
    g: &GrenanderEstimate,
    d: &MonotoneDensity,
    k: f64,
    eps: f64,
    n: usize,
) -> Result<f64> {
    check_eps(k, eps)?;
    let edge = (n as f64).powf(-eps);
    if edge >= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "n = {n} too small: n^-eps = {edge} must be below 1/2"
        )));
    }
    lk_error(g, d, &ErrorSpec::new(k).with_range(edge, 1.0 - edge))
}

/// The two boundary integrals `int_0^{U(f(0))}` and `int_{U(f(1))}^1` of
/// `|g - f|^k`.
pub fn boundary_integrals(g: &GrenanderEstimate, d: &MonotoneDensity, k: f64) -> Result<(f64, f64)> {
    let left_end = g.inverse(d.f0());
    let right_start = g.inverse(d.f1());
    let left = if left_end > 0.0 {
        lk_error(g, d, &ErrorSpec::new(k).with_range(0.0, left_end))?
    } else {
        0.0
    };
    let right = if right_start < 1.0 {
        lk_error(g, d, &ErrorSpec::new(k).with_range(right_start, 1.0))?
    } else {
        0.0
    };
    Ok((left, right))
}
