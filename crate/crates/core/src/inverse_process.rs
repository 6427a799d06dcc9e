//! The localised inverse processes `V_n^J(a)` for the empirical process (E),
//! a Brownian bridge (B) and a Brownian motion (W), simulated in law.
//!
//! `V_n^J(a)` is the argmax over `t` of
//! `X_n^J(a, t) + n^{2/3} [F(g(a) + n^{-1/3} t) - F(g(a)) - n^{-1/3} a t]`,
//! where the noise term is the local increment of the respective process
//! composed with `F`. The empirical version equals `n^{1/3} (U_n(a) - g(a))`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{anchored_grid, coarse_argmax, refine, Path};
use crate::chernoff::{ArgmaxSample, Estimate};
use crate::density::MonotoneDensity;
use crate::error::{Error, Result};
use crate::grenander::EmpiricalCdf;
use crate::rng::{self, domain};
use crate::stats::{self, LinearFit};

const WINDOW: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessKind {
    /// Empirical process of an actual sample.
    E,
    /// Brownian bridge composed with `F`.
    B,
    /// Brownian motion composed with `F`.
    W,
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::E => "E",
            Self::B => "B",
            Self::W => "W",
        };
        f.write_str(s)
    }
}

impl FromStr for ProcessKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "E" | "e" => Ok(Self::E),
            "B" | "b" => Ok(Self::B),
            "W" | "w" => Ok(Self::W),
            _ => Err(Error::InvalidArgument(format!("unknown process '{s}' (E, B or W)"))),
        }
    }
}

/// `phi_1(a) = |f'(g(a))|^{2/3} (4a)^{-1/3}` and
/// `phi_2(a) = (4a)^{1/3} |f'(g(a))|^{1/3}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFunctions {
    pub phi1: f64,
    pub phi2: f64,
}

impl ScalingFunctions {
    pub fn at(d: &MonotoneDensity, a: f64) -> Result<Self> {
        check_level(d, a)?;
        let slope = d.deriv(d.inverse(a)).abs();
        Ok(Self {
            phi1: slope.powf(2.0 / 3.0) * (4.0 * a).powf(-1.0 / 3.0),
            phi2: (4.0 * a).cbrt() * slope.cbrt(),
        })
    }
}

fn check_level(d: &MonotoneDensity, a: f64) -> Result<()> {
    if !(a > d.f1() && a < d.f0()) {
        return Err(Error::OutOfRange {
            what: "level a",
            value: a,
            lo: d.f1(),
            hi: d.f0(),
        });
    }
    Ok(())
}

/// Condition under which the moment approximation is uniform:
/// `n^{1/3} min(F(g(a)), 1 - F(g(a))) >= log n`.
pub fn moment_condition_holds(d: &MonotoneDensity, a: f64, n: usize) -> bool {
    let p = d.cdf(d.inverse(a));
    let nf = n as f64;
    nf.cbrt() * p.min(1.0 - p) >= nf.ln()
}

/// Where and how finely to simulate `V_n^J(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizedArgmaxSpec {
    pub density: MonotoneDensity,
    pub a: f64,
    pub n: usize,
    pub process: ProcessKind,
    /// Coarse step in the local time `t`.
    pub step: f64,
    pub refinements: u32,
    pub seed: u64,
}

impl LocalizedArgmaxSpec {
    pub fn new(density: MonotoneDensity, a: f64, n: usize, process: ProcessKind) -> Self {
        Self {
            density,
            a,
            n,
            process,
            step: 1.0 / 128.0,
            refinements: 3,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_level(&self.density, self.a)?;
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(self.step > 0.0) {
            return Err(Error::InvalidArgument(format!("step {} must be positive", self.step)));
        }
        Ok(())
    }

    pub fn at_level(&self, a: f64) -> Self {
        Self { a, ..*self }
    }

    /// Local time range mapping `g(a) + n^{-1/3} t` onto [0, 1].
    pub fn t_range(&self) -> (f64, f64) {
        let r = (self.n as f64).cbrt();
        let x0 = self.density.inverse(self.a);
        (-r * x0, r * (1.0 - x0))
    }

    fn stream_domain(&self) -> u64 {
        rng::key(&[
            domain::INVERSE_PROCESS,
            self.process as u64,
            self.a.to_bits(),
            self.n as u64,
        ])
    }
}

/// `n^{1/3} (U_n(a) - g(a))` for an observed sample.
pub fn vn_e(e: &EmpiricalCdf, d: &MonotoneDensity, a: f64) -> Result<f64> {
    check_level(d, a)?;
    Ok((e.n() as f64).cbrt() * (e.inverse_un(a) - d.inverse(a)))
}

/// Local variance clock `s(t) = n^{1/3} (F(g(a) + n^{-1/3} t) - F(g(a)))`
/// and drift `n^{2/3} [F(g(a) + n^{-1/3} t) - F(g(a)) - n^{-1/3} a t]`.
fn clock_and_drift(spec: &LocalizedArgmaxSpec) -> (impl Fn(f64) -> f64 + Copy, impl Fn(f64) -> f64 + Copy) {
    let d = spec.density;
    let a = spec.a;
    let r = (spec.n as f64).cbrt();
    let x0 = d.inverse(a);
    let f0 = d.cdf(x0);
    let clock = move |t: f64| r * (d.cdf(x0 + t / r) - f0);
    let drift = move |t: f64| r * r * (d.cdf(x0 + t / r) - f0 - a * t / r);
    (clock, drift)
}

/// Grid maximiser of the drift alone (zero noise), for sanity checks.
pub fn drift_only_argmax(spec: &LocalizedArgmaxSpec) -> Result<f64> {
    spec.validate()?;
    let (lo, hi) = spec.t_range();
    let (clock, drift) = clock_and_drift(spec);
    let mut path = Path::zero(anchored_grid(lo, hi, spec.step), clock);
    let c = coarse_argmax(&path, &drift, 0, path.len() - 1);
    Ok(refine(&mut path, &drift, c, spec.refinements, WINDOW).t)
}

/// One replication of `V_n^J(a)` in law.
pub fn simulate_vn(spec: &LocalizedArgmaxSpec, index: u64) -> Result<ArgmaxSample> {
    spec.validate()?;
    let dom = spec.stream_domain();
    if spec.process == ProcessKind::E {
        let mut r = rng::stream(spec.seed, dom, index);
        let sample = spec.density.sample(spec.n, &mut r);
        let e = EmpiricalCdf::from_sorted(sample)?;
        let v = vn_e(&e, &spec.density, spec.a)?;
        let (lo, hi) = spec.t_range();
        return Ok(ArgmaxSample {
            v,
            truncated: v <= lo || v >= hi,
        });
    }
    let (lo, hi) = spec.t_range();
    let (clock, drift) = clock_and_drift(spec);
    let mut r = rng::stream(spec.seed, dom, index);
    let mut path = Path::sample(
        anchored_grid(lo, hi, spec.step),
        clock,
        rng::key(&[spec.seed, dom, index]),
        &mut r,
    );
    let m = if spec.process == ProcessKind::B {
        // B(u) = W(u) - u W(1) on [0, 1]; the local window covers all of it.
        let vals = path.coarse_values();
        let total = vals[vals.len() - 1] - vals[0];
        let r3 = (spec.n as f64).cbrt();
        let objective = move |t: f64| drift(t) - clock(t) / r3 * total;
        let c = coarse_argmax(&path, &objective, 0, path.len() - 1);
        refine(&mut path, &objective, c, spec.refinements, WINDOW)
    } else {
        let c = coarse_argmax(&path, &drift, 0, path.len() - 1);
        refine(&mut path, &drift, c, spec.refinements, WINDOW)
    };
    Ok(m.into())
}

/// `reps` replications of `V_n^J(a)`, in replication order.
pub fn sample_vn(spec: &LocalizedArgmaxSpec, reps: usize) -> Result<Vec<ArgmaxSample>> {
    spec.validate()?;
    (0..reps as u64)
        .into_par_iter()
        .map(|i| simulate_vn(spec, i))
        .collect()
}

/// `phi_1(a) V_n^J(a - phi_2(a) c n^{-1/3})`.
pub fn scaled_vn(spec: &LocalizedArgmaxSpec, c: f64, index: u64) -> Result<ArgmaxSample> {
    let s = ScalingFunctions::at(&spec.density, spec.a)?;
    let shifted = spec.a - s.phi2 * c * (spec.n as f64).powf(-1.0 / 3.0);
    check_level(&spec.density, shifted)?;
    let v = simulate_vn(&spec.at_level(shifted), index)?;
    Ok(ArgmaxSample {
        v: s.phi1 * v.v,
        truncated: v.truncated,
    })
}

/// Moment estimate of `E|V_n^W(a)|^k` against the limit prediction
/// `E|V(0)|^k (4a)^{k/3} / |f'(g(a))|^{2k/3}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub a: f64,
    pub estimate: f64,
    pub se: f64,
    pub prediction: f64,
    pub prediction_se: f64,
    pub ratio: f64,
    /// Standard error of the ratio, combining both sources.
    pub ratio_se: f64,
}

pub fn moment_prediction(d: &MonotoneDensity, k: f64, a: f64, abs_moment: f64) -> f64 {
    abs_moment * (4.0 * a).powf(k / 3.0) / d.deriv(d.inverse(a)).abs().powf(2.0 * k / 3.0)
}

/// Moment profile over `a_grid`; levels violating the uniformity condition
/// are dropped with a warning.
pub fn moment_profile(
    spec: &LocalizedArgmaxSpec,
    k: f64,
    a_grid: &[f64],
    reps: usize,
    abs_moment: Estimate,
) -> Result<Vec<MomentPoint>> {
    let d = spec.density;
    let mut out = Vec::new();
    for &a in a_grid {
        check_level(&d, a)?;
        if !moment_condition_holds(&d, a, spec.n) {
            log::warn!("level a = {a} violates the moment condition at n = {}; dropped", spec.n);
            continue;
        }
        let factor = moment_prediction(&d, k, a, 1.0);
        let draws = sample_vn(&spec.at_level(a), reps)?;
        let x: Vec<f64> = draws.iter().map(|s| s.v.abs().powf(k)).collect();
        let (estimate, se) = if k == 0.0 {
            (1.0, 0.0)
        } else {
            (stats::mean(&x), stats::std_error(&x))
        };
        let (prediction, prediction_se) = if k == 0.0 {
            (1.0, 0.0)
        } else {
            (factor * abs_moment.value, factor * abs_moment.se)
        };
        let ratio = estimate / prediction;
        let ratio_se = ratio * ((se / estimate).powi(2) + (prediction_se / prediction).powi(2)).sqrt();
        out.push(MomentPoint {
            a,
            estimate,
            se,
            prediction,
            prediction_se,
            ratio,
            ratio_se,
        });
    }
    Ok(out)
}

/// Least-squares fit of `log P(|V| >= x)` against `x^3` at `points` equally
/// spaced levels in `[x_lo, x_hi]`.
pub fn tail_fit(values: &[f64], x_lo: f64, x_hi: f64, points: usize) -> Result<LinearFit> {
    if points < 3 || !(x_lo < x_hi) {
        return Err(Error::InvalidArgument("tail fit needs >= 3 levels on a proper range".into()));
    }
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len() as f64;
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let x = x_lo + (x_hi - x_lo) * i as f64 / (points - 1) as f64;
        let above = abs.len() - abs.partition_point(|&v| v < x);
        if above == 0 {
            return Err(Error::InvalidArgument(format!(
                "no replication reaches |V| >= {x}; increase reps"
            )));
        }
        xs.push(x.powi(3));
        ys.push((above as f64 / n).ln());
    }
    Ok(stats::linear_fit(&xs, &ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin() -> MonotoneDensity {
        MonotoneDensity::linear(1.5, 0.5).unwrap()
    }

    #[test]
    fn scaling_functions_linear_mid_level() {
        let s = ScalingFunctions::at(&lin(), 1.0).unwrap();
        assert!((s.phi1 - 4f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!((s.phi2 - 4f64.cbrt()).abs() < 1e-15);
        assert!(ScalingFunctions::at(&lin(), 1.5).is_err());
    }

    #[test]
    fn empirical_tiny_sample() {
        let e = EmpiricalCdf::new(vec![0.25, 0.75]).unwrap();
        let v = vn_e(&e, &lin(), 1.2).unwrap();
        assert!((v + 0.05 * 2f64.cbrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn drift_alone_peaks_at_zero() {
        for d in [lin(), MonotoneDensity::trunc_exp(2.0).unwrap()] {
            let a = 0.5 * (d.f0() + d.f1());
            let spec = LocalizedArgmaxSpec::new(d, a, 10_000, ProcessKind::W);
            let t = drift_only_argmax(&spec).unwrap();
            assert!(t.abs() <= spec.step / 512.0 + 1e-12, "{t}");
        }
    }

    #[test]
    fn t_range_maps_to_unit_interval() {
        let spec = LocalizedArgmaxSpec::new(lin(), 1.0, 1000, ProcessKind::B);
        let (lo, hi) = spec.t_range();
        assert!((lo + 5.0).abs() < 1e-12 && (hi - 5.0).abs() < 1e-12);
    }

    #[test]
    fn moment_condition_band() {
        let d = lin();
        assert!(moment_condition_holds(&d, 1.0, 100_000));
        assert!(!moment_condition_holds(&d, 0.6, 100_000));
    }

    #[test]
    fn replications_are_reproducible() {
        let spec = LocalizedArgmaxSpec::new(lin(), 1.1, 1000, ProcessKind::B);
        let a = simulate_vn(&spec, 3).unwrap();
        let b = simulate_vn(&spec, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate_vn(&spec, 4).unwrap());
    }

    #[test]
    fn zeroth_moment_is_one() {
        let spec = LocalizedArgmaxSpec::new(lin(), 1.0, 100_000, ProcessKind::W);
        let p = moment_profile(&spec, 0.0, &[1.0, 0.6], 10, Estimate { value: 0.5, se: 0.01 }).unwrap();
        // a = 0.6 violates the moment condition and is dropped.
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].estimate, p[0].prediction), (1.0, 1.0));
    }

    #[test]
    fn tail_fit_of_exact_cubic_tail() {
        // Quantiles of P(|V| >= x) = exp(-x^3).
        let m = 20_000;
        let v: Vec<f64> = (0..m)
            .map(|i| (-((i as f64 + 0.5) / m as f64).ln()).cbrt())
            .collect();
        let fit = tail_fit(&v, 0.5, 1.5, 8).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.02 && fit.r_squared > 0.999);
    }
}
