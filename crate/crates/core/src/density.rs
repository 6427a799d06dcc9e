//! Analytic strictly decreasing densities on [0, 1].
//!
//! Two families are provided: a linear density normalised by
//! `f(0) + f(1) = 2`, and the exponential density truncated to [0, 1]. Both
//! are smooth, bounded away from zero and have a derivative bounded away from
//! zero, which is what the limit theory of the Grenander estimator needs.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Parameters of a density family, in the JSON form used by config files:
/// `{"family":"linear","f0":1.5,"f1":0.5}` or `{"family":"truncexp","theta":1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DensityFamily {
    Linear { f0: f64, f1: f64 },
    #[serde(rename = "truncexp")]
    TruncExp { theta: f64 },
}

impl DensityFamily {
    /// Parse either the JSON object form or the short `linear:1.5,0.5` /
    /// `truncexp:1.0` form.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidDensity(format!("cannot parse '{s}'")))?;
        let nums = args
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidDensity(format!("'{s}': {e}")))?;
        match (name.trim(), nums.as_slice()) {
            ("linear", [f0, f1]) => Ok(Self::Linear { f0: *f0, f1: *f1 }),
            ("truncexp", [theta]) => Ok(Self::TruncExp { theta: *theta }),
            _ => Err(Error::InvalidDensity(format!("cannot parse '{s}'"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Linear { f0, f1 } => format!("linear:{f0},{f1}"),
            Self::TruncExp { theta } => format!("truncexp:{theta}"),
        }
    }
}

/// A twice differentiable, strictly decreasing density on [0, 1] with
/// `0 < f(1) <= f(x) <= f(0) < inf` and `inf |f'| > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneDensity {
    family: DensityFamily,
    // Linear: slope magnitude. TruncExp: normalising constant 1 - e^{-theta}.
    aux: f64,
}

impl MonotoneDensity {
    pub fn new(family: DensityFamily) -> Result<Self> {
        match family {
            DensityFamily::Linear { f0, f1 } => {
                if !(f0.is_finite() && f1.is_finite()) {
                    return Err(Error::InvalidDensity("non-finite endpoint".into()));
                }
                if f1 <= 0.0 {
                    return Err(Error::InvalidDensity(format!("f(1) = {f1} must be positive")));
                }
                if f0 <= f1 {
                    return Err(Error::InvalidDensity(format!(
                        "f(0) = {f0} must exceed f(1) = {f1} (derivative bounded away from zero)"
                    )));
                }
                if (f0 + f1 - 2.0).abs() > 1e-12 {
                    return Err(Error::InvalidDensity(format!(
                        "linear density needs f(0) + f(1) = 2, got {}",
                        f0 + f1
                    )));
                }
                Ok(Self {
                    family,
                    aux: f0 - f1,
                })
            }
            DensityFamily::TruncExp { theta } => {
                if !(theta > 0.0 && theta <= 50.0) {
                    return Err(Error::InvalidDensity(format!(
                        "truncated exponential rate {theta} must lie in (0, 50]"
                    )));
                }
                Ok(Self {
                    family,
                    aux: -(-theta).exp_m1(),
                })
            }
        }
    }

    pub fn linear(f0: f64, f1: f64) -> Result<Self> {
        Self::new(DensityFamily::Linear { f0, f1 })
    }

    pub fn trunc_exp(theta: f64) -> Result<Self> {
        Self::new(DensityFamily::TruncExp { theta })
    }

    pub fn family(&self) -> DensityFamily {
        self.family
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.family {
            DensityFamily::Linear { f0, .. } => f0 - self.aux * x,
            DensityFamily::TruncExp { theta } => theta * (-theta * x).exp() / self.aux,
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self.family {
            DensityFamily::Linear { .. } => -self.aux,
            DensityFamily::TruncExp { theta } => -theta * self.eval(x),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match self.family {
            DensityFamily::Linear { .. } => 0.0,
            DensityFamily::TruncExp { theta } => theta * theta * self.eval(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self.family {
            DensityFamily::Linear { f0, .. } => f0 * x - 0.5 * self.aux * x * x,
            DensityFamily::TruncExp { theta } => -(-theta * x).exp_m1() / self.aux,
        }
    }

    /// Inverse of the density on `[f(1), f(0)]`.
    pub fn inverse(&self, a: f64) -> f64 {
        match self.family {
            DensityFamily::Linear { f0, .. } => (f0 - a) / self.aux,
            DensityFamily::TruncExp { theta } => -(a * self.aux / theta).ln() / theta,
        }
    }

    /// Derivative of the inverse, `g'(a) = 1 / f'(g(a))`.
    pub fn inverse_deriv(&self, a: f64) -> f64 {
        1.0 / self.deriv(self.inverse(a))
    }

    /// Quantile function, solved by safeguarded Newton iteration.
    pub fn quantile(&self, p: f64) -> f64 {
        self.quantile_from(p, p)
    }

    /// Quantile with an initial guess; sorted sampling warm-starts from the
    /// previous root.
    pub fn quantile_from(&self, p: f64, guess: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut x = guess.clamp(0.0, 1.0);
        for _ in 0..100 {
            let r = self.cdf(x) - p;
            if r == 0.0 {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - r / self.eval(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-14 * x.max(1e-300) || hi - lo <= 1e-14 {
                return next;
            }
            x = next;
        }
        x
    }

    pub fn f0(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn f1(&self) -> f64 {
        self.eval(1.0)
    }

    pub fn sup_abs_deriv(&self) -> f64 {
        self.deriv(0.0).abs()
    }

    pub fn inf_abs_deriv(&self) -> f64 {
        self.deriv(1.0).abs()
    }

    pub fn sup_abs_deriv2(&self) -> f64 {
        self.deriv2(0.0).abs()
    }

    /// Sup-distance below which the segment-wise comparison of the two
    /// L_k-errors is valid: `(inf |f'|)^2 / (2 sup |f''|)`.
    pub fn segment_condition_bound(&self) -> f64 {
        let d2 = self.sup_abs_deriv2();
        if d2 == 0.0 {
            f64::INFINITY
        } else {
            self.inf_abs_deriv().powi(2) / (2.0 * d2)
        }
    }

    /// `I(p, q) = int_0^1 f(x)^p |f'(x)|^q dx`.
    pub fn integral(&self, p: f64, q: f64) -> Result<f64> {
        if !(p >= 0.0 && q >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "density integral exponents must be non-negative, got ({p}, {q})"
            )));
        }
        Ok(self.integrate(|x| self.eval(x).powf(p) * self.deriv(x).abs().powf(q)))
    }

    /// Integrate an arbitrary functional of x over [0, 1] to 1e-12.
    pub fn integrate<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        quadrature::integrate(h, 0.0, 1.0, 1e-12).value
    }

    /// Sorted sample of size `n`.
    ///
    /// Uniform order statistics come from normalised exponential spacings,
    /// `U_(i) = G_i / G_{n+1}`, so the smallest observations of samples of
    /// different sizes drawn from the same stream are coupled.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut u = uniform_order_statistics(n, rng);
        let mut guess = 0.0;
        for v in u.iter_mut() {
            guess = self.quantile_from(*v, guess);
            *v = guess;
        }
        u
    }
}

/// Sorted i.i.d. uniforms via exponential spacings.
pub fn uniform_order_statistics<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut total = 0.0;
    for _ in 0..n {
        let e: f64 = rng.sample(Exp1);
        total += e;
        out.push(total);
    }
    let last: f64 = rng.sample(Exp1);
    total += last;
    for v in out.iter_mut() {
        *v /= total;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn lin() -> MonotoneDensity {
        MonotoneDensity::linear(1.5, 0.5).unwrap()
    }

    fn families() -> Vec<MonotoneDensity> {
        vec![
            lin(),
            MonotoneDensity::linear(1.2, 0.8).unwrap(),
            MonotoneDensity::trunc_exp(1.0).unwrap(),
            MonotoneDensity::trunc_exp(3.0).unwrap(),
        ]
    }

    #[test]
    fn linear_closed_forms() {
        let d = lin();
        assert_eq!(d.eval(0.5), 1.0);
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            assert!((d.cdf(x) - (1.5 * x - x * x / 2.0)).abs() < 1e-15);
            assert!((d.inverse(d.eval(x)) - x).abs() < 1e-15);
        }
        for &p in &[0.0_f64, 0.01, 0.3, 0.77, 1.0] {
            let exact = 1.5 - (2.25 - 2.0 * p).sqrt();
            assert!((d.quantile(p) - exact).abs() < 1e-13, "p = {p}");
        }
        assert_eq!(d.quantile(0.0), 0.0);
        assert_eq!(d.quantile(1.0), 1.0);
    }

    #[test]
    fn flat_linear_rejected() {
        assert!(MonotoneDensity::linear(1.0, 1.0).is_err());
        assert!(MonotoneDensity::linear(1.5, 0.6).is_err());
        assert!(MonotoneDensity::linear(2.0, 0.0).is_err());
        assert!(MonotoneDensity::trunc_exp(0.0).is_err());
    }

    #[test]
    fn cdf_is_antiderivative() {
        for d in families() {
            assert!(d.cdf(0.0).abs() < 1e-15);
            assert!((d.cdf(1.0) - 1.0).abs() < 1e-14);
            for i in 0..=20 {
                let x = i as f64 / 20.0;
                let q = quadrature::integrate(|t| d.eval(t), 0.0, x, 1e-13).value;
                assert!((d.cdf(x) - q).abs() < 1e-10, "{d:?} at {x}");
            }
        }
    }

    #[test]
    fn inverses_round_trip() {
        for d in families() {
            for i in 0..=40 {
                let x = i as f64 / 40.0;
                assert!((d.inverse(d.eval(x)) - x).abs() < 1e-10);
                assert!((d.quantile(d.cdf(x)) - x).abs() < 1e-10);
                let a = d.f1() + (d.f0() - d.f1()) * x;
                assert!((d.eval(d.inverse(a)) - a).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn truncexp_quantile_matches_closed_form() {
        let theta = 2.0_f64;
        let d = MonotoneDensity::trunc_exp(theta).unwrap();
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let exact = -(1.0 - p * (1.0 - (-theta).exp())).ln() / theta;
            assert!((d.quantile(p) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn density_integrals() {
        let d = lin();
        assert!((d.integral(1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((d.integral(0.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        // int (4 f |f'|)^{k/3} with k = 3 is int 4 (1.5 - x) dx = 4.
        let k = 3.0;
        let v = 4f64.powf(k / 3.0) * d.integral(k / 3.0, k / 3.0).unwrap();
        assert!((v - 4.0).abs() < 1e-10);
        assert!(d.integral(-1.0, 0.0).is_err());
    }

    #[test]
    fn derivative_bounds() {
        let d = MonotoneDensity::trunc_exp(1.0).unwrap();
        assert!(d.sup_abs_deriv() > d.inf_abs_deriv());
        assert!(lin().segment_condition_bound().is_infinite());
        assert!(d.segment_condition_bound().is_finite());
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert!(d.deriv(x) < 0.0);
            let h = 1e-5;
            let fd = (d.eval(x + h) - d.eval(x - h)) / (2.0 * h);
            assert!((fd - d.deriv(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn parse_forms() {
        let a = DensityFamily::parse(r#"{"family":"linear","f0":1.5,"f1":0.5}"#).unwrap();
        let b = DensityFamily::parse("linear:1.5,0.5").unwrap();
        assert_eq!(a, b);
        let c = DensityFamily::parse("truncexp:1").unwrap();
        assert_eq!(c, DensityFamily::TruncExp { theta: 1.0 });
        assert_eq!(
            serde_json::to_string(&c).unwrap(),
            r#"{"family":"truncexp","theta":1.0}"#
        );
        assert!(DensityFamily::parse("cubic:1").is_err());
    }

    #[test]
    fn sample_is_sorted_and_in_range() {
        let d = lin();
        let mut s = rng::stream(1, rng::domain::SAMPLE, 0);
        let x = d.sample(1000, &mut s);
        assert!(x.windows(2).all(|w| w[0] <= w[1]));
        assert!(x[0] >= 0.0 && x[999] <= 1.0);
    }

    #[test]
    fn sample_mean_matches_first_moment() {
        // int_0^1 x (1.5 - x) dx = 0.75 - 1/3 = 5/12.
        let d = lin();
        let exact = d.integrate(|x| x * d.eval(x));
        assert!((exact - 5.0 / 12.0).abs() < 1e-12);
        let second = d.integrate(|x| x * x * d.eval(x));
        let sd = (second - exact * exact).sqrt();
        let n = 1_000_000;
        let mut s = rng::stream(11, rng::domain::SAMPLE, 0);
        let mean = d.sample(n, &mut s).iter().sum::<f64>() / n as f64;
        assert!((mean - exact).abs() < 3.0 * sd / (n as f64).sqrt());
    }
}
