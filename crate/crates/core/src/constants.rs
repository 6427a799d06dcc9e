//! Centring and scale constants of the L_k-error central limit theorem,
//! assembled from density integrals and simulated argmax moments.

use serde::{Deserialize, Serialize};

use crate::chernoff::{ChernoffEstimates, Estimate};
use crate::density::MonotoneDensity;
use crate::error::{Error, Result};
use crate::functionals::Weight;

/// Relative agreement required between the algebraically equivalent routes.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantErrors {
    #[serde(rename = "E_absV_k")]
    pub e_abs_v_k: f64,
    pub kappa_k: f64,
    pub mu_k: f64,
    pub sigma2: f64,
    pub sigma_k2: f64,
    pub sigma_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub k: f64,
    /// `E|V(0)|^k`.
    #[serde(rename = "E_absV_k")]
    pub e_abs_v_k: f64,
    /// `int_0^inf cov(|xi(0)|^k, |xi(c)|^k) dc`.
    pub kappa_k: f64,
    pub mu_k: f64,
    /// Limiting variance of the centred inverse-process error.
    pub sigma2: f64,
    /// Limiting variance of the standardised L_k-error.
    pub sigma_k2: f64,
    pub sigma_k: f64,
    /// `c_h` for `l = 0`, `m = k`, `h = |g'|^{1-k}`, so that `sigma2 = c_h kappa_k`.
    pub c_h: f64,
    /// Constants of a weighted error (an extrapolation of the unweighted ones).
    pub weighted: bool,
    pub se: ConstantErrors,
}

impl LimitConstants {
    pub fn mu(&self) -> Estimate {
        Estimate {
            value: self.mu_k,
            se: self.se.mu_k,
        }
    }

    pub fn sigma(&self) -> Estimate {
        Estimate {
            value: self.sigma_k,
            se: self.se.sigma_k,
        }
    }
}

/// `c_h = 2 int_0^1 (4f)^{(2l+2m+1)/3} |f'|^{(4-4l-4m)/3} h(f(x))^2 dx`.
pub fn c_h<H: Fn(f64) -> f64>(d: &MonotoneDensity, l: f64, m: f64, h: H) -> Result<f64> {
    if !(l + m > 0.0) {
        return Err(Error::InvalidArgument(format!("l + m = {} must be positive", l + m)));
    }
    let p = (2.0 * l + 2.0 * m + 1.0) / 3.0;
    let q = (4.0 - 4.0 * l - 4.0 * m) / 3.0;
    Ok(2.0
        * d.integrate(|x| {
            let fx = d.eval(x);
            (4.0 * fx).powf(p) * d.deriv(x).abs().powf(q) * h(fx).powi(2)
        }))
}

fn check_identity(what: &str, a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > IDENTITY_TOL * a.abs().max(b.abs()).max(1e-300) {
        return Err(Error::Inconsistent(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("k = {k} must be >= 1")));
    }
    Ok(())
}

fn errors(k: f64, moment: Estimate, kappa: Estimate, mu_k: f64, sigma2: f64, sigma_k2: f64) -> ConstantErrors {
    let rel_m = moment.se / moment.value;
    let rel_kappa = kappa.se / kappa.value.abs();
    let rel_sk2 = (rel_kappa.powi(2) + ((2.0 * k - 2.0) / k * rel_m).powi(2)).sqrt();
    ConstantErrors {
        e_abs_v_k: moment.se,
        kappa_k: kappa.se,
        mu_k: mu_k * rel_m / k,
        sigma2: sigma2 * rel_kappa,
        sigma_k2: sigma_k2 * rel_sk2,
        sigma_k: sigma_k2.sqrt() * rel_sk2 / 2.0,
    }
}

/// Constants from a moment estimate `E|V(0)|^k` and covariance integral.
///
/// `sigma_k2` is evaluated from the density integrals without the factors 4
/// and checked against `sigma2 / (k^2 mu_k^{2k-2})`; `sigma2` is checked
/// against `c_h kappa_k`. Disagreement beyond `IDENTITY_TOL` is an error.
pub fn constants_from_parts(d: &MonotoneDensity, k: f64, moment: Estimate, kappa: Estimate) -> Result<LimitConstants> {
    check_k(k)?;
    if !(moment.value > 0.0) {
        return Err(Error::InvalidArgument(format!("E|V(0)|^k = {} must be positive", moment.value)));
    }
    let e = moment.value;
    let kap = kappa.value;

    let mu_k = (e * d.integrate(|x| (4.0 * d.eval(x) * d.deriv(x).abs()).powf(k / 3.0))).powf(1.0 / k);

    let sigma2 = 2.0
        * d.integrate(|x| {
            (4.0 * d.eval(x)).powf((2.0 * k + 1.0) / 3.0) * d.deriv(x).abs().powf((2.0 * k - 2.0) / 3.0)
        })
        * kap;

    let numerator = d.integral((2.0 * k + 1.0) / 3.0, (2.0 * k - 2.0) / 3.0)?;
    let centre = e * d.integral(k / 3.0, k / 3.0)?;
    let sigma_k2 = numerator / (k * k * centre.powf((2.0 * k - 2.0) / k)) * 8.0 * kap;
    check_identity(
        "sigma_k^2 against sigma^2 / (k^2 mu_k^(2k-2))",
        sigma_k2,
        sigma2 / (k * k * mu_k.powf(2.0 * k - 2.0)),
    )?;

    let ch = c_h(d, 0.0, k, |a| d.inverse_deriv(a).abs().powf(1.0 - k))?;
    check_identity("sigma^2 against c_h kappa_k", sigma2, ch * kap)?;

    Ok(LimitConstants {
        k,
        e_abs_v_k: e,
        kappa_k: kap,
        mu_k,
        sigma2,
        sigma_k2,
        sigma_k: sigma_k2.sqrt(),
        c_h: ch,
        weighted: false,
        se: errors(k, moment, kappa, mu_k, sigma2, sigma_k2),
    })
}

pub fn compute_constants(d: &MonotoneDensity, k: f64, ch: &ChernoffEstimates) -> Result<LimitConstants> {
    constants_from_parts(d, k, ch.abs_moment(k)?, ch.kappa(k)?.estimate())
}

/// Constants of the weighted error `int |f_n - f|^k w`, with the weight
/// entering the density integrals as `w` (centring) and `w^2` (variance).
///
/// This generalisation is an extrapolation: it is what the unweighted
/// derivation gives with `h(a) = w(g(a)) |g'(a)|^{1-k}`.
pub fn weighted_constants(
    d: &MonotoneDensity,
    k: f64,
    moment: Estimate,
    kappa: Estimate,
    w: &Weight,
) -> Result<LimitConstants> {
    if w.is_unit() {
        return constants_from_parts(d, k, moment, kappa);
    }
    check_k(k)?;
    let e = moment.value;
    let kap = kappa.value;
    let mu_k = (e * d.integrate(|x| (4.0 * d.eval(x) * d.deriv(x).abs()).powf(k / 3.0) * w.eval(d, x)))
        .powf(1.0 / k);
    let sigma2 = 2.0
        * d.integrate(|x| {
            (4.0 * d.eval(x)).powf((2.0 * k + 1.0) / 3.0)
                * d.deriv(x).abs().powf((2.0 * k - 2.0) / 3.0)
                * w.eval(d, x).powi(2)
        })
        * kap;
    let sigma_k2 = sigma2 / (k * k * mu_k.powf(2.0 * k - 2.0));
    let ch = c_h(d, 0.0, k, |a| {
        w.eval(d, d.inverse(a)) * d.inverse_deriv(a).abs().powf(1.0 - k)
    })?;
    check_identity("weighted sigma^2 against c_h kappa_k", sigma2, ch * kap)?;
    Ok(LimitConstants {
        k,
        e_abs_v_k: e,
        kappa_k: kap,
        mu_k,
        sigma2,
        sigma_k2,
        sigma_k: sigma_k2.sqrt(),
        c_h: ch,
        weighted: true,
        se: errors(k, moment, kappa, mu_k, sigma2, sigma_k2),
    })
}
