//! Monte Carlo for the argmax process `V(c) = argmax_t W(t) - (t - c)^2` of a
//! two-sided Brownian motion and its stationary version `xi(c) = V(c) - c`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{anchored_grid, coarse_argmax, refine, Maximiser, ParabolaArgmax, Path};
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::stats::{self, KsResult};

/// Intervals rescanned either side of the incumbent at each refinement level.
const WINDOW: usize = 2;
const JACKKNIFE_BLOCKS: usize = 50;
const MAX_WIDENINGS: usize = 2;

/// Discretisation of the Brownian argmax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxConfig {
    /// Half-width of the simulated time window around the drift centre.
    pub horizon: f64,
    /// Coarse grid step.
    pub step: f64,
    /// Refinement levels, each shrinking the step by a factor 8.
    pub refinements: u32,
    pub reps: usize,
    pub seed: u64,
}

impl Default for ArgmaxConfig {
    fn default() -> Self {
        Self {
            horizon: 4.0,
            step: 1.0 / 1024.0,
            refinements: 3,
            reps: 100_000,
            seed: 1,
        }
    }
}

impl ArgmaxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.step > 0.0 && self.step < self.horizon) {
            return Err(Error::InvalidArgument(format!(
                "grid step {} must lie in (0, horizon)",
                self.step
            )));
        }
        if self.refinements > 6 {
            return Err(Error::InvalidArgument(format!(
                "refinement depth {} is above the supported 6",
                self.refinements
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        Ok(())
    }

    /// Finest step reached after refinement.
    pub fn resolution(&self) -> f64 {
        self.step / 8f64.powi(self.refinements as i32)
    }
}

/// One simulated argmax location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxSample {
    pub v: f64,
    /// The maximiser hit the edge of the simulated window.
    pub truncated: bool,
}

impl From<Maximiser> for ArgmaxSample {
    fn from(m: Maximiser) -> Self {
        Self {
            v: m.t,
            truncated: m.at_boundary,
        }
    }
}

pub type ClockFn = fn(f64) -> f64;

fn identity(t: f64) -> f64 {
    t
}

/// Standard two-sided Brownian path on `[lo, hi]` for replication `index`.
pub fn brownian_path(cfg: &ArgmaxConfig, lo: f64, hi: f64, dom: u64, index: u64) -> Path<ClockFn> {
    let mut r = rng::stream(cfg.seed, dom, index);
    Path::sample(
        anchored_grid(lo, hi, cfg.step),
        identity as ClockFn,
        rng::key(&[cfg.seed, dom, index]),
        &mut r,
    )
}

/// Refined maximiser of `W(t) - b (t - c)^2` on a given path.
pub fn argmax_on_path<C: Fn(f64) -> f64>(path: &mut Path<C>, b: f64, c: f64, depth: u32) -> Maximiser {
    let drift = |t: f64| -b * (t - c) * (t - c);
    let coarse = coarse_argmax(path, &drift, 0, path.len() - 1);
    refine(path, &drift, coarse, depth, WINDOW)
}

/// `argmax_t W(t) - b (t - c)^2` over `[c - T, c + T]` (widened to contain 0).
pub fn simulate_vb(b: f64, c: f64, cfg: &ArgmaxConfig, dom: u64, index: u64) -> ArgmaxSample {
    let mut path = brownian_path(cfg, (c - cfg.horizon).min(0.0), (c + cfg.horizon).max(0.0), dom, index);
    argmax_on_path(&mut path, b, c, cfg.refinements).into()
}

/// One replication of `V(c)`.
pub fn simulate_v(c: f64, cfg: &ArgmaxConfig, index: u64) -> ArgmaxSample {
    simulate_vb(1.0, c, cfg, domain::CHERNOFF, index)
}

/// `cfg.reps` independent draws of `V(0)` from stream family `dom`.
pub fn sample_v0(cfg: &ArgmaxConfig, dom: u64) -> Vec<ArgmaxSample> {
    (0..cfg.reps as u64)
        .into_par_iter()
        .map(|i| simulate_vb(1.0, 0.0, cfg, dom, i))
        .collect()
}

/// `xi(c) = V(c) - c` for every `c` on the grid, all from one path.
pub fn simulate_xi_grid(c_grid: &[f64], cfg: &ArgmaxConfig, dom: u64, index: u64) -> (Vec<f64>, bool) {
    let c_max = c_grid.last().copied().unwrap_or(0.0).max(0.0);
    let mut path = brownian_path(cfg, -cfg.horizon, c_max + cfg.horizon, dom, index);
    let t = path.coarse_times().to_vec();
    let y: Vec<f64> = t.iter().zip(path.coarse_values()).map(|(t, w)| w - t * t).collect();
    let hull = ParabolaArgmax::new(&t, &y);
    let mut truncated = false;
    let xi = c_grid
        .iter()
        .map(|&c| {
            let drift = |s: f64| -(s - c) * (s - c);
            let m = refine(&mut path, &drift, hull.query(c), cfg.refinements, WINDOW);
            truncated |= m.at_boundary;
            m.t - c
        })
        .collect();
    (xi, truncated)
}

/// Estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Covariance integral `int_0^inf cov(|xi(0)|^k, |xi(c)|^k) dc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub value: f64,
    pub se: f64,
    /// Trapezoid rule over the c-grid.
    pub trapezoid: f64,
    /// Integral of the fitted `exp(alpha + beta c^3)` tail beyond the grid.
    pub tail: f64,
    pub tail_fitted: bool,
}

impl KappaEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.value,
            se: self.se,
        }
    }
}

/// Moments and covariance curve of the argmax process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernoffEstimates {
    pub ks: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub config: ArgmaxConfig,
    pub mean_v0: Estimate,
    /// `E|V(0)|^k` per exponent.
    pub abs_moment: Vec<Estimate>,
    /// `cov(|xi(0)|^k, |xi(c)|^k)` per exponent and grid point.
    pub cov_curve: Vec<Vec<Estimate>>,
    pub kappa: Vec<KappaEstimate>,
    pub truncated: usize,
    pub warnings: Vec<String>,
}

impl ChernoffEstimates {
    fn position(&self, k: f64) -> Result<usize> {
        self.ks
            .iter()
            .position(|&x| (x - k).abs() < 1e-12)
            .ok_or_else(|| Error::MissingConstants(format!("no Chernoff estimates for k = {k}")))
    }

    pub fn abs_moment(&self, k: f64) -> Result<Estimate> {
        Ok(self.abs_moment[self.position(k)?])
    }

    pub fn kappa(&self, k: f64) -> Result<KappaEstimate> {
        Ok(self.kappa[self.position(k)?])
    }

    pub fn truncated_fraction(&self) -> f64 {
        self.truncated as f64 / self.config.reps as f64
    }
}

/// Default drift-centre grid `0, 1/16, ..., 3`.
pub fn default_c_grid() -> Vec<f64> {
    (0..=48).map(|i| i as f64 / 16.0).collect()
}

/// Per-block sums for one exponent and one grid point.
#[derive(Clone, Copy, Default)]
struct Sums {
    n: f64,
    x: f64,
    y: f64,
    xy: f64,
}

impl Sums {
    fn add(&mut self, o: &Sums) {
        self.n += o.n;
        self.x += o.x;
        self.y += o.y;
        self.xy += o.xy;
    }

    fn sub(&self, o: &Sums) -> Sums {
        Sums {
            n: self.n - o.n,
            x: self.x - o.x,
            y: self.y - o.y,
            xy: self.xy - o.xy,
        }
    }

    fn cov(&self) -> f64 {
        (self.xy - self.x * self.y / self.n) / (self.n - 1.0)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1]))
        .sum()
}

/// Fit `log cov = alpha + beta c^3` on the significant positive points of
/// the upper half of the grid and integrate the fit beyond the grid.
fn fitted_tail(c: &[f64], cov: &[f64], se: &[f64]) -> Option<f64> {
    let c_max = *c.last()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = c
        .iter()
        .zip(cov.iter().zip(se))
        .filter(|(ci, (v, s))| **ci >= 0.5 * c_max && **v > 2.0 * **s && **v > 0.0)
        .map(|(ci, (v, _))| (ci.powi(3), v.ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    let fit = stats::linear_fit(&xs, &ys);
    if !(fit.slope < 0.0) {
        return None;
    }
    let (alpha, beta) = (fit.intercept, fit.slope);
    let end = (c_max.powi(3) + 60.0 / -beta).cbrt();
    Some(crate::quadrature::integrate(|x| (alpha + beta * x.powi(3)).exp(), c_max, end, 1e-14).value)
}

fn kappa_parts(c: &[f64], cov: &[f64], se: &[f64]) -> (f64, Option<f64>) {
    (trapezoid(c, cov), fitted_tail(c, cov, se))
}

fn summarise(
    ks: &[f64],
    c_grid: &[f64],
    cfg: &ArgmaxConfig,
    draws: &[(Vec<f64>, bool)],
) -> ChernoffEstimates {
    let reps = draws.len();
    let m = c_grid.len();
    let blocks = JACKKNIFE_BLOCKS.min(reps).max(1);
    let block_of = |i: usize| i * blocks / reps;
    let v0: Vec<f64> = draws.iter().map(|d| d.0[0]).collect();
    let mean_v0 = Estimate {
        value: stats::mean(&v0),
        se: stats::std_error(&v0),
    };
    let truncated = draws.iter().filter(|d| d.1).count();

    let mut abs_moment = Vec::new();
    let mut cov_curve = Vec::new();
    let mut kappa = Vec::new();
    for &k in ks {
        let x: Vec<f64> = v0.iter().map(|v| v.abs().powf(k)).collect();
        abs_moment.push(Estimate {
            value: stats::mean(&x),
            se: stats::std_error(&x),
        });
        let mut per_block = vec![vec![Sums::default(); m]; blocks];
        for (i, (xi, _)) in draws.iter().enumerate() {
            let b = block_of(i);
            for j in 0..m {
                let y = xi[j].abs().powf(k);
                let s = &mut per_block[b][j];
                s.n += 1.0;
                s.x += x[i];
                s.y += y;
                s.xy += x[i] * y;
            }
        }
        let mut total = vec![Sums::default(); m];
        for bs in &per_block {
            for j in 0..m {
                total[j].add(&bs[j]);
            }
        }
        let full: Vec<f64> = total.iter().map(Sums::cov).collect();
        let leave_out: Vec<Vec<f64>> = per_block
            .iter()
            .map(|bs| (0..m).map(|j| total[j].sub(&bs[j]).cov()).collect())
            .collect();
        let g = blocks as f64;
        let curve: Vec<Estimate> = (0..m)
            .map(|j| {
                let vals: Vec<f64> = leave_out.iter().map(|l| l[j]).collect();
                let mu = stats::mean(&vals);
                let se = ((g - 1.0) / g * vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>()).sqrt();
                Estimate { value: full[j], se }
            })
            .collect();
        let se: Vec<f64> = curve.iter().map(|e| e.se).collect();
        let (trap, tail) = kappa_parts(c_grid, &full, &se);
        let value = trap + tail.unwrap_or(0.0);
        let kappa_se = stats::block_jackknife(blocks, |skip| match skip {
            Some(b) => {
                let (t, tl) = kappa_parts(c_grid, &leave_out[b], &se);
                t + tl.unwrap_or(0.0)
            }
            None => value,
        });
        cov_curve.push(curve);
        kappa.push(KappaEstimate {
            value,
            se: kappa_se,
            trapezoid: trap,
            tail: tail.unwrap_or(0.0),
            tail_fitted: tail.is_some(),
        });
    }
    ChernoffEstimates {
        ks: ks.to_vec(),
        c_grid: c_grid.to_vec(),
        config: *cfg,
        mean_v0,
        abs_moment,
        cov_curve,
        kappa,
        truncated,
        warnings: Vec::new(),
    }
}

/// Moments `E|V(0)|^k` and covariance integrals for each exponent in `ks`.
///
/// If some covariance curve has not decayed to within three standard errors
/// of zero at the end of the grid, the grid is doubled (at most twice) and a
/// warning recorded.
pub fn estimate_chernoff(ks: &[f64], c_grid: &[f64], cfg: &ArgmaxConfig) -> Result<ChernoffEstimates> {
    estimate_chernoff_in(ks, c_grid, cfg, domain::CHERNOFF)
}

pub fn estimate_chernoff_in(
    ks: &[f64],
    c_grid: &[f64],
    cfg: &ArgmaxConfig,
    dom: u64,
) -> Result<ChernoffEstimates> {
    cfg.validate()?;
    if ks.is_empty() || ks.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::InvalidArgument("exponents must be positive".into()));
    }
    if c_grid.first() != Some(&0.0) || c_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "c-grid must start at 0 and increase strictly".into(),
        ));
    }
    let mut grid = c_grid.to_vec();
    let mut warnings = Vec::new();
    for attempt in 0..=MAX_WIDENINGS {
        let draws: Vec<(Vec<f64>, bool)> = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|i| simulate_xi_grid(&grid, cfg, dom, i))
            .collect();
        let mut est = summarise(ks, &grid, cfg, &draws);
        let undecayed: Vec<f64> = est
            .ks
            .iter()
            .zip(&est.cov_curve)
            .filter(|(_, curve)| {
                let last = curve.last().unwrap();
                last.value.abs() > 3.0 * last.se
            })
            .map(|(k, _)| *k)
            .collect();
        if undecayed.is_empty() || attempt == MAX_WIDENINGS || grid.len() < 2 {
            if !undecayed.is_empty() {
                warnings.push(format!(
                    "covariance not decayed at c = {} for k in {undecayed:?}",
                    grid.last().unwrap()
                ));
            }
            est.warnings = warnings;
            return Ok(est);
        }
        let step = grid[grid.len() - 1] - grid[grid.len() - 2];
        let c_max = *grid.last().unwrap();
        let msg = format!("covariance not decayed at c = {c_max} for k in {undecayed:?}; widening grid");
        log::warn!("{msg}");
        warnings.push(msg);
        let mut c = c_max + step;
        while c <= 2.0 * c_max + 1e-12 {
            grid.push(c);
            c += step;
        }
    }
    unreachable!()
}

/// Outcome of comparing the curvature-`b` argmax with its Brownian rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub b: f64,
    pub c: f64,
    pub ks: KsResult,
    pub direct_mean: Estimate,
    pub mapped_mean: Estimate,
    pub truncated: usize,
}

/// Two-sample comparison of `argmax W(t) - b (t - c)^2` with
/// `b^{-2/3} V(c b^{2/3})`, both from independent stream families.
pub fn scaling_check(b: f64, c: f64, cfg: &ArgmaxConfig) -> Result<ScalingCheck> {
    cfg.validate()?;
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("curvature {b} must be positive")));
    }
    let scale = b.powf(-2.0 / 3.0);
    let direct_cfg = ArgmaxConfig {
        horizon: cfg.horizon * scale.max(1.0),
        ..*cfg
    };
    let direct: Vec<ArgmaxSample> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|i| simulate_vb(b, c, &direct_cfg, domain::SCALING_DIRECT, i))
        .collect();
    let c_mapped = c / scale;
    let mapped: Vec<ArgmaxSample> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|i| {
            let s = simulate_vb(1.0, c_mapped, cfg, domain::SCALING_MAPPED, i);
            ArgmaxSample {
                v: scale * s.v,
                truncated: s.truncated,
            }
        })
        .collect();
    let dv: Vec<f64> = direct.iter().map(|s| s.v).collect();
    let mv: Vec<f64> = mapped.iter().map(|s| s.v).collect();
    Ok(ScalingCheck {
        b,
        c,
        ks: stats::ks_two_sample(&dv, &mv),
        direct_mean: Estimate {
            value: stats::mean(&dv),
            se: stats::std_error(&dv),
        },
        mapped_mean: Estimate {
            value: stats::mean(&mv),
            se: stats::std_error(&mv),
        },
        truncated: direct.iter().chain(&mapped).filter(|s| s.truncated).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> ArgmaxConfig {
        ArgmaxConfig {
            horizon: 3.0,
            step: 1.0 / 128.0,
            refinements: 2,
            reps,
            seed: 11,
        }
    }

    #[test]
    fn config_validation() {
        assert!(ArgmaxConfig::default().validate().is_ok());
        assert!(ArgmaxConfig { reps: 0, ..Default::default() }.validate().is_err());
        assert!(ArgmaxConfig { horizon: -1.0, ..Default::default() }.validate().is_err());
        assert!(ArgmaxConfig { step: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn grid_xi_matches_single_c_simulation() {
        let cfg = small(1);
        let grid = [0.0, 0.5, 1.0];
        let (xi, _) = simulate_xi_grid(&grid, &cfg, domain::CHERNOFF, 4);
        // Same path, evaluated by a plain scan per c.
        let mut path = brownian_path(&cfg, -cfg.horizon, 1.0 + cfg.horizon, domain::CHERNOFF, 4);
        for (j, &c) in grid.iter().enumerate() {
            let m = argmax_on_path(&mut path, 1.0, c, cfg.refinements);
            assert_eq!(m.t - c, xi[j]);
        }
    }

    #[test]
    fn refinement_self_convergence() {
        // One coarse path per replication, refined h -> h/8 three times. The
        // last refinement moves the argmax by at most two level-2 cells and
        // typically by less than one.
        let cfg = ArgmaxConfig {
            horizon: 4.0,
            step: 1.0 / 64.0,
            refinements: 3,
            reps: 1,
            seed: 2,
        };
        let cell = cfg.step / 64.0;
        let mut moves = Vec::new();
        for i in 0..50 {
            let mut path = brownian_path(&cfg, -4.0, 4.0, domain::CHERNOFF, i);
            let a2 = argmax_on_path(&mut path, 1.0, 0.0, 2).t;
            let a3 = argmax_on_path(&mut path, 1.0, 0.0, 3).t;
            moves.push((a3 - a2).abs() / cell);
        }
        assert!(moves.iter().all(|&m| m < 2.0), "{moves:?}");
        assert!(stats::quantile(&moves, 0.5) < 1.0, "{moves:?}");
    }

    #[test]
    fn cov_at_zero_is_variance() {
        let cfg = small(400);
        let est = estimate_chernoff(&[1.0, 2.0], &[0.0, 0.25, 0.5], &cfg).unwrap();
        for (i, &k) in est.ks.iter().enumerate() {
            let (draws, _): (Vec<f64>, Vec<bool>) = (0..400)
                .map(|r| {
                    let (xi, t) = simulate_xi_grid(&est.c_grid, &cfg, domain::CHERNOFF, r);
                    (xi[0].abs().powf(k), t)
                })
                .unzip();
            let var = stats::variance(&draws);
            assert!((est.cov_curve[i][0].value - var).abs() < 1e-12 * var.max(1.0));
            assert!(est.abs_moment[i].value > 0.0);
        }
    }

    #[test]
    fn deterministic_regardless_of_threads() {
        let cfg = small(64);
        let a = estimate_chernoff(&[1.0], &[0.0, 0.5], &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| estimate_chernoff(&[1.0], &[0.0, 0.5], &cfg).unwrap());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn rejects_bad_grid() {
        let cfg = small(4);
        assert!(estimate_chernoff(&[1.0], &[0.5, 1.0], &cfg).is_err());
        assert!(estimate_chernoff(&[1.0], &[0.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn identity_scaling_is_exact_in_law() {
        let cfg = small(300);
        let s = scaling_check(1.0, 0.0, &cfg).unwrap();
        assert!(!s.ks.rejects(0.01));
    }

    #[test]
    fn trapezoid_and_tail() {
        let c: Vec<f64> = (0..=20).map(|i| i as f64 / 10.0).collect();
        let cov: Vec<f64> = c.iter().map(|x| (-(x.powi(3))).exp()).collect();
        let se = vec![0.0; c.len()];
        let (trap, tail) = kappa_parts(&c, &cov, &se);
        // int_0^inf exp(-c^3) dc = Gamma(4/3).
        let exact = 0.892_979_511_569_249;
        assert!((trap + tail.unwrap() - exact).abs() < 2e-3);
        assert!(tail.unwrap() > 0.0 && tail.unwrap() < 1e-3);
    }
}
