//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failures listed in `KNOWN` are printed as FAIL but do not fail the target;
//! any other failing check does. `GRENLAB_ACCEPTANCE=1,2` runs a subset.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use grenlab::chernoff::{default_c_grid, estimate_chernoff, scaling_check, sample_v0, ArgmaxConfig, ChernoffEstimates, Estimate};
use grenlab::constants::{c_h, compute_constants, constants_from_parts};
use grenlab::harness::{self, replication_sample, DivergencePart, ExperimentConfig, ExperimentReport, Mode};
use grenlab::inverse_process::{moment_profile, sample_vn, tail_fit, LocalizedArgmaxSpec, ProcessKind};
use grenlab::{fit_lcm, stats, DensityFamily, EmpiricalCdf, MonotoneDensity};

/// Checks that fail at these scales for reasons analysed in the notes
/// (boundary bias of order n^{-1/6} log n, and the untrimmed centring of the
/// trimmed statistic).
const KNOWN: &[&str] = &["5:k=2", "6:final_ks_below_threshold", "9:control_settles"];

const LINEAR: DensityFamily = DensityFamily::Linear { f0: 1.5, f1: 0.5 };
const TRUNCEXP: DensityFamily = DensityFamily::TruncExp { theta: 1.0 };
const N_GRID: [usize; 3] = [1_000, 10_000, 100_000];

struct Part {
    name: String,
    passed: bool,
    detail: String,
}

fn part(name: &str, passed: bool, detail: impl Into<String>) -> Part {
    Part {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn report_parts(prefix: &str, r: &ExperimentReport) -> Vec<Part> {
    r.checks
        .iter()
        .map(|c| part(&format!("{prefix}{}", c.name), c.passed, c.detail.clone()))
        .collect()
}

/// Random samples of size <= 200 from both families.
fn oracle_samples(count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    (0..count)
        .map(|i| {
            let d = MonotoneDensity::new(if i % 2 == 0 { LINEAR } else { TRUNCEXP }).unwrap();
            let n = rng.random_range(1..=200);
            let xs = replication_sample(&d, n, 20, i as u64);
            // Every fourth sample is rounded to a coarse grid to force ties.
            if i % 4 == 3 {
                xs.iter().map(|x| (x * 32.0).round() / 32.0).collect()
            } else {
                xs
            }
        })
        .collect()
}

fn hull_oracle() -> Vec<Part> {
    let samples = oracle_samples(500);
    let mismatches = samples
        .iter()
        .filter(|xs| {
            let e = EmpiricalCdf::new(xs.to_vec()).unwrap();
            fit_lcm(&e).vertices() != common::brute_force_hull(&e)
        })
        .count();
    vec![part("vertices", mismatches == 0, format!("{mismatches} of 500 samples differ"))]
}

fn switch_relation() -> Vec<Part> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut pairs = 0;
    let mut bad = 0;
    for xs in oracle_samples(500) {
        let e = EmpiricalCdf::new(xs).unwrap();
        let g = fit_lcm(&e).estimate();
        let top = g.values[0] * 1.2;
        let levels: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..top)).filter(|a| *a > 0.0).collect();
        for a in levels.into_iter().chain(g.values.iter().copied().filter(|v| *v > 0.0)) {
            pairs += 1;
            if !common::switch_holds(&e, &g, a) {
                bad += 1;
            }
        }
    }
    vec![part("exact", bad == 0, format!("{bad} violations in {pairs} (sample, level) pairs"))]
}

fn identity() -> Vec<Part> {
    let mut worst: f64 = 0.0;
    for fam in [LINEAR, TRUNCEXP] {
        let d = MonotoneDensity::new(fam).unwrap();
        for k in [1.0, 1.5, 2.0, 2.4] {
            let moment = Estimate { value: 0.3, se: 0.003 };
            let kappa = Estimate { value: 0.04, se: 0.002 };
            let c = match constants_from_parts(&d, k, moment, kappa) {
                Ok(c) => c,
                Err(e) => return vec![part("identity", false, format!("{fam:?}, k = {k}: {e}"))],
            };
            // sigma^2 again, through c_h on the inverse-function scale.
            let ch = c_h(&d, 0.0, k, |a| d.inverse_deriv(a).abs().powf(1.0 - k)).unwrap();
            let sigma2 = ch * kappa.value;
            let via_chain = sigma2 / (k * k * c.mu_k.powf(2.0 * k - 2.0));
            worst = worst
                .max((c.sigma_k2 - via_chain).abs() / c.sigma_k2)
                .max((c.sigma2 - sigma2).abs() / sigma2);
        }
    }
    vec![part("identity", worst <= 1e-10, format!("max relative gap {worst:.2e}"))]
}

fn chernoff_lab(shared: &ChernoffEstimates) -> Vec<Part> {
    let cfg = shared.config;
    let mut parts = Vec::new();
    let m = shared.mean_v0;
    parts.push(part(
        "mean_zero",
        m.value.abs() <= 3.0 * m.se,
        format!("E V(0) = {:.5} +- {:.5}", m.value, m.se),
    ));

    let sc = scaling_check(4.0, 0.25, &cfg).unwrap();
    parts.push(part(
        "scaling_ks",
        !sc.ks.rejects(0.01),
        format!("b = 4, c = 0.25: D = {:.4}, p = {:.3}", sc.ks.statistic, sc.ks.p_value),
    ));

    // Variance of |xi(0)|^k from fresh draws against the c = 0 covariance.
    let v0: Vec<f64> = sample_v0(&cfg, 99).iter().map(|s| s.v.abs()).collect();
    let mut cov_ok = true;
    let mut cov_detail = Vec::new();
    for (i, &k) in shared.ks.iter().enumerate() {
        let x: Vec<f64> = v0.iter().map(|v| v.powf(k)).collect();
        let mean = stats::mean(&x);
        let var = stats::variance(&x);
        let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / x.len() as f64;
        let var_se = ((m4 - var * var) / x.len() as f64).sqrt();
        let cov0 = shared.cov_curve[i][0];
        let se = (var_se.powi(2) + cov0.se.powi(2)).sqrt();
        cov_ok &= (cov0.value - var).abs() <= 3.0 * se;
        cov_detail.push(format!("k={k}: {:.4} vs {:.4} +- {:.4}", cov0.value, var, se));
    }
    parts.push(part("cov_at_zero", cov_ok, cov_detail.join(", ")));

    let other = estimate_chernoff(&shared.ks, &shared.c_grid, &ArgmaxConfig { seed: cfg.seed + 1, ..cfg }).unwrap();
    let mut kappa_ok = true;
    let mut kappa_detail = Vec::new();
    for (a, b) in shared.kappa.iter().zip(&other.kappa) {
        let se = (a.se * a.se + b.se * b.se).sqrt();
        kappa_ok &= (a.value - b.value).abs() <= 3.0 * se;
        kappa_detail.push(format!("{:.4}/{:.4}", a.value, b.value));
    }
    parts.push(part("kappa_disjoint_seeds", kappa_ok, kappa_detail.join(", ")));
    parts
}

fn clt(shared: &ChernoffEstimates, k: f64, mode: Mode, eps: Option<f64>) -> ExperimentReport {
    let d = MonotoneDensity::new(LINEAR).unwrap();
    let mut cfg = ExperimentConfig::new(LINEAR, k, N_GRID.to_vec(), 2000, mode);
    cfg.constants = Some(compute_constants(&d, k, shared).unwrap());
    cfg.eps = eps;
    harness::run_clt(&cfg).unwrap()
}

fn ks_trend(r: &ExperimentReport) -> String {
    let ks: Vec<String> = r
        .summaries
        .iter()
        .map(|s| format!("{:.3}", s.ks_normal.unwrap().statistic))
        .collect();
    format!("KS {}", ks.join("/"))
}

fn clt_trend(shared: &ChernoffEstimates) -> Vec<Part> {
    [1.0, 2.0]
        .iter()
        .map(|&k| {
            let r = clt(shared, k, Mode::Plain, None);
            let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            part(&format!("k={k}"), failed.is_empty(), format!("{}, failing {failed:?}", ks_trend(&r)))
        })
        .collect()
}

fn modified_clt(shared: &ChernoffEstimates) -> Vec<Part> {
    let r = clt(shared, 3.0, Mode::Modified, Some(1.0 / 3.0));
    let mut parts = report_parts("", &r);
    parts[0].detail = format!("{}; {}", ks_trend(&r), parts[0].detail);
    parts
}

fn moment_profile_check(shared: &ChernoffEstimates) -> Vec<Part> {
    let d = MonotoneDensity::new(LINEAR).unwrap();
    let spec = LocalizedArgmaxSpec::new(d, 1.0, 100_000, ProcessKind::W);
    let grid = [0.9, 1.0, 1.1, 1.2, 1.3];
    let points = moment_profile(&spec, 1.0, &grid, 5000, shared.abs_moment(1.0).unwrap()).unwrap();
    let ok = points.len() == grid.len() && points.iter().all(|p| (p.ratio - 1.0).abs() <= 3.0 * p.ratio_se);
    let ratios: Vec<String> = points.iter().map(|p| format!("{:.3}+-{:.3}", p.ratio, p.ratio_se)).collect();
    vec![part("ratios", ok, ratios.join(", "))]
}

fn boundary_zero() -> Vec<Part> {
    let cfg = ExperimentConfig::new(TRUNCEXP, 1.0, vec![10_000], 10_000, Mode::BoundaryZero);
    let r = harness::run_boundary_zero(&cfg).unwrap();
    report_parts("", &r)
}

fn divergence() -> Vec<Part> {
    let mut parts = Vec::new();
    for (p, k) in [
        (DivergencePart::Mean, 4.0),
        (DivergencePart::NearZeroVariance, 3.0),
        (DivergencePart::Control, 2.0),
    ] {
        let mut cfg = ExperimentConfig::new(LINEAR, k, N_GRID.to_vec(), 1000, Mode::Divergence);
        cfg.divergence = Some(p);
        parts.extend(report_parts(&format!("k={k} "), &harness::run_divergence(&cfg).unwrap()));
    }
    for p in &mut parts {
        if p.name.ends_with("control_settles") {
            p.name = "control_settles".into();
        }
    }
    parts
}

fn tail_shape() -> Vec<Part> {
    let d = MonotoneDensity::new(LINEAR).unwrap();
    let spec = LocalizedArgmaxSpec::new(d, 1.0, 10_000, ProcessKind::W);
    let values: Vec<f64> = sample_vn(&spec, 10_000).unwrap().iter().map(|s| s.v).collect();
    let fit = tail_fit(&values, 1.0, 2.5, 7).unwrap();
    vec![part(
        "fit",
        fit.slope < 0.0 && fit.r_squared > 0.9,
        format!("slope {:.3}, R^2 {:.4}", fit.slope, fit.r_squared),
    )]
}

fn closed_forms() -> Vec<Part> {
    let mut worst: f64 = 0.0;
    let lin = MonotoneDensity::new(LINEAR).unwrap();
    let four = 4f64.powf(1.0) * lin.integral(1.0, 1.0).unwrap();
    worst = worst.max((four - 4.0).abs() / 4.0);
    for (p, q) in [(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (5.0 / 3.0, 1.0 / 3.0), (7.0 / 3.0, 2.0 / 3.0)] {
        // f = 1.5 - x, |f'| = 1.
        let exact = (1.5f64.powf(p + 1.0) - 0.5f64.powf(p + 1.0)) / (p + 1.0);
        worst = worst.max((lin.integral(p, q).unwrap() - exact).abs() / exact);

        // f = c e^{-x}, c = 1 / (1 - e^{-1}), |f'| = f.
        let te = MonotoneDensity::new(TRUNCEXP).unwrap();
        let r = p + q;
        let c = 1.0 / (1.0 - (-1f64).exp());
        let exact = if r == 0.0 { 1.0 } else { c.powf(r) * (1.0 - (-r).exp()) / r };
        worst = worst.max((te.integral(p, q).unwrap() - exact).abs() / exact);
    }
    vec![part(
        "closed_forms",
        worst <= 1e-10,
        format!("int (4 f |f'|) = {four:.12}, max relative gap {worst:.2e}"),
    )]
}

fn main() {
    let start = Instant::now();
    let mut shared: Option<ChernoffEstimates> = None;
    let mut chernoff = || -> ChernoffEstimates {
        shared
            .get_or_insert_with(|| {
                let cfg = ArgmaxConfig::default();
                estimate_chernoff(&[1.0, 2.0, 3.0], &default_c_grid(), &cfg).unwrap()
            })
            .clone()
    };

    let only: Option<Vec<u32>> = std::env::var("GRENLAB_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut unexpected = 0;
    for id in (1..=11).filter(|id| only.as_ref().is_none_or(|o| o.contains(id))) {
        let t = Instant::now();
        let parts = match id {
            1 => hull_oracle(),
            2 => switch_relation(),
            3 => identity(),
            4 => chernoff_lab(&chernoff()),
            5 => clt_trend(&chernoff()),
            6 => modified_clt(&chernoff()),
            7 => moment_profile_check(&chernoff()),
            8 => boundary_zero(),
            9 => divergence(),
            10 => tail_shape(),
            _ => closed_forms(),
        };
        let passed = parts.iter().all(|p| p.passed);
        let mut notes = Vec::new();
        for p in &parts {
            let known = KNOWN.contains(&format!("{id}:{}", p.name).as_str());
            if !p.passed && !known {
                unexpected += 1;
            }
            let tag = match (p.passed, known) {
                (true, _) => "ok",
                (false, true) => "FAIL, known",
                (false, false) => "FAIL",
            };
            notes.push(format!("{} {tag}: {}", p.name, p.detail));
        }
        println!(
            "criterion {id:>2}: {} ({:.0}s) [{}]",
            if passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            notes.join("; ")
        );
    }
    println!("acceptance finished in {:.0}s", start.elapsed().as_secs_f64());
    if unexpected > 0 {
        eprintln!("{unexpected} unexpected failing check(s)");
        std::process::exit(1);
    }
}
