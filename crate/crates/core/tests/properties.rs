mod common;

use proptest::prelude::*;

use grenlab::brownian::ParabolaArgmax;
use grenlab::constants::constants_from_parts;
use grenlab::chernoff::Estimate;
use grenlab::harness::{replication_fit, ExperimentConfig, Mode};
use grenlab::inverse_process::ScalingFunctions;
use grenlab::{fit_lcm, DensityFamily, EmpiricalCdf, GrenanderEstimate, MonotoneDensity};

/// Continuous samples, and samples on a coarse grid that produce ties and
/// collinear candidates.
fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(0.0f64..=1.0, 1..80),
        prop::collection::vec((0u32..=16).prop_map(|i| i as f64 / 16.0), 1..80),
    ]
}

fn family() -> impl Strategy<Value = DensityFamily> {
    prop_oneof![
        (1.01f64..1.99).prop_map(|f0| DensityFamily::Linear { f0, f1: 2.0 - f0 }),
        (0.05f64..6.0).prop_map(|theta| DensityFamily::TruncExp { theta }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn hull_matches_brute_force(xs in sample()) {
        let e = EmpiricalCdf::new(xs).unwrap();
        prop_assert_eq!(fit_lcm(&e).vertices(), common::brute_force_hull(&e));
    }

    #[test]
    fn estimate_mass_and_monotonicity(xs in sample()) {
        let at_zero = xs.iter().filter(|&&x| x == 0.0).count() as f64 / xs.len() as f64;
        let e = EmpiricalCdf::new(xs).unwrap();
        let g = fit_lcm(&e).estimate();
        let mass = 1.0 - at_zero;
        prop_assert!((g.mass() - mass).abs() < 1e-12, "mass {} vs {}", g.mass(), mass);
        let mut prev = f64::INFINITY;
        for i in 0..=200 {
            let v = g.eval(i as f64 / 200.0).unwrap();
            prop_assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn switch_relation(xs in sample(), levels in prop::collection::vec(0.01f64..20.0, 1..20)) {
        let e = EmpiricalCdf::new(xs).unwrap();
        let g = fit_lcm(&e).estimate();
        // The estimate's own values are the levels where ties happen.
        for a in levels.into_iter().chain(g.values.iter().copied().filter(|v| *v > 0.0)) {
            prop_assert!(common::switch_holds(&e, &g, a), "a = {}", a);
        }
    }

    #[test]
    fn inverse_matches_enumeration(xs in sample(), a in 0.01f64..20.0) {
        let e = EmpiricalCdf::new(xs).unwrap();
        prop_assert_eq!(e.inverse_un(a), common::enumerate_argmax(&e, a));
    }

    #[test]
    fn parabola_hull_matches_scan(
        ys in prop::collection::vec(-3.0f64..3.0, 2..200),
        c in -2.0f64..2.0,
    ) {
        let t: Vec<f64> = (0..ys.len()).map(|i| -1.0 + i as f64 / 64.0).collect();
        let y: Vec<f64> = t.iter().zip(&ys).map(|(t, w)| w - t * t).collect();
        let score = |i: usize| y[i] + 2.0 * c * t[i];
        let best = (0..t.len()).map(score).fold(f64::NEG_INFINITY, f64::max);
        let i = ParabolaArgmax::new(&t, &y).query(c);
        prop_assert!(score(i) >= best - 1e-12, "{} < {}", score(i), best);
    }

    #[test]
    fn scaling_functions_multiply_to_slope(fam in family(), u in 0.01f64..0.99) {
        let d = MonotoneDensity::new(fam).unwrap();
        let a = d.f1() + u * (d.f0() - d.f1());
        let s = ScalingFunctions::at(&d, a).unwrap();
        let slope = d.deriv(d.inverse(a)).abs();
        prop_assert!((s.phi1 * s.phi2 - slope).abs() < 1e-12 * slope.max(1.0));
    }

    #[test]
    fn json_round_trips(fam in family(), xs in sample(), k in 1.0f64..2.4, m in 0.1f64..1.0, kap in 0.001f64..0.1) {
        let d = MonotoneDensity::new(fam).unwrap();
        let back: DensityFamily = serde_json::from_str(&serde_json::to_string(&fam).unwrap()).unwrap();
        prop_assert_eq!(back, fam);

        let g = fit_lcm(&EmpiricalCdf::new(xs).unwrap()).estimate();
        let back: GrenanderEstimate = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);

        let c = constants_from_parts(&d, k, Estimate { value: m, se: m / 100.0 }, Estimate { value: kap, se: 0.0 }).unwrap();
        let mut cfg = ExperimentConfig::new(fam, k, vec![10, 100], 3, Mode::Plain);
        cfg.constants = Some(c);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn replications_are_bitwise_reproducible(fam in family(), seed in any::<u64>(), index in 0u64..1000) {
        let d = MonotoneDensity::new(fam).unwrap();
        let a = replication_fit(&d, 300, seed, index).unwrap();
        let b = replication_fit(&d, 300, seed, index).unwrap();
        prop_assert_eq!(a.breaks.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.breaks.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}
