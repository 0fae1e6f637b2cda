use couette_lab::harness::{
    fit_exp_rate, fit_power_decay, loglog_slope, threshold_scan, BisectionSpec, Verdict,
};
use proptest::prelude::*;

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn power_fit_is_exact(p in -3.0f64..1.0, c in 1e-6f64..1e6) {
        let s: Vec<(f64, f64)> = geometric(1.0, 1e3, 60).into_iter().map(|t| (t, c * t.powf(p))).collect();
        let f = fit_power_decay(&s, (10.0, 1e3)).unwrap();
        prop_assert!((f.value - p).abs() < 1e-10, "{} vs {p}", f.value);
        prop_assert!(f.residual < 1e-10);
    }

    #[test]
    fn exp_fit_divides_out_the_prefactor(r in 1e-3f64..1.0, b in -2.0f64..2.0) {
        let s: Vec<(f64, f64)> = (1..200).map(|i| {
            let t = i as f64 * 0.1;
            (t, t.powf(b) * (-r * t).exp())
        }).collect();
        let f = fit_exp_rate(&s, (1.0, 19.0)).unwrap();
        prop_assert!((f.value - r).abs() < 1e-9 * r.max(1e-2), "{} vs {r}", f.value);
    }

    #[test]
    fn loglog_slope_is_exact(alpha in -1.0f64..1.0) {
        let pts: Vec<(f64, f64)> = geometric(1e-6, 1e-2, 5).into_iter().map(|k| (k, 3.0 * k.powf(alpha))).collect();
        let f = loglog_slope(&pts).unwrap();
        prop_assert!((f.value - alpha).abs() < 1e-10);
        prop_assert!(f.half_width < 1e-8);
    }

    /// A sharp stability boundary at `a* = c κ^α`: bisection must recover α to the
    /// resolution of its bracket and report monotone verdicts.
    #[test]
    fn synthetic_threshold_recovers_exponent(alpha in 0.1f64..0.6, c in 1.0f64..3.0) {
        let kappas = geometric(1e-6, 1e-3, 4);
        let spec = BisectionSpec { lo: 0.5, hi: 10.0, depth: 14, scaling: alpha };
        let rep = threshold_scan(&kappas, &spec, |k, a| Ok(a <= c * k.powf(alpha))).unwrap();
        for p in &rep.points {
            prop_assert_eq!(p.verdict, Verdict::Resolved);
            prop_assert!(p.monotone_in_amplitude);
            let a = p.a_star.unwrap();
            prop_assert!((a / (c * p.kappa.powf(alpha))).ln().abs() < 1e-3);
        }
        prop_assert!(rep.monotone_in_kappa);
        prop_assert!((rep.slope.unwrap().value - alpha).abs() < 1e-3);
    }
}

#[test]
fn censored_thresholds_are_flagged() {
    let spec = BisectionSpec { lo: 2.0, hi: 200.0, depth: 6, scaling: 0.0 };
    let rep = threshold_scan(&[1e-4, 1e-3], &spec, |k, a| Ok(k > 5e-4 || a < 1.0)).unwrap();
    assert_eq!(rep.points[0].verdict, Verdict::CensoredUnstable);
    assert_eq!(rep.points[0].a_star, None);
    assert_eq!(rep.points[1].verdict, Verdict::CensoredStable);
    assert_eq!(rep.points[1].a_star, Some(200.0));
    assert!(rep.slope.is_none());
}
