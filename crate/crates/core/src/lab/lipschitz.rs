//! Component-wise Lipschitz bounds for the long-time phases `ℳ₁, ℳ₂, ℳ₃` and their sum.

use super::kernels::{in_pair_region, pair_kinds};
use super::{ratio, run_check, Draw, Eval, Kind, RatioReport, Refiner, SamplePoint, SampleSpec};
use crate::error::{Error, Result};
use crate::multipliers::WeightBundle;
use crate::scalar::{bracket, pair_norm};

const MIN_SEPARATION: f64 = 1e-6;

/// `⟨k−l⟩ ≤ (|k|+|l|)/20`, which forces `k` and `l` to share a sign and be comparable.
pub fn lipschitz_hypothesis(k: i64, l: i64) -> bool {
    20.0 * bracket((k - l) as f64) <= (k.abs() + l.abs()) as f64
}

fn draw_pair(d: &mut Draw) -> Result<(i64, i64)> {
    let km = d.spec.k_max;
    if km < 10 {
        return Err(Error::param("k_max", "the Lipschitz hypothesis needs k_max >= 10"));
    }
    for _ in 0..10_000 {
        let sign = if d.coin(0.5) { 1 } else { -1 };
        let k = sign * d.uniform(10.0, km as f64).round() as i64;
        let span = (2 * k.abs() / 20).max(1);
        let l = k + d.uniform(-(span as f64), span as f64).round() as i64;
        if lipschitz_hypothesis(k, l) {
            return Ok((k, l));
        }
    }
    Err(Error::param("m_lipschitz", "sampler failed to satisfy the hypothesis"))
}

/// Four reports: `ℳ₁`, `ℳ₂`, `ℳ₃` and `ℳ₀ = ℳ₁+ℳ₂+ℳ₃`, over every κ in the spec.
pub fn check_m_lipschitz(spec: &SampleSpec) -> Result<Vec<RatioReport>> {
    let bundles: Vec<(f64, WeightBundle<f64>)> = spec
        .kappas
        .iter()
        .map(|&kp| Ok((kp, spec.bundle_at(kp)?)))
        .collect::<Result<_>>()?;
    let names = ["m1_lipschitz", "m2_lipschitz", "m3_lipschitz", "m0_lipschitz"];
    // p = (κ index, κ, t, k, ξ, l, η)
    let point = |p: &[f64]| {
        let (w, kappa) = (&bundles[p[0] as usize].1, p[1]);
        let (t, kf, xi, lf, eta) = (p[2], p[3], p[4], p[5], p[6]);
        let parts = |k: i64, x: f64| {
            let (m3, _) = w.m3_upsilon(t, k, x);
            [w.m1(t, k, x), w.m2(t, k, x), m3]
        };
        let (a, b) = (parts(kf as i64, xi), parts(lf as i64, eta));
        let diff = |i: usize| (a[i] - b[i]).abs();
        let d0 = (a.iter().sum::<f64>() - b.iter().sum::<f64>()).abs();
        let dk = kf - lf;
        let sheared = pair_norm(dk, xi - eta - dk * t);
        let plain = pair_norm(dk, xi - eta);
        let f1 = (kappa / kf.abs()).cbrt() + 1.0 / kf.abs();
        Eval {
            ratios: vec![
                ratio(diff(0), f1 * sheared),
                ratio(diff(1) * kf.abs(), sheared),
                ratio(diff(2) * kf.abs(), plain),
                ratio(d0, f1 * (sheared + plain)),
            ],
            stratum: None,
            point: SamplePoint(vec![
                ("kappa_index", p[0]),
                ("kappa", kappa),
                ("t", t),
                ("k", kf),
                ("xi", xi),
                ("l", lf),
                ("eta", eta),
            ]),
        }
    };
    let eval = |p: &[f64]| -> Result<Option<Eval>> {
        // coincident points only measure round-off
        let apart = p[3] != p[5] || (p[4] - p[6]).abs() >= MIN_SEPARATION * p[4].abs().max(1.0);
        let ok = apart && lipschitz_hypothesis(p[3] as i64, p[5] as i64) && in_pair_region(spec, &p[2..]);
        Ok(ok.then(|| point(p)))
    };
    let mut kinds = vec![Kind::Fixed, Kind::Fixed];
    kinds.extend(pair_kinds());
    let refiner = Refiner { kinds, eval: &eval };
    run_check(spec, &names, Vec::new(), Some(refiner), |d: &mut Draw| {
        let ki = d.below(bundles.len());
        let kappa = bundles[ki].0;
        let t = d.time();
        let (k, l) = draw_pair(d)?;
        let (kf, lf) = (k as f64, l as f64);
        let xi = d.freq();
        let eta = match d.below(3) {
            0 => d.freq(),
            // small sheared difference
            1 => xi - (kf - lf) * t + d.uniform(-1.0, 1.0),
            // small plain difference
            _ => xi + d.uniform(-1.0, 1.0),
        };
        Ok(point(&[ki as f64, kappa, t, kf, xi, lf, eta]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypothesis_guard() {
        assert!(lipschitz_hypothesis(20, 20));
        assert!(!lipschitz_hypothesis(9, 9));
        assert!(!lipschitz_hypothesis(20, -20));
        assert!(lipschitz_hypothesis(-40, -41));
    }
}
