//! Commutator bounds for `A_k` (short times) and `ℳ` (long times). Everything is
//! evaluated in log space and divided through by the triple weight product first.

use super::kernels::{in_pair_region, pair_kinds};
use super::{ratio, run_check, Draw, Eval, Kind, RatioReport, Refiner, SamplePoint, SampleSpec};
use crate::error::{Error, Result};
use crate::multipliers::WeightBundle;
use crate::scalar::{bracket, bracket2, pair_norm};

/// Case of the `A_k` bounds: 0 when `⟨k−l, ξ−η⟩ ≥ (⟨k,ξ⟩+⟨l,η⟩)/4`.
pub fn ak_case(k: i64, xi: f64, l: i64, eta: f64) -> usize {
    let (kf, lf) = (k as f64, l as f64);
    if bracket2(kf - lf, xi - eta) >= 0.25 * (bracket2(kf, xi) + bracket2(lf, eta)) {
        0
    } else {
        1
    }
}

fn draw_ak_pair(d: &mut Draw, case: usize) -> Result<(f64, i64, f64, i64, f64)> {
    for _ in 0..10_000 {
        let t = d.time();
        let k = d.wavenumber();
        let xi = d.freq();
        let (l, eta) = if case == 0 {
            (d.wavenumber(), d.freq())
        } else {
            let r = bracket2(k as f64, xi) / 8.0;
            let dk_max = r.floor().min(d.spec.k_max as f64) as i64;
            let dk = if dk_max > 0 { d.pick(&[-2, -1, 0, 1, 2]).clamp(-dk_max, dk_max) } else { 0 };
            (k + dk, xi + d.uniform(-1.0, 1.0) * r)
        };
        if ak_case(k, xi, l, eta) == case {
            return Ok((t, k, xi, l, eta));
        }
    }
    Err(Error::param("ak_commutators", "stratified sampler failed to hit its case"))
}

/// Both `A_k` displays: the transport commutator and the pressure weight.
pub fn check_ak_commutators(spec: &SampleSpec) -> Result<Vec<RatioReport>> {
    let w = spec.bundle_at(spec.kappas[0])?;
    let s12 = 0.5 - spec.physical.s;
    let point = |t: f64, kf: f64, xi: f64, lf: f64, eta: f64| {
        let (k, l) = (kf as i64, lf as i64);
        let (x, y) = (xi - kf * t, eta - lf * t);
        let la = w.log_a_k(t, k, xi);
        let lb = w.log_a_k(t, l, eta);
        let lc = w.log_a_k(t, k - l, xi - eta);
        let rk = (la - lb - lc).exp();
        let rl = (lb - la - lc).exp();
        let tb = bracket(t);
        let bk = bracket2(kf, xi).powf(s12);
        let bl = bracket2(lf, eta).powf(s12);
        let bd = bracket2(kf - lf, xi - eta).powf(s12);
        let bs = bracket2(kf - lf, xi - eta - (kf - lf) * t).powf(s12);

        let lhs1 = (lf * rk - kf * rl).abs() + (y * rk - x * rl).abs();
        let rhs1 = tb * (bk + bl + bd + bs);
        let dkl = (kf - lf).abs();
        let mut lhs2 = 0.0;
        if k != 0 && k != l {
            lhs2 += bracket2(lf, y) * rk * kf.abs() * dkl / (kf * kf + x * x);
        }
        if l != 0 && k != l {
            lhs2 += bracket2(kf, x) * rl * lf.abs() * dkl / (lf * lf + y * y);
        }
        let rhs2 = tb * (bk + bl + bd);
        Eval {
            ratios: vec![ratio(lhs1, rhs1), ratio(lhs2, rhs2)],
            stratum: Some(ak_case(k, xi, l, eta)),
            point: SamplePoint(vec![("t", t), ("k", kf), ("xi", xi), ("l", lf), ("eta", eta)]),
        }
    };
    let eval = |p: &[f64]| -> Result<Option<Eval>> {
        Ok(in_pair_region(spec, p).then(|| point(p[0], p[1], p[2], p[3], p[4])))
    };
    let refiner = Refiner {
        kinds: pair_kinds(),
        eval: &eval,
    };
    run_check(spec, &["ak_commutator", "ak_pressure"], Vec::new(), Some(refiner), |d: &mut Draw| {
        let case = d.index % 2;
        let (t, k, xi, l, eta) = draw_ak_pair(d, case)?;
        Ok(point(t, k as f64, xi, l as f64, eta))
    })
}

/// Case of the `ℳ` bounds: 0 when `⟨k−l, ξ−η−(k−l)t⟩ + ⟨k−l, ξ−η⟩ ≥ (|k|+|l|)/10`.
pub fn m_case(t: f64, k: i64, xi: f64, l: i64, eta: f64) -> usize {
    let d = (k - l) as f64;
    let v = xi - eta;
    if bracket2(d, v - d * t) + bracket2(d, v) >= 0.1 * (k.abs() + l.abs()) as f64 {
        0
    } else {
        1
    }
}

fn draw_m_pair(d: &mut Draw, t0: f64, case: usize) -> Result<(f64, i64, f64, i64, f64)> {
    let (_, t_hi) = d.spec.t_range;
    let km = d.spec.k_max;
    for _ in 0..100_000 {
        let (t, k, xi, l, eta) = if case == 0 {
            let t = d.time_in(t0, t_hi.max(2.0 * t0));
            let k = d.wavenumber();
            let mut l = d.wavenumber();
            if l == k {
                l = k + 1;
            }
            (t, k, d.freq(), l, d.freq())
        } else {
            // |k| ≈ |l| large, k−l = ±1, ξ−η near the midpoint of 0 and (k−l)t
            let t = t0 * (1.0 + 0.5 * d.unit());
            let sign = if d.coin(0.5) { 1 } else { -1 };
            let k = sign * d.uniform((km / 3) as f64, km as f64).round() as i64;
            let dk = d.pick(&[-1i64, 1]);
            let l = k - dk;
            let xi = d.freq();
            let v = dk as f64 * t * (0.5 + 0.2 * d.uniform(-1.0, 1.0));
            (t, k, xi, l, xi - v)
        };
        if k != l && m_case(t, k, xi, l, eta) == case {
            return Ok((t, k, xi, l, eta));
        }
    }
    Err(Error::param("m_commutators", "stratified sampler failed to hit its case"))
}

/// The three long-time commutator displays, with `t ≥ κ^{−1/6}` and `k ≠ l`.
pub fn check_m_commutators(spec: &SampleSpec) -> Result<Vec<RatioReport>> {
    let bundles: Vec<(f64, WeightBundle<f64>)> = spec
        .kappas
        .iter()
        .map(|&kp| Ok((kp, spec.bundle_at(kp)?)))
        .collect::<Result<_>>()?;
    let s = spec.physical.s;
    let delta = spec.physical.delta;
    let eps = spec.physical.eps_small();
    // p = (κ index, κ, t, k, ξ, l, η)
    let point = |p: &[f64]| -> Result<Eval> {
        let (w, kappa) = (&bundles[p[0] as usize].1, p[1]);
        let (t, kf, xi, lf, eta) = (p[2], p[3], p[4], p[5], p[6]);
        let (k, l) = (kf as i64, lf as i64);
        let (x, y) = (xi - kf * t, eta - lf * t);
        let lk = w.log_big_m(t, k, xi)?;
        let ll = w.log_big_m(t, l, eta)?;
        let ld = w.log_big_m(t, k - l, xi - eta)?;
        let rk = (lk - ll - ld).exp();
        let rl = (ll - lk - ld).exp();
        let s12 = 0.5 - s;
        let brackets = bracket2(kf, xi).powf(s12) + bracket2(lf, eta).powf(s12) + bracket2(kf - lf, xi - eta).powf(s12);
        let c13 = |v: f64| v.abs().cbrt();
        let dkl = kf - lf;
        let growth = brackets
            * (c13(kf) * c13(dkl) + c13(lf) * c13(dkl) + c13(kf * lf) + kappa.powf(2.0 / 3.0) * (kf * lf).abs());
        let r1 = ratio((lf * rk - kf * rl).abs(), growth);

        let k16 = kappa.powf(1.0 / 6.0);
        let k13 = kappa.cbrt();
        let shear = pair_norm(dkl, xi - eta - dkl * t);
        let pair_term = (eps * k13 * t).exp() * (pair_norm(lf, y) + pair_norm(kf, x)) * (-ld).exp();
        let side = |b_norm: f64, br: f64| {
            (k16 * b_norm + (c13(lf) + c13(kf)) / k16) * br.powf(-s)
                + br.powf(-0.5 * (1.0 + delta)) / (k13 * shear.sqrt())
        };
        let rhs2 = pair_term + side(pair_norm(lf, y), bracket2(lf, eta));
        let rhs3 = pair_term + side(pair_norm(kf, x), bracket2(kf, xi));
        Ok(Eval {
            ratios: vec![r1, ratio(y.abs() * rk, rhs2), ratio(x.abs() * rl, rhs3)],
            stratum: Some(m_case(t, k, xi, l, eta)),
            point: SamplePoint(vec![
                ("kappa_index", p[0]),
                ("kappa", kappa),
                ("t", t),
                ("k", kf),
                ("xi", xi),
                ("l", lf),
                ("eta", eta),
            ]),
        })
    };
    let (_, t_hi) = spec.t_range;
    let eval = |p: &[f64]| -> Result<Option<Eval>> {
        let t0 = p[1].powf(-1.0 / 6.0);
        let ok = p[2] >= t0 && p[2] <= t_hi.max(2.0 * t0) && p[3] != p[5] && in_pair_region(spec, &[0.0, p[3], p[4], p[5], p[6]]);
        if ok {
            point(p).map(Some)
        } else {
            Ok(None)
        }
    };
    let mut kinds = vec![Kind::Fixed, Kind::Fixed];
    kinds.extend(pair_kinds());
    let refiner = Refiner { kinds, eval: &eval };
    let names = ["m_commutator", "m_shear_l", "m_shear_k"];
    run_check(spec, &names, Vec::new(), Some(refiner), |d: &mut Draw| {
        let ki = d.below(bundles.len());
        let kappa = bundles[ki].0;
        let t0 = kappa.powf(-1.0 / 6.0);
        let case = d.index % 2;
        let (t, k, xi, l, eta) = draw_m_pair(d, t0, case)?;
        point(&[ki as f64, kappa, t, k as f64, xi, l as f64, eta])
    })
}
