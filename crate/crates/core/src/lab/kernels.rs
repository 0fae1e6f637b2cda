//! One- and two-point kernel bounds: the Poisson-type integral, the damping weights and
//! the short-time phase `M₀`.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{ratio, run_check, Draw, Eval, Kind, RatioReport, Refiner, SamplePoint, SampleSpec};
use crate::error::{Error, Result};
use crate::quad::gauss_kronrod;
use crate::scalar::{bracket, bracket2, pair_norm};

/// Relative tolerance of every line integral in this module.
pub const QUAD_TOL: f64 = 1e-9;

/// Number of positive `k` kept in the damping `L¹` weight sum.
const L1_TERMS: i64 = 16;

/// `∫_ℝ f` for an integrand peaked near `centers` with widths up to `width`. The finite
/// core is split at the centers, the two tails are mapped onto `(0, 1]` by `η = c/u`.
fn line_integral<F: Fn(f64) -> f64>(f: F, centers: &[f64], width: f64, rel_tol: f64) -> Result<f64> {
    let lo = centers.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 8.0 * width + 1.0;
    let left = lo.min(0.0) - pad;
    let right = hi.max(0.0) + pad;
    let mut pts: Vec<f64> = centers.to_vec();
    pts.extend([left, right, 0.5 * (lo + hi)]);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += gauss_kronrod(&f, w[0], w[1], 0.0, rel_tol)?;
    }
    let tail = |c: f64| gauss_kronrod(|u: f64| f(c / u) * c.abs() / (u * u), 0.0, 1.0, 0.0, rel_tol);
    total += tail(right)? + tail(left)?;
    Ok(total)
}

/// `∫ dη / (|a,η|^{1+λ} |b,z−η|^{1+λ})`.
pub fn poisson_lhs(a: f64, b: f64, z: f64, lambda: f64, rel_tol: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && lambda > 0.0) {
        return Err(Error::param("poisson", format!("need a, b, lambda > 0; got {a}, {b}, {lambda}")));
    }
    let p = -0.5 * (1.0 + lambda);
    let f = |e: f64| ((a * a + e * e) * (b * b + (z - e) * (z - e))).powf(p);
    line_integral(f, &[0.0, z], a.max(b), rel_tol)
}

/// `LHS · |ab|^λ |a+b,z|^{1+λ} / |a+b|^λ`.
pub fn poisson_ratio(a: f64, b: f64, z: f64, lambda: f64, rel_tol: f64) -> Result<f64> {
    let lhs = poisson_lhs(a, b, z, lambda, rel_tol)?;
    Ok(lhs * (a * b).powf(lambda) * pair_norm(a + b, z).powf(1.0 + lambda) / (a + b).powf(lambda))
}

fn poisson_eval(a: f64, b: f64, z: f64, lambda: f64) -> Result<Eval> {
    Ok(Eval {
        ratios: vec![poisson_ratio(a, b, z, lambda, QUAD_TOL)?],
        stratum: None,
        point: SamplePoint(vec![("a", a), ("b", b), ("z", z), ("lambda", lambda)]),
    })
}

/// Poisson-type convolution bound, with `(a, b, z, λ) = (1, 1, 0, 1)` as the first sample.
pub fn check_poisson_bound(spec: &SampleSpec) -> Result<RatioReport> {
    let forced = vec![poisson_eval(1.0, 1.0, 0.0, 1.0)?];
    let amax = spec.k_max as f64;
    let eval = |p: &[f64]| -> Result<Option<Eval>> {
        let inside = |v: f64| (1e-2..=amax).contains(&v);
        if !(inside(p[0]) && inside(p[1]) && p[2].abs() <= spec.freq_max) {
            return Ok(None);
        }
        poisson_eval(p[0], p[1], p[2], p[3]).map(Some)
    };
    let refiner = Refiner {
        kinds: vec![Kind::Real, Kind::Real, Kind::Real, Kind::Fixed],
        eval: &eval,
    };
    let mut r = run_check(spec, &["poisson"], forced, Some(refiner), |d: &mut Draw| {
        let a = d.log_uniform(1e-2, amax * d.scale);
        let b = d.log_uniform(1e-2, amax * d.scale);
        let z = d.freq();
        let lambda = d.pick(&spec.lambdas);
        poisson_eval(a, b, z, lambda)
    })?;
    Ok(r.remove(0))
}

/// `Σ_{k≠0} ∫ k² dξ / ((k²+ξ²)^s (k²+(ξ−kt)²)^{3/2})`, truncated at `|k| ≤ 16`.
pub fn l1_weight_sum(t: f64, s: f64, rel_tol: f64) -> Result<f64> {
    let mut acc = 0.0;
    for k in 1..=L1_TERMS {
        let kf = k as f64;
        let f = |x: f64| {
            let y = x - kf * t;
            kf * kf * (kf * kf + x * x).powf(-s) * (kf * kf + y * y).powf(-1.5)
        };
        acc += line_integral(f, &[0.0, kf * t], kf, rel_tol)?;
    }
    Ok(2.0 * acc)
}

/// Exact check of `(1+k²+ξ²)(1+k²+(ξ−kt)²) ≥ 1+t²` with `ξ`, `t` read as exact rationals.
pub fn damping_weight_exact(k: i64, xi: f64, t: f64) -> Result<bool> {
    let q = |v: f64| BigRational::from_float(v).ok_or_else(|| Error::param("exact", format!("{v} is not finite")));
    let (x, t) = (q(xi)?, q(t)?);
    let k = BigRational::from_integer(k.into());
    let one = BigRational::one();
    let y = &x - &k * &t;
    let lhs = (&one + &k * &k + &x * &x) * (&one + &k * &k + &y * &y);
    let rhs = &one + &t * &t;
    Ok(k.is_zero() || lhs >= rhs)
}

/// Per-mode damping weights: velocity, buoyancy and the `L¹` weight, summed. A failed
/// exact check turns the ratio infinite.
pub fn check_damping_weights(spec: &SampleSpec) -> Result<RatioReport> {
    let s = spec.physical.s;
    let point = |t: f64, kf: f64, xi: f64| -> Result<Eval> {
        let y = xi - kf * t;
        let tb = bracket(t);
        let bk = bracket2(kf, xi).powf(s);
        let bx = bracket2(kf, y).sqrt();
        let vel = tb.sqrt() * (y.abs() + tb * kf.abs()) / (pair_norm(kf, y) * bk * bx);
        let theta = tb.sqrt() / (bk * bx);
        let l1 = tb.powf(1.5) * l1_weight_sum(t, s, QUAD_TOL)?.sqrt();
        let total = if damping_weight_exact(kf as i64, xi, t)? { vel + theta + l1 } else { f64::INFINITY };
        Ok(Eval {
            ratios: vec![total],
            stratum: None,
            point: SamplePoint(vec![("t", t), ("k", kf), ("xi", xi)]),
        })
    };
    let (lo, hi) = spec.t_range;
    let eval = |p: &[f64]| -> Result<Option<Eval>> {
        let ok = (lo..=hi).contains(&p[0]) && p[1] != 0.0 && p[1].abs() <= spec.k_max as f64 && p[2].abs() <= spec.freq_max;
        if ok {
            point(p[0], p[1], p[2]).map(Some)
        } else {
            Ok(None)
        }
    };
    let refiner = Refiner {
        kinds: vec![Kind::Real, Kind::Int, Kind::Real],
        eval: &eval,
    };
    let mut r = run_check(spec, &["damping"], Vec::new(), Some(refiner), |d: &mut Draw| {
        let k = d.nonzero_wavenumber();
        let xi = d.freq();
        let t = d.time();
        point(t, k as f64, xi)
    })?;
    Ok(r.remove(0))
}

/// `M₀ = C_γ(arctan(ξ/k − t) − arctan(ξ/k))` for real `k`, zero at `k = 0`.
pub fn m0_closed_form(c_gamma: f64, t: f64, k: f64, xi: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let r = xi / k;
    c_gamma * ((r - t).atan() - r.atan())
}

/// `(∂_k M₀, ∂_ξ M₀)`.
pub fn m0_gradient(c_gamma: f64, t: f64, k: f64, xi: f64) -> (f64, f64) {
    let y = xi - k * t;
    let a = k * k + xi * xi;
    let b = k * k + y * y;
    (c_gamma * (xi / a - xi / b), c_gamma * (k / b - k / a))
}

/// Gradient of the short-time phase against `⟨t⟩/|k, ξ−kt|`, over real `k`.
pub fn check_m0_gradient(spec: &SampleSpec) -> Result<RatioReport> {
    let cg = spec.physical.c_gamma();
    let km = spec.k_max as f64;
    let point = |t: f64, k: f64, xi: f64| {
        let (gk, gx) = m0_gradient(cg, t, k, xi);
        Eval {
            ratios: vec![ratio(pair_norm(gk, gx) * pair_norm(k, xi - k * t), bracket(t))],
            stratum: None,
            point: SamplePoint(vec![("t", t), ("k", k), ("xi", xi)]),
        }
    };
    let (lo, hi) = spec.t_range;
    let eval = |p: &[f64]| -> Result<Option<Eval>> {
        let ok = (lo..=hi).contains(&p[0]) && p[1].abs() <= km && p[2].abs() <= spec.freq_max && (p[1], p[2]) != (0.0, 0.0);
        Ok(ok.then(|| point(p[0], p[1], p[2])))
    };
    let refiner = Refiner {
        kinds: vec![Kind::Real; 3],
        eval: &eval,
    };
    let mut r = run_check(spec, &["m0_gradient"], Vec::new(), Some(refiner), |d: &mut Draw| {
        let t = d.time();
        let u = d.unit();
        let (k, xi) = if u < 0.1 {
            let mut xi = d.freq();
            if xi == 0.0 {
                xi = 1.0;
            }
            (0.0, xi)
        } else if u < 0.3 {
            (d.uniform(-km, km), d.freq())
        } else {
            (d.nonzero_wavenumber() as f64, d.freq())
        };
        Ok(point(t, k, xi))
    })?;
    Ok(r.remove(0))
}

/// Case of the difference bound: 0 when the sheared difference is large.
pub fn m0_difference_case(t: f64, k: i64, xi: f64, l: i64, eta: f64) -> usize {
    let (kf, lf) = (k as f64, l as f64);
    let d = pair_norm(kf - lf, xi - eta - (kf - lf) * t);
    let s = pair_norm(kf, xi - kf * t) + pair_norm(lf, eta - lf * t);
    if d >= 0.25 * s {
        0
    } else {
        1
    }
}

/// Draws a pair from the requested case by rejection.
fn draw_m0_pair(d: &mut Draw, case: usize) -> Result<(f64, i64, f64, i64, f64)> {
    for _ in 0..10_000 {
        let t = d.time();
        let k = d.wavenumber();
        let xi = d.freq();
        let (l, eta) = if case == 0 {
            (d.wavenumber(), d.freq())
        } else {
            // a nearby point in sheared coordinates
            let kf = k as f64;
            let y = xi - kf * t;
            let r = pair_norm(kf, y).max(1e-3);
            let dk_max = (r / 8.0).floor().min(d.spec.k_max as f64) as i64;
            let dk = if dk_max > 0 { d.pick(&[-1, 0, 0, 1]).clamp(-dk_max, dk_max) } else { 0 };
            let l = k + dk;
            let budget = r / 8.0 - dk.abs() as f64;
            let v = d.uniform(-1.0, 1.0) * budget.max(0.0);
            (l, y + v + l as f64 * t)
        };
        if (k, l) != (0, 0) && m0_difference_case(t, k, xi, l, eta) == case {
            return Ok((t, k, xi, l, eta));
        }
    }
    Err(Error::param("m0_difference", "stratified sampler failed to hit its case"))
}

/// Lipschitz-type difference bound for `M₀`, split evenly between the two proof cases.
pub fn check_m0_difference(spec: &SampleSpec) -> Result<RatioReport> {
    let cg = spec.physical.c_gamma();
    let point = |t: f64, kf: f64, xi: f64, lf: f64, eta: f64| {
        let num = (m0_closed_form(cg, t, kf, xi) - m0_closed_form(cg, t, lf, eta)).abs();
        let den_w = bracket2(kf, xi - kf * t) + bracket2(lf, eta - lf * t);
        Eval {
            ratios: vec![ratio(num * den_w, bracket(t) * pair_norm(kf - lf, xi - eta))],
            stratum: Some(m0_difference_case(t, kf as i64, xi, lf as i64, eta)),
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
    let mut r = run_check(spec, &["m0_difference"], Vec::new(), Some(refiner), |d: &mut Draw| {
        let case = d.index % 2;
        let (t, k, xi, l, eta) = draw_m0_pair(d, case)?;
        Ok(point(t, k as f64, xi, l as f64, eta))
    })?;
    Ok(r.remove(0))
}

/// Coordinates `(t, k, ξ, l, η)` of a two-point sample.
pub(crate) fn pair_kinds() -> Vec<Kind> {
    vec![Kind::Real, Kind::Int, Kind::Real, Kind::Int, Kind::Real]
}

/// Training region of a two-point sample `(t, k, ξ, l, η)`.
pub(crate) fn in_pair_region(spec: &SampleSpec, p: &[f64]) -> bool {
    let (lo, hi) = spec.t_range;
    let km = spec.k_max as f64;
    (lo..=hi).contains(&p[0])
        && p[1].abs() <= km
        && p[3].abs() <= km
        && p[2].abs() <= spec.freq_max
        && p[4].abs() <= spec.freq_max
        && (p[1], p[3]) != (0.0, 0.0)
}
