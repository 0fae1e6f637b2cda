//! Energy functionals, damping norms and the per-sample diagnostics row.
//!
//! Every `‖·‖²` below is a `dxi`-weighted lattice sum. Energies have the form
//! `Σ w²(|û|² + γ²|θ̂|² + Re(θ̂ ū₁))` with `w` one of `A_k`, `ℳ` or the piecewise `m`.

mod checks;
mod csv_out;

pub use checks::{
    check_prop_longtime, check_prop_smalltime, fd_rates, LongTimeReport, LongTimeSample, SmallTimeReport,
    SmallTimeSample, MONOTONE_ABS_SLACK, MONOTONE_REL_SLACK,
};
pub use csv_out::{write_rows_csv, CSV_HEADER};

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::dynamics::FlowState;
use crate::error::{Error, Result};
use crate::multipliers::WeightBundle;
use crate::params::PhysicalParams;
use crate::scalar::{bracket2, from_int, lit, Real};

/// Smallest eigenvalue of `[[1, 1/2], [1/2, γ²]]`, the form of `(û₁, θ̂)` inside
/// `|û|² + γ²|θ̂|² + Re(θ̂ ū₁)`.
pub fn coercivity_margin(gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    let tr = 1.0 + g2;
    let det = g2 - 0.25;
    // stable small root: det / larger root
    let big = 0.5 * (tr + ((1.0 - g2) * (1.0 - g2) + 1.0).sqrt());
    det / big
}

/// Largest eigenvalue of the same form.
pub fn coercivity_max(gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    0.5 * ((1.0 + g2) + ((1.0 - g2) * (1.0 - g2) + 1.0).sqrt())
}

/// Sign of the smallest eigenvalue, decided in exact rational arithmetic on the binary
/// value of `gamma`: the trace is positive, so the sign is that of `γ² − 1/4`.
pub fn coercivity_sign_exact(gamma: f64) -> Ordering {
    let g = BigRational::from_float(gamma).expect("finite gamma");
    let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
    (&g * &g).cmp(&quarter)
}

/// `C(γ) = max(λ_max, 1/λ_min)`, so that `C⁻¹ Σw²(|û|²+|θ̂|²) ≤ energy ≤ C Σw²(|û|²+|θ̂|²)`.
pub fn equivalence_constant(gamma: f64) -> f64 {
    let lo = coercivity_margin(gamma);
    let hi = coercivity_max(gamma);
    hi.max(1.0 / lo)
}

fn check_gamma<T: Real>(p: &PhysicalParams<T>) -> Result<()> {
    if !(p.gamma > lit(0.5)) {
        return Err(Error::param(
            "gamma",
            format!("energies need gamma > 1/2 (coercivity margin {})", coercivity_margin(p.gamma.to_f64().unwrap())),
        ));
    }
    Ok(())
}

/// `Σ w²(|û₁|²+|û₂|²+γ²|θ̂|²+Re(θ̂ ū₁))·dxi` for an arbitrary per-mode weight.
pub fn weighted_energy<T: Real, W>(state: &FlowState<T>, gamma: T, weight: W) -> T
where
    W: Fn(i64, T) -> T,
{
    let g = state.grid();
    let g2 = gamma * gamma;
    let (u1, u2, th) = (state.u1.coeffs(), state.u2.coeffs(), state.theta.coeffs());
    let mut acc = T::zero();
    for (i, (k, j)) in g.modes().enumerate() {
        let w = weight(k, g.xi(j));
        let e = u1[i].norm_sqr() + u2[i].norm_sqr() + g2 * th[i].norm_sqr() + (th[i] * u1[i].conj()).re;
        acc = acc + w * w * e;
    }
    acc * g.dxi()
}

/// `‖w (û, θ̂)‖² = Σ w²(|û|² + |θ̂|²)·dxi`.
pub fn weighted_sq<T: Real, W>(state: &FlowState<T>, weight: W) -> T
where
    W: Fn(i64, T) -> T,
{
    let g = state.grid();
    let (u1, u2, th) = (state.u1.coeffs(), state.u2.coeffs(), state.theta.coeffs());
    let mut acc = T::zero();
    for (i, (k, j)) in g.modes().enumerate() {
        let w = weight(k, g.xi(j));
        acc = acc + w * w * (u1[i].norm_sqr() + u2[i].norm_sqr() + th[i].norm_sqr());
    }
    acc * g.dxi()
}

/// `E(t)` with the short-time weight `A_k`.
pub fn energy_e<T: Real>(state: &FlowState<T>, params: &PhysicalParams<T>, weights: &WeightBundle<T>) -> Result<T> {
    check_gamma(params)?;
    let t = state.t;
    Ok(weighted_energy(state, params.gamma, |k, xi| weights.a_k(t, k, xi)))
}

/// `E_*(t)` with the long-time weight `ℳ`; requires `t ≥ T₀`.
pub fn energy_estar<T: Real>(state: &FlowState<T>, params: &PhysicalParams<T>, weights: &WeightBundle<T>) -> Result<T> {
    check_gamma(params)?;
    let t = state.t;
    if !(t >= weights.params().t0()) {
        return Err(Error::OutsideRegime {
            what: "energy_Estar",
            t: t.to_f64().unwrap(),
        });
    }
    let m = long_time_weights(state, weights)?;
    Ok(energy_from_table(state, params.gamma, &m.iter().map(|w| w.0).collect::<Vec<_>>()))
}

/// `D(t)` with the piecewise weight `m`.
pub fn energy_d<T: Real>(state: &FlowState<T>, params: &PhysicalParams<T>, weights: &WeightBundle<T>) -> Result<T> {
    if state.t <= weights.params().t0() {
        energy_e(state, params, weights)
    } else {
        energy_estar(state, params, weights)
    }
}

fn energy_from_table<T: Real>(state: &FlowState<T>, gamma: T, w: &[T]) -> T {
    let g2 = gamma * gamma;
    let (u1, u2, th) = (state.u1.coeffs(), state.u2.coeffs(), state.theta.coeffs());
    let mut acc = T::zero();
    for i in 0..w.len() {
        let e = u1[i].norm_sqr() + u2[i].norm_sqr() + g2 * th[i].norm_sqr() + (th[i] * u1[i].conj()).re;
        acc = acc + w[i] * w[i] * e;
    }
    acc * state.grid().dxi()
}

/// `(ℳ, Υ, ⟨ξ/k−t⟩)` for every mode in storage order. Uses the mirror symmetry of the
/// weights to evaluate only half of the lattice.
pub fn long_time_weights<T: Real>(state: &FlowState<T>, weights: &WeightBundle<T>) -> Result<Vec<(T, T, T)>> {
    let g = *state.grid();
    let n = g.len();
    let half = n / 2 + 1;
    let t = state.t;
    let front: Vec<(T, T, T)> = (0..half)
        .into_par_iter()
        .map(|i| {
            let (k, j) = g.mode_at(i);
            weights
                .long_time(t, k, g.xi(j))
                .map(|w| (w.big_m, w.upsilon, w.shear_bracket))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&front);
    for i in half..n {
        out.push(front[n - 1 - i]);
    }
    Ok(out)
}

/// Norms used by the inviscid-damping statements.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct DampingNorms<T> {
    /// `‖(u₁)_≠‖_{L²}`
    pub u1neq_l2: T,
    /// `‖u₂‖_{L²}`
    pub u2_l2: T,
    /// `‖û₂‖_{L¹}` over nonzero modes
    pub u2hat_l1: T,
    /// `‖θ_≠‖_{L²}`
    pub thetaneq_l2: T,
}

pub fn damping_norms<T: Real>(state: &FlowState<T>) -> DampingNorms<T> {
    let g = state.grid();
    let mut a = T::zero();
    let mut b = T::zero();
    let mut c = T::zero();
    let mut d = T::zero();
    for (i, (k, _)) in g.modes().enumerate() {
        let u2 = state.u2.coeffs()[i];
        b = b + u2.norm_sqr();
        if k != 0 {
            a = a + state.u1.coeffs()[i].norm_sqr();
            c = c + u2.norm();
            d = d + state.theta.coeffs()[i].norm_sqr();
        }
    }
    let dxi = g.dxi();
    DampingNorms {
        u1neq_l2: (a * dxi).sqrt(),
        u2_l2: (b * dxi).sqrt(),
        u2hat_l1: c * dxi,
        thetaneq_l2: (d * dxi).sqrt(),
    }
}

/// `‖⟨∇_L⟩^{1/2}(u, θ)‖_{H^s}`, optionally restricted to nonzero modes.
pub fn hs_half_norm<T: Real>(state: &FlowState<T>, s: T, nonzero_only: bool) -> T {
    let g = state.grid();
    let t = state.t;
    let sq = weighted_sq(state, |k, xi| {
        if nonzero_only && k == 0 {
            return T::zero();
        }
        let kf = from_int::<T>(k);
        bracket2(kf, xi - kf * t).sqrt() * bracket2(kf, xi).powf(s)
    });
    let _ = g;
    sq.sqrt()
}

/// `‖(u, θ)‖_{H^a}`.
pub fn sobolev_norm<T: Real>(state: &FlowState<T>, a: T) -> T {
    weighted_sq(state, |k, xi| bracket2(from_int::<T>(k), xi).powf(a)).sqrt()
}

/// Terms of the short-time energy inequality, squared norms under `A_k`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ShortTimeTerms {
    /// `‖A_k(û, θ̂)‖²`
    pub a_norm_sq: f64,
    /// `Σ γk²/(k²+(ξ−kt)²)|A_kθ̂|²`
    pub diss_theta_gamma: f64,
    /// `‖A_k û₂‖²`
    pub a_u2_sq: f64,
    /// `Σ (k²+(ξ−kt)²)(ν|A_kû|² + μγ²|A_kθ̂|²)`
    pub diss_visc_a: f64,
}

/// Squared norms under `ℳ` entering the long-time inequality.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LongTimeTerms {
    /// `‖ℳ(û, θ̂)‖²`
    pub m_norm_sq: f64,
    /// `‖ℳû‖²`
    pub m_u_sq: f64,
    /// `‖|k, ξ−kt| ℳ(û, θ̂)‖²`
    pub grad_m_sq: f64,
    /// `‖|k|^{1/3} ℳ(û, θ̂)‖²`
    pub k13_sq: f64,
    /// `‖⟨ξ/k−t⟩^{δ/2} ℳû₂‖²`
    pub u2w_sq: f64,
    /// `‖√Υ ℳ(û, θ̂)‖²`
    pub ups_sq: f64,
}

/// Status carried by each diagnostics row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowFlag {
    Stable,
    Unstable,
    Diverged,
}

impl RowFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowFlag::Stable => "stable",
            RowFlag::Unstable => "unstable",
            RowFlag::Diverged => "diverged",
        }
    }
}

/// One time sample of every tracked quantity.
///
/// Long-time entries are `None` before `T₀` (or when `κ = 0`, or when the long-time terms
/// are switched off) and are written as empty CSV cells. The five `diss_*` entries are
/// the summands of the long-time dissipation as printed:
/// `ν‖|k,ξ−kt|ℳ(û,θ̂)‖²`, `‖⟨ξ/k−t⟩^{δ/2}ℳû₂‖²`, `κ^{1/3}‖|k|^{1/3}ℳ(û,θ̂)‖²`,
/// `‖√Υℳ(û,θ̂)‖²` and `κ^{−1/3}t^{−3}‖ℳ(û,θ̂)‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub e: f64,
    pub d: Option<f64>,
    pub estar: Option<f64>,
    pub u1neq_l2: f64,
    pub u2_l2: f64,
    pub u2hat_l1: f64,
    pub thetaneq_l2: f64,
    pub hs_half_norm: f64,
    pub diss_visc: Option<f64>,
    pub diss_u2_weighted: Option<f64>,
    pub diss_k13: Option<f64>,
    pub diss_upsilon: Option<f64>,
    pub diss_t3: Option<f64>,
    pub destar_dt_fd: Option<f64>,
    pub flag: RowFlag,
    /// `‖⟨∇_L⟩^{1/2}(u_≠, θ_≠)‖_{H^s}`
    pub hs_half_neq: f64,
    pub short: ShortTimeTerms,
    pub long: Option<LongTimeTerms>,
    pub symmetry_defect: f64,
    pub divergence_defect: f64,
}

/// Evaluates [`DiagnosticsRow`]s for one parameter set.
#[derive(Clone, Debug)]
pub struct Diagnostics<T: Real> {
    params: PhysicalParams<T>,
    weights: Arc<WeightBundle<T>>,
    long_time_terms: bool,
}

impl<T: Real> Diagnostics<T> {
    pub fn new(params: &PhysicalParams<T>, weights: Arc<WeightBundle<T>>) -> Self {
        Self {
            params: *params,
            weights,
            long_time_terms: true,
        }
    }

    /// Skips every `ℳ`-based quantity. Those cost a lattice sum of `2·J_sum` terms per mode.
    pub fn with_long_time_terms(mut self, on: bool) -> Self {
        self.long_time_terms = on;
        self
    }

    pub fn params(&self) -> &PhysicalParams<T> {
        &self.params
    }

    pub fn weights(&self) -> &WeightBundle<T> {
        &self.weights
    }

    pub fn long_time_active(&self, t: T) -> bool {
        self.long_time_terms && self.params.kappa() > T::zero() && t >= self.weights.params().t0()
    }

    /// Short-time energy `E` and the terms of the short-time inequality.
    pub fn short_time(&self, state: &FlowState<T>) -> (f64, ShortTimeTerms) {
        let g = state.grid();
        let t = state.t;
        let p = &self.params;
        let g2 = p.gamma * p.gamma;
        let (u1, u2, th) = (state.u1.coeffs(), state.u2.coeffs(), state.theta.coeffs());
        let mut e = T::zero();
        let mut a_sq = T::zero();
        let mut dtg = T::zero();
        let mut au2 = T::zero();
        let mut dv = T::zero();
        for (i, (k, j)) in g.modes().enumerate() {
            let xi = g.xi(j);
            let a = self.weights.a_k(t, k, xi);
            let a2 = a * a;
            let kf = from_int::<T>(k);
            let eta = xi - kf * t;
            let d = kf * kf + eta * eta;
            let uu = u1[i].norm_sqr() + u2[i].norm_sqr();
            let tt = th[i].norm_sqr();
            e = e + a2 * (uu + g2 * tt + (th[i] * u1[i].conj()).re);
            a_sq = a_sq + a2 * (uu + tt);
            if d > T::zero() {
                dtg = dtg + p.gamma * kf * kf / d * a2 * tt;
            }
            au2 = au2 + a2 * u2[i].norm_sqr();
            dv = dv + d * (p.nu * a2 * uu + p.mu * g2 * a2 * tt);
        }
        let dxi = g.dxi();
        let f = |v: T| (v * dxi).to_f64().unwrap();
        (
            f(e),
            ShortTimeTerms {
                a_norm_sq: f(a_sq),
                diss_theta_gamma: f(dtg),
                a_u2_sq: f(au2),
                diss_visc_a: f(dv),
            },
        )
    }

    /// `E_*` and the long-time squared norms at `state.t ≥ T₀`.
    pub fn long_time(&self, state: &FlowState<T>) -> Result<(f64, LongTimeTerms)> {
        let g = state.grid();
        let t = state.t;
        let p = &self.params;
        let w = long_time_weights(state, &self.weights)?;
        let g2 = p.gamma * p.gamma;
        let half_delta = p.delta * lit(0.5);
        let (u1, u2, th) = (state.u1.coeffs(), state.u2.coeffs(), state.theta.coeffs());
        let mut es = T::zero();
        let mut m_sq = T::zero();
        let mut mu_sq = T::zero();
        let mut grad = T::zero();
        let mut k13 = T::zero();
        let mut u2w = T::zero();
        let mut ups = T::zero();
        for (i, (k, j)) in g.modes().enumerate() {
            let (m, upsilon, sb) = w[i];
            let m2 = m * m;
            let kf = from_int::<T>(k);
            let eta = g.xi(j) - kf * t;
            let uu = u1[i].norm_sqr() + u2[i].norm_sqr();
            let tt = th[i].norm_sqr();
            let both = m2 * (uu + tt);
            es = es + m2 * (uu + g2 * tt + (th[i] * u1[i].conj()).re);
            m_sq = m_sq + both;
            mu_sq = mu_sq + m2 * uu;
            grad = grad + (kf * kf + eta * eta) * both;
            k13 = k13 + kf.abs().powf(lit(2.0 / 3.0)) * both;
            if k != 0 {
                u2w = u2w + sb.powf(p.delta) * m2 * u2[i].norm_sqr();
            }
            ups = ups + upsilon * both;
            let _ = half_delta;
        }
        let dxi = g.dxi();
        let f = |v: T| (v * dxi).to_f64().unwrap();
        Ok((
            f(es),
            LongTimeTerms {
                m_norm_sq: f(m_sq),
                m_u_sq: f(mu_sq),
                grad_m_sq: f(grad),
                k13_sq: f(k13),
                u2w_sq: f(u2w),
                ups_sq: f(ups),
            },
        ))
    }

    /// A full row at `state` (the finite-difference rate is filled in later).
    pub fn row(&self, state: &FlowState<T>, flag: RowFlag) -> Result<DiagnosticsRow> {
        let p = &self.params;
        let (e, short) = self.short_time(state);
        let dn = damping_norms(state);
        let t = state.t.to_f64().unwrap();
        let (estar, long) = if self.long_time_active(state.t) {
            let (es, lt) = self.long_time(state)?;
            (Some(es), Some(lt))
        } else {
            (None, None)
        };
        let t0 = self.weights.params().t0();
        let d = if state.t <= t0 { Some(e) } else { estar };
        let kappa = p.kappa().to_f64().unwrap();
        let nu = p.nu.to_f64().unwrap();
        let c = |v: T| v.to_f64().unwrap();
        Ok(DiagnosticsRow {
            t,
            e,
            d,
            estar,
            u1neq_l2: c(dn.u1neq_l2),
            u2_l2: c(dn.u2_l2),
            u2hat_l1: c(dn.u2hat_l1),
            thetaneq_l2: c(dn.thetaneq_l2),
            hs_half_norm: c(hs_half_norm(state, p.s, false)),
            diss_visc: long.map(|l| nu * l.grad_m_sq),
            diss_u2_weighted: long.map(|l| l.u2w_sq),
            diss_k13: long.map(|l| kappa.powf(1.0 / 3.0) * l.k13_sq),
            diss_upsilon: long.map(|l| l.ups_sq),
            diss_t3: long.map(|l| kappa.powf(-1.0 / 3.0) / (t * t * t) * l.m_norm_sq),
            destar_dt_fd: None,
            flag,
            hs_half_neq: c(hs_half_norm(state, p.s, true)),
            short,
            long,
            symmetry_defect: c(state.symmetry_defect()),
            divergence_defect: c(state.divergence_defect()),
        })
    }
}
