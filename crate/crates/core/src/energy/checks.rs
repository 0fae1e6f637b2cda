use super::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Relative slack on the sign test `dE_*/dt ≤ 0`.
pub const MONOTONE_REL_SLACK: f64 = 1e-10;
/// Absolute slack on the same test.
pub const MONOTONE_ABS_SLACK: f64 = 1e-14;

/// Largest sample spacing accepted by the differential checks.
const MAX_SPACING: f64 = 0.1;

/// Derivative of the quadratic through three points, evaluated at `x`.
fn lagrange_slope(xs: [f64; 3], ys: [f64; 3], x: f64) -> f64 {
    let [x0, x1, x2] = xs;
    let [y0, y1, y2] = ys;
    y0 * ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2))
        + y1 * ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2))
        + y2 * ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1))
}

/// Second-order finite-difference rates on a nonuniform sample.
///
/// Each maximal run of consecutive `Some` values is differentiated on its own: centered
/// three-point stencils inside, one-sided three-point stencils at the run ends. Runs of
/// length two get the plain secant; isolated points get `None`.
pub fn fd_rates(ts: &[f64], vals: &[Option<f64>]) -> Vec<Option<f64>> {
    assert_eq!(ts.len(), vals.len());
    let mut out = vec![None; ts.len()];
    let mut i = 0;
    while i < ts.len() {
        if vals[i].is_none() {
            i += 1;
            continue;
        }
        let start = i;
        while i < ts.len() && vals[i].is_some() {
            i += 1;
        }
        let run = start..i;
        let n = run.len();
        let y = |j: usize| vals[j].unwrap();
        match n {
            1 => {}
            2 => {
                let s = (y(start + 1) - y(start)) / (ts[start + 1] - ts[start]);
                out[start] = Some(s);
                out[start + 1] = Some(s);
            }
            _ => {
                for j in run {
                    let c = j.clamp(start + 1, i - 2);
                    let xs = [ts[c - 1], ts[c], ts[c + 1]];
                    let ys = [y(c - 1), y(c), y(c + 1)];
                    out[j] = Some(lagrange_slope(xs, ys, ts[j]));
                }
            }
        }
    }
    out
}

fn check_spacing(ts: &[f64]) -> Result<()> {
    for w in ts.windows(2) {
        let h = w[1] - w[0];
        if h > MAX_SPACING * (1.0 + 1e-9) {
            return Err(Error::CoarseSampling {
                spacing: h,
                limit: MAX_SPACING,
            });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallTimeSample {
    pub t: f64,
    pub de_dt: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl SmallTimeSample {
    /// `LHS/RHS`, with `0/0 = 0` and a nonpositive LHS counted as 0.
    pub fn ratio(&self) -> f64 {
        if self.lhs <= 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallTimeReport {
    pub samples: Vec<SmallTimeSample>,
    /// `max LHS/RHS` over samples with positive LHS.
    pub max_ratio: f64,
    /// `max LHS/E` over samples with `E > 0`.
    pub max_lhs_rel: f64,
    /// `Some(true)` when a calibrated constant was supplied and some positive LHS exceeds it times RHS.
    pub violated: Option<bool>,
}

/// Short-time differential inequality along a sampled trajectory.
///
/// `LHS = dE/dt + Σγk²/|k,ξ−kt|²|A_kθ̂|² + (2/γ)‖A_kû₂‖² + ε Σ|k,ξ−kt|²(ν|A_kû|²+μγ²|A_kθ̂|²)`
/// with `dE/dt` from [`fd_rates`], and `RHS = ⟨t⟩‖A_k(û,θ̂)‖³`. Only rows with `t ≤ t_end` enter.
pub fn check_prop_smalltime(
    rows: &[DiagnosticsRow],
    params: &PhysicalParams<f64>,
    t_end: f64,
    calibrated_c: Option<f64>,
) -> Result<SmallTimeReport> {
    let rows: Vec<&DiagnosticsRow> = rows.iter().filter(|r| r.t <= t_end).collect();
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    check_spacing(&ts)?;
    let es: Vec<Option<f64>> = rows.iter().map(|r| Some(r.e)).collect();
    let rates = fd_rates(&ts, &es);
    let g = params.gamma;
    let mut samples = Vec::with_capacity(rows.len());
    let mut max_ratio = 0.0_f64;
    let mut max_lhs_rel = f64::NEG_INFINITY;
    for (r, rate) in rows.iter().zip(rates) {
        let de = rate.unwrap_or(0.0);
        let s = &r.short;
        let lhs = de + s.diss_theta_gamma + 2.0 / g * s.a_u2_sq + params.eps * s.diss_visc_a;
        let rhs = (1.0 + r.t * r.t).sqrt() * s.a_norm_sq.powf(1.5);
        let sample = SmallTimeSample {
            t: r.t,
            de_dt: de,
            lhs,
            rhs,
        };
        max_ratio = max_ratio.max(sample.ratio());
        if r.e > 0.0 {
            max_lhs_rel = max_lhs_rel.max(lhs / r.e);
        }
        samples.push(sample);
    }
    if !max_lhs_rel.is_finite() {
        max_lhs_rel = 0.0;
    }
    let violated = calibrated_c.map(|c| samples.iter().any(|s| s.lhs > 0.0 && s.lhs > c * s.rhs));
    Ok(SmallTimeReport {
        samples,
        max_ratio,
        max_lhs_rel,
        violated,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LongTimeSample {
    pub t: f64,
    pub estar: f64,
    pub destar_dt: Option<f64>,
    /// `‖ℳ(û,θ̂)‖`
    pub m_norm: f64,
    pub smallness_ok: bool,
    pub lhs: Option<f64>,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LongTimeReport {
    pub samples: Vec<LongTimeSample>,
    pub c2: f64,
    /// Smallness `‖ℳ(û,θ̂)‖ ≤ c₂κ^{1/3}` held at every sample.
    pub hypothesis_met: bool,
    /// `None` when the hypothesis is unmet: no verdict is given then.
    pub monotone: Option<bool>,
    /// `max (dE_*/dt)/E_*` over samples with `E_* > 0`.
    pub max_rate_rel: f64,
    pub worst_t: f64,
    /// `max LHS/RHS` of the full long-time inequality.
    pub max_inequality_ratio: f64,
}

/// Long-time checks on the rows carrying `E_*`: the sign of `dE_*/dt`, and the full
/// inequality with `ε₁ = ε/4`.
pub fn check_prop_longtime(rows: &[DiagnosticsRow], params: &PhysicalParams<f64>, c2: f64) -> Result<LongTimeReport> {
    let rows: Vec<&DiagnosticsRow> = rows.iter().filter(|r| r.estar.is_some() && r.long.is_some()).collect();
    if rows.is_empty() {
        return Err(Error::OutsideRegime {
            what: "check_prop_longtime",
            t: f64::NAN,
        });
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    check_spacing(&ts)?;
    let vals: Vec<Option<f64>> = rows.iter().map(|r| r.estar).collect();
    let rates = fd_rates(&ts, &vals);
    let kappa = params.kappa();
    let k13 = kappa.powf(1.0 / 3.0);
    let eps1 = params.eps / 4.0;
    let bound = c2 * k13;

    let mut samples = Vec::with_capacity(rows.len());
    let mut hypothesis_met = true;
    let mut all_ok = true;
    let mut max_rate_rel = f64::NEG_INFINITY;
    let mut worst_t = rows[0].t;
    let mut max_ratio = 0.0_f64;
    for (r, rate) in rows.iter().zip(rates) {
        let l = r.long.unwrap();
        let es = r.estar.unwrap();
        let m_norm = l.m_norm_sq.sqrt();
        let smallness_ok = m_norm <= bound;
        hypothesis_met &= smallness_ok;
        if let Some(v) = rate {
            if v > MONOTONE_REL_SLACK * es + MONOTONE_ABS_SLACK {
                all_ok = false;
            }
            if es > 0.0 && v / es > max_rate_rel {
                max_rate_rel = v / es;
                worst_t = r.t;
            }
        }
        let diss = r.diss_visc.unwrap_or(0.0)
            + r.diss_u2_weighted.unwrap_or(0.0)
            + r.diss_k13.unwrap_or(0.0)
            + r.diss_upsilon.unwrap_or(0.0)
            + r.diss_t3.unwrap_or(0.0);
        let lhs = rate.map(|v| v + eps1 * diss);
        let t3 = r.t.powi(3);
        let rhs = m_norm
            * (l.k13_sq
                + kappa.powf(2.0 / 3.0) * l.grad_m_sq
                + l.m_u_sq / (kappa.powf(2.0 / 3.0) * t3)
                + (l.u2w_sq + l.ups_sq) / k13);
        if let Some(x) = lhs {
            if x > 0.0 {
                max_ratio = max_ratio.max(x / rhs);
            }
        }
        samples.push(LongTimeSample {
            t: r.t,
            estar: es,
            destar_dt: rate,
            m_norm,
            smallness_ok,
            lhs,
            rhs,
        });
    }
    if !max_rate_rel.is_finite() {
        max_rate_rel = 0.0;
    }
    Ok(LongTimeReport {
        samples,
        c2,
        hypothesis_met,
        monotone: hypothesis_met.then_some(all_ok),
        max_rate_rel,
        worst_t,
        max_inequality_ratio: max_ratio,
    })
}
