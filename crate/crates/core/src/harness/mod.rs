//! Desk-scale experiments: decay fits, enhanced-dissipation scaling, Grönwall envelope and
//! the amplitude-threshold scan.

mod fit;
mod init;

pub use fit::{fit_exp_rate, fit_power_decay, loglog_slope, FitResult};
pub use init::{random_initial, wave_profile, InitFamily, InitSpec};

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{simulate, Outcome, Schedule, Trajectory};
use crate::energy::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::params::PhysicalParams;

/// Grid dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub k: i64,
    pub j: i64,
    pub l_y: f64,
    pub dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(k: i64, j: i64, l_y: f64) -> Self {
        Self {
            k,
            j,
            l_y,
            dealias_fraction: 2.0 / 3.0,
        }
    }

    pub fn build(&self) -> Result<SpectralGrid<f64>> {
        SpectralGrid::new(self.k, self.j, self.l_y)?.with_dealias_fraction(self.dealias_fraction)
    }
}

/// One simulation: grid, physics, initial data and schedule.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: PhysicalParams<f64>,
    pub init: InitSpec,
    pub schedule: Schedule,
}

impl RunConfig {
    pub fn run(&self) -> Result<Trajectory<f64>> {
        let g = self.grid.build()?;
        self.params.validate()?;
        let st = random_initial(&g, &self.init, self.params.s, self.params.gamma)?;
        simulate(&st, &self.params, &self.schedule)
    }
}

/// Default window for power-law fits, `[10, min(100, t_max)]`.
pub fn power_window(t_max: f64) -> (f64, f64) {
    (10.0, t_max.min(100.0))
}

/// Default window for rate fits, `[κ^{−1/6}, t_max]`.
pub fn rate_window(kappa: f64, t_max: f64) -> (f64, f64) {
    (kappa.powf(-1.0 / 6.0), t_max)
}

/// Fitted inviscid-damping exponents along one trajectory.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DampingFits {
    pub u1neq_l2: FitResult,
    pub u2_l2: FitResult,
    pub u2hat_l1: FitResult,
    pub thetaneq_l2: FitResult,
}

pub fn damping_fits(rows: &[DiagnosticsRow], window: (f64, f64)) -> Result<DampingFits> {
    let s = |f: fn(&DiagnosticsRow) -> f64| rows.iter().map(|r| (r.t, f(r))).collect::<Vec<_>>();
    Ok(DampingFits {
        u1neq_l2: fit_power_decay(&s(|r| r.u1neq_l2), window)?,
        u2_l2: fit_power_decay(&s(|r| r.u2_l2), window)?,
        u2hat_l1: fit_power_decay(&s(|r| r.u2hat_l1), window)?,
        thetaneq_l2: fit_power_decay(&s(|r| r.thetaneq_l2), window)?,
    })
}

/// Enhanced-dissipation rate of `‖⟨∇_L⟩^{1/2}(u_≠,θ_≠)‖_{H^s}` along one trajectory.
pub fn ed_rate(rows: &[DiagnosticsRow], window: (f64, f64)) -> Result<FitResult> {
    let s: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.hs_half_neq)).collect();
    fit_exp_rate(&s, window)
}

#[derive(Clone, Debug, Serialize)]
pub struct EdScalingReport {
    pub kappas: Vec<f64>,
    pub rates: Vec<FitResult>,
    pub slope: FitResult,
}

/// Slope of `ln rate` against `ln κ`.
pub fn scaling_slope(kappas: &[f64], rates: &[f64]) -> Result<FitResult> {
    if kappas.len() != rates.len() {
        return Err(Error::Fit("kappas and rates differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = kappas.iter().copied().zip(rates.iter().copied()).collect();
    loglog_slope(&pts)
}

/// Runs `make(κ)` for each κ (concurrently), fits the rate on `[κ^{−1/6}, t_end]` and
/// regresses `ln rate` on `ln κ`. Needs at least four κ spanning three decades.
pub fn ed_rate_scaling<F>(kappas: &[f64], make: F) -> Result<EdScalingReport>
where
    F: Fn(f64) -> Result<RunConfig> + Sync,
{
    if kappas.len() < 4 {
        return Err(Error::param("kappas", "need at least 4 values"));
    }
    let lo = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = kappas.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 1e3 * (1.0 - 1e-12) {
        return Err(Error::param("kappas", "must be positive and span at least 3 decades"));
    }
    let rates: Vec<FitResult> = kappas
        .par_iter()
        .map(|&kappa| {
            let cfg = make(kappa)?;
            let tr = cfg.run()?;
            if let Outcome::Diverged { t } = tr.outcome {
                return Err(Error::BlowUp { t });
            }
            ed_rate(&tr.rows, rate_window(kappa, cfg.schedule.t_end))
        })
        .collect::<Result<_>>()?;
    let slope = scaling_slope(kappas, &rates.iter().map(|r| r.value).collect::<Vec<_>>())?;
    Ok(EdScalingReport {
        kappas: kappas.to_vec(),
        rates,
        slope,
    })
}

/// Smallest `C` with `E(t)^{1/2} ≤ E(0)^{1/2}/(1 − C(t+t²)E(0)^{1/2})` on the sampled window.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GronwallReport {
    /// Signed: negative when `E` decays, so the envelope holds with room to spare.
    pub c_fit: f64,
    /// `min over samples of 1 − E(t)^{1/2}/envelope(t)` at `c_fit` (0 at the binding sample).
    pub tightness: f64,
    pub samples: usize,
    pub t_end: f64,
}

pub fn gronwall_envelope(rows: &[DiagnosticsRow], t_end: f64) -> Result<GronwallReport> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.t <= t_end && r.e.is_finite()).map(|r| (r.t, r.e)).collect();
    let (t0, e0) = *pts.first().ok_or(Error::EmptySample)?;
    if t0 != 0.0 {
        return Err(Error::Fit("the envelope needs the sample at t = 0".into()));
    }
    let r0 = e0.sqrt();
    if r0 == 0.0 {
        return Ok(GronwallReport {
            c_fit: 0.0,
            tightness: 1.0,
            samples: pts.len(),
            t_end,
        });
    }
    let mut c = f64::NEG_INFINITY;
    for &(t, e) in &pts[1..] {
        let need = (1.0 - r0 / e.sqrt()) / ((t + t * t) * r0);
        c = c.max(need);
    }
    if !c.is_finite() {
        c = 0.0;
    }
    let mut tight = f64::INFINITY;
    for &(t, e) in &pts[1..] {
        let env = r0 / (1.0 - c * (t + t * t) * r0);
        tight = tight.min(1.0 - e.sqrt() / env);
    }
    Ok(GronwallReport {
        c_fit: c,
        tightness: if tight.is_finite() { tight } else { 1.0 },
        samples: pts.len(),
        t_end,
    })
}

/// Bisection bracket in normalized amplitude `a/κ^{scaling}`, searched in log space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectionSpec {
    pub lo: f64,
    pub hi: f64,
    pub depth: usize,
    pub scaling: f64,
}

impl BisectionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.hi > self.lo) {
            return Err(Error::param("bisection", "need 0 < lo < hi"));
        }
        if self.depth < 6 {
            return Err(Error::param("bisection", "depth must be at least 6"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Resolved,
    /// Every tested amplitude was stable; `a*` is at least the bracket top.
    CensoredStable,
    /// Every tested amplitude was unstable; `a*` is below the bracket bottom.
    CensoredUnstable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Resolved => "resolved",
            Verdict::CensoredStable => "censored_stable",
            Verdict::CensoredUnstable => "censored_unstable",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdPoint {
    pub kappa: f64,
    /// Largest amplitude found stable (geometric centre of the final bracket when resolved).
    pub a_star: Option<f64>,
    pub verdict: Verdict,
    /// `(amplitude, stable)` in test order.
    pub tested: Vec<(f64, bool)>,
    /// False when some stable amplitude lies above an unstable one.
    pub monotone_in_amplitude: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub points: Vec<ThresholdPoint>,
    /// Slope of `ln a*` against `ln κ` over resolved points.
    pub slope: Option<FitResult>,
    /// `a*` is nondecreasing in κ over resolved points.
    pub monotone_in_kappa: bool,
}

fn bisect_one<F>(kappa: f64, spec: &BisectionSpec, stable: &F) -> Result<ThresholdPoint>
where
    F: Fn(f64, f64) -> Result<bool> + Sync,
{
    let unit = kappa.powf(spec.scaling);
    let mut tested = Vec::new();
    let probe = |x: f64, tested: &mut Vec<(f64, bool)>| -> Result<bool> {
        let a = x * unit;
        let s = stable(kappa, a)?;
        tested.push((a, s));
        Ok(s)
    };
    let (mut lo, mut hi) = (spec.lo.ln(), spec.hi.ln());
    let lo_ok = probe(spec.lo, &mut tested)?;
    let hi_ok = probe(spec.hi, &mut tested)?;
    let verdict;
    let mut a_star = None;
    if !lo_ok {
        verdict = Verdict::CensoredUnstable;
    } else if hi_ok {
        verdict = Verdict::CensoredStable;
        a_star = Some(spec.hi * unit);
    } else {
        for _ in 0..spec.depth {
            let mid = 0.5 * (lo + hi);
            if probe(mid.exp(), &mut tested)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        verdict = Verdict::Resolved;
        a_star = Some((0.5 * (lo + hi)).exp() * unit);
    }
    let mut sorted = tested.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first_unstable = sorted.iter().position(|p| !p.1);
    let monotone = first_unstable.is_none_or(|i| sorted[i..].iter().all(|p| !p.1));
    Ok(ThresholdPoint {
        kappa,
        a_star,
        verdict,
        tested,
        monotone_in_amplitude: monotone,
    })
}

/// For each κ, bisects the largest stable amplitude and regresses `ln a*` on `ln κ`.
/// `stable(κ, a)` classifies one run. κ values run concurrently; bisection is sequential.
pub fn threshold_scan<F>(kappas: &[f64], spec: &BisectionSpec, stable: F) -> Result<ThresholdReport>
where
    F: Fn(f64, f64) -> Result<bool> + Sync,
{
    spec.validate()?;
    if kappas.is_empty() {
        return Err(Error::param("kappas", "empty"));
    }
    let mut points: Vec<ThresholdPoint> = kappas
        .par_iter()
        .map(|&k| bisect_one(k, spec, &stable))
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
    let resolved: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.verdict == Verdict::Resolved)
        .map(|p| (p.kappa, p.a_star.unwrap()))
        .collect();
    let slope = if resolved.len() >= 2 {
        Some(loglog_slope(&resolved)?)
    } else {
        None
    };
    let monotone_in_kappa = resolved.windows(2).all(|w| w[1].1 >= w[0].1);
    Ok(ThresholdReport {
        points,
        slope,
        monotone_in_kappa,
    })
}

/// Classifier for [`threshold_scan`]: runs `make(κ, a)` and calls it stable when it
/// completes without crossing the stability factor or diverging.
pub fn run_is_stable(cfg: &RunConfig) -> Result<bool> {
    let tr = cfg.run()?;
    Ok(matches!(tr.outcome, Outcome::Completed))
}
