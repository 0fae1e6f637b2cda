//! Fourier-side Boussinesq system in sheared coordinates and its time integration.

mod integrator;
mod rhs;
mod state;

pub use integrator::{step, step_linear, Stepper, MAX_SUBSTEPS};
pub use rhs::{
    dissipation_integral, grad_l, linear_rhs, linear_soft, linear_stiff, nonlinear_from, nonlinear_rhs,
    pressure_linear, pressure_nonlinear, pressure_nonlinear_from, products_direct, tendency_parts, NonlinearWorkspace,
    Products, Tendency, TendencyParts,
};
pub use state::{leray_project_moving, FlowState, DIVERGENCE_TOL};

use std::sync::Arc;

use crate::energy::{fd_rates, hs_half_norm, Diagnostics, DiagnosticsRow, RowFlag};
use crate::error::{Error, Result};
use crate::multipliers::WeightBundle;
use crate::params::PhysicalParams;
use crate::scalar::{lit, Real};

/// Time-stepping plan for [`simulate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub dt: f64,
    pub t_end: f64,
    /// Emit a row every this many steps (and always at the end).
    pub sample_every: usize,
    pub linear_only: bool,
    /// Keep a state copy every this many steps.
    pub checkpoint_every: Option<usize>,
    /// Stop as unstable once `‖⟨∇_L⟩^{1/2}(u,θ)‖_{H^s}` exceeds this multiple of its initial value.
    pub stability_factor: Option<f64>,
    /// Evaluate the `ℳ`-based columns after `T₀`.
    pub long_time_terms: bool,
}

impl Schedule {
    pub fn new(dt: f64, t_end: f64, sample_every: usize) -> Self {
        Self {
            dt,
            t_end,
            sample_every,
            linear_only: false,
            checkpoint_every: None,
            stability_factor: None,
            long_time_terms: true,
        }
    }

    pub fn linear(mut self, on: bool) -> Self {
        self.linear_only = on;
        self
    }

    pub fn validate(&self, t_start: f64) -> Result<()> {
        let bad = |m: String| Err(Error::Schedule(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive and finite, got {}", self.dt));
        }
        if !self.t_end.is_finite() || self.t_end < t_start {
            return bad(format!("t_end = {} precedes the initial time {t_start}", self.t_end));
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1".into());
        }
        if self.checkpoint_every == Some(0) {
            return bad("checkpoint_every must be at least 1".into());
        }
        if let Some(f) = self.stability_factor {
            if !(f > 1.0) {
                return bad(format!("stability_factor must exceed 1, got {f}"));
            }
        }
        Ok(())
    }

    /// Number of steps, the last one possibly shortened so the run ends exactly at `t_end`.
    pub fn n_steps(&self, t_start: f64) -> usize {
        ((self.t_end - t_start) / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Completed,
    Diverged { t: f64 },
    Unstable { t: f64 },
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub rows: Vec<DiagnosticsRow>,
    pub final_state: FlowState<T>,
    pub outcome: Outcome,
    /// `(step index, state)` pairs.
    pub checkpoints: Vec<(usize, FlowState<T>)>,
    /// Largest per-mode divergence defect seen before any re-projection.
    pub max_divergence_defect: f64,
    /// Largest relative change made by a re-projection.
    pub max_projection_change: f64,
}

impl<T> Trajectory<T> {
    pub fn series(&self, f: impl Fn(&DiagnosticsRow) -> f64) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, f(r))).collect()
    }
}

/// Runs `schedule` from `initial` with default diagnostics.
pub fn simulate<T: Real>(initial: &FlowState<T>, params: &PhysicalParams<T>, schedule: &Schedule) -> Result<Trajectory<T>> {
    let weights = Arc::new(WeightBundle::from_physical(params)?);
    let diag = Diagnostics::new(params, weights).with_long_time_terms(schedule.long_time_terms);
    simulate_with(initial, &diag, schedule)
}

/// Runs `schedule` from `initial`, sampling rows with `diag`.
pub fn simulate_with<T: Real>(initial: &FlowState<T>, diag: &Diagnostics<T>, schedule: &Schedule) -> Result<Trajectory<T>> {
    let origin = initial.t.to_f64().unwrap();
    let h0 = hs_half_norm(initial, diag.params().s, false).to_f64().unwrap();
    run_from(initial, diag, schedule, Resume { origin, step: 0, h0 })
}

/// Where a resumed run picks up: the original start time, the step index of the saved
/// state, and the reference norm for the stability cut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resume {
    pub origin: f64,
    pub step: usize,
    pub h0: f64,
}

/// Continues a run from a checkpoint taken at `resume.step`. Step times are laid out from
/// `resume.origin` exactly as in the cold run, so the states agree bit for bit.
pub fn simulate_resume<T: Real>(
    checkpoint: &FlowState<T>,
    diag: &Diagnostics<T>,
    schedule: &Schedule,
    resume: Resume,
) -> Result<Trajectory<T>> {
    run_from(checkpoint, diag, schedule, resume)
}

fn run_from<T: Real>(initial: &FlowState<T>, diag: &Diagnostics<T>, schedule: &Schedule, resume: Resume) -> Result<Trajectory<T>> {
    let params = *diag.params();
    let t_start = resume.origin;
    schedule.validate(t_start)?;
    initial.check_finite()?;

    let mut state = initial.clone();
    let mut stepper = Stepper::new(state.grid(), &params, !schedule.linear_only);
    let n = schedule.n_steps(t_start);
    if resume.step > n {
        return Err(Error::Schedule(format!("checkpoint step {} is past the last step {n}", resume.step)));
    }
    let h0 = resume.h0;

    let mut rows = vec![diag.row(&state, RowFlag::Stable)?];
    let mut checkpoints = Vec::new();
    let mut outcome = Outcome::Completed;
    let mut max_div = 0.0_f64;
    let mut max_proj = 0.0_f64;

    for i in resume.step + 1..=n {
        let target = if i == n {
            schedule.t_end
        } else {
            t_start + i as f64 * schedule.dt
        };
        let dt = lit::<T>(target) - state.t;
        match stepper.step(&mut state, dt) {
            Ok(_) => {}
            Err(Error::BlowUp { t }) => {
                outcome = Outcome::Diverged { t };
                rows.push(diverged_row(t));
                break;
            }
            Err(e) => return Err(e),
        }
        state.t = lit(target);
        max_div = max_div.max(stepper.last_divergence_defect().to_f64().unwrap());
        max_proj = max_proj.max(stepper.last_projection_change().to_f64().unwrap());

        if let Some(c) = schedule.checkpoint_every {
            if i % c == 0 {
                checkpoints.push((i, state.clone()));
            }
        }

        let unstable = schedule.stability_factor.is_some_and(|f| {
            let h = hs_half_norm(&state, params.s, false).to_f64().unwrap();
            !(h <= f * h0)
        });
        if unstable {
            outcome = Outcome::Unstable { t: target };
            rows.push(diag.row(&state, RowFlag::Unstable)?);
            break;
        }
        if i % schedule.sample_every == 0 || i == n {
            rows.push(diag.row(&state, RowFlag::Stable)?);
        }
    }

    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let es: Vec<Option<f64>> = rows
        .iter()
        .map(|r| if r.flag == RowFlag::Diverged { None } else { r.estar })
        .collect();
    for (r, d) in rows.iter_mut().zip(fd_rates(&ts, &es)) {
        r.destar_dt_fd = d;
    }

    Ok(Trajectory {
        rows,
        final_state: state,
        outcome,
        checkpoints,
        max_divergence_defect: max_div,
        max_projection_change: max_proj,
    })
}

fn diverged_row(t: f64) -> DiagnosticsRow {
    let nan = f64::NAN;
    DiagnosticsRow {
        t,
        e: nan,
        d: None,
        estar: None,
        u1neq_l2: nan,
        u2_l2: nan,
        u2hat_l1: nan,
        thetaneq_l2: nan,
        hs_half_norm: nan,
        diss_visc: None,
        diss_u2_weighted: None,
        diss_k13: None,
        diss_upsilon: None,
        diss_t3: None,
        destar_dt_fd: None,
        flag: RowFlag::Diverged,
        hs_half_neq: nan,
        short: Default::default(),
        long: None,
        symmetry_defect: nan,
        divergence_defect: nan,
    }
}
