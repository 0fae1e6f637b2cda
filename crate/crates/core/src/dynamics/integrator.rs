use super::rhs::{dissipation_integral, nonlinear_from, NonlinearWorkspace};
use super::state::FlowState;
use crate::error::{Error, Result};
use crate::grid::{l1_norm_nonzero_modes, SpectralGrid};
use crate::params::PhysicalParams;
use crate::scalar::{from_int, lit, Real};

/// Substep budget per step before the guard reports blow-up.
pub const MAX_SUBSTEPS: usize = 4096;

/// Advances `FlowState` with integrating-factor RK4 (Lawson form).
///
/// Dissipation is integrated exactly through `exp(−ν∫(k²+(ξ−kτ)²)dτ)`; RK4 handles the
/// coupling and, unless disabled, the nonlinear terms. The divergence constraint is
/// re-projected after every step.
pub struct Stepper<T: Real> {
    params: PhysicalParams<T>,
    grid: SpectralGrid<T>,
    ws: Option<NonlinearWorkspace<T>>,
    guard: bool,
    last_divergence_defect: T,
    last_projection_change: T,
}

struct Factors<T> {
    half_u: Vec<T>,
    half_th: Vec<T>,
    second_u: Vec<T>,
    second_th: Vec<T>,
}

impl<T: Real> Stepper<T> {
    pub fn new(grid: &SpectralGrid<T>, params: &PhysicalParams<T>, nonlinear: bool) -> Self {
        Self {
            params: *params,
            grid: *grid,
            ws: nonlinear.then(|| NonlinearWorkspace::new(grid)),
            guard: nonlinear,
            last_divergence_defect: T::zero(),
            last_projection_change: T::zero(),
        }
    }

    /// Turns the `dt ≤ 0.5/max(1, K‖û‖_{L¹})` substepping guard on or off.
    pub fn with_guard(mut self, on: bool) -> Self {
        self.guard = on;
        self
    }

    pub fn is_nonlinear(&self) -> bool {
        self.ws.is_some()
    }

    /// Divergence defect measured just before the most recent re-projection.
    pub fn last_divergence_defect(&self) -> T {
        self.last_divergence_defect
    }

    /// `‖û_before − û_after‖ / ‖û_after‖` of the most recent re-projection.
    pub fn last_projection_change(&self) -> T {
        self.last_projection_change
    }

    /// Largest step allowed by the guard at the current state.
    pub fn max_stable_dt(&self, state: &FlowState<T>) -> T {
        let k = from_int::<T>(self.grid.k_max());
        let l1 = l1_norm_nonzero_modes(&state.u1) + l1_norm_nonzero_modes(&state.u2);
        let zero_modes: T = state
            .u1
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.mode_at(*i).0 == 0)
            .map(|(_, c)| c.norm())
            .sum::<T>()
            * self.grid.dxi();
        lit::<T>(0.5) / T::one().max(k * (l1 + zero_modes))
    }

    fn factors(&self, t0: T, h: T) -> Factors<T> {
        let n = self.grid.len();
        let tm = t0 + h * lit(0.5);
        let t1 = t0 + h;
        let mut f = Factors {
            half_u: Vec::with_capacity(n),
            half_th: Vec::with_capacity(n),
            second_u: Vec::with_capacity(n),
            second_th: Vec::with_capacity(n),
        };
        for (k, j) in self.grid.modes() {
            let xi = self.grid.xi(j);
            let d1 = dissipation_integral(k, xi, t0, tm);
            let d2 = dissipation_integral(k, xi, tm, t1);
            f.half_u.push((-self.params.nu * d1).exp());
            f.half_th.push((-self.params.mu * d1).exp());
            f.second_u.push((-self.params.nu * d2).exp());
            f.second_th.push((-self.params.mu * d2).exp());
        }
        f
    }

    /// Coupling plus nonlinear terms at `state`, returned as a state-shaped container.
    fn soft(&mut self, state: &FlowState<T>) -> Result<FlowState<T>> {
        let g = self.grid;
        let g2 = self.params.gamma * self.params.gamma;
        let two = lit::<T>(2.0);
        let mut out = match self.ws.as_mut() {
            Some(ws) => {
                let nl = nonlinear_from(&ws.products(state)?, state.t);
                FlowState {
                    t: state.t,
                    u1: nl.du1,
                    u2: nl.du2,
                    theta: nl.dtheta,
                }
            }
            None => FlowState::zeros(&g, state.t),
        };
        let (u2, th) = (state.u2.coeffs(), state.theta.coeffs());
        let [o1, o2, ot] = out.fields_mut();
        let (o1, o2, ot) = (o1.coeffs_mut(), o2.coeffs_mut(), ot.coeffs_mut());
        for (i, (k, j)) in g.modes().enumerate() {
            let kf = from_int::<T>(k);
            let eta = g.xi(j) - kf * state.t;
            let d = kf * kf + eta * eta;
            if d == T::zero() {
                continue;
            }
            let inv = T::one() / d;
            o1[i] = o1[i] + u2[i] * ((kf * kf - eta * eta) * inv) + th[i] * (g2 * kf * eta * inv);
            o2[i] = o2[i] + u2[i] * (two * kf * eta * inv) - th[i] * (g2 * kf * kf * inv);
            ot[i] = ot[i] + u2[i];
        }
        Ok(out)
    }

    /// One Lawson–RK4 step of signed size `h`. Negative `h` integrates backwards.
    pub fn advance(&mut self, state: &mut FlowState<T>, h: T) -> Result<()> {
        let t0 = state.t;
        let half = h * lit(0.5);
        let f = self.factors(t0, h);
        let n = self.grid.len();

        // apply per-mode factors (u-factor on velocity, θ-factor on temperature)
        let scale = |s: &FlowState<T>, fu: &dyn Fn(usize) -> T, ft: &dyn Fn(usize) -> T| -> FlowState<T> {
            let mut o = s.clone();
            for i in 0..n {
                let a = fu(i);
                let b = ft(i);
                o.u1.coeffs_mut()[i] = s.u1.coeffs()[i] * a;
                o.u2.coeffs_mut()[i] = s.u2.coeffs()[i] * a;
                o.theta.coeffs_mut()[i] = s.theta.coeffs()[i] * b;
            }
            o
        };
        let full_u = |i: usize| f.half_u[i] * f.second_u[i];
        let full_th = |i: usize| f.half_th[i] * f.second_th[i];

        let k1 = self.soft(state)?;

        let mut ua = state.clone();
        ua.axpy(half, &k1)?;
        let mut ua = scale(&ua, &|i| f.half_u[i], &|i| f.half_th[i]);
        ua.t = t0 + half;
        ua.project();
        let k2 = self.soft(&ua)?;

        let mut ub = scale(state, &|i| f.half_u[i], &|i| f.half_th[i]);
        ub.axpy(half, &k2)?;
        ub.t = t0 + half;
        ub.project();
        let k3 = self.soft(&ub)?;

        let mut uc = scale(state, &full_u, &full_th);
        uc.axpy(h, &scale(&k3, &|i| f.second_u[i], &|i| f.second_th[i]))?;
        uc.t = t0 + h;
        uc.project();
        let k4 = self.soft(&uc)?;

        let sixth = h / lit(6.0);
        let third = h / lit(3.0);
        let mut k23 = k2;
        k23.axpy(T::one(), &k3)?;
        let mut next = scale(state, &full_u, &full_th);
        next.axpy(sixth, &scale(&k1, &full_u, &full_th))?;
        next.axpy(third, &scale(&k23, &|i| f.second_u[i], &|i| f.second_th[i]))?;
        next.axpy(sixth, &k4)?;
        next.t = t0 + h;

        self.last_divergence_defect = next.divergence_defect();
        let before = next.clone();
        next.project();
        let denom = next.l2_norm();
        self.last_projection_change = if denom > T::zero() {
            before.max_abs_diff(&next)? * self.grid.dxi().sqrt() / denom
        } else {
            T::zero()
        };
        if !next.is_finite() {
            return Err(Error::BlowUp {
                t: (t0 + h).to_f64().unwrap(),
            });
        }
        *state = next;
        Ok(())
    }

    /// Advances by `dt > 0`, splitting into equal substeps when the guard requires it.
    /// Needing more than [`MAX_SUBSTEPS`] counts as blow-up. Returns the number of substeps taken.
    pub fn step(&mut self, state: &mut FlowState<T>, dt: T) -> Result<usize> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let mut n = 1usize;
        if self.guard {
            let cap = self.max_stable_dt(state);
            if !cap.is_finite() {
                return Err(Error::BlowUp {
                    t: state.t.to_f64().unwrap(),
                });
            }
            if dt > cap {
                n = (dt / cap).ceil().to_usize().unwrap_or(usize::MAX);
                // a state this large is no longer resolved by the grid
                if n > MAX_SUBSTEPS {
                    return Err(Error::BlowUp {
                        t: state.t.to_f64().unwrap(),
                    });
                }
            }
        }
        let h = dt / from_int::<T>(n as i64);
        let t_target = state.t + dt;
        for _ in 0..n {
            self.advance(state, h)?;
        }
        state.t = t_target;
        Ok(n)
    }
}

/// One full (nonlinear) step of size `dt` from `state`.
pub fn step<T: Real>(state: &FlowState<T>, params: &PhysicalParams<T>, dt: T) -> Result<FlowState<T>> {
    let mut s = state.clone();
    Stepper::new(state.grid(), params, true).step(&mut s, dt)?;
    Ok(s)
}

/// One step of the linearised system.
pub fn step_linear<T: Real>(state: &FlowState<T>, params: &PhysicalParams<T>, dt: T) -> Result<FlowState<T>> {
    let mut s = state.clone();
    Stepper::new(state.grid(), params, false).step(&mut s, dt)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralField;
    use num_complex::Complex;

    #[test]
    fn zero_state_stays_zero() {
        let g = SpectralGrid::new(3, 4, 6.0).unwrap();
        let p = PhysicalParams::standard(1e-2, 1e-2);
        let s = FlowState::zeros(&g, 0.0);
        let n = step(&s, &p, 0.1).unwrap();
        assert_eq!(n.max_abs(), 0.0);
        assert!((n.t - 0.1).abs() < 1e-15);
        assert!(step(&s, &p, 0.0).is_err());
        assert!(step(&s, &p, -0.1).is_err());
    }

    #[test]
    fn zero_mode_heat_is_exact() {
        let g = SpectralGrid::new(2, 4, 6.0).unwrap();
        let p = PhysicalParams::standard(0.3, 0.2);
        let mut s = FlowState::zeros(&g, 0.0);
        s.u1 = SpectralField::from_function(&g, |k, xi| {
            if k == 0 {
                Complex::new(1.0 + xi, 0.5)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .unwrap();
        s.theta = s.u1.clone();
        let dt = 0.37;
        let n = step_linear(&s, &p, dt).unwrap();
        for j in -4..=4 {
            let xi = g.xi(j);
            let eu = (-0.3 * xi * xi * dt).exp();
            let et = (-0.2 * xi * xi * dt).exp();
            assert!((n.u1.get(0, j) - s.u1.get(0, j) * eu).norm() < 1e-14);
            assert!((n.theta.get(0, j) - s.theta.get(0, j) * et).norm() < 1e-14);
            assert_eq!(n.u2.get(0, j), Complex::new(0.0, 0.0));
        }
    }
}
