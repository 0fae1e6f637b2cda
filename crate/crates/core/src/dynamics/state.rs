use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::grid::{SpectralField, SpectralGrid};
use crate::scalar::{from_int, lit, Real};

/// `(û₁, û₂, θ̂)` at time `t` in the sheared frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState<T> {
    pub t: T,
    pub u1: SpectralField<T>,
    pub u2: SpectralField<T>,
    pub theta: SpectralField<T>,
}

/// Per-mode divergence tolerance used by [`FlowState::divergence_defect`] checks.
pub const DIVERGENCE_TOL: f64 = 1e-8;

impl<T: Real> FlowState<T> {
    pub fn zeros(grid: &SpectralGrid<T>, t: T) -> Self {
        Self {
            t,
            u1: SpectralField::zeros(grid),
            u2: SpectralField::zeros(grid),
            theta: SpectralField::zeros(grid),
        }
    }

    pub fn new(t: T, u1: SpectralField<T>, u2: SpectralField<T>, theta: SpectralField<T>) -> Result<Self> {
        u1.ensure_same_grid(&u2)?;
        u1.ensure_same_grid(&theta)?;
        Ok(Self { t, u1, u2, theta })
    }

    pub fn grid(&self) -> &SpectralGrid<T> {
        self.u1.grid()
    }

    pub fn fields(&self) -> [&SpectralField<T>; 3] {
        [&self.u1, &self.u2, &self.theta]
    }

    pub fn fields_mut(&mut self) -> [&mut SpectralField<T>; 3] {
        [&mut self.u1, &mut self.u2, &mut self.theta]
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.fields().iter().all(|f| f.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        for f in self.fields() {
            f.check_finite()?;
        }
        Ok(())
    }

    /// Largest reality-symmetry defect over the three fields.
    pub fn symmetry_defect(&self) -> T {
        self.fields()
            .iter()
            .map(|f| f.symmetry_defect())
            .fold(T::zero(), T::max)
    }

    pub fn symmetrize(&mut self) {
        for f in self.fields_mut() {
            f.symmetrize();
        }
    }

    /// `max over modes of |k û₁ + (ξ−kt) û₂| / (|k, ξ−kt|·|û| + 1e−300)`.
    pub fn divergence_defect(&self) -> T {
        let g = *self.grid();
        let tiny = lit::<T>(1e-300_f64.max(T::min_positive_value().to_f64().unwrap()));
        let mut worst = T::zero();
        for (i, (k, j)) in g.modes().enumerate() {
            let kf = from_int::<T>(k);
            let eta = g.xi(j) - kf * self.t;
            let a = self.u1.coeffs()[i];
            let b = self.u2.coeffs()[i];
            let div = (a * kf + b * eta).norm();
            let mag = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let scale = (kf * kf + eta * eta).sqrt() * mag + tiny;
            if k == 0 && j == 0 {
                // only the mean-zero condition on û₂ applies here
                worst = worst.max(b.norm() / (mag + tiny));
                continue;
            }
            worst = worst.max(div / scale);
        }
        worst
    }

    pub fn is_divergence_free(&self, tol: T) -> bool {
        self.divergence_defect() <= tol
    }

    /// `û ← û − (k, ξ−kt)·(k û₁ + (ξ−kt) û₂)/(k² + (ξ−kt)²)`; `û₂(0,0) ← 0`.
    pub fn project(&mut self) {
        let g = *self.grid();
        let t = self.t;
        let (u1, u2) = (self.u1.coeffs_mut(), self.u2.coeffs_mut());
        for (i, (k, j)) in g.modes().enumerate() {
            let kf = from_int::<T>(k);
            let eta = g.xi(j) - kf * t;
            let d = kf * kf + eta * eta;
            if d == T::zero() {
                u2[i] = Complex::zero();
                continue;
            }
            let c = (u1[i] * kf + u2[i] * eta) / d;
            u1[i] = u1[i] - c * kf;
            u2[i] = u2[i] - c * eta;
        }
    }

    /// `self ← self + a·other` on all three fields. Time is left alone.
    pub fn axpy(&mut self, a: T, other: &Self) -> Result<()> {
        self.u1.axpy(a, &other.u1)?;
        self.u2.axpy(a, &other.u2)?;
        self.theta.axpy(a, &other.theta)
    }

    pub fn scale(&mut self, a: T) {
        for f in self.fields_mut() {
            f.scale(a);
        }
    }

    /// `sqrt(‖û‖² + ‖θ̂‖²)` in plain `L²`.
    pub fn l2_norm(&self) -> T {
        let dxi = self.grid().dxi();
        let s: T = self
            .fields()
            .iter()
            .flat_map(|f| f.coeffs().iter().map(|c| c.norm_sqr()))
            .sum();
        (s * dxi).sqrt()
    }

    pub fn cast<U: Real>(&self) -> FlowState<U> {
        FlowState {
            t: lit(self.t.to_f64().unwrap()),
            u1: self.u1.cast(),
            u2: self.u2.cast(),
            theta: self.theta.cast(),
        }
    }

    /// Largest coefficient difference against another state on the same grid.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.grid() != other.grid() {
            return Err(Error::GridMismatch);
        }
        let mut worst = T::zero();
        for (a, b) in self.fields().iter().zip(other.fields()) {
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                worst = worst.max((*x - *y).norm());
            }
        }
        Ok(worst)
    }

    /// Largest coefficient modulus over the three fields.
    pub fn max_abs(&self) -> T {
        self.fields().iter().map(|f| f.max_abs()).fold(T::zero(), T::max)
    }
}

/// Returns a projected copy.
pub fn leray_project_moving<T: Real>(state: &FlowState<T>) -> FlowState<T> {
    let mut s = state.clone();
    s.project();
    s
}
