use num_complex::Complex;
use num_traits::Zero;

use super::state::FlowState;
use crate::error::Result;
use crate::grid::{convolve_direct, Convolver, SpectralField, SpectralGrid};
use crate::params::PhysicalParams;
use crate::scalar::{from_int, lit, Real};

/// Time derivative of `(û₁, û₂, θ̂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tendency<T> {
    pub du1: SpectralField<T>,
    pub du2: SpectralField<T>,
    pub dtheta: SpectralField<T>,
}

impl<T: Real> Tendency<T> {
    pub fn zeros(grid: &SpectralGrid<T>) -> Self {
        Self {
            du1: SpectralField::zeros(grid),
            du2: SpectralField::zeros(grid),
            dtheta: SpectralField::zeros(grid),
        }
    }

    pub fn fields(&self) -> [&SpectralField<T>; 3] {
        [&self.du1, &self.du2, &self.dtheta]
    }

    pub fn add(&mut self, other: &Self) -> Result<()> {
        self.du1.axpy(T::one(), &other.du1)?;
        self.du2.axpy(T::one(), &other.du2)?;
        self.dtheta.axpy(T::one(), &other.dtheta)
    }

    pub fn max_abs(&self) -> T {
        self.fields().iter().map(|f| f.max_abs()).fold(T::zero(), T::max)
    }
}

/// The three pieces of the right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct TendencyParts<T> {
    /// `−ν(k²+(ξ−kt)²)û`, `−μ(k²+(ξ−kt)²)θ̂`
    pub linear_stiff: Tendency<T>,
    /// lift-up, buoyancy and linear pressure
    pub linear_soft: Tendency<T>,
    /// `(F̂, Ĝ)`
    pub nonlinear: Tendency<T>,
}

impl<T: Real> TendencyParts<T> {
    pub fn total(&self) -> Result<Tendency<T>> {
        let mut t = self.linear_stiff.clone();
        t.add(&self.linear_soft)?;
        t.add(&self.nonlinear)?;
        Ok(t)
    }
}

#[inline]
fn i_times<T: Real>(c: Complex<T>) -> Complex<T> {
    Complex::new(-c.im, c.re)
}

/// `p̂_L = (2ik û₂ + iγ²(ξ−kt) θ̂) / (k² + (ξ−kt)²)`, zero at `(0,0)`.
pub fn pressure_linear<T: Real>(state: &FlowState<T>, params: &PhysicalParams<T>) -> SpectralField<T> {
    let g = *state.grid();
    let g2 = params.gamma * params.gamma;
    let two = lit::<T>(2.0);
    let mut out = SpectralField::zeros(&g);
    for (i, (k, j)) in g.modes().enumerate() {
        let kf = from_int::<T>(k);
        let eta = g.xi(j) - kf * state.t;
        let d = kf * kf + eta * eta;
        if d == T::zero() {
            continue;
        }
        let num = state.u2.coeffs()[i] * (two * kf) + state.theta.coeffs()[i] * (g2 * eta);
        out.coeffs_mut()[i] = i_times(num) / d;
    }
    out
}

/// Dissipation part of the linear operator.
pub fn linear_stiff<T: Real>(state: &FlowState<T>, params: &PhysicalParams<T>) -> Tendency<T> {
    let g = *state.grid();
    let mut out = Tendency::zeros(&g);
    for (i, (k, j)) in g.modes().enumerate() {
        let kf = from_int::<T>(k);
        let eta = g.xi(j) - kf * state.t;
        let d = kf * kf + eta * eta;
        out.du1.coeffs_mut()[i] = state.u1.coeffs()[i] * (-params.nu * d);
        out.du2.coeffs_mut()[i] = state.u2.coeffs()[i] * (-params.nu * d);
        out.dtheta.coeffs_mut()[i] = state.theta.coeffs()[i] * (-params.mu * d);
    }
    out
}

/// Coupling part of the linear operator with the linear pressure already eliminated.
///
/// At `k = 0` the fractions take their `k → 0` limits; the `(0,0)` mode is left untouched.
pub fn linear_soft<T: Real>(state: &FlowState<T>, params: &PhysicalParams<T>) -> Tendency<T> {
    let g = *state.grid();
    let mut out = Tendency::zeros(&g);
    let n = g.len();
    let (u1, u2, th) = (state.u1.coeffs(), state.u2.coeffs(), state.theta.coeffs());
    let coeff = soft_coefficients(&g, state.t, params.gamma);
    for i in 0..n {
        let [a, b, c, e] = coeff[i];
        let (_, v2, vt) = (u1[i], u2[i], th[i]);
        out.du1.coeffs_mut()[i] = v2 * a + vt * b;
        out.du2.coeffs_mut()[i] = v2 * c + vt * e;
        out.dtheta.coeffs_mut()[i] = if g.mode_at(i) == (0, 0) { Complex::zero() } else { v2 };
    }
    out
}

/// Per-mode `[∂û₁/∂û₂, ∂û₁/∂θ̂, ∂û₂/∂û₂, ∂û₂/∂θ̂]` of the coupling.
pub(crate) fn soft_coefficients<T: Real>(g: &SpectralGrid<T>, t: T, gamma: T) -> Vec<[T; 4]> {
    let g2 = gamma * gamma;
    let two = lit::<T>(2.0);
    g.modes()
        .map(|(k, j)| {
            let kf = from_int::<T>(k);
            let eta = g.xi(j) - kf * t;
            let d = kf * kf + eta * eta;
            if d == T::zero() {
                [T::zero(); 4]
            } else {
                [
                    (kf * kf - eta * eta) / d,
                    g2 * kf * eta / d,
                    two * kf * eta / d,
                    -g2 * kf * kf / d,
                ]
            }
        })
        .collect()
}

/// Sum of [`linear_stiff`] and [`linear_soft`].
pub fn linear_rhs<T: Real>(state: &FlowState<T>, params: &PhysicalParams<T>) -> Tendency<T> {
    let mut t = linear_stiff(state, params);
    t.add(&linear_soft(state, params)).expect("same grid");
    t
}

/// Spectral products needed by the nonlinear terms.
#[derive(Clone, Debug)]
pub struct Products<T> {
    /// `𝔉(u·∇_L u₁)`, `𝔉(u·∇_L u₂)`
    pub advect_u: [SpectralField<T>; 2],
    /// `𝔉(u·∇_L θ)`
    pub advect_theta: SpectralField<T>,
    /// `𝔉(u₂ ∇_L² u₁)`, `𝔉(u₂ ∇_L² u₂)`
    pub w: [SpectralField<T>; 2],
}

/// `∇_L f` in Fourier: `(ik f̂, i(ξ−kt) f̂)`.
pub fn grad_l<T: Real>(f: &SpectralField<T>, t: T) -> [SpectralField<T>; 2] {
    let dx = f.map_modes(|k, _, c| i_times(c) * from_int::<T>(k));
    let dy = f.map_modes(|k, xi, c| i_times(c) * (xi - from_int::<T>(k) * t));
    [dx, dy]
}

/// Products assembled with [`convolve_direct`]. Reference path for tests.
pub fn products_direct<T: Real>(state: &FlowState<T>) -> Result<Products<T>> {
    let t = state.t;
    let [u1x, u1y] = grad_l(&state.u1, t);
    let [u2x, u2y] = grad_l(&state.u2, t);
    let [thx, thy] = grad_l(&state.theta, t);
    let conv = |a: &SpectralField<T>, b: &SpectralField<T>| convolve_direct(a, b);
    let sum = |mut a: SpectralField<T>, b: SpectralField<T>| -> Result<SpectralField<T>> {
        a.axpy(T::one(), &b)?;
        Ok(a)
    };
    let w1 = conv(&state.u2, &u1y)?;
    let w2 = conv(&state.u2, &u2y)?;
    Ok(Products {
        advect_u: [
            sum(conv(&state.u1, &u1x)?, w1.clone())?,
            sum(conv(&state.u1, &u2x)?, w2.clone())?,
        ],
        advect_theta: sum(conv(&state.u1, &thx)?, conv(&state.u2, &thy)?)?,
        w: [w1, w2],
    })
}

/// Reusable transform pipeline and buffers for the nonlinear terms.
pub struct NonlinearWorkspace<T: Real> {
    conv: Convolver<T>,
    phys: Vec<Vec<Complex<T>>>,
    spec: Vec<Complex<T>>,
}

impl<T: Real> NonlinearWorkspace<T> {
    pub fn new(grid: &SpectralGrid<T>) -> Self {
        Self {
            conv: Convolver::new(grid),
            phys: vec![Vec::new(); 8],
            spec: vec![Complex::zero(); grid.len()],
        }
    }

    pub fn convolver(&self) -> &Convolver<T> {
        &self.conv
    }

    /// Same as [`products_direct`] via eight inverse and five forward transforms.
    pub fn products(&mut self, state: &FlowState<T>) -> Result<Products<T>> {
        let g = *state.grid();
        let t = state.t;
        let n = g.len();
        // spectral inputs: u1, u2, ∂x u1, ∂y u1, ∂x u2, ∂y u2, ∂x θ, ∂y θ
        for slot in 0..8 {
            for (i, (k, j)) in g.modes().enumerate() {
                let kf = from_int::<T>(k);
                let eta = g.xi(j) - kf * t;
                let (src, factor) = match slot {
                    0 => (state.u1.coeffs()[i], None),
                    1 => (state.u2.coeffs()[i], None),
                    2 => (state.u1.coeffs()[i], Some(kf)),
                    3 => (state.u1.coeffs()[i], Some(eta)),
                    4 => (state.u2.coeffs()[i], Some(kf)),
                    5 => (state.u2.coeffs()[i], Some(eta)),
                    6 => (state.theta.coeffs()[i], Some(kf)),
                    _ => (state.theta.coeffs()[i], Some(eta)),
                };
                self.spec[i] = match factor {
                    None => src,
                    Some(f) => i_times(src) * f,
                };
            }
            let mut buf = std::mem::take(&mut self.phys[slot]);
            self.conv.to_physical(&self.spec[..n], &mut buf);
            self.phys[slot] = buf;
        }
        let m = self.conv.physical_len();
        let p = &self.phys;
        let mut prod = vec![Complex::zero(); m];
        let dxi = g.dxi();
        let mut out = |f: &dyn Fn(usize) -> Complex<T>, conv: &Convolver<T>| {
            for (x, v) in prod.iter_mut().enumerate() {
                *v = f(x);
            }
            let mut field = SpectralField::zeros(&g);
            conv.to_spectral(&mut prod, dxi, field.coeffs_mut());
            field
        };
        let a1 = out(&|x| p[0][x] * p[2][x] + p[1][x] * p[3][x], &self.conv);
        let a2 = out(&|x| p[0][x] * p[4][x] + p[1][x] * p[5][x], &self.conv);
        let at = out(&|x| p[0][x] * p[6][x] + p[1][x] * p[7][x], &self.conv);
        let w1 = out(&|x| p[1][x] * p[3][x], &self.conv);
        let w2 = out(&|x| p[1][x] * p[5][x], &self.conv);
        Ok(Products {
            advect_u: [a1, a2],
            advect_theta: at,
            w: [w1, w2],
        })
    }
}

/// `p̂_NL = 2i(k Ŵ₁ + (ξ−kt) Ŵ₂)/(k² + (ξ−kt)²)` with `Ŵ = 𝔉(u₂ ∇_L² u)`; zero at `(0,0)`.
pub fn pressure_nonlinear_from<T: Real>(products: &Products<T>, t: T) -> SpectralField<T> {
    let g = *products.w[0].grid();
    let two = lit::<T>(2.0);
    let mut out = SpectralField::zeros(&g);
    for (i, (k, j)) in g.modes().enumerate() {
        let kf = from_int::<T>(k);
        let eta = g.xi(j) - kf * t;
        let d = kf * kf + eta * eta;
        if d == T::zero() {
            continue;
        }
        let num = products.w[0].coeffs()[i] * kf + products.w[1].coeffs()[i] * eta;
        out.coeffs_mut()[i] = i_times(num) * two / d;
    }
    out
}

/// Nonlinear pressure through the fast transform path.
pub fn pressure_nonlinear<T: Real>(state: &FlowState<T>) -> Result<SpectralField<T>> {
    let mut ws = NonlinearWorkspace::new(state.grid());
    Ok(pressure_nonlinear_from(&ws.products(state)?, state.t))
}

/// `F̂ = −𝔉(u·∇_L u) − i(k, ξ−kt) p̂_NL`, `Ĝ = −𝔉(u·∇_L θ)`.
pub fn nonlinear_from<T: Real>(products: &Products<T>, t: T) -> Tendency<T> {
    let g = *products.w[0].grid();
    let p = pressure_nonlinear_from(products, t);
    let mut out = Tendency::zeros(&g);
    for (i, (k, j)) in g.modes().enumerate() {
        let kf = from_int::<T>(k);
        let eta = g.xi(j) - kf * t;
        let ip = i_times(p.coeffs()[i]);
        out.du1.coeffs_mut()[i] = -products.advect_u[0].coeffs()[i] - ip * kf;
        out.du2.coeffs_mut()[i] = -products.advect_u[1].coeffs()[i] - ip * eta;
        out.dtheta.coeffs_mut()[i] = -products.advect_theta.coeffs()[i];
    }
    out
}

/// `(F̂, Ĝ)` through the fast transform path.
pub fn nonlinear_rhs<T: Real>(state: &FlowState<T>, _params: &PhysicalParams<T>) -> Result<Tendency<T>> {
    let mut ws = NonlinearWorkspace::new(state.grid());
    Ok(nonlinear_from(&ws.products(state)?, state.t))
}

/// All three pieces of the right-hand side at `state`.
pub fn tendency_parts<T: Real>(
    state: &FlowState<T>,
    params: &PhysicalParams<T>,
    ws: Option<&mut NonlinearWorkspace<T>>,
) -> Result<TendencyParts<T>> {
    let nonlinear = match ws {
        Some(ws) => nonlinear_from(&ws.products(state)?, state.t),
        None => Tendency::zeros(state.grid()),
    };
    Ok(TendencyParts {
        linear_stiff: linear_stiff(state, params),
        linear_soft: linear_soft(state, params),
        nonlinear,
    })
}

/// `∫_{t0}^{t1} (k² + (ξ−kτ)²) dτ`, written around the midpoint so that it is a sum of
/// nonnegative terms times `t1 − t0`.
#[inline]
pub fn dissipation_integral<T: Real>(k: i64, xi: T, t0: T, t1: T) -> T {
    let kf = from_int::<T>(k);
    let h = t1 - t0;
    let tm = lit::<T>(0.5) * (t0 + t1);
    let e = xi - kf * tm;
    h * (kf * kf + e * e + kf * kf * h * h / lit(12.0))
}
