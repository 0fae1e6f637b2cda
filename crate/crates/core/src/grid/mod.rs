//! Truncated Fourier lattice on 𝕋 × ℝ and the complex coefficient fields living on it.
//!
//! The real line in `Y` is replaced by a torus of length `L_Y`, so the dual variable
//! runs over the uniform lattice `ξ_j = j·dxi` with `dxi = 2π / L_Y`. Integrals over `ξ`
//! become `dxi`-weighted sums, which is the only normalization used anywhere in the crate.

mod convolution;
mod weight;

pub use convolution::{convolve_direct, convolve_fast, Convolver};
pub use weight::{WeightFn, WeightTag};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{from_int, lit, Real};

/// Tolerance used when checking the reality symmetry `f̂(−k,−ξ) = conj f̂(k,ξ)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralGrid<T> {
    k_max: i64,
    j_max: i64,
    l_y: T,
    dxi: T,
    dealias_fraction: T,
}

impl<T: Real> SpectralGrid<T> {
    /// Builds the lattice `k ∈ [−K, K]`, `ξ_j = j·2π/L_Y` for `j ∈ [−J, J]`.
    pub fn new(k_max: i64, j_max: i64, l_y: T) -> Result<Self> {
        if k_max < 1 {
            return Err(Error::InvalidGrid(format!("K must be >= 1, got {k_max}")));
        }
        if j_max < 1 {
            return Err(Error::InvalidGrid(format!("J must be >= 1, got {j_max}")));
        }
        if !(l_y > T::zero()) || !l_y.is_finite() {
            return Err(Error::InvalidGrid(format!("L_Y must be positive, got {l_y}")));
        }
        Ok(Self {
            k_max,
            j_max,
            l_y,
            dxi: T::TAU() / l_y,
            dealias_fraction: lit(2.0 / 3.0),
        })
    }

    /// Fraction of the collocation modes retained by products on the fast path.
    /// Values up to 2/3 make the fast convolution alias-free.
    pub fn with_dealias_fraction(mut self, fraction: T) -> Result<Self> {
        if !(fraction > T::zero() && fraction <= T::one()) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {fraction}"
            )));
        }
        self.dealias_fraction = fraction;
        Ok(self)
    }

    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    pub fn j_max(&self) -> i64 {
        self.j_max
    }

    pub fn l_y(&self) -> T {
        self.l_y
    }

    pub fn dxi(&self) -> T {
        self.dxi
    }

    pub fn dealias_fraction(&self) -> T {
        self.dealias_fraction
    }

    pub fn nk(&self) -> usize {
        (2 * self.k_max + 1) as usize
    }

    pub fn nj(&self) -> usize {
        (2 * self.j_max + 1) as usize
    }

    /// Total number of lattice modes `(2K+1)(2J+1)`.
    pub fn len(&self) -> usize {
        self.nk() * self.nj()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn xi(&self, j: i64) -> T {
        from_int::<T>(j) * self.dxi
    }

    #[inline]
    pub fn contains(&self, k: i64, j: i64) -> bool {
        k.abs() <= self.k_max && j.abs() <= self.j_max
    }

    /// Row-major position of `(k, j)`: `k` is the slow index, `j` the fast one.
    #[inline]
    pub fn index(&self, k: i64, j: i64) -> usize {
        debug_assert!(self.contains(k, j));
        ((k + self.k_max) as usize) * self.nj() + (j + self.j_max) as usize
    }

    #[inline]
    pub fn mode_at(&self, idx: usize) -> (i64, i64) {
        let nj = self.nj();
        ((idx / nj) as i64 - self.k_max, (idx % nj) as i64 - self.j_max)
    }

    /// All `(k, j)` pairs in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.len()).map(move |i| self.mode_at(i))
    }

    /// Same lattice, possibly in another float type.
    pub fn cast<U: Real>(&self) -> SpectralGrid<U> {
        SpectralGrid {
            k_max: self.k_max,
            j_max: self.j_max,
            l_y: lit(self.l_y.to_f64().unwrap()),
            dxi: lit(self.dxi.to_f64().unwrap()),
            dealias_fraction: lit(self.dealias_fraction.to_f64().unwrap()),
        }
    }
}

/// Complex Fourier coefficients `f̂(k, ξ_j)` of a real field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    grid: SpectralGrid<T>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: &SpectralGrid<T>) -> Self {
        Self {
            grid: *grid,
            coeffs: vec![Complex::zero(); grid.len()],
        }
    }

    /// Samples `sampler(k, ξ)` on the lattice, then averages each coefficient with the
    /// conjugate of its mirror so that the field is real in physical space.
    pub fn from_function<F>(grid: &SpectralGrid<T>, mut sampler: F) -> Result<Self>
    where
        F: FnMut(i64, T) -> Complex<T>,
    {
        let mut coeffs = Vec::with_capacity(grid.len());
        for (k, j) in grid.modes() {
            let c = sampler(k, grid.xi(j));
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFinite { k, j });
            }
            coeffs.push(c);
        }
        let mut field = Self { grid: *grid, coeffs };
        field.symmetrize();
        Ok(field)
    }

    /// Wraps raw coefficients in storage order. No symmetrization is applied.
    pub fn from_coeffs(grid: &SpectralGrid<T>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let field = Self {
            grid: *grid,
            coeffs,
        };
        field.check_finite()?;
        Ok(field)
    }

    pub fn grid(&self) -> &SpectralGrid<T> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    /// Coefficient at `(k, j)`; zero outside the truncation.
    #[inline]
    pub fn get(&self, k: i64, j: i64) -> Complex<T> {
        if self.grid.contains(k, j) {
            self.coeffs[self.grid.index(k, j)]
        } else {
            Complex::zero()
        }
    }

    #[inline]
    pub fn set(&mut self, k: i64, j: i64, value: Complex<T>) {
        let idx = self.grid.index(k, j);
        self.coeffs[idx] = value;
    }

    /// `f̂(k,ξ) ← (f̂(k,ξ) + conj f̂(−k,−ξ)) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.coeffs.len();
        let half = lit::<T>(0.5);
        // storage is point-symmetric: the mirror of index i is n-1-i
        for i in 0..n / 2 + 1 {
            let m = n - 1 - i;
            let avg = (self.coeffs[i] + self.coeffs[m].conj()) * half;
            self.coeffs[i] = avg;
            self.coeffs[m] = avg.conj();
        }
    }

    /// Largest mismatch `|f̂(k,ξ) − conj f̂(−k,−ξ)|` relative to the largest coefficient.
    pub fn symmetry_defect(&self) -> T {
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let n = self.coeffs.len();
        let mut worst = T::zero();
        for i in 0..n {
            let d = (self.coeffs[i] - self.coeffs[n - 1 - i].conj()).norm();
            worst = worst.max(d);
        }
        worst / scale
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.symmetry_defect() <= tol
    }

    pub fn check_finite(&self) -> Result<()> {
        for (i, c) in self.coeffs.iter().enumerate() {
            if !(c.re.is_finite() && c.im.is_finite()) {
                let (k, j) = self.grid.mode_at(i);
                return Err(Error::NonFinite { k, j });
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.norm()))
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn scale(&mut self, a: T) {
        for c in &mut self.coeffs {
            *c = *c * a;
        }
    }

    /// `self ← self + a·other`.
    pub fn axpy(&mut self, a: T, other: &Self) -> Result<()> {
        self.ensure_same_grid(other)?;
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c = *c + *o * a;
        }
        Ok(())
    }

    /// Pointwise `(k, ξ, f̂) → g(k, ξ, f̂)`.
    pub fn map_modes<F>(&self, mut f: F) -> Self
    where
        F: FnMut(i64, T, Complex<T>) -> Complex<T>,
    {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let (k, j) = self.grid.mode_at(i);
                f(k, self.grid.xi(j), c)
            })
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Converts to another float type, coefficient by coefficient.
    pub fn cast<U: Real>(&self) -> SpectralField<U> {
        SpectralField {
            grid: self.grid.cast(),
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Complex::new(lit(c.re.to_f64().unwrap()), lit(c.im.to_f64().unwrap())))
                .collect(),
        }
    }
}

/// `sqrt( Σ_k Σ_j w(t,k,ξ_j)² |f̂(k,ξ_j)|² · dxi )`.
pub fn weighted_norm<T: Real>(f: &SpectralField<T>, w: &WeightFn<'_, T>, t: T) -> T {
    let grid = f.grid();
    let mut acc = T::zero();
    for (i, c) in f.coeffs().iter().enumerate() {
        let (k, j) = grid.mode_at(i);
        let wv = w.eval(t, k, grid.xi(j));
        acc = acc + wv * wv * c.norm_sqr();
    }
    (acc * grid.dxi()).sqrt()
}

/// `Σ_{k≠0} Σ_j |f̂(k,ξ_j)| · dxi`.
pub fn l1_norm_nonzero_modes<T: Real>(f: &SpectralField<T>) -> T {
    let grid = f.grid();
    let mut acc = T::zero();
    for (i, c) in f.coeffs().iter().enumerate() {
        let (k, _) = grid.mode_at(i);
        if k != 0 {
            acc = acc + c.norm();
        }
    }
    acc * grid.dxi()
}
