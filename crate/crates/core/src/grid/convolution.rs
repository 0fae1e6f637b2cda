use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use super::{SpectralField, SpectralGrid};
use crate::error::Result;
use crate::scalar::{from_int, Real};

/// `(f∗g)(k,ξ_j) = Σ_l Σ_m f̂(k−l, ξ_{j−m}) ĝ(l, ξ_m) · dxi`, truncated to the grid.
///
/// Quadratic in the number of modes. Kept as the reference path.
pub fn convolve_direct<T: Real>(f: &SpectralField<T>, g: &SpectralField<T>) -> Result<SpectralField<T>> {
    f.ensure_same_grid(g)?;
    let grid = *f.grid();
    let (kk, jj) = (grid.k_max(), grid.j_max());
    let mut out = SpectralField::zeros(&grid);
    for k in -kk..=kk {
        for j in -jj..=jj {
            let mut acc = Complex::<T>::zero();
            let l_lo = (k - kk).max(-kk);
            let l_hi = (k + kk).min(kk);
            let m_lo = (j - jj).max(-jj);
            let m_hi = (j + jj).min(jj);
            for l in l_lo..=l_hi {
                for m in m_lo..=m_hi {
                    acc = acc + f.get(k - l, j - m) * g.get(l, m);
                }
            }
            out.set(k, j, acc * grid.dxi());
        }
    }
    Ok(out)
}

/// Smallest `n' ≥ n` whose only prime factors are 2, 3 and 5.
pub(crate) fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Transform pipeline between lattice coefficients and a zero-padded collocation grid.
///
/// The collocation sizes satisfy `M ≥ (2K+1)/dealias_fraction` in `X` and likewise in `Y`,
/// so with the default 2/3 fraction every retained product mode is alias-free and
/// [`Convolver::convolve`] agrees with [`convolve_direct`] to rounding.
pub struct Convolver<T: Real> {
    grid: SpectralGrid<T>,
    mx: usize,
    my: usize,
    fwd_x: Arc<dyn Fft<T>>,
    inv_x: Arc<dyn Fft<T>>,
    fwd_y: Arc<dyn Fft<T>>,
    inv_y: Arc<dyn Fft<T>>,
}

impl<T: Real> Convolver<T> {
    pub fn new(grid: &SpectralGrid<T>) -> Self {
        let f = grid.dealias_fraction().to_f64().unwrap();
        let size = |n: usize| fft_friendly((n as f64 / f - 1e-9).ceil() as usize);
        let mx = size(grid.nk());
        let my = size(grid.nj());
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            mx,
            my,
            fwd_x: planner.plan_fft_forward(mx),
            inv_x: planner.plan_fft_inverse(mx),
            fwd_y: planner.plan_fft_forward(my),
            inv_y: planner.plan_fft_inverse(my),
        }
    }

    pub fn grid(&self) -> &SpectralGrid<T> {
        &self.grid
    }

    /// Collocation dimensions `(M_x, M_y)`.
    pub fn collocation_shape(&self) -> (usize, usize) {
        (self.mx, self.my)
    }

    pub fn physical_len(&self) -> usize {
        self.mx * self.my
    }

    #[inline]
    fn wrap(i: i64, m: usize) -> usize {
        i.rem_euclid(m as i64) as usize
    }

    /// Values `Σ f̂(k,ξ_j) e^{2πi(kx/M_x + jy/M_y)}` on the collocation grid, row-major in `x`.
    pub fn to_physical(&self, coeffs: &[Complex<T>], out: &mut Vec<Complex<T>>) {
        let g = &self.grid;
        debug_assert_eq!(coeffs.len(), g.len());
        let (mx, my) = (self.mx, self.my);
        out.clear();
        out.resize(mx * my, Complex::zero());
        let nj = g.nj();
        let mut scratch = vec![Complex::zero(); self.inv_y.get_inplace_scratch_len()];
        for k in -g.k_max()..=g.k_max() {
            let row = Self::wrap(k, mx) * my;
            let src = &coeffs[g.index(k, -g.j_max())..g.index(k, -g.j_max()) + nj];
            let dst = &mut out[row..row + my];
            for (jo, c) in src.iter().enumerate() {
                dst[Self::wrap(jo as i64 - g.j_max(), my)] = *c;
            }
            self.inv_y.process_with_scratch(dst, &mut scratch);
        }
        self.columns(out, &self.inv_x);
    }

    /// Inverse of [`to_physical`](Self::to_physical) restricted to the lattice, scaled by
    /// `scale / (M_x M_y)`. With `scale = dxi` a pointwise product becomes a convolution.
    pub fn to_spectral(&self, phys: &mut [Complex<T>], scale: T, out: &mut [Complex<T>]) {
        let g = &self.grid;
        let (mx, my) = (self.mx, self.my);
        debug_assert_eq!(phys.len(), mx * my);
        self.columns(phys, &self.fwd_x);
        let norm = scale / from_int::<T>((mx * my) as i64);
        let nj = g.nj();
        let mut scratch = vec![Complex::zero(); self.fwd_y.get_inplace_scratch_len()];
        for k in -g.k_max()..=g.k_max() {
            let row = Self::wrap(k, mx) * my;
            let src = &mut phys[row..row + my];
            self.fwd_y.process_with_scratch(src, &mut scratch);
            let base = g.index(k, -g.j_max());
            for jo in 0..nj {
                out[base + jo] = src[Self::wrap(jo as i64 - g.j_max(), my)] * norm;
            }
        }
    }

    fn columns(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let (mx, my) = (self.mx, self.my);
        let mut col = vec![Complex::zero(); mx];
        let mut scratch = vec![Complex::zero(); plan.get_inplace_scratch_len()];
        for y in 0..my {
            for x in 0..mx {
                col[x] = data[x * my + y];
            }
            plan.process_with_scratch(&mut col, &mut scratch);
            for x in 0..mx {
                data[x * my + y] = col[x];
            }
        }
    }

    /// Same result as [`convolve_direct`], computed by transform, product and transform back.
    pub fn convolve(&self, f: &SpectralField<T>, g: &SpectralField<T>) -> Result<SpectralField<T>> {
        f.ensure_same_grid(g)?;
        if f.grid() != &self.grid {
            return Err(crate::error::Error::GridMismatch);
        }
        let mut pf = Vec::new();
        let mut pg = Vec::new();
        self.to_physical(f.coeffs(), &mut pf);
        self.to_physical(g.coeffs(), &mut pg);
        for (a, b) in pf.iter_mut().zip(&pg) {
            *a = *a * *b;
        }
        let mut out = SpectralField::zeros(&self.grid);
        self.to_spectral(&mut pf, self.grid.dxi(), out.coeffs_mut());
        Ok(out)
    }
}

impl<T: Real> std::fmt::Debug for Convolver<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("mx", &self.mx)
            .field("my", &self.my)
            .finish()
    }
}

/// One-shot fast convolution. Plans the transforms on every call; reuse a [`Convolver`]
/// inside loops.
pub fn convolve_fast<T: Real>(f: &SpectralField<T>, g: &SpectralField<T>) -> Result<SpectralField<T>> {
    f.ensure_same_grid(g)?;
    Convolver::new(f.grid()).convolve(f, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &SpectralGrid<f64>, seed: u64) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralField::from_function(grid, |_, _| {
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .unwrap()
    }

    #[test]
    fn fft_sizes() {
        assert_eq!(fft_friendly(7), 8);
        assert_eq!(fft_friendly(11), 12);
        assert_eq!(fft_friendly(98), 100);
        assert_eq!(fft_friendly(1), 1);
    }

    #[test]
    fn delta_identity() {
        let grid = SpectralGrid::new(3, 4, 5.0).unwrap();
        let g = random_field(&grid, 1);
        let mut d = SpectralField::zeros(&grid);
        d.set(0, 0, Complex::new(1.0 / grid.dxi(), 0.0));
        let out = convolve_direct(&d, &g).unwrap();
        for (a, b) in out.coeffs().iter().zip(g.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn single_term_sum() {
        let grid = SpectralGrid::new(3, 3, 4.0).unwrap();
        let mut f = SpectralField::zeros(&grid);
        f.set(1, 1, Complex::new(1.0, 0.0));
        let out = convolve_direct(&f, &f).unwrap();
        assert!((out.get(2, 2) - Complex::new(grid.dxi(), 0.0)).norm() < 1e-15);
        let fast = convolve_fast(&f, &f).unwrap();
        assert!((fast.get(2, 2) - Complex::new(grid.dxi(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn fast_matches_direct() {
        for (k, j) in [(1, 1), (3, 3), (4, 4), (2, 7), (8, 8)] {
            let grid = SpectralGrid::new(k, j, 7.0).unwrap();
            let f = random_field(&grid, 10 + k as u64);
            let g = random_field(&grid, 20 + j as u64);
            let a = convolve_direct(&f, &g).unwrap();
            let b = convolve_fast(&f, &g).unwrap();
            let scale = a.max_abs();
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((x - y).norm() <= 1e-12 * scale, "K={k} J={j}");
            }
        }
    }

    #[test]
    fn fast_f32_close() {
        let grid = SpectralGrid::new(3, 5, 7.0).unwrap();
        let f = random_field(&grid, 3);
        let g = random_field(&grid, 4);
        let a = convolve_direct(&f, &g).unwrap();
        let b = convolve_fast(&f.cast::<f32>(), &g.cast::<f32>()).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x.re - y.re as f64).abs() < 1e-4);
            assert!((x.im - y.im as f64).abs() < 1e-4);
        }
    }
}
