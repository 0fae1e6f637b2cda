//! Time-dependent Fourier weights.
//!
//! Short times use `A_k = |k₊, ξ−kt|^{1/2} ⟨k,ξ⟩^s e^{M₀}`. Long times (`t ≥ T₀ = κ^{−1/6}`)
//! use `ℳ = |k₊, ξ−kt|^{1/2} ⟨k,ξ⟩^s 𝒜 e^{ℳ₁+ℳ₂+ℳ₃}`. The lattice sums in `ℳ₃` and
//! `Υ = −∂_t ℳ₃` are truncated at `|j| ≤ J_sum` and evaluated together, so the identity
//! between them holds exactly under the truncation.

mod psi;

pub use psi::{psi, psi_infinity, psi_with_tol, PsiTable, TABLE_END, TABLE_STEP};

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::scalar::{bracket, bracket2, from_int, lit, pair_norm, Real};

pub const DEFAULT_J_SUM: usize = 2000;
pub const DEFAULT_PSI_TOL: f64 = 1e-10;

/// Rows of the `ℳ₃` sum are cached for `|k|` up to this value.
const ROW_CACHE: i64 = 512;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierParams<T> {
    pub gamma: T,
    pub c_gamma: T,
    pub kappa: T,
    pub eps_small: T,
    pub s: T,
    pub delta: T,
    pub j_sum: usize,
    pub psi_tol: f64,
}

impl<T: Real> MultiplierParams<T> {
    pub fn new(p: &PhysicalParams<T>, j_sum: usize, psi_tol: f64) -> Result<Self> {
        if j_sum < 10 {
            return Err(Error::param("J_sum", format!("must be >= 10, got {j_sum}")));
        }
        if !(psi_tol > 0.0 && psi_tol <= 1e-6) {
            return Err(Error::param("psi_tol", format!("must lie in (0, 1e-6], got {psi_tol}")));
        }
        Ok(Self {
            gamma: p.gamma,
            c_gamma: p.c_gamma(),
            kappa: p.kappa(),
            eps_small: p.eps_small(),
            s: p.s,
            delta: p.delta,
            j_sum,
            psi_tol,
        })
    }

    pub fn from_physical(p: &PhysicalParams<T>) -> Self {
        Self::new(p, DEFAULT_J_SUM, DEFAULT_PSI_TOL).expect("defaults are valid")
    }

    /// `T₀ = κ^{−1/6}`, infinite for `κ = 0`.
    pub fn t0(&self) -> T {
        if self.kappa > T::zero() {
            self.kappa.powf(lit(-1.0 / 6.0))
        } else {
            T::infinity()
        }
    }

    /// Earliest time at which `ℳ` and `q*` are evaluated.
    pub fn long_time_start(&self) -> T {
        self.t0() * lit(0.5)
    }
}

#[derive(Clone, Copy, Debug)]
struct Term<T> {
    j: T,
    inv_b: T,
    /// `j^{−1}⟨k−j⟩^{−δ}`
    c: T,
    /// `⟨k−j⟩^{−δ} / B_j`
    d: T,
}

/// Everything the long-time energy needs at one `(t, k, ξ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LongTimeWeights<T> {
    pub big_m: T,
    pub upsilon: T,
    /// `⟨ξ/k − t⟩`, zero at `k = 0`.
    pub shear_bracket: T,
}

/// All weights for one parameter set. Construction builds the `ψ` tables; afterwards every
/// evaluator is a pure function and the bundle can be shared across threads.
pub struct WeightBundle<T: Real> {
    params: MultiplierParams<T>,
    psi_delta: PsiTable<T>,
    psi_one_minus_delta: PsiTable<T>,
    rows: Vec<OnceLock<Box<[Term<T>]>>>,
}

impl<T: Real> WeightBundle<T> {
    pub fn new(params: MultiplierParams<T>) -> Result<Self> {
        let delta = params.delta.to_f64().unwrap();
        Ok(Self {
            params,
            psi_delta: PsiTable::new(delta)?,
            psi_one_minus_delta: PsiTable::new(1.0 - delta)?,
            rows: (0..=2 * ROW_CACHE).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn from_physical(p: &PhysicalParams<T>) -> Result<Self> {
        Self::new(MultiplierParams::from_physical(p))
    }

    pub fn params(&self) -> &MultiplierParams<T> {
        &self.params
    }

    pub fn psi_delta(&self) -> &PsiTable<T> {
        &self.psi_delta
    }

    pub fn psi_one_minus_delta(&self) -> &PsiTable<T> {
        &self.psi_one_minus_delta
    }

    fn build_row(&self, k: i64) -> Box<[Term<T>]> {
        let js = self.params.j_sum as i64;
        let nd = -self.params.delta;
        let mut row = Vec::with_capacity(2 * js as usize);
        for j in (-js..=js).filter(|&j| j != 0) {
            let kj = bracket(from_int::<T>(k - j));
            let b = kj + from_int::<T>(j.abs());
            let w = kj.powf(nd);
            row.push(Term {
                j: from_int(j),
                inv_b: T::one() / b,
                c: w / from_int::<T>(j),
                d: w / b,
            });
        }
        row.into_boxed_slice()
    }

    fn with_row<R>(&self, k: i64, f: impl FnOnce(&[Term<T>]) -> R) -> R {
        if k.abs() <= ROW_CACHE {
            let cell = &self.rows[(k + ROW_CACHE) as usize];
            f(cell.get_or_init(|| self.build_row(k)))
        } else {
            f(&self.build_row(k))
        }
    }

    #[inline]
    fn kf(k: i64) -> T {
        from_int(k)
    }

    /// `|k₊, ξ−kt|^{1/2} ⟨k,ξ⟩^s`, the common algebraic factor of every weight.
    #[inline]
    pub fn base(&self, t: T, k: i64, xi: T) -> T {
        let kf = Self::kf(k);
        let kp = kf.abs().max(T::one());
        pair_norm(kp, xi - kf * t).sqrt() * bracket2(kf, xi).powf(self.params.s)
    }

    #[inline]
    fn log_base(&self, t: T, k: i64, xi: T) -> T {
        let kf = Self::kf(k);
        let kp = kf.abs().max(T::one());
        let eta = xi - kf * t;
        lit::<T>(0.25) * (kp * kp + eta * eta).ln()
            + lit::<T>(0.5) * self.params.s * (T::one() + kf * kf + xi * xi).ln()
    }

    /// `M₀ = C_γ(arctan(ξ/k − t) − arctan(ξ/k))`, zero at `k = 0`.
    #[inline]
    pub fn m0(&self, t: T, k: i64, xi: T) -> T {
        if k == 0 {
            return T::zero();
        }
        let r = xi / Self::kf(k);
        self.params.c_gamma * ((r - t).atan() - r.atan())
    }

    #[inline]
    pub fn a_k(&self, t: T, k: i64, xi: T) -> T {
        self.base(t, k, xi) * self.m0(t, k, xi).exp()
    }

    #[inline]
    pub fn log_a_k(&self, t: T, k: i64, xi: T) -> T {
        self.log_base(t, k, xi) + self.m0(t, k, xi)
    }

    /// `q = ∂_t A_k / A_k = −kη/(2(k²+η²)) − C_γk²/(k²+η²)`, `η = ξ − kt`; zero at `k = 0`.
    #[inline]
    pub fn q_small(&self, t: T, k: i64, xi: T) -> T {
        if k == 0 {
            return T::zero();
        }
        let kf = Self::kf(k);
        let eta = xi - kf * t;
        let d = kf * kf + eta * eta;
        -kf * eta / (lit::<T>(2.0) * d) - self.params.c_gamma * kf * kf / d
    }

    /// `ℳ₁ = ψ₁(κ^{1/3}|k|^{2/3}(ξ/k − t))`.
    #[inline]
    pub fn m1(&self, t: T, k: i64, xi: T) -> T {
        if k == 0 {
            return T::zero();
        }
        let kf = Self::kf(k);
        let third = lit::<T>(1.0 / 3.0);
        (self.params.kappa.powf(third) * kf.abs().powf(lit(2.0 / 3.0)) * (xi / kf - t)).atan()
    }

    /// `ℳ₂ = C_γ ψ_{1−δ}(ξ/k − t)`.
    #[inline]
    pub fn m2(&self, t: T, k: i64, xi: T) -> T {
        if k == 0 {
            return T::zero();
        }
        self.params.c_gamma * self.psi_one_minus_delta.eval(xi / Self::kf(k) - t)
    }

    /// `(ℳ₃, Υ)` from one pass over the truncated lattice sum.
    pub fn m3_upsilon(&self, t: T, k: i64, xi: T) -> (T, T) {
        self.with_row(k, |row| {
            let mut m3 = T::zero();
            let mut ups = T::zero();
            for term in row {
                let x = (xi - t * term.j) * term.inv_b;
                let (p, dp) = self.psi_delta.eval_both(x);
                m3 = m3 + term.c * p;
                ups = ups + term.d * dp;
            }
            (m3, ups)
        })
    }

    pub fn m3(&self, t: T, k: i64, xi: T) -> T {
        self.m3_upsilon(t, k, xi).0
    }

    pub fn upsilon(&self, t: T, k: i64, xi: T) -> T {
        self.m3_upsilon(t, k, xi).1
    }

    /// `Υ` in its second form, summed over `l ≠ k` with `|k−l| ≤ J_sum`.
    pub fn upsilon_l_form(&self, t: T, k: i64, xi: T) -> T {
        let js = self.params.j_sum as i64;
        let d = self.params.delta;
        let mut acc = T::zero();
        for l in (k - js)..=(k + js) {
            if l == k {
                continue;
            }
            let bl = bracket(from_int::<T>(l));
            let b = bl + from_int::<T>((k - l).abs());
            let z = xi - t * from_int::<T>(k - l);
            acc = acc + bl.powf(-d) * b.powf(d) / pair_norm(b, z).powf(T::one() + d);
        }
        acc
    }

    fn check_positive_time(&self, what: &'static str, t: T) -> Result<()> {
        if !(t > T::zero()) {
            return Err(Error::OutsideRegime {
                what,
                t: t.to_f64().unwrap(),
            });
        }
        if !(self.params.kappa > T::zero()) {
            return Err(Error::param("kappa", format!("{what} needs kappa > 0")));
        }
        Ok(())
    }

    fn check_long_time(&self, what: &'static str, t: T) -> Result<()> {
        self.check_positive_time(what, t)?;
        if t < self.params.long_time_start() {
            return Err(Error::OutsideRegime {
                what,
                t: t.to_f64().unwrap(),
            });
        }
        Ok(())
    }

    #[inline]
    fn log_script_a_unchecked(&self, t: T, k: i64) -> T {
        let p = &self.params;
        let growth = if k != 0 {
            p.eps_small * p.kappa.powf(lit(1.0 / 3.0)) * t
        } else {
            T::zero()
        };
        growth + p.kappa.powf(lit(-1.0 / 3.0)) / (t * t)
    }

    /// `𝒜 = exp(ϵκ^{1/3}t·1_{k≠0} + κ^{−1/3}t^{−2})`.
    pub fn script_a(&self, t: T, k: i64) -> Result<T> {
        self.check_positive_time("script_a", t)?;
        Ok(self.log_script_a_unchecked(t, k).exp())
    }

    /// `ℳ₀ = ℳ₁ + ℳ₂ + ℳ₃`.
    pub fn m_zero_sum(&self, t: T, k: i64, xi: T) -> T {
        self.m1(t, k, xi) + self.m2(t, k, xi) + self.m3(t, k, xi)
    }

    /// `log ℳ`, for `t ≥ T₀/2`.
    pub fn log_big_m(&self, t: T, k: i64, xi: T) -> Result<T> {
        self.check_long_time("big_m", t)?;
        Ok(self.log_base(t, k, xi) + self.log_script_a_unchecked(t, k) + self.m_zero_sum(t, k, xi))
    }

    /// `ℳ(t,k,ξ)`, for `t ≥ T₀/2`.
    pub fn big_m(&self, t: T, k: i64, xi: T) -> Result<T> {
        Ok(self.log_big_m(t, k, xi)?.exp())
    }

    /// `ℳ`, `Υ` and `⟨ξ/k−t⟩` from one lattice pass.
    pub fn long_time(&self, t: T, k: i64, xi: T) -> Result<LongTimeWeights<T>> {
        self.check_long_time("big_m", t)?;
        let (m3, ups) = self.m3_upsilon(t, k, xi);
        let log_m = self.log_base(t, k, xi)
            + self.log_script_a_unchecked(t, k)
            + self.m1(t, k, xi)
            + self.m2(t, k, xi)
            + m3;
        let shear_bracket = if k == 0 {
            T::zero()
        } else {
            bracket(xi / Self::kf(k) - t)
        };
        Ok(LongTimeWeights {
            big_m: log_m.exp(),
            upsilon: ups,
            shear_bracket,
        })
    }

    /// The six terms of `q* = ∂_t ℳ / ℳ`, in the order they are printed.
    pub fn q_star_terms(&self, t: T, k: i64, xi: T) -> Result<[T; 6]> {
        self.check_long_time("q_star", t)?;
        let p = &self.params;
        let kf = Self::kf(k);
        let eta = xi - kf * t;
        let third = lit::<T>(1.0 / 3.0);
        let k13 = p.kappa.powf(third);
        let (first, fourth, fifth, growth) = if k == 0 {
            (T::zero(), T::zero(), T::zero(), T::zero())
        } else {
            let d = kf * kf + eta * eta;
            let ak = kf.abs();
            (
                -kf * eta / (lit::<T>(2.0) * d),
                -k13 * ak.powf(lit(4.0 / 3.0))
                    / (ak.powf(lit(2.0 / 3.0)) + p.kappa.powf(lit(2.0 / 3.0)) * eta * eta),
                -p.c_gamma * bracket(xi / kf - t).powf(p.delta - lit(2.0)),
                p.eps_small * k13,
            )
        };
        let t3 = -lit::<T>(2.0) * p.kappa.powf(-third) / (t * t * t);
        let ups = self.upsilon(t, k, xi);
        Ok([first, growth, t3, fourth, fifth, -ups])
    }

    pub fn q_star(&self, t: T, k: i64, xi: T) -> Result<T> {
        Ok(self.q_star_terms(t, k, xi)?.into_iter().sum())
    }

    /// `A_k` for `t ≤ T₀`, `ℳ` after.
    pub fn m_unified(&self, t: T, k: i64, xi: T) -> Result<T> {
        if t < T::zero() {
            return Err(Error::OutsideRegime {
                what: "m_unified",
                t: t.to_f64().unwrap(),
            });
        }
        if t <= self.params.t0() {
            Ok(self.a_k(t, k, xi))
        } else {
            self.big_m(t, k, xi)
        }
    }

    /// Both branch values at `t = T₀`: `(A_k, ℳ)`.
    pub fn seam_values(&self, k: i64, xi: T) -> Result<(T, T)> {
        let t0 = self.params.t0();
        Ok((self.a_k(t0, k, xi), self.big_m(t0, k, xi)?))
    }
}

impl<T: Real> std::fmt::Debug for WeightBundle<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightBundle").field("params", &self.params).finish()
    }
}
