use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, gauss_legendre};
use crate::scalar::{lit, Real};

/// Right end of the interpolation table; beyond it the asymptotic tail series is used.
pub const TABLE_END: f64 = 50.0;
/// Node spacing of the interpolation table.
pub const TABLE_STEP: f64 = 1e-3;

const TAIL_TERMS: usize = 10;

/// `∫_x^∞ (1+y²)^{−a} dy` for `x ≥ 50`, from the binomial expansion of `(1+y^{−2})^{−a}`.
fn tail(a: f64, x: f64) -> f64 {
    let mut coef = 1.0;
    let mut acc = 0.0;
    let inv_x2 = 1.0 / (x * x);
    let mut pow = x.powf(1.0 - 2.0 * a);
    for n in 0..TAIL_TERMS {
        let nf = n as f64;
        acc += coef * pow / (2.0 * a + 2.0 * nf - 1.0);
        coef *= -(a + nf) / (nf + 1.0);
        pow *= inv_x2;
    }
    acc
}

/// `ψ_λ(x) = ∫₀^x ⟨y⟩^{−1−λ} dy` by adaptive Simpson at absolute tolerance `tol`.
///
/// `λ = 1` returns `arctan x`. For `|x| > 50` the integral is split at 50 and the
/// remainder comes from the tail series.
pub fn psi_with_tol(lambda: f64, x: f64, tol: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    if !x.is_finite() {
        if x.is_nan() {
            return Err(Error::param("x", "NaN"));
        }
        return Ok(x.signum() * psi_infinity(lambda)?);
    }
    if lambda == 1.0 {
        return Ok(x.atan());
    }
    let a = 0.5 * (1.0 + lambda);
    let ax = x.abs();
    let f = |y: f64| (1.0 + y * y).powf(-a);
    let v = if ax <= TABLE_END {
        adaptive_simpson(f, 0.0, ax, tol)?
    } else {
        adaptive_simpson(f, 0.0, TABLE_END, tol)? + tail(a, TABLE_END) - tail(a, ax)
    };
    Ok(v.copysign(x))
}

/// [`psi_with_tol`] at tolerance `1e-12`.
pub fn psi(lambda: f64, x: f64) -> Result<f64> {
    psi_with_tol(lambda, x, 1e-12)
}

/// `ψ_λ(∞) = ∫₀^∞ ⟨y⟩^{−1−λ} dy`.
pub fn psi_infinity(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let a = 0.5 * (1.0 + lambda);
    Ok(adaptive_simpson(|y| (1.0 + y * y).powf(-a), 0.0, TABLE_END, 1e-13)? + tail(a, TABLE_END))
}

/// Cubic Hermite table of `ψ_λ` and `ψ_λ'` on `[0, 50]`, read-only after construction.
#[derive(Clone, Debug)]
pub struct PsiTable<T> {
    lambda: T,
    a: T,
    inv_h: T,
    h: T,
    end: T,
    value: Vec<T>,
    d1: Vec<T>,
    d2: Vec<T>,
    at_infinity: T,
    arctan: bool,
}

impl<T: Real> PsiTable<T> {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
        }
        let a = 0.5 * (1.0 + lambda);
        let n = (TABLE_END / TABLE_STEP).round() as usize;
        let (gx, gw) = gauss_legendre(6);
        let f = |y: f64| (1.0 + y * y).powf(-a);
        let mut value = Vec::with_capacity(n + 1);
        let mut d1 = Vec::with_capacity(n + 1);
        let mut d2 = Vec::with_capacity(n + 1);
        let mut acc = 0.0_f64;
        let mut comp = 0.0_f64;
        for i in 0..=n {
            let x = i as f64 * TABLE_STEP;
            if i > 0 {
                let lo = (i - 1) as f64 * TABLE_STEP;
                let c = lo + 0.5 * TABLE_STEP;
                let cell: f64 = gx
                    .iter()
                    .zip(&gw)
                    .map(|(g, w)| w * f(c + 0.5 * TABLE_STEP * g))
                    .sum::<f64>()
                    * 0.5
                    * TABLE_STEP;
                // compensated running sum
                let y = cell - comp;
                let t = acc + y;
                comp = (t - acc) - y;
                acc = t;
            }
            value.push(lit::<T>(if lambda == 1.0 { x.atan() } else { acc }));
            d1.push(lit::<T>(f(x)));
            d2.push(lit::<T>(-2.0 * a * x * (1.0 + x * x).powf(-a - 1.0)));
        }
        let at_infinity = if lambda == 1.0 {
            std::f64::consts::FRAC_PI_2
        } else {
            acc + tail(a, TABLE_END)
        };
        Ok(Self {
            lambda: lit(lambda),
            a: lit(a),
            inv_h: lit(1.0 / TABLE_STEP),
            h: lit(TABLE_STEP),
            end: lit(TABLE_END),
            value,
            d1,
            d2,
            at_infinity: lit(at_infinity),
            arctan: lambda == 1.0,
        })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// `ψ_λ(∞)`, the supremum of `|ψ_λ|`.
    pub fn sup(&self) -> T {
        self.at_infinity
    }

    #[inline]
    fn locate(&self, ax: T) -> (usize, T) {
        let s = ax * self.inv_h;
        let i = s.floor().to_usize().unwrap().min(self.value.len() - 2);
        (i, s - T::from_usize(i).unwrap())
    }

    #[inline]
    fn tail_value(&self, ax: T) -> T {
        lit(tail(self.a.to_f64().unwrap(), ax.to_f64().unwrap()))
    }

    /// `ψ_λ(x)`.
    #[inline]
    pub fn eval(&self, x: T) -> T {
        if self.arctan {
            return x.atan();
        }
        let ax = x.abs();
        let v = if ax < self.end {
            let (i, u) = self.locate(ax);
            let (h00, h10, h01, h11) = hermite_basis(u);
            h00 * self.value[i]
                + h10 * self.h * self.d1[i]
                + h01 * self.value[i + 1]
                + h11 * self.h * self.d1[i + 1]
        } else {
            self.at_infinity - self.tail_value(ax)
        };
        if x < T::zero() {
            -v
        } else {
            v
        }
    }

    /// `ψ_λ'(x) = ⟨x⟩^{−1−λ}`.
    #[inline]
    pub fn derivative(&self, x: T) -> T {
        let ax = x.abs();
        if ax < self.end {
            let (i, u) = self.locate(ax);
            let (h00, h10, h01, h11) = hermite_basis(u);
            h00 * self.d1[i] + h10 * self.h * self.d2[i] + h01 * self.d1[i + 1] + h11 * self.h * self.d2[i + 1]
        } else {
            (T::one() + ax * ax).powf(-self.a)
        }
    }

    /// `(ψ_λ(x), ψ_λ'(x))` with a single table lookup.
    #[inline]
    pub fn eval_both(&self, x: T) -> (T, T) {
        let ax = x.abs();
        if ax < self.end {
            let (i, u) = self.locate(ax);
            let (h00, h10, h01, h11) = hermite_basis(u);
            let v = if self.arctan {
                ax.atan()
            } else {
                h00 * self.value[i]
                    + h10 * self.h * self.d1[i]
                    + h01 * self.value[i + 1]
                    + h11 * self.h * self.d1[i + 1]
            };
            let d = h00 * self.d1[i]
                + h10 * self.h * self.d2[i]
                + h01 * self.d1[i + 1]
                + h11 * self.h * self.d2[i + 1];
            (if x < T::zero() { -v } else { v }, d)
        } else {
            (self.eval(x), (T::one() + ax * ax).powf(-self.a))
        }
    }
}

#[inline(always)]
fn hermite_basis<T: Real>(u: T) -> (T, T, T, T) {
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let u2 = u * u;
    let u3 = u2 * u;
    (
        two * u3 - three * u2 + T::one(),
        u3 - two * u2 + u,
        three * u2 - two * u3,
        u3 - u2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn special_values() {
        assert_eq!(psi(0.3, 0.0).unwrap(), 0.0);
        assert!((psi(1.0, 1.0).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!(psi(0.0, 1.0).is_err());
        assert!(psi(-1.0, 1.0).is_err());
    }

    #[test]
    fn table_matches_direct() {
        for lambda in [0.25, 0.75, 0.5, 1.0, 1.7] {
            let tab = PsiTable::<f64>::new(lambda).unwrap();
            for x in [-1e4, -60.0, -49.9995, -3.3, -0.0004, 0.0, 0.123_456, 2.0, 17.5, 50.0, 51.0, 1e3, 1e7] {
                let d = psi_with_tol(lambda, x, 1e-13).unwrap();
                let t = tab.eval(x);
                assert!((d - t).abs() < 1e-11, "lambda={lambda} x={x}: {d} vs {t}");
                let exact_d = (1.0 + x * x).powf(-0.5 * (1.0 + lambda));
                assert!((tab.derivative(x) - exact_d).abs() < 1e-12);
                let (v, dd) = tab.eval_both(x);
                assert_eq!(v, t);
                assert!((dd - exact_d).abs() < 1e-12);
            }
            assert!((tab.sup() - psi_infinity(lambda).unwrap()).abs() < 1e-11);
        }
    }

    #[test]
    fn psi_one_is_arctan_through_quadrature_path() {
        // λ slightly off 1 converges to arctan
        let v = psi(1.0 + 1e-9, 2.0).unwrap();
        assert!((v - 2.0_f64.atan()).abs() < 1e-8);
    }

    #[test]
    fn infinity_closed_form_half() {
        // ∫₀^∞ (1+y²)^{-3/2} dy = 1
        assert!((psi_infinity(2.0).unwrap() - 1.0).abs() < 1e-12);
        let tab = PsiTable::<f64>::new(2.0).unwrap();
        // ψ₂(x) = x / sqrt(1+x²)
        for x in [0.5, 3.0, 80.0] {
            assert!((tab.eval(x) - x / (1.0 + x * x).sqrt()).abs() < 1e-12);
        }
    }
}
