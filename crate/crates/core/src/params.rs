use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Viscosity, diffusivity, stratification and the regularity exponents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams<T> {
    pub nu: T,
    pub mu: T,
    pub gamma: T,
    pub eps: T,
    pub s: T,
    pub delta: T,
}

impl<T: Real> PhysicalParams<T> {
    /// Validates and builds the parameter set.
    ///
    /// The ratio condition `(ν+μ)/(2γ√(νμ)) < 2−ε` is only reported through `log`
    /// because inviscid runs set `ν = μ = 0`.
    pub fn new(nu: T, mu: T, gamma: T, eps: T, s: T, delta: T) -> Result<Self> {
        let p = Self {
            nu,
            mu,
            gamma,
            eps,
            s,
            delta,
        };
        p.validate()?;
        if let Some(r) = p.dissipation_ratio() {
            if r >= lit::<T>(2.0) - eps {
                log::warn!(
                    "(nu+mu)/(2 gamma sqrt(nu mu)) = {r} is not below 2 - eps = {}",
                    lit::<T>(2.0) - eps
                );
            }
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.nu, self.mu, self.gamma, self.eps, self.s, self.delta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("physics", "all parameters must be finite"));
        }
        if self.nu < T::zero() {
            return Err(Error::param("nu", format!("must be >= 0, got {}", self.nu)));
        }
        if self.mu < T::zero() {
            return Err(Error::param("mu", format!("must be >= 0, got {}", self.mu)));
        }
        if !(self.gamma > lit(0.5)) {
            return Err(Error::param(
                "gamma",
                format!(
                    "must exceed 1/2 for the energy form to be coercive (margin {} at gamma = {})",
                    crate::energy::coercivity_margin(self.gamma.to_f64().unwrap()),
                    self.gamma
                ),
            ));
        }
        if !(self.eps > T::zero() && self.eps < T::one() / self.gamma) {
            return Err(Error::param(
                "eps",
                format!("must lie in (0, 1/gamma) = (0, {}), got {}", T::one() / self.gamma, self.eps),
            ));
        }
        if !(self.s > lit(1.5)) {
            return Err(Error::param("s", format!("must exceed 3/2, got {}", self.s)));
        }
        let cap = (self.s - lit(1.5)).min(lit(0.5));
        if !(self.delta > T::zero() && self.delta < cap) {
            return Err(Error::param(
                "delta",
                format!("must lie in (0, min(s - 3/2, 1/2)) = (0, {cap}), got {}", self.delta),
            ));
        }
        Ok(())
    }

    /// `κ = min(ν, μ)`.
    pub fn kappa(&self) -> T {
        self.nu.min(self.mu)
    }

    /// `C_γ = max{1, 2/(2γ−1)}`.
    pub fn c_gamma(&self) -> T {
        let two = lit::<T>(2.0);
        T::one().max(two / (two * self.gamma - T::one()))
    }

    /// `ε / 16`, the rate constant inside the long-time weight.
    pub fn eps_small(&self) -> T {
        self.eps / lit(16.0)
    }

    /// `T₀ = κ^{−1/6}`; infinite when `κ = 0`.
    pub fn t0(&self) -> T {
        let k = self.kappa();
        if k > T::zero() {
            k.powf(lit(-1.0 / 6.0))
        } else {
            T::infinity()
        }
    }

    /// `(ν+μ)/(2γ√(νμ))` when both dissipations are positive.
    pub fn dissipation_ratio(&self) -> Option<T> {
        if self.nu > T::zero() && self.mu > T::zero() {
            Some((self.nu + self.mu) / (lit::<T>(2.0) * self.gamma * (self.nu * self.mu).sqrt()))
        } else {
            None
        }
    }

    pub fn with_dissipation(mut self, nu: T, mu: T) -> Result<Self> {
        self.nu = nu;
        self.mu = mu;
        self.validate()?;
        Ok(self)
    }

    pub fn cast<U: Real>(&self) -> PhysicalParams<U> {
        let c = |v: T| lit::<U>(v.to_f64().unwrap());
        PhysicalParams {
            nu: c(self.nu),
            mu: c(self.mu),
            gamma: c(self.gamma),
            eps: c(self.eps),
            s: c(self.s),
            delta: c(self.delta),
        }
    }
}

impl PhysicalParams<f64> {
    /// `γ = 1`, `ε = 1/2`, `s = 2`, `δ = 1/4`, with the given dissipation.
    pub fn standard(nu: f64, mu: f64) -> Self {
        Self::new(nu, mu, 1.0, 0.5, 2.0, 0.25).expect("standard parameters are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = PhysicalParams::standard(1e-3, 2e-3);
        assert_eq!(p.kappa(), 1e-3);
        assert_eq!(p.c_gamma(), 2.0);
        assert_eq!(p.eps_small(), 0.5 / 16.0);
        assert!((p.t0() - 1e-3_f64.powf(-1.0 / 6.0)).abs() < 1e-12);
        let p = PhysicalParams::<f64>::new(0.0, 0.0, 2.0, 0.4, 2.0, 0.25).unwrap();
        assert_eq!(p.c_gamma(), 1.0);
        assert!(p.t0().is_infinite());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PhysicalParams::new(0.0, 0.0, 0.4, 0.5, 2.0, 0.25).is_err());
        assert!(PhysicalParams::new(0.0, 0.0, 1.0, 1.0, 2.0, 0.25).is_err());
        assert!(PhysicalParams::new(0.0, 0.0, 1.0, 0.5, 1.5, 0.25).is_err());
        assert!(PhysicalParams::new(0.0, 0.0, 1.0, 0.5, 1.9, 0.45).is_err());
        assert!(PhysicalParams::new(-1.0, 0.0, 1.0, 0.5, 2.0, 0.25).is_err());
        let e = PhysicalParams::new(0.0, 0.0, 0.4, 0.5, 2.0, 0.25).unwrap_err();
        assert!(e.to_string().contains("coercive"));
    }
}
