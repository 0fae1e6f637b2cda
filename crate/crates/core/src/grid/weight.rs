use crate::scalar::{bracket2, from_int, Real};

/// Which weight an evaluator represents. Used only for reporting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightTag {
    Unit,
    /// `⟨k, ξ⟩^s`
    Sobolev,
    /// `⟨k, ξ − kt⟩^{1/2}`, the symbol of `⟨∇_L⟩^{1/2}`
    HalfLaplacian,
    /// `⟨k, ξ − kt⟩^{1/2} ⟨k, ξ⟩^s`
    HalfLaplacianSobolev,
    /// One of the time-dependent multipliers, by name (`"A_k"`, `"M"`, `"m"`, ...).
    Multiplier(&'static str),
    Custom(String),
}

type Eval<'a, T> = Box<dyn Fn(T, i64, T) -> T + Send + Sync + 'a>;

/// Nonnegative weight `(t, k, ξ) → w` consumed by [`weighted_norm`](super::weighted_norm).
pub struct WeightFn<'a, T> {
    tag: WeightTag,
    eval: Eval<'a, T>,
}

impl<'a, T: Real> WeightFn<'a, T> {
    pub fn new<F>(tag: WeightTag, f: F) -> Self
    where
        F: Fn(T, i64, T) -> T + Send + Sync + 'a,
    {
        Self {
            tag,
            eval: Box::new(f),
        }
    }

    pub fn unit() -> Self {
        Self::new(WeightTag::Unit, |_, _, _| T::one())
    }

    pub fn sobolev(s: T) -> Self {
        Self::new(WeightTag::Sobolev, move |_, k, xi| {
            bracket2(from_int::<T>(k), xi).powf(s)
        })
    }

    pub fn half_laplacian() -> Self {
        Self::new(WeightTag::HalfLaplacian, |t, k, xi| {
            let kf = from_int::<T>(k);
            bracket2(kf, xi - kf * t).sqrt()
        })
    }

    pub fn half_laplacian_sobolev(s: T) -> Self {
        Self::new(WeightTag::HalfLaplacianSobolev, move |t, k, xi| {
            let kf = from_int::<T>(k);
            bracket2(kf, xi - kf * t).sqrt() * bracket2(kf, xi).powf(s)
        })
    }

    pub fn tag(&self) -> &WeightTag {
        &self.tag
    }

    #[inline]
    pub fn eval(&self, t: T, k: i64, xi: T) -> T {
        (self.eval)(t, k, xi)
    }
}

impl<T> std::fmt::Debug for WeightFn<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightFn").field("tag", &self.tag).finish()
    }
}
