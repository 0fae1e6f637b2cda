//! Randomized corroboration of the multiplier inequalities.
//!
//! Each check draws a training batch and a held-out batch, evaluates `LHS/RHS` per
//! sample, fits `C = 1.05 · max(training ratios)` and passes when every held-out ratio
//! stays below `C`. Nothing here proves a bound; a slow drift shows up as a held-out
//! failure once the ranges are widened.

mod commutators;
mod kernels;
mod lipschitz;
mod trilinear;

pub use commutators::{check_ak_commutators, check_m_commutators};
pub use kernels::{
    check_damping_weights, check_m0_difference, check_m0_gradient, check_poisson_bound, damping_weight_exact,
    l1_weight_sum, m0_closed_form, m0_gradient, poisson_lhs, poisson_ratio, QUAD_TOL,
};
pub use lipschitz::check_m_lipschitz;
pub use trilinear::{check_trilinear_bounds, LatticeTriple};

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multipliers::{MultiplierParams, WeightBundle, DEFAULT_PSI_TOL};
use crate::params::PhysicalParams;

pub const FIT_MARGIN: f64 = 1.05;

/// Sampling ranges, counts and seed shared by every check.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpec {
    pub t_range: (f64, f64),
    /// Integer wavenumbers are drawn from `[−k_max, k_max]`.
    pub k_max: i64,
    /// Frequencies `ξ, η` live in `[−freq_max, freq_max]`.
    pub freq_max: f64,
    pub lambdas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// γ, ε, s and δ are read from here; ν and μ are replaced by each κ.
    pub physical: PhysicalParams<f64>,
    /// Share of frequency draws taken from the Cauchy-like component.
    pub heavy_fraction: f64,
    pub cauchy_scale: f64,
    /// Held-out `t`, `ξ` ranges are this factor wider than the training ranges.
    pub widen: f64,
    /// Half-widths of the small lattice used by the trilinear sums.
    pub lattice_k: i64,
    pub lattice_j: i64,
    pub lattice_dxi: f64,
    /// Truncation of the lattice sums inside `ℳ₃` and `Υ`.
    pub j_sum: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            t_range: (0.0, 1e3),
            k_max: 64,
            freq_max: 1e3,
            lambdas: vec![0.25, 0.5, 1.0, 2.0],
            kappas: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            n_train: 10_000,
            n_test: 10_000,
            seed: 20_240_601,
            physical: PhysicalParams::standard(1e-4, 1e-4),
            heavy_fraction: 0.5,
            cauchy_scale: 10.0,
            widen: 2.0,
            lattice_k: 6,
            lattice_j: 6,
            lattice_dxi: 0.5,
            j_sum: 400,
        }
    }
}

impl SampleSpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.t_range;
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(Error::param("t_range", format!("need 0 <= lo < hi, got {a}..{b}")));
        }
        if self.k_max < 1 {
            return Err(Error::param("k_max", "must be >= 1"));
        }
        if !(self.freq_max > 0.0 && self.freq_max.is_finite()) {
            return Err(Error::param("freq_max", "must be positive"));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::param("lambdas", "need at least one positive value"));
        }
        if self.kappas.is_empty() || self.kappas.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
            return Err(Error::param("kappas", "need values in (0, 1)"));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::EmptySample);
        }
        if !(0.0..=1.0).contains(&self.heavy_fraction) || !(self.cauchy_scale > 0.0) {
            return Err(Error::param("heavy_fraction", "must lie in [0, 1] with positive scale"));
        }
        if !(self.widen >= 1.0) {
            return Err(Error::param("widen", "must be >= 1"));
        }
        if self.lattice_k < 1 || self.lattice_j < 1 || !(self.lattice_dxi > 0.0) {
            return Err(Error::param("lattice", "needs positive half-widths and spacing"));
        }
        self.physical.validate()
    }

    /// Smaller batches for quick runs and tests.
    pub fn with_counts(mut self, n_train: usize, n_test: usize) -> Self {
        self.n_train = n_train;
        self.n_test = n_test;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn physical_at(&self, kappa: f64) -> Result<PhysicalParams<f64>> {
        self.physical.with_dissipation(kappa, kappa)
    }

    pub(crate) fn bundle_at(&self, kappa: f64) -> Result<WeightBundle<f64>> {
        let p = self.physical_at(kappa)?;
        WeightBundle::new(MultiplierParams::new(&p, self.j_sum, DEFAULT_PSI_TOL)?)
    }
}

/// Labelled coordinates of one sample, kept for the worst case.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SamplePoint(pub Vec<(&'static str, f64)>);

impl fmt::Display for SamplePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={v:.6e}")?;
        }
        Ok(())
    }
}

/// Outcome of one check on one display.
#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub lemma: String,
    pub n_train: usize,
    /// Extra training points produced by local ascent.
    pub n_refined: usize,
    pub n_test: usize,
    pub train_max: f64,
    pub c_fit: f64,
    pub test_max: f64,
    /// `test_max / c_fit`, recorded as computed.
    pub test_ratio: f64,
    pub worst_train: SamplePoint,
    pub worst_test: SamplePoint,
    /// Samples in each proof case, for stratified checks.
    pub strata: Option<[usize; 2]>,
    pub passed: bool,
}

impl RatioReport {
    /// Fraction of samples in the smaller stratum.
    pub fn min_stratum_fraction(&self) -> Option<f64> {
        self.strata.map(|[a, b]| a.min(b) as f64 / (a + b).max(1) as f64)
    }
}

impl fmt::Display for RatioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {} train_max={:.6e} C_fit={:.6e} heldout_max/C={:.4} (n={}+{})",
            self.lemma,
            if self.passed { "PASS" } else { "FAIL" },
            self.train_max,
            self.c_fit,
            self.test_ratio,
            self.n_train,
            self.n_test
        )?;
        if !self.passed {
            write!(f, "\n    violating sample: {}", self.worst_test)?;
        }
        Ok(())
    }
}

/// `C = 1.05 · max`; errors on an empty or non-finite sample.
pub fn fit_constant(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut m: f64 = 0.0;
    for &r in ratios {
        if r.is_nan() {
            return Err(Error::Fit("NaN ratio in training sample".into()));
        }
        m = m.max(r);
    }
    Ok(FIT_MARGIN * m)
}

/// `lhs / rhs` with `0/0 = 0`.
#[inline]
pub(crate) fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Which batch a sample belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Split {
    Train,
    Test,
}

/// Random draws for one sample. Held-out draws cover ranges widened by `spec.widen`.
pub(crate) struct Draw<'a> {
    pub rng: ChaCha8Rng,
    pub spec: &'a SampleSpec,
    pub scale: f64,
    pub split: Split,
    /// Sample index, used for stratification.
    pub index: usize,
}

impl Draw<'_> {
    pub fn unit(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform(lo.ln(), hi.ln())).exp()
    }

    /// Frequency from the uniform/Cauchy mixture, clipped to the (widened) range.
    pub fn freq(&mut self) -> f64 {
        let r = self.spec.freq_max * self.scale;
        if self.coin(self.spec.heavy_fraction) {
            loop {
                let u = self.uniform(-0.5, 0.5);
                let x = self.spec.cauchy_scale * (std::f64::consts::PI * u).tan();
                if x.abs() <= r {
                    return x;
                }
            }
        }
        self.uniform(-r, r)
    }

    /// Time, half uniform and half log-uniform over the (widened) range.
    pub fn time(&mut self) -> f64 {
        let (lo, hi) = self.spec.t_range;
        self.time_in(lo, hi)
    }

    pub fn time_in(&mut self, lo: f64, hi: f64) -> f64 {
        let hi = lo + (hi - lo) * self.scale;
        if self.coin(0.5) {
            self.uniform(lo, hi)
        } else {
            self.log_uniform(lo.max(1e-3), hi)
        }
    }

    /// Integer wavenumber, half uniform on the full range and half with `|k| ≤ 4`.
    pub fn wavenumber(&mut self) -> i64 {
        let m = if self.coin(0.5) { self.spec.k_max } else { 4.min(self.spec.k_max) };
        self.rng.gen_range(-m..=m)
    }

    pub fn nonzero_wavenumber(&mut self) -> i64 {
        loop {
            let k = self.wavenumber();
            if k != 0 {
                return k;
            }
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        xs[self.rng.gen_range(0..xs.len())]
    }
}

/// Evaluated sample: one ratio per display, the stratum and the labelled point.
pub(crate) struct Eval {
    pub ratios: Vec<f64>,
    pub stratum: Option<usize>,
    pub point: SamplePoint,
}

/// Deterministic RNG for sample `index` of `split` under the check's salt.
fn sample_rng(seed: u64, salt: u64, split: Split, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let tag = match split {
        Split::Train => 0u64,
        Split::Test => 1u64 << 40,
    };
    rng.set_stream(tag | index as u64);
    rng
}

fn evaluate<F>(spec: &SampleSpec, salt: u64, split: Split, n: usize, eval: &F) -> Result<Vec<Eval>>
where
    F: Fn(&mut Draw) -> Result<Eval> + Sync,
{
    let scale = match split {
        Split::Train => 1.0,
        Split::Test => spec.widen,
    };
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d = Draw {
                rng: sample_rng(spec.seed, salt, split, i),
                spec,
                scale,
                split,
                index: i,
            };
            eval(&mut d)
        })
        .collect()
}

fn column_max(evals: &[Eval], c: usize) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, e) in evals.iter().enumerate() {
        let r = e.ratios[c];
        // NaN counts as a violation so it can never hide behind a max
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > best.0 {
            best = (r, i);
        }
    }
    best
}

/// How a sample coordinate may move during refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Kind {
    Real,
    Int,
    Fixed,
}

/// Local ascent over sample coordinates. `eval` returns `None` outside the training region.
pub(crate) struct Refiner<'a> {
    pub kinds: Vec<Kind>,
    pub eval: &'a (dyn Fn(&[f64]) -> Result<Option<Eval>> + Sync),
}

/// Starting points per display and evaluation budget per start.
const REFINE_STARTS: usize = 24;
const REFINE_BUDGET: usize = 400;

impl Refiner<'_> {
    fn score(&self, p: &[f64], c: usize) -> Result<Option<(f64, Eval)>> {
        Ok(match (self.eval)(p)? {
            Some(e) if e.ratios[c].is_finite() => Some((e.ratios[c], e)),
            _ => None,
        })
    }

    /// Compass search: try ±step on every free coordinate, halve real steps on a miss.
    fn ascend(&self, start: &Eval, c: usize) -> Result<Option<Eval>> {
        let mut p: Vec<f64> = start.point.0.iter().map(|x| x.1).collect();
        let Some((mut best, mut best_eval)) = self.score(&p, c)? else {
            return Ok(None);
        };
        let mut steps: Vec<f64> = p
            .iter()
            .zip(&self.kinds)
            .map(|(x, k)| match k {
                Kind::Real => 0.25 * x.abs().max(1.0),
                Kind::Int => 1.0,
                Kind::Fixed => 0.0,
            })
            .collect();
        let mut used = 0;
        while used < REFINE_BUDGET {
            let mut improved = false;
            for i in 0..p.len() {
                if self.kinds[i] == Kind::Fixed {
                    continue;
                }
                for dir in [1.0, -1.0] {
                    let mut q = p.clone();
                    q[i] += dir * steps[i];
                    used += 1;
                    if let Some((v, e)) = self.score(&q, c)? {
                        if v > best {
                            best = v;
                            best_eval = e;
                            p = q;
                            improved = true;
                            break;
                        }
                    }
                }
            }
            if !improved {
                let mut live = false;
                for (i, k) in self.kinds.iter().enumerate() {
                    if *k == Kind::Real {
                        steps[i] *= 0.5;
                        live |= steps[i] > 1e-9 * p[i].abs().max(1.0);
                    }
                }
                if !live {
                    break;
                }
            }
        }
        Ok(Some(best_eval))
    }

    /// Ascended copies of the top training samples of every display.
    fn refine(&self, train: &[Eval], displays: usize) -> Result<Vec<Eval>> {
        let mut starts: Vec<(usize, usize)> = Vec::new();
        for c in 0..displays {
            let mut idx: Vec<usize> = (0..train.len()).filter(|&i| train[i].ratios[c].is_finite()).collect();
            idx.sort_by(|&a, &b| train[b].ratios[c].total_cmp(&train[a].ratios[c]).then(a.cmp(&b)));
            starts.extend(idx.into_iter().take(REFINE_STARTS).map(|i| (c, i)));
        }
        let out: Vec<Option<Eval>> = starts
            .par_iter()
            .map(|&(c, i)| self.ascend(&train[i], c))
            .collect::<Result<_>>()?;
        Ok(out
            .into_iter()
            .flatten()
            .map(|mut e| {
                e.stratum = None;
                e
            })
            .collect())
    }
}

/// Runs one check: `forced` samples open the training batch, then random draws fill both
/// batches. With a refiner, ascended copies of the best training samples join the
/// training batch before the constant is fitted. Returns one report per display name.
pub(crate) fn run_check<F>(
    spec: &SampleSpec,
    names: &[&str],
    forced: Vec<Eval>,
    refiner: Option<Refiner>,
    eval: F,
) -> Result<Vec<RatioReport>>
where
    F: Fn(&mut Draw) -> Result<Eval> + Sync,
{
    spec.validate()?;
    let salt = names[0].bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let n_random = spec.n_train.saturating_sub(forced.len());
    let mut train = forced;
    train.extend(evaluate(spec, salt, Split::Train, n_random, &eval)?);
    let test = evaluate(spec, salt, Split::Test, spec.n_test, &eval)?;
    let strata = |evals: &[Eval]| {
        let mut s = [0usize; 2];
        let mut any = false;
        for e in evals {
            if let Some(c) = e.stratum {
                s[c.min(1)] += 1;
                any = true;
            }
        }
        any.then_some(s)
    };
    let strata = match (strata(&train), strata(&test)) {
        (Some(a), Some(b)) => Some([a[0] + b[0], a[1] + b[1]]),
        (a, b) => a.or(b),
    };
    let n_train = train.len();
    let refined = match &refiner {
        Some(r) => r.refine(&train, names.len())?,
        None => Vec::new(),
    };
    let n_refined = refined.len();
    train.extend(refined);
    names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let col: Vec<f64> = train.iter().map(|e| e.ratios[c]).collect();
            let (train_max, wi) = column_max(&train, c);
            let c_fit = if train_max.is_finite() { fit_constant(&col)? } else { f64::INFINITY };
            let (test_max, ti) = column_max(&test, c);
            let test_ratio = test_max / c_fit;
            Ok(RatioReport {
                lemma: name.to_string(),
                n_train,
                n_refined,
                n_test: test.len(),
                train_max,
                c_fit,
                test_max,
                test_ratio,
                worst_train: train[wi].point.clone(),
                worst_test: test[ti].point.clone(),
                strata,
                passed: c_fit.is_finite() && test_max <= c_fit,
            })
        })
        .collect()
}

/// Check groups accepted by [`run_named`].
pub const CHECKS: [&str; 8] = [
    "poisson",
    "damping",
    "m0_gradient",
    "m0_difference",
    "ak_commutators",
    "m_lipschitz",
    "m_commutators",
    "trilinear",
];

/// Runs one check group by name, or every group for `"all"`.
pub fn run_named(name: &str, spec: &SampleSpec) -> Result<Vec<RatioReport>> {
    let one = |n: &str| -> Result<Vec<RatioReport>> {
        Ok(match n {
            "poisson" => vec![check_poisson_bound(spec)?],
            "damping" => vec![check_damping_weights(spec)?],
            "m0_gradient" => vec![check_m0_gradient(spec)?],
            "m0_difference" => vec![check_m0_difference(spec)?],
            "ak_commutators" => check_ak_commutators(spec)?,
            "m_lipschitz" => check_m_lipschitz(spec)?,
            "m_commutators" => check_m_commutators(spec)?,
            "trilinear" => check_trilinear_bounds(spec)?,
            other => {
                return Err(Error::param(
                    "lemma",
                    format!("unknown check `{other}`; expected `all` or one of {}", CHECKS.join(", ")),
                ))
            }
        })
    };
    if name == "all" {
        let mut out = Vec::new();
        for n in CHECKS {
            out.extend(one(n)?);
        }
        Ok(out)
    } else {
        one(name)
    }
}
