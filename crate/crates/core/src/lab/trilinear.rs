//! Trilinear convolution bounds by brute-force lattice sums on a small box.
//!
//! Fields are nonnegative amplitudes on `|k| ≤ K`, `ξ = j·dξ` with `|j| ≤ J`; integrals
//! become sums weighted by `dξ`. `f(k−l, ξ−η)` vanishes outside the box.

use std::sync::OnceLock;

use super::{ratio, run_check, Draw, Eval, RatioReport, SamplePoint, SampleSpec, Split};
use crate::error::Result;
use crate::multipliers::WeightBundle;
use crate::scalar::{bracket, bracket2, pair_norm};

/// Distinct times per batch; weight tables are cached per time.
const TIME_NODES: usize = 64;

/// Three amplitude fields on one lattice box.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeTriple {
    pub k_max: i64,
    pub j_max: i64,
    pub dxi: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl LatticeTriple {
    pub fn zeros(k_max: i64, j_max: i64, dxi: f64) -> Self {
        let n = ((2 * k_max + 1) * (2 * j_max + 1)) as usize;
        Self {
            k_max,
            j_max,
            dxi,
            f: vec![0.0; n],
            g: vec![0.0; n],
            h: vec![0.0; n],
        }
    }

    #[inline]
    pub fn index(&self, k: i64, j: i64) -> usize {
        ((k + self.k_max) * (2 * self.j_max + 1) + (j + self.j_max)) as usize
    }

    fn nodes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let jm = self.j_max;
        (-self.k_max..=self.k_max).flat_map(move |k| (-jm..=jm).map(move |j| (k, j)))
    }

    #[inline]
    fn contains(&self, k: i64, j: i64) -> bool {
        k.abs() <= self.k_max && j.abs() <= self.j_max
    }

    /// `Σ_{k,l} Σ_{ξ,η} f(k−l, ξ−η) g(l, η) h(k, ξ) w(k, ξ, l, η) dξ²`.
    pub fn sum<W: Fn(i64, i64, i64, i64) -> f64>(&self, w: W) -> f64 {
        let mut acc = 0.0;
        for (k, j) in self.nodes() {
            let hv = self.h[self.index(k, j)];
            if hv == 0.0 {
                continue;
            }
            for (l, i) in self.nodes() {
                let (dk, dj) = (k - l, j - i);
                if !self.contains(dk, dj) {
                    continue;
                }
                let fv = self.f[self.index(dk, dj)];
                let gv = self.g[self.index(l, i)];
                if fv == 0.0 || gv == 0.0 {
                    continue;
                }
                acc += fv * gv * hv * w(k, j, l, i);
            }
        }
        acc * self.dxi * self.dxi
    }

    /// `(Σ |w·v|² dξ)^{1/2}` over one field.
    pub fn norm<W: Fn(i64, i64) -> f64>(&self, v: &[f64], w: W) -> f64 {
        self.nodes()
            .map(|(k, j)| {
                let x = w(k, j) * v[self.index(k, j)];
                x * x
            })
            .sum::<f64>()
            .sqrt()
            * self.dxi.sqrt()
    }

    pub fn l1(&self, v: &[f64]) -> f64 {
        v.iter().map(|x| x.abs()).sum::<f64>() * self.dxi
    }

    fn zero_row_f(&self) -> Vec<f64> {
        let mut f = self.f.clone();
        for j in -self.j_max..=self.j_max {
            let i = self.index(0, j);
            f[i] = 0.0;
        }
        f
    }
}

/// Sobolev-weighted trilinear sum and its `L²` bound.
pub fn sobolev_sides(tri: &LatticeTriple, t: f64, s: f64) -> (f64, f64) {
    let s12 = 0.5 - s;
    let xi = |j: i64| j as f64 * tri.dxi;
    let b = |k: i64, j: i64| bracket2(k as f64, xi(j)).powf(s12);
    let lhs = tri.sum(|k, j, l, i| {
        let dk = (k - l) as f64;
        b(k, j) + b(l, i) + b(k - l, j - i) + bracket2(dk, xi(j - i) - dk * t).powf(s12)
    });
    let rhs = tri.norm(&tri.f, |_, _| 1.0) * tri.norm(&tri.g, |_, _| 1.0) * tri.norm(&tri.h, |_, _| 1.0);
    (lhs, rhs)
}

/// Trilinear sum against `Υ`; `f(0, ·)` is dropped.
pub fn upsilon_sides(tri: &LatticeTriple, t: f64, delta: f64, ups: &[f64]) -> (f64, f64) {
    let tri = LatticeTriple {
        f: tri.zero_row_f(),
        ..tri.clone()
    };
    let xi = |j: i64| j as f64 * tri.dxi;
    let p = -0.5 * (1.0 + delta);
    let lhs = tri.sum(|k, j, l, i| {
        let dk = (k - l) as f64;
        bracket2(l as f64, xi(i)).powf(p) * dk.abs().powf(0.5 * delta) * pair_norm(dk, xi(j - i) - dk * t).powf(p)
    });
    let rhs = tri.norm(&tri.f, |_, _| 1.0)
        * tri.norm(&tri.g, |_, _| 1.0)
        * tri.norm(&tri.h, |k, j| ups[tri.index(k, j)].sqrt());
    (lhs, rhs)
}

/// Weights at the lattice nodes for one time.
struct Tables {
    m: Vec<f64>,
    ups: Vec<f64>,
}

fn tables(tri: &LatticeTriple, w: &WeightBundle<f64>, t: f64, with_m: bool) -> Result<Tables> {
    let mut m = Vec::new();
    let mut ups = Vec::new();
    for (k, j) in tri.nodes() {
        let x = j as f64 * tri.dxi;
        ups.push(w.upsilon(t, k, x));
        if with_m {
            m.push(w.big_m(t, k, x)?);
        }
    }
    Ok(Tables { m, ups })
}

/// Long-time trilinear sum with the shear factors and its four-term bound.
fn shear_sides(
    tri: &LatticeTriple,
    t: f64,
    kappa: f64,
    eps_small: f64,
    delta: f64,
    tab: &Tables,
) -> (f64, f64) {
    let tri = LatticeTriple {
        f: tri.zero_row_f(),
        ..tri.clone()
    };
    let xi = |j: i64| j as f64 * tri.dxi;
    let m = |k: i64, j: i64| tab.m[tri.index(k, j)];
    let lhs = tri.sum(|k, j, l, i| {
        let (kf, lf) = (k as f64, l as f64);
        (xi(i) - lf * t).abs() * m(k, j).powi(2) + (xi(j) - kf * t).abs() * m(l, i).powi(2)
    });
    let sh = |k: i64, j: i64| pair_norm(k as f64, xi(j) - k as f64 * t);
    let k13 = |k: i64, _: i64| (k as f64).abs().cbrt();
    let nm = |v: &[f64]| tri.norm(v, m);
    let nsh = |v: &[f64]| tri.norm(v, |k, j| sh(k, j) * m(k, j));
    let nk = |v: &[f64]| tri.norm(v, |k, j| k13(k, j) * m(k, j));
    let nups = |v: &[f64]| tri.norm(v, |k, j| tab.ups[tri.index(k, j)].sqrt() * m(k, j));
    let nbr = tri.norm(&tri.f, |k, j| {
        if k == 0 {
            0.0
        } else {
            bracket(xi(j) / k as f64 - t).powf(0.5 * delta) * m(k, j)
        }
    });
    let (f, g, h) = (&tri.f, &tri.g, &tri.h);
    let (c16, c13) = (kappa.powf(1.0 / 6.0), kappa.cbrt());
    let e = (eps_small * c13 * t).exp();
    let rhs = e * tri.l1(f) * (nsh(g) * nm(h) + nm(g) * nsh(h))
        + nm(f) * (c16 * nsh(g) + nk(g) / c16) * nm(h)
        + nm(f) * nm(g) * (c16 * nsh(h) + nk(h) / c16)
        + nbr * (nm(g) * nups(h) + nm(h) * nups(g)) / c13;
    (lhs, rhs)
}

/// Random nonnegative amplitudes: dense, heavy-tailed, sparse or decaying.
fn random_field(d: &mut Draw, tri: &LatticeTriple) -> Vec<f64> {
    let n = tri.f.len();
    match d.below(4) {
        0 => (0..n).map(|_| d.unit()).collect(),
        1 => (0..n)
            .map(|_| (std::f64::consts::PI * (d.unit() - 0.5)).tan().abs().min(1e6))
            .collect(),
        2 => {
            let mut v = vec![0.0; n];
            for _ in 0..1 + d.below(4) {
                let i = d.below(n);
                v[i] = d.uniform(0.1, 1.0);
            }
            v
        }
        _ => {
            let p = d.uniform(0.0, 4.0);
            tri.nodes()
                .map(|(k, j)| d.unit() * bracket2(k as f64, j as f64 * tri.dxi).powf(-p))
                .collect()
        }
    }
}

fn time_node(i: usize, lo: f64, hi: f64) -> f64 {
    let u = (i as f64 + 0.5) / TIME_NODES as f64;
    lo + (hi - lo) * u * u * u
}

/// Three reports: the Sobolev-weighted sum, the `Υ` sum and the long-time shear sum.
pub fn check_trilinear_bounds(spec: &SampleSpec) -> Result<Vec<RatioReport>> {
    let p = spec.physical;
    let kappa = p.kappa();
    let w = spec.bundle_at(kappa)?;
    let t0 = kappa.powf(-1.0 / 6.0);
    let (lo, hi) = spec.t_range;
    let base = LatticeTriple::zeros(spec.lattice_k, spec.lattice_j, spec.lattice_dxi);
    let cache: Vec<OnceLock<Result<(Tables, Tables)>>> = (0..2 * TIME_NODES).map(|_| OnceLock::new()).collect();
    let span = |split: Split| match split {
        Split::Train => 1.0,
        Split::Test => spec.widen,
    };
    let times = |split: Split, i: usize| {
        let sc = span(split);
        let top = lo + (hi - lo) * sc;
        (time_node(i, lo, top), time_node(i, t0, top.max(2.0 * t0)))
    };
    let names = ["trilinear_sobolev", "trilinear_upsilon", "trilinear_shear"];
    run_check(spec, &names, Vec::new(), None, |d: &mut Draw| {
        let ti = d.below(TIME_NODES);
        let (t_short, t_long) = times(d.split, ti);
        let slot = match d.split {
            Split::Train => ti,
            Split::Test => TIME_NODES + ti,
        };
        let tabs = cache[slot].get_or_init(|| Ok((tables(&base, &w, t_short, false)?, tables(&base, &w, t_long, true)?)));
        let (short_tab, long_tab) = match tabs {
            Ok(v) => v,
            Err(e) => return Err(crate::Error::Fit(format!("weight tables: {e}"))),
        };
        let mut tri = base.clone();
        tri.f = random_field(d, &tri);
        tri.g = random_field(d, &tri);
        tri.h = random_field(d, &tri);
        let (l1, r1) = sobolev_sides(&tri, t_short, p.s);
        let (l2, r2) = upsilon_sides(&tri, t_short, p.delta, &short_tab.ups);
        let (l3, r3) = shear_sides(&tri, t_long, kappa, p.eps_small(), p.delta, long_tab);
        Ok(Eval {
            ratios: vec![ratio(l1, r1), ratio(l2, r2), ratio(l3, r3)],
            stratum: None,
            point: SamplePoint(vec![("t_short", t_short), ("t_long", t_long), ("sample", d.index as f64)]),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_mode() -> LatticeTriple {
        let mut tri = LatticeTriple::zeros(3, 3, 0.5);
        let (a, b) = ((1, 2), (2, -1));
        let (ia, ib, ic) = (tri.index(a.0, a.1), tri.index(b.0, b.1), tri.index(3, 1));
        tri.f[ia] = 2.0;
        tri.g[ib] = 3.0;
        tri.h[ic] = 5.0;
        tri
    }

    #[test]
    fn single_mode_hand_check() {
        let tri = single_mode();
        let (t, s) = (1.5, 2.0);
        let (lhs, rhs) = sobolev_sides(&tri, t, s);
        let w = bracket2(3.0, 0.5f64).powf(0.5 - s)
            + bracket2(2.0, -0.5f64).powf(0.5 - s)
            + bracket2(1.0, 1.0f64).powf(0.5 - s)
            + bracket2(1.0, 1.0 - 1.5f64).powf(0.5 - s);
        assert!((lhs - 30.0 * 0.25 * w).abs() < 1e-14);
        assert!((rhs - 30.0 * 0.5f64.powf(1.5)).abs() < 1e-13);
    }

    #[test]
    fn zero_field_gives_zero() {
        let mut tri = single_mode();
        tri.f.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(sobolev_sides(&tri, 2.0, 2.0).0, 0.0);
        let ups = vec![1.0; tri.h.len()];
        assert_eq!(upsilon_sides(&tri, 2.0, 0.25, &ups).0, 0.0);
    }
}
