use couette_lab::dynamics::{simulate, FlowState, Schedule};
use couette_lab::energy::{energy_e, equivalence_constant, hs_half_norm, weighted_energy, weighted_sq};
use couette_lab::grid::{SpectralField, SpectralGrid};
use couette_lab::harness::{random_initial, InitSpec};
use couette_lab::lab::damping_weight_exact;
use couette_lab::multipliers::WeightBundle;
use couette_lab::params::PhysicalParams;
use num_complex::Complex;
use proptest::prelude::*;

fn mirror_conj(s: &FlowState<f64>) -> FlowState<f64> {
    let mut out = s.clone();
    for (dst, src) in out.fields_mut().into_iter().zip(s.fields()) {
        let n = src.coeffs().len();
        for i in 0..n {
            dst.coeffs_mut()[i] = src.coeffs()[n - 1 - i].conj();
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_form_is_equivalent_to_the_plain_norm(seed in any::<u64>(), gamma in 0.51f64..4.0, t in 0.0f64..50.0) {
        let grid = SpectralGrid::new(4, 10, 12.0).unwrap();
        let mut s = random_initial(&grid, &InitSpec::new(1.0, seed), 2.0, 1.0).unwrap();
        s.t = t;
        let w = |k: i64, xi: f64| (1.0 + (k * k) as f64 + xi * xi).powf(0.75);
        let e = weighted_energy(&s, gamma, w);
        let plain = weighted_sq(&s, w);
        let c = equivalence_constant(gamma);
        prop_assert!(e >= plain / c * (1.0 - 1e-12));
        prop_assert!(e <= plain * c * (1.0 + 1e-12));
    }

    #[test]
    fn energy_is_blind_to_the_reality_mirror(seed in any::<u64>(), t in 0.0f64..20.0) {
        let grid = SpectralGrid::new(3, 8, 10.0).unwrap();
        let p = PhysicalParams::standard(1e-3, 1e-3);
        let w = WeightBundle::from_physical(&p).unwrap();
        let mut s = FlowState::zeros(&grid, t);
        let mut k = seed;
        for f in s.fields_mut() {
            for c in f.coeffs_mut() {
                k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *c = Complex::new((k >> 11) as f64 / (1u64 << 53) as f64 - 0.5, (k >> 13) as f64 / (1u64 << 51) as f64 - 0.5);
            }
        }
        let e = energy_e(&s, &p, &w).unwrap();
        let em = energy_e(&mirror_conj(&s), &p, &w).unwrap();
        prop_assert!((e - em).abs() <= 1e-12 * e.abs());
        let mut sym = s.clone();
        sym.symmetrize();
        let es = energy_e(&sym, &p, &w).unwrap();
        let mut again = sym.clone();
        again.symmetrize();
        prop_assert_eq!(energy_e(&again, &p, &w).unwrap(), es);
    }
}

#[test]
fn damping_weight_holds_exactly_on_grid_modes() {
    let grid = SpectralGrid::new(16, 128, 8.0 * std::f64::consts::PI).unwrap();
    for t in [0.0, 0.3, 1.0, 7.5, 33.0, 250.0, 1e4] {
        for (k, j) in grid.modes().filter(|m| m.0 != 0) {
            assert!(damping_weight_exact(k, grid.xi(j), t).unwrap(), "k {k} j {j} t {t}");
        }
    }
}

/// `θ̂ = e^{−ξ²}` on `k = ±1`, so refinement in `ξ` samples the same profile.
fn smooth_data(l_y: f64, j: i64) -> FlowState<f64> {
    let grid = SpectralGrid::new(2, j, l_y).unwrap();
    let th = SpectralField::from_function(&grid, |k, xi| {
        if k.abs() == 1 { Complex::new((-xi * xi).exp(), 0.0) } else { Complex::new(0.0, 0.0) }
    })
    .unwrap();
    FlowState::new(0.0, SpectralField::zeros(&grid), SpectralField::zeros(&grid), th).unwrap()
}

/// Smallest `C` with `norm(t) ≤ C⟨t⟩^{−3/2} hs_half_norm(0)` along an inviscid linear run.
fn fitted_constants(init: &FlowState<f64>) -> (f64, f64) {
    let p = PhysicalParams::new(0.0, 0.0, 1.0, 0.5, 2.0, 0.25).unwrap();
    let mut sch = Schedule::new(0.02, 60.0, 10).linear(true);
    sch.long_time_terms = false;
    let tr = simulate(init, &p, &sch).unwrap();
    let h0 = hs_half_norm(init, 2.0, false);
    let mut c = (0.0f64, 0.0f64);
    for r in &tr.rows {
        let tb = (1.0 + r.t * r.t).powf(0.75);
        c.0 = c.0.max(r.u2_l2 * tb / h0);
        c.1 = c.1.max(r.u2hat_l1 * tb / h0);
    }
    c
}

#[test]
fn damping_constants_are_stable_under_refinement() {
    let pi = std::f64::consts::PI;
    let coarse = fitted_constants(&smooth_data(8.0 * pi, 48));
    let fine = fitted_constants(&smooth_data(16.0 * pi, 96));
    for (a, b) in [(coarse.0, fine.0), (coarse.1, fine.1)] {
        assert!(a.is_finite() && a > 0.0);
        assert!((a - b).abs() <= 0.2 * a, "{a} vs {b}");
    }
}
