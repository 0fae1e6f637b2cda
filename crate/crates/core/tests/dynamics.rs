use couette_lab::dynamics::{dissipation_integral, simulate, FlowState, Schedule, Stepper, DIVERGENCE_TOL};
use couette_lab::grid::{SpectralField, SpectralGrid};
use couette_lab::harness::{random_initial, InitSpec};
use couette_lab::params::PhysicalParams;
use couette_lab::quad::gauss_kronrod;
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

fn params(nu: f64, mu: f64) -> PhysicalParams<f64> {
    PhysicalParams::new(nu, mu, 1.0, 0.5, 2.0, 0.25).unwrap()
}

/// One Fourier mode of the linearized system, pressure solved explicitly.
fn mode_rhs(k: f64, xi: f64, t: f64, p: &PhysicalParams<f64>, y: [C; 3]) -> [C; 3] {
    let [u1, u2, th] = y;
    let eta = xi - k * t;
    let kk = k * k + eta * eta;
    let g2 = p.gamma * p.gamma;
    let i = C::i();
    let pr = i * (u2 * (2.0 * k) + th * (g2 * eta)) / kk;
    [
        -u2 - i * k * pr - u1 * (p.nu * kk),
        -i * eta * pr - th * g2 - u2 * (p.nu * kk),
        u2 - th * (p.mu * kk),
    ]
}

fn oracle(k: f64, xi: f64, p: &PhysicalParams<f64>, y0: [C; 3], t_end: f64, h: f64) -> [C; 3] {
    let n = (t_end / h).round() as usize;
    let mut y = y0;
    let add = |y: [C; 3], d: [C; 3], s: f64| [y[0] + d[0] * s, y[1] + d[1] * s, y[2] + d[2] * s];
    for s in 0..n {
        let t = s as f64 * h;
        let k1 = mode_rhs(k, xi, t, p, y);
        let k2 = mode_rhs(k, xi, t + h / 2.0, p, add(y, k1, h / 2.0));
        let k3 = mode_rhs(k, xi, t + h / 2.0, p, add(y, k2, h / 2.0));
        let k4 = mode_rhs(k, xi, t + h, p, add(y, k3, h));
        for c in 0..3 {
            y[c] += (k1[c] + k2[c] * 2.0 + k3[c] * 2.0 + k4[c]) * (h / 6.0);
        }
    }
    y
}

fn single_mode(grid: &SpectralGrid<f64>, k: i64, j: i64, u2: C, th: C) -> FlowState<f64> {
    let xi = grid.xi(j);
    let u1 = -u2 * xi / k as f64;
    let mut s = FlowState::zeros(grid, 0.0);
    for (f, v) in [(&mut s.u1, u1), (&mut s.u2, u2), (&mut s.theta, th)] {
        f.set(k, j, v);
        f.set(-k, -j, v.conj());
    }
    s
}

#[test]
fn single_mode_matches_ode_oracle() {
    let grid = SpectralGrid::new(3, 8, 12.0).unwrap();
    let p = params(1e-3, 2e-3);
    let (k, j) = (2, 3);
    let init = single_mode(&grid, k, j, C::new(0.3, -0.1), C::new(-0.2, 0.5));
    let mut sch = Schedule::new(0.01, 10.0, 100).linear(true);
    sch.checkpoint_every = Some(250);
    let tr = simulate(&init, &p, &sch).unwrap();
    let y0 = [init.u1.get(k, j), init.u2.get(k, j), init.theta.get(k, j)];
    for (step, st) in tr.checkpoints.iter().chain([(1000, tr.final_state.clone())].iter()) {
        let t = *step as f64 * 0.01;
        let want = oracle(k as f64, grid.xi(j), &p, y0, t, 2e-4);
        let got = [st.u1.get(k, j), st.u2.get(k, j), st.theta.get(k, j)];
        let scale = want.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for c in 0..3 {
            assert!((got[c] - want[c]).norm() <= 1e-6 * scale, "t = {t}, field {c}: {} vs {}", got[c], want[c]);
        }
    }
}

#[test]
fn zero_modes_follow_the_heat_equation() {
    let grid = SpectralGrid::new(2, 16, 20.0).unwrap();
    let (nu, mu) = (3e-3, 7e-3);
    let p = params(nu, mu);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u1 = SpectralField::from_function(&grid, |k, _| {
        if k == 0 { C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) } else { C::new(0.0, 0.0) }
    })
    .unwrap();
    let th = SpectralField::from_function(&grid, |k, _| {
        if k == 0 { C::new(rng.gen_range(-1.0..1.0), 0.0) } else { C::new(0.0, 0.0) }
    })
    .unwrap();
    let mut init = FlowState::new(0.0, u1, SpectralField::zeros(&grid), th).unwrap();
    init.project();
    let t_end = 3.0;
    for linear in [true, false] {
        let tr = simulate(&init, &p, &Schedule::new(0.05, t_end, 10).linear(linear)).unwrap();
        let st = &tr.final_state;
        for j in -16..=16 {
            let xi = grid.xi(j);
            let eu = init.u1.get(0, j) * (-nu * xi * xi * t_end).exp();
            let et = init.theta.get(0, j) * (-mu * xi * xi * t_end).exp();
            assert!((st.u1.get(0, j) - eu).norm() < 1e-13, "u1 at j = {j}");
            assert!((st.theta.get(0, j) - et).norm() < 1e-13, "theta at j = {j}");
            assert_eq!(st.u2.get(0, j), C::new(0.0, 0.0));
        }
    }
}

#[test]
fn inviscid_single_mode_is_time_reversible() {
    let grid = SpectralGrid::new(2, 6, 9.0).unwrap();
    let p = params(0.0, 0.0);
    let init = single_mode(&grid, 1, 2, C::new(0.4, 0.2), C::new(0.1, -0.3));
    let mut st = init.clone();
    let mut stepper = Stepper::new(&grid, &p, false);
    for _ in 0..500 {
        stepper.advance(&mut st, 0.01).unwrap();
    }
    for _ in 0..500 {
        stepper.advance(&mut st, -0.01).unwrap();
    }
    assert!(st.t.abs() < 1e-12);
    assert!(st.max_abs_diff(&init).unwrap() < 1e-6 * init.max_abs());
}

#[test]
fn dissipation_integral_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let k: i64 = rng.gen_range(-40..=40);
        let xi: f64 = rng.gen_range(-200.0..200.0);
        let t0: f64 = rng.gen_range(0.0..100.0);
        let t1 = t0 + rng.gen_range(0.0..5.0);
        let kf = k as f64;
        let want = gauss_kronrod(|s| kf * kf + (xi - kf * s).powi(2), t0, t1, 0.0, 1e-14).unwrap();
        let got = dissipation_integral(k, xi, t0, t1);
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300), "k {k} xi {xi} [{t0}, {t1}]");
    }
}

#[test]
fn divergence_constraint_holds_before_reprojection() {
    let grid = SpectralGrid::new(6, 24, 8.0 * std::f64::consts::PI).unwrap();
    let p = params(1e-3, 1e-3);
    let init = random_initial(&grid, &InitSpec::new(0.5, 4), 2.0, 1.0).unwrap();
    let tr = simulate(&init, &p, &Schedule::new(0.004, 2.0, 50)).unwrap();
    assert!(tr.max_divergence_defect <= DIVERGENCE_TOL, "{}", tr.max_divergence_defect);
    assert!(tr.max_projection_change < 1e-8, "{}", tr.max_projection_change);
    assert!(tr.final_state.is_divergence_free(DIVERGENCE_TOL));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_evolution_is_additive_and_homogeneous(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0) {
        let grid = SpectralGrid::new(4, 12, 15.0).unwrap();
        let p = params(1e-3, 1e-3);
        let f = random_initial(&grid, &InitSpec::new(1.0, s1), 2.0, 1.0).unwrap();
        let g = random_initial(&grid, &InitSpec::new(1.0, s2), 2.0, 1.0).unwrap();
        let mut h = f.clone();
        h.scale(a);
        h.axpy(1.0, &g).unwrap();
        let sch = Schedule::new(0.05, 3.0, 60).linear(true);
        let run = |x: &FlowState<f64>| simulate(x, &p, &sch).unwrap().final_state;
        let (rf, rg, rh) = (run(&f), run(&g), run(&h));
        let mut want = rf;
        want.scale(a);
        want.axpy(1.0, &rg).unwrap();
        prop_assert!(rh.max_abs_diff(&want).unwrap() <= 1e-10 * want.max_abs());
    }
}
