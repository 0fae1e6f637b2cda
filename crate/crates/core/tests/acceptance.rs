//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use couette_lab::dynamics::{simulate, FlowState, Schedule};
use couette_lab::energy::{check_prop_longtime, coercivity_margin};
use couette_lab::grid::{convolve_direct, convolve_fast, SpectralField, SpectralGrid};
use couette_lab::harness::{
    damping_fits, ed_rate_scaling, gronwall_envelope, run_is_stable, threshold_scan, BisectionSpec, GridSpec,
    InitSpec, RunConfig,
};
use couette_lab::lab::{self, poisson_ratio, SampleSpec};
use couette_lab::multipliers::{MultiplierParams, WeightBundle};
use couette_lab::params::PhysicalParams;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

type Check = fn() -> Result<Outcome, String>;

const L_Y: f64 = 8.0 * PI;

fn params(kappa: f64) -> PhysicalParams<f64> {
    PhysicalParams::new(kappa, kappa, 1.0, 0.5, 2.0, 0.25).unwrap()
}

fn coercivity_boundary() -> Result<Outcome, String> {
    let start = Instant::now();
    let above = coercivity_margin(0.51);
    let below = coercivity_margin(0.49);
    let at = coercivity_margin(0.5);
    let el = start.elapsed();
    Ok(verdict(
        above > 0.0 && below < 0.0 && at == 0.0 && el < Duration::from_millis(1),
        format!("margin(0.51) = {above:.3e}, margin(0.49) = {below:.3e}, margin(0.5) = {at}, {el:?}"),
    ))
}

fn inviscid_damping_exponents() -> Result<Outcome, String> {
    let mut init = InitSpec::new(1e-3, 1).wave();
    init.envelope = 3.0;
    let mut schedule = Schedule::new(0.05, 100.0, 20).linear(true);
    schedule.long_time_terms = false;
    let cfg = RunConfig {
        grid: GridSpec::new(16, 256, L_Y),
        params: params(0.0),
        init,
        schedule,
    };
    let tr = cfg.run().map_err(|e| e.to_string())?;
    let f = damping_fits(&tr.rows, (10.0, 100.0)).map_err(|e| e.to_string())?;
    let near = |v: f64, want: f64, tol: f64| (v - want).abs() <= tol;
    let ok = near(f.u2_l2.value, -1.5, 0.15)
        && near(f.u1neq_l2.value, -0.5, 0.15)
        && near(f.thetaneq_l2.value, -0.5, 0.15)
        && near(f.u2hat_l1.value, -1.5, 0.2);
    Ok(verdict(
        ok,
        format!(
            "u2 {:.3}, u1_neq {:.3}, theta_neq {:.3}, u2hat_L1 {:.3}",
            f.u2_l2.value, f.u1neq_l2.value, f.thetaneq_l2.value, f.u2hat_l1.value
        ),
    ))
}

fn enhanced_dissipation_scaling() -> Result<Outcome, String> {
    let rep = ed_rate_scaling(&[1e-3, 1e-4, 1e-5, 1e-6], |k| {
        let mut schedule = Schedule::new(0.1, 5.0 * k.powf(-1.0 / 3.0), 10).linear(true);
        schedule.long_time_terms = false;
        Ok(RunConfig {
            grid: GridSpec::new(8, 64, L_Y),
            params: params(k),
            init: InitSpec::new(1e-3, 1),
            schedule,
        })
    })
    .map_err(|e| e.to_string())?;
    let s = rep.slope.value;
    Ok(verdict(
        (0.25..=0.41).contains(&s),
        format!("slope {s:.4} ± {:.4}", rep.slope.half_width),
    ))
}

/// Nonlinear run at κ = 1e-4 shared by the long-time and short-time criteria.
fn small_data_run(dt: f64) -> Result<Vec<couette_lab::energy::DiagnosticsRow>, String> {
    let cfg = RunConfig {
        grid: GridSpec::new(8, 64, L_Y),
        params: params(1e-4),
        init: InitSpec::new(0.1, 1),
        schedule: Schedule::new(dt, 15.0, (0.1 / dt).round() as usize),
    };
    let tr = cfg.run().map_err(|e| e.to_string())?;
    Ok(tr.rows)
}

fn long_time_monotonicity() -> Result<Outcome, String> {
    let rows = small_data_run(0.02)?;
    let rep = check_prop_longtime(&rows, &params(1e-4), 1.0).map_err(|e| e.to_string())?;
    let ok = rep.hypothesis_met && rep.max_rate_rel <= 1e-10;
    Ok(verdict(
        ok,
        format!(
            "smallness held: {}, max (dE*/dt)/E* = {:.3e} over {} samples",
            rep.hypothesis_met,
            rep.max_rate_rel,
            rep.samples.len()
        ),
    ))
}

fn short_time_gronwall() -> Result<Outcome, String> {
    let t0 = params(1e-4).t0();
    let coarse = gronwall_envelope(&small_data_run(0.02)?, t0).map_err(|e| e.to_string())?;
    let fine = gronwall_envelope(&small_data_run(0.01)?, t0).map_err(|e| e.to_string())?;
    let drift = (fine.c_fit - coarse.c_fit).abs() / coarse.c_fit.abs();
    let ok = coarse.tightness >= 0.0 && fine.tightness >= 0.0 && drift <= 0.2;
    Ok(verdict(
        ok,
        format!("C = {:.6e} (dt 0.02), {:.6e} (dt 0.01), relative change {drift:.2e}", coarse.c_fit, fine.c_fit),
    ))
}

fn inequality_suite() -> Result<Outcome, String> {
    let spec = SampleSpec::default();
    let reports = lab::run_named("all", &spec).map_err(|e| e.to_string())?;
    let mut failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.to_string()).collect();
    if reports.iter().any(|r| r.n_train < 10_000 || r.n_test < 10_000) {
        failed.push("batch smaller than 1e4".into());
    }
    let unit = poisson_ratio(1.0, 1.0, 0.0, 1.0, lab::QUAD_TOL).map_err(|e| e.to_string())?;
    if (unit - PI).abs() > 1e-6 {
        failed.push(format!("poisson unit point {unit}"));
    }
    Ok(verdict(
        failed.is_empty() && reports.len() == 16,
        if failed.is_empty() {
            format!("{} reports held out, unit point ratio {unit:.12}", reports.len())
        } else {
            failed.join("; ")
        },
    ))
}

fn random_field(grid: &SpectralGrid<f64>, rng: &mut ChaCha8Rng) -> SpectralField<f64> {
    let c = (0..grid.len()).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    SpectralField::from_coeffs(grid, c).unwrap()
}

fn convolution_error() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..40 {
        let grid = SpectralGrid::new(rng.gen_range(1..=8), rng.gen_range(1..=8), rng.gen_range(1.0..40.0)).unwrap();
        let (f, g) = (random_field(&grid, &mut rng), random_field(&grid, &mut rng));
        let d = convolve_direct(&f, &g).unwrap();
        let fast = convolve_fast(&f, &g).unwrap();
        let scale = d.max_abs().max(1e-300);
        for (a, b) in d.coeffs().iter().zip(fast.coeffs()) {
            worst = worst.max((a - b).norm() / scale);
        }
    }
    worst
}

/// One Fourier mode of the linear system with the pressure solved explicitly.
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

fn single_mode_error() -> f64 {
    let grid = SpectralGrid::new(3, 8, 12.0).unwrap();
    let p = PhysicalParams::new(1e-3, 2e-3, 1.0, 0.5, 2.0, 0.25).unwrap();
    let (k, j) = (2i64, 3i64);
    let (kf, xi) = (k as f64, grid.xi(j));
    let (u2, th) = (C::new(0.3, -0.1), C::new(-0.2, 0.5));
    let mut init = FlowState::zeros(&grid, 0.0);
    for (f, v) in [(&mut init.u1, -u2 * xi / kf), (&mut init.u2, u2), (&mut init.theta, th)] {
        f.set(k, j, v);
        f.set(-k, -j, v.conj());
    }
    let tr = simulate(&init, &p, &Schedule::new(0.01, 10.0, 100).linear(true)).unwrap();

    let h = 2e-4;
    let mut y = [init.u1.get(k, j), u2, th];
    let add = |y: [C; 3], d: [C; 3], s: f64| [y[0] + d[0] * s, y[1] + d[1] * s, y[2] + d[2] * s];
    for s in 0..50_000 {
        let t = s as f64 * h;
        let k1 = mode_rhs(kf, xi, t, &p, y);
        let k2 = mode_rhs(kf, xi, t + h / 2.0, &p, add(y, k1, h / 2.0));
        let k3 = mode_rhs(kf, xi, t + h / 2.0, &p, add(y, k2, h / 2.0));
        let k4 = mode_rhs(kf, xi, t + h, &p, add(y, k3, h));
        for c in 0..3 {
            y[c] += (k1[c] + k2[c] * 2.0 + k3[c] * 2.0 + k4[c]) * (h / 6.0);
        }
    }
    let st = &tr.final_state;
    let got = [st.u1.get(k, j), st.u2.get(k, j), st.theta.get(k, j)];
    let scale = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
    (0..3).map(|c| (got[c] - y[c]).norm() / scale).fold(0.0, f64::max)
}

fn heat_error() -> f64 {
    let grid = SpectralGrid::new(2, 16, 20.0).unwrap();
    let (nu, mu) = (3e-3, 7e-3);
    let p = PhysicalParams::new(nu, mu, 1.0, 0.5, 2.0, 0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut init = FlowState::zeros(&grid, 0.0);
    for j in 0..=16 {
        let (a, b) = (C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rng.gen_range(-1.0..1.0));
        let (a, b) = if j == 0 { (C::new(a.re, 0.0), C::new(b, 0.0)) } else { (a, C::new(b, 0.3 * b)) };
        init.u1.set(0, j, a);
        init.u1.set(0, -j, a.conj());
        init.theta.set(0, j, b);
        init.theta.set(0, -j, b.conj());
    }
    let t_end = 3.0;
    let tr = simulate(&init, &p, &Schedule::new(0.05, t_end, 10)).unwrap();
    let st = &tr.final_state;
    let mut worst: f64 = 0.0;
    for j in -16..=16 {
        let xi = grid.xi(j);
        let eu = init.u1.get(0, j) * (-nu * xi * xi * t_end).exp();
        let et = init.theta.get(0, j) * (-mu * xi * xi * t_end).exp();
        worst = worst.max((st.u1.get(0, j) - eu).norm()).max((st.theta.get(0, j) - et).norm());
    }
    worst
}

fn d5(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

fn bundle(kappa: f64) -> WeightBundle<f64> {
    WeightBundle::new(MultiplierParams::new(&PhysicalParams::standard(kappa, kappa), 400, 1e-10).unwrap()).unwrap()
}

/// Worst scaled mismatch of the finite-difference log-derivatives, short then long times.
fn log_derivative_errors() -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = bundle(1e-4);
    let mut short: f64 = 0.0;
    for _ in 0..1000 {
        let k: i64 = rng.gen_range(-20..=20);
        let xi: f64 = rng.gen_range(-100.0..100.0);
        let t: f64 = rng.gen_range(0.01..100.0);
        let h = 1e-3 / k.abs().max(1) as f64;
        let q = w.q_small(t, k, xi);
        short = short.max((d5(|s| w.log_a_k(s, k, xi), t, h) - q).abs() / q.abs().max(1.0));
    }
    let mut long: f64 = 0.0;
    for kappa in [1e-3, 1e-5] {
        let w = bundle(kappa);
        let t0 = w.params().t0();
        for _ in 0..1000 {
            let k: i64 = rng.gen_range(-12..=12);
            let xi: f64 = rng.gen_range(-150.0..150.0);
            let t = t0 + rng.gen_range(0.0..200.0);
            let h = 1e-3 / k.abs().max(1) as f64;
            let q = w.q_star(t, k, xi).unwrap();
            let fd = d5(|s| w.log_big_m(s, k, xi).unwrap(), t, h);
            long = long.max((fd - q).abs() / q.abs().max(1.0));
        }
    }
    (short, long)
}

fn oracle_equivalences() -> Result<Outcome, String> {
    let conv = convolution_error();
    let mode = single_mode_error();
    let heat = heat_error();
    let (qa, qm) = log_derivative_errors();
    Ok(verdict(
        conv <= 1e-10 && mode <= 1e-6 && heat <= 1e-13 && qa <= 1e-8 && qm <= 1e-6,
        format!("convolution {conv:.1e}, single mode {mode:.1e}, heat {heat:.1e}, dlogA {qa:.1e}, dlogM {qm:.1e}"),
    ))
}

fn threshold_scan_sanity() -> Result<Outcome, String> {
    let kappas = [1e-3, 1e-4, 1e-5];
    let third = 1.0 / 3.0;
    let synth_spec = BisectionSpec {
        lo: 0.5,
        hi: 10.0,
        depth: 30,
        scaling: third,
    };
    let synth = threshold_scan(&kappas, &synth_spec, |k, a| Ok(a <= 2.0 * k.powf(third))).map_err(|e| e.to_string())?;
    let alpha = synth.slope.map(|s| s.value).unwrap_or(f64::NAN);
    let synth_ok = (alpha - third).abs() < 1e-8;

    let spec = BisectionSpec {
        lo: 2.0,
        hi: 200.0,
        depth: 6,
        scaling: 0.0,
    };
    let real = threshold_scan(&kappas, &spec, |k, a| {
        let mut schedule = Schedule::new(0.05, 5.0 * k.powf(-third), 20);
        schedule.long_time_terms = false;
        schedule.stability_factor = Some(10.0);
        run_is_stable(&RunConfig {
            grid: GridSpec::new(8, 64, L_Y),
            params: params(k),
            init: InitSpec::new(a, 1),
            schedule,
        })
    })
    .map_err(|e| e.to_string())?;
    let stars: Vec<String> = real
        .points
        .iter()
        .map(|p| format!("{:e}: {} ({})", p.kappa, p.a_star.map_or("-".into(), |a| format!("{a:.3}")), p.verdict.as_str()))
        .collect();
    let slope = real.slope.map(|s| format!("{:.3} ± {:.3}", s.value, s.half_width));
    let ok = synth_ok && real.monotone_in_kappa && real.slope.is_some_and(|s| s.half_width.is_finite());
    Ok(verdict(
        ok,
        format!(
            "synthetic alpha {alpha:.10}; a* [{}]; slope {}",
            stars.join(", "),
            slope.unwrap_or_else(|| "unavailable".into())
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check, Duration); 8] = [
        ("coercivity_boundary", coercivity_boundary, Duration::from_secs(1)),
        ("inviscid_damping_exponents", inviscid_damping_exponents, Duration::from_secs(300)),
        ("enhanced_dissipation_scaling", enhanced_dissipation_scaling, Duration::from_secs(1200)),
        ("long_time_monotonicity", long_time_monotonicity, Duration::from_secs(600)),
        ("short_time_gronwall_envelope", short_time_gronwall, Duration::from_secs(600)),
        ("inequality_suite", inequality_suite, Duration::from_secs(900)),
        ("oracle_equivalences", oracle_equivalences, Duration::from_secs(120)),
        ("threshold_scan_sanity", threshold_scan_sanity, Duration::from_secs(3600)),
    ];
    let mut failures = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let out = check().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        let el = start.elapsed();
        let passed = out.passed && el <= budget;
        if !passed {
            failures += 1;
        }
        println!(
            "{} {name}: {} [{:.1}s of {}s]",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            el.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
