use std::sync::Arc;

use couette_lab::dynamics::{simulate_with, FlowState};
use couette_lab::energy::{write_rows_csv, Diagnostics};
use couette_lab::grid::SpectralGrid;
use couette_lab::harness::random_initial;
use couette_lab::io::{self, read_checkpoint, write_checkpoint, Config};
use couette_lab::Error;
use num_complex::Complex;
use proptest::prelude::*;

const BASE: &str = r#"{
    "grid": {"K": 4, "J": 16, "L_Y": 12.566370614359172},
    "physics": {"nu": 1e-3, "mu": 1e-3, "gamma": 1.0, "eps": 0.5, "s": 2.0, "delta": 0.25},
    "multipliers": {"J_sum": 200},
    "schedule": {"dt": 0.05, "t_end": 2.0, "sample_every": 4, "linear_only": false},
    "init": {"amplitude": 1e-2, "seed": 11},
    "output": {"checkpoint_every": 20}
}"#;

fn diagnostics_csv(cfg: &Config) -> Vec<u8> {
    let rc = cfg.run_config().unwrap();
    let grid = rc.grid.build().unwrap();
    let init = random_initial(&grid, &rc.init, rc.params.s, rc.params.gamma).unwrap();
    let diag = Diagnostics::new(&rc.params, Arc::new(cfg.weights(&rc.params).unwrap()));
    let tr = simulate_with(&init, &diag, &rc.schedule).unwrap();
    let mut buf = Vec::new();
    write_rows_csv(&mut buf, &tr.rows).unwrap();
    buf
}

#[test]
fn identical_configs_give_identical_csv() {
    let cfg = Config::from_json(BASE).unwrap();
    let a = diagnostics_csv(&cfg);
    let b = diagnostics_csv(&cfg);
    assert_eq!(a, b);

    let t = io::read_columns(&a[..], &["t"]).unwrap();
    let times: Vec<f64> = t[0].iter().map(|v| v.unwrap()).collect();
    assert_eq!(times.first(), Some(&0.0));
    assert!((times.last().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn config_files_report_the_bad_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, BASE).unwrap();
    assert!(Config::load(&path).is_ok());

    std::fs::write(&path, BASE.replace("\"K\": 4", "\"K\": 0")).unwrap();
    let e = Config::load(&path).unwrap_err().to_string();
    assert!(e.contains("grid"), "{e}");

    std::fs::write(&path, &BASE[..BASE.len() / 2]).unwrap();
    assert!(Config::load(&path).is_err());

    assert!(Config::load(&dir.path().join("missing.json")).is_err());
}

#[test]
fn checkpoint_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::from_json(BASE).unwrap();
    let rc = cfg.run_config().unwrap();
    let grid = rc.grid.build().unwrap();
    let state = random_initial(&grid, &rc.init, rc.params.s, rc.params.gamma).unwrap();
    let path = dir.path().join("s.cblb");
    io::save_checkpoint(&path, &state).unwrap();
    assert_eq!(io::load_checkpoint(&path, rc.grid.dealias_fraction).unwrap(), state);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn checkpoint_roundtrip_is_bitwise(
        k in 1i64..6,
        j in 1i64..9,
        l_y in 0.5f64..100.0,
        t in 0.0f64..1e6,
        seed in any::<u64>(),
    ) {
        let g = SpectralGrid::new(k, j, l_y).unwrap();
        let mut s = FlowState::zeros(&g, t);
        let mut x = seed | 1;
        let mut next = || {
            // xorshift, enough to fill coefficients with arbitrary bit patterns
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            f64::from_bits(x & !(0x7ff << 52) | ((x % 2000 + 24) << 52))
        };
        for f in [&mut s.u1, &mut s.u2, &mut s.theta] {
            for c in f.coeffs_mut() {
                *c = Complex::new(next(), -next());
            }
        }
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &s).unwrap();
        let back = read_checkpoint(&buf[..], 2.0 / 3.0).unwrap();
        prop_assert_eq!(&back, &s);
        for (a, b) in back.u1.coeffs().iter().zip(s.u1.coeffs()) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }

        let cut = (seed as usize) % buf.len();
        prop_assert!(matches!(read_checkpoint(&buf[..cut], 2.0 / 3.0), Err(Error::Checkpoint(_))));
        buf.push(0);
        prop_assert!(read_checkpoint(&buf[..], 2.0 / 3.0).is_err());
    }
}
