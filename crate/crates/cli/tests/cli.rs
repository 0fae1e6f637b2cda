use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BASE: &str = r#"{
    "grid": {"K": 4, "J": 16, "L_Y": 12.566370614359172},
    "physics": {"nu": 1e-3, "mu": 1e-3, "gamma": 1.0, "eps": 0.5, "s": 2.0, "delta": 0.25},
    "multipliers": {"J_sum": 200},
    "schedule": {"dt": 0.05, "t_end": 2.0, "sample_every": 4, "linear_only": false},
    "init": {"amplitude": 1e-2, "seed": 11},
    "output": {"checkpoint_every": 20},
    "experiment": {"kappas": [1e-2, 1e-3, 1e-4, 1e-5], "T_max": 5.0, "T_max_exponent": 0.3333333333333333,
                   "stability_factor": 10.0, "bisection_depth": 6, "mode": "ed_rate"},
    "lab": {"n_train": 200, "n_test": 200, "seed": 5}
}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_couette-lab"));
    c.env("RUST_LOG", "warn");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Case {
    dir: TempDir,
    cfg: PathBuf,
}

fn case(text: &str) -> Case {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", text);
    Case { dir, cfg }
}

impl Case {
    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn cmd(&self, sub: &str, out: &str, extra: &[&str]) -> Output {
        let (cfg, out) = (self.cfg.to_str().unwrap(), self.out(out));
        let mut args = vec![sub, "--config", cfg, "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        run(&args)
    }
}

#[test]
fn simulate_writes_diagnostics_and_checkpoints() {
    let c = case(BASE);
    let o = c.cmd("simulate", "a", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(c.out("a/diagnostics.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    for col in ["t", "E", "u1neq_L2", "u2_L2", "u2hat_L1", "thetaneq_L2"] {
        assert!(header.split(',').any(|h| h == col), "missing {col} in {header}");
    }
    assert!(c.out("a/checkpoint_00000020.cblb").exists());
    assert!(c.out("a/final.cblb").exists());

    // same config, same bytes
    let o = c.cmd("simulate", "b", &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(c.out("a/diagnostics.csv")).unwrap(), fs::read(c.out("b/diagnostics.csv")).unwrap());

    // resuming from the step-20 checkpoint lands on the same final state
    let ck = c.out("a/checkpoint_00000020.cblb");
    let o = c.cmd("simulate", "r", &["--resume", ck.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(c.out("a/final.cblb")).unwrap(), fs::read(c.out("r/final.cblb")).unwrap());
}

#[test]
fn fit_diagnostics_needs_a_long_enough_run() {
    let c = case(BASE);
    assert_eq!(code(&c.cmd("simulate", "short", &[])), 0);
    let o = run(&["fit", "--csv", c.out("short/diagnostics.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("window"), "{}", stderr(&o));

    let c = case(&BASE.replace("\"t_end\": 2.0", "\"t_end\": 40.0"));
    assert_eq!(code(&c.cmd("simulate", "long", &[])), 0);
    let o = run(&["fit", "--csv", c.out("long/diagnostics.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("u2_L2: exponent"));
}

#[test]
fn noncoercive_gamma_is_rejected() {
    let c = case(&BASE.replace("\"gamma\": 1.0", "\"gamma\": 0.4"));
    let o = c.cmd("simulate", "a", &[]);
    assert_eq!(code(&o), 1);
    let e = stderr(&o);
    assert!(e.contains("gamma") && e.contains("coercive"), "{e}");
}

#[test]
fn huge_amplitude_exits_two() {
    let c = case(&BASE.replace("\"amplitude\": 1e-2", "\"amplitude\": 1e6"));
    let o = c.cmd("simulate", "a", &[]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn malformed_inputs_exit_one() {
    let c = case(&BASE[..BASE.len() - 10]);
    assert_eq!(code(&c.cmd("simulate", "a", &[])), 1);

    let c = case(&BASE.replace("[1e-2, 1e-3, 1e-4, 1e-5]", "[]"));
    let o = c.cmd("scan", "a", &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("kappas"), "{}", stderr(&o));

    let c = case(BASE);
    let o = c.cmd("verify", "a", &["--lemma", "no_such_check"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no_such_check"));

    let o = c.cmd("simulate", "a", &["--resume", "/nonexistent.cblb"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_single_check() {
    let c = case(BASE);
    let o = c.cmd("verify", "v", &["--lemma", "poisson"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("poisson") && stdout.contains("PASS"), "{stdout}");
    let csv = fs::read_to_string(c.out("v/ratio_reports.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn scan_and_refit_ed_rates() {
    let c = case(BASE);
    let o = c.cmd("scan", "s", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = c.out("s/ed_rates.csv");
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 5);
    assert!(c.out("s/summary.json").exists());

    let fit = c.out("f");
    let o = run(&["fit", "--csv", csv.to_str().unwrap(), "--out", fit.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(fit.join("fit.json")).unwrap().contains("value"));
}
