use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use couette_lab::dynamics::{simulate_resume, simulate_with, Outcome, Resume};
use couette_lab::energy::{hs_half_norm, write_rows_csv, Diagnostics};
use couette_lab::harness::{
    ed_rate_scaling, fit_power_decay, loglog_slope, power_window, random_initial, run_is_stable, threshold_scan,
    RunConfig,
};
use couette_lab::io::{self, Config, ScanMode};
use couette_lab::lab::{self, RatioReport};

#[derive(Parser)]
#[command(name = "couette-lab", version, about = "Boussinesq perturbations of Couette flow in sheared coordinates")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one trajectory and write its diagnostics and checkpoints.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from a checkpoint written by an earlier run with the same config.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run inequality checks; exits 0 only if every held-out validation passes.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "all")]
        lemma: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Enhanced-dissipation sweep and/or amplitude-threshold scan over the configured κ.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-fit exponents, rates or slopes from an existing CSV.
    Fit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failures that map to exit code 1.
struct Fatal(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.into())
    }
}

type CmdResult = Result<ExitCode, Fatal>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Simulate {
            config,
            out,
            seed,
            resume,
        } => cmd_simulate(&config, out, seed, resume),
        Cmd::Verify {
            config,
            lemma,
            out,
            seed,
        } => cmd_verify(&config, &lemma, out, seed),
        Cmd::Scan { config, out, seed } => cmd_scan(&config, out, seed),
        Cmd::Fit { csv, out } => cmd_fit(&csv, out),
    };
    match res {
        Ok(code) => code,
        Err(Fatal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<Config> {
    let mut cfg = Config::load(path)?;
    if let Some(s) = seed {
        cfg.init.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cfg: Option<&Config>, out: Option<PathBuf>) -> anyhow::Result<PathBuf> {
    let dir = out
        .or_else(|| cfg.map(|c| c.output.directory.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_simulate(path: &Path, out: Option<PathBuf>, seed: Option<u64>, resume: Option<PathBuf>) -> CmdResult {
    let cfg = load(path, seed)?;
    let dir = out_dir(Some(&cfg), out)?;
    let rc = cfg.run_config()?;
    let grid = rc.grid.build()?;
    let initial = random_initial(&grid, &rc.init, rc.params.s, rc.params.gamma)?;
    let weights = Arc::new(cfg.weights(&rc.params)?);
    let diag = Diagnostics::new(&rc.params, weights).with_long_time_terms(rc.schedule.long_time_terms);

    let tr = match resume {
        None => simulate_with(&initial, &diag, &rc.schedule)?,
        Some(ck) => {
            let state = io::load_checkpoint(&ck, rc.grid.dealias_fraction)
                .with_context(|| format!("reading {}", ck.display()))?;
            let step = (state.t / rc.schedule.dt).round() as usize;
            let h0 = hs_half_norm(&initial, rc.params.s, false);
            log::info!("resuming at t = {} (step {step})", state.t);
            simulate_resume(&state, &diag, &rc.schedule, Resume { origin: 0.0, step, h0 })?
        }
    };

    write_rows_csv(create(&dir.join("diagnostics.csv"))?, &tr.rows)?;
    for (step, st) in &tr.checkpoints {
        io::save_checkpoint(&dir.join(format!("checkpoint_{step:08}.cblb")), st)?;
    }
    io::save_checkpoint(&dir.join("final.cblb"), &tr.final_state)?;
    log::info!(
        "{} rows, max divergence defect {:.3e}, outcome {:?}",
        tr.rows.len(),
        tr.max_divergence_defect,
        tr.outcome
    );
    Ok(match tr.outcome {
        Outcome::Completed => ExitCode::SUCCESS,
        Outcome::Diverged { t } | Outcome::Unstable { t } => {
            eprintln!("run diverged at t = {t}");
            ExitCode::from(2)
        }
    })
}

fn cmd_verify(path: &Path, lemma: &str, out: Option<PathBuf>, seed: Option<u64>) -> CmdResult {
    let cfg = Config::load(path)?;
    if lemma != "all" && !lab::CHECKS.contains(&lemma) {
        return Err(Fatal(anyhow::anyhow!(
            "unknown check `{lemma}`; expected `all` or one of {}",
            lab::CHECKS.join(", ")
        )));
    }
    let spec = cfg.sample_spec(seed)?;
    let dir = out_dir(Some(&cfg), out)?;
    let reports: Vec<RatioReport> = lab::run_named(lemma, &spec)?;
    for r in &reports {
        println!("{r}");
    }
    io::write_ratio_reports_csv(create(&dir.join("ratio_reports.csv"))?, &reports)?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed", reports.len() - failed, reports.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_scan(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> CmdResult {
    let cfg = load(path, seed)?;
    let ex = cfg.experiment()?.clone();
    // every member must be valid before anything runs
    for &k in &ex.kappas {
        let m = cfg.sweep_member(k, None).with_context(|| format!("sweep member kappa = {k}"))?;
        m.grid.build()?;
        m.schedule.validate(0.0).map_err(|e| anyhow::anyhow!("sweep member kappa = {k}: {e}"))?;
    }
    let dir = out_dir(Some(&cfg), out)?;
    let mut summary = serde_json::Map::new();

    if matches!(ex.mode, ScanMode::EdRate | ScanMode::Both) {
        let rep = ed_rate_scaling(&ex.kappas, |k| {
            let mut m = cfg.sweep_member(k, None)?;
            m.schedule.linear_only = true;
            m.schedule.stability_factor = None;
            Ok(m)
        })?;
        io::write_ed_csv(create(&dir.join("ed_rates.csv"))?, &rep)?;
        println!(
            "ed rate slope {:.4} ± {:.4} over {} kappas",
            rep.slope.value,
            rep.slope.half_width,
            rep.kappas.len()
        );
        summary.insert("ed_rate".into(), serde_json::to_value(&rep)?);
    }
    if matches!(ex.mode, ScanMode::Threshold | ScanMode::Both) {
        let rep = threshold_scan(&ex.kappas, &ex.bisection(), |k, a| {
            let m: RunConfig = cfg.sweep_member(k, Some(a))?;
            run_is_stable(&m)
        })?;
        io::write_threshold_csv(create(&dir.join("threshold.csv"))?, &rep, |k| ex.t_end(k), cfg.init.seed)?;
        for p in &rep.points {
            println!("kappa {:e}: a* {:?} ({})", p.kappa, p.a_star, p.verdict.as_str());
        }
        match &rep.slope {
            Some(s) => println!("threshold slope {:.4} ± {:.4}", s.value, s.half_width),
            None => println!("threshold slope unavailable: fewer than two resolved points"),
        }
        println!("a* nondecreasing in kappa: {}", rep.monotone_in_kappa);
        summary.insert("threshold".into(), serde_json::to_value(&rep)?);
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(ExitCode::SUCCESS)
}

fn pairs(x: &[Option<f64>], y: &[Option<f64>]) -> Vec<(f64, f64)> {
    x.iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .collect()
}

fn cmd_fit(csv: &Path, out: Option<PathBuf>) -> CmdResult {
    let text = fs::read_to_string(csv).with_context(|| format!("reading {}", csv.display()))?;
    let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').collect();
    let has = |c: &str| header.contains(&c);
    let cols = |names: &[&str]| io::read_columns(text.as_bytes(), names);

    let result = if has("u2_L2") {
        let names = ["t", "u1neq_L2", "u2_L2", "u2hat_L1", "thetaneq_L2"];
        let c = cols(&names)?;
        let t_max = c[0].iter().flatten().copied().fold(0.0, f64::max);
        let window = power_window(t_max);
        let mut fits = serde_json::Map::new();
        for (i, name) in names.iter().enumerate().skip(1) {
            let f = fit_power_decay(&pairs(&c[0], &c[i]), window)?;
            println!("{name}: exponent {:.4} ± {:.4}", f.value, f.half_width);
            fits.insert(name.to_string(), serde_json::to_value(f)?);
        }
        serde_json::Value::Object(fits)
    } else if has("rate") {
        let c = cols(&["kappa", "rate"])?;
        let s = loglog_slope(&pairs(&c[0], &c[1]))?;
        println!("ed rate slope {:.4} ± {:.4}", s.value, s.half_width);
        serde_json::to_value(s)?
    } else if has("a_star") {
        let c = cols(&["kappa", "a_star"])?;
        let s = loglog_slope(&pairs(&c[0], &c[1]))?;
        println!("threshold slope {:.4} ± {:.4}", s.value, s.half_width);
        serde_json::to_value(s)?
    } else {
        return Err(Fatal(anyhow::anyhow!(
            "{}: not a diagnostics, ed-rate or threshold CSV",
            csv.display()
        )));
    };
    if let Some(dir) = out {
        let dir = out_dir(None, Some(dir))?;
        fs::write(dir.join("fit.json"), serde_json::to_string_pretty(&result)?)?;
    }
    Ok(ExitCode::SUCCESS)
}
