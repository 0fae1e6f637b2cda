//! JSON run configuration. Unknown keys are rejected and every physical invariant is
//! re-checked at load time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::Schedule;
use crate::error::{Error, Result};
use crate::harness::{BisectionSpec, GridSpec, InitFamily, InitSpec, RunConfig};
use crate::lab::SampleSpec;
use crate::multipliers::{MultiplierParams, WeightBundle, DEFAULT_J_SUM, DEFAULT_PSI_TOL};
use crate::params::PhysicalParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    #[serde(default)]
    pub multipliers: MultiplierSection,
    pub schedule: ScheduleSection,
    pub init: InitSection,
    #[serde(default)]
    pub experiment: Option<ExperimentSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub lab: Option<LabSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "K")]
    pub k: i64,
    #[serde(rename = "J")]
    pub j: i64,
    #[serde(rename = "L_Y")]
    pub l_y: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub nu: f64,
    pub mu: f64,
    pub gamma: f64,
    pub eps: f64,
    pub s: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiplierSection {
    #[serde(rename = "J_sum")]
    pub j_sum: usize,
    pub psi_tol: f64,
}

impl Default for MultiplierSection {
    fn default() -> Self {
        Self {
            j_sum: DEFAULT_J_SUM,
            psi_tol: DEFAULT_PSI_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    #[serde(default)]
    pub linear_only: bool,
    /// Evaluate the `ℳ`-based diagnostics after `T₀`.
    #[serde(default = "yes")]
    pub long_time_terms: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandLimits {
    #[serde(default)]
    pub k: Option<i64>,
    #[serde(default)]
    pub xi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(default)]
    pub family: InitFamily,
    pub amplitude: f64,
    pub seed: u64,
    #[serde(default)]
    pub band_limits: BandLimits,
    #[serde(default = "default_envelope")]
    pub envelope: f64,
}

fn default_envelope() -> f64 {
    InitSpec::new(1.0, 0).envelope
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    EdRate,
    Threshold,
    #[default]
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kappas: Vec<f64>,
    /// Run length is `T_max · κ^{−T_max_exponent}`.
    #[serde(rename = "T_max")]
    pub t_max: f64,
    #[serde(rename = "T_max_exponent", default)]
    pub t_max_exponent: f64,
    pub stability_factor: f64,
    pub bisection_depth: usize,
    /// Amplitude bracket `[lo, hi]` in units of `κ^{threshold_scaling}`.
    #[serde(default = "default_bracket")]
    pub bisection_bracket: [f64; 2],
    #[serde(default)]
    pub threshold_scaling: f64,
    #[serde(default)]
    pub mode: ScanMode,
}

fn default_bracket() -> [f64; 2] {
    [2.0, 200.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub checkpoint_every: Option<usize>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            checkpoint_every: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabSection {
    #[serde(default = "default_count")]
    pub n_train: usize,
    #[serde(default = "default_count")]
    pub n_test: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_count() -> usize {
    SampleSpec::default().n_train
}

fn bad(key: &str, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {e}"))
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(&path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.physical()?;
        self.grid_spec().build().map_err(|e| bad("grid", e))?;
        MultiplierParams::new(&p, self.multipliers.j_sum, self.multipliers.psi_tol).map_err(|e| bad("multipliers", e))?;
        self.schedule().validate(0.0).map_err(|e| bad("schedule", e))?;
        let a = self.init.amplitude;
        if !(a > 0.0 && a.is_finite()) {
            return Err(bad("init.amplitude", format!("must be positive and finite, got {a}")));
        }
        if !(self.init.envelope >= 0.0) {
            return Err(bad("init.envelope", format!("must be nonnegative, got {}", self.init.envelope)));
        }
        if let Some(k) = self.init.band_limits.k {
            if k < 1 {
                return Err(bad("init.band_limits.k", format!("must be at least 1, got {k}")));
            }
        }
        if let Some(x) = self.init.band_limits.xi {
            if !(x > 0.0) {
                return Err(bad("init.band_limits.xi", format!("must be positive, got {x}")));
            }
        }
        if self.output.checkpoint_every == Some(0) {
            return Err(bad("output.checkpoint_every", "must be at least 1"));
        }
        if let Some(ex) = &self.experiment {
            ex.validate()?;
            for &k in &ex.kappas {
                self.physical_at(k).map_err(|e| bad("experiment.kappas", e))?;
            }
        }
        if let Some(lab) = &self.lab {
            self.sample_spec(None).map_err(|e| bad("lab", e))?;
            if lab.n_train == 0 || lab.n_test == 0 {
                return Err(bad("lab", "n_train and n_test must be positive"));
            }
        }
        Ok(())
    }

    pub fn physical(&self) -> Result<PhysicalParams<f64>> {
        let ph = &self.physics;
        PhysicalParams::new(ph.nu, ph.mu, ph.gamma, ph.eps, ph.s, ph.delta).map_err(|e| bad("physics", e))
    }

    /// Physics with `ν = μ = κ`, for sweep members.
    pub fn physical_at(&self, kappa: f64) -> Result<PhysicalParams<f64>> {
        self.physical()?.with_dissipation(kappa, kappa)
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            dealias_fraction: self.grid.dealias_fraction,
            ..GridSpec::new(self.grid.k, self.grid.j, self.grid.l_y)
        }
    }

    pub fn init_spec(&self) -> InitSpec {
        let i = &self.init;
        InitSpec {
            family: i.family,
            amplitude: i.amplitude,
            seed: i.seed,
            k_band: i.band_limits.k,
            xi_band: i.band_limits.xi,
            envelope: i.envelope,
        }
    }

    pub fn schedule(&self) -> Schedule {
        let s = &self.schedule;
        let mut out = Schedule::new(s.dt, s.t_end, s.sample_every).linear(s.linear_only);
        out.long_time_terms = s.long_time_terms;
        out.checkpoint_every = self.output.checkpoint_every;
        out
    }

    pub fn weights(&self, p: &PhysicalParams<f64>) -> Result<WeightBundle<f64>> {
        WeightBundle::new(MultiplierParams::new(p, self.multipliers.j_sum, self.multipliers.psi_tol)?)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            grid: self.grid_spec(),
            params: self.physical()?,
            init: self.init_spec(),
            schedule: self.schedule(),
        })
    }

    /// Member of a sweep at dissipation `κ` and amplitude `a`, run to `T_max·κ^{−exponent}`.
    pub fn sweep_member(&self, kappa: f64, amplitude: Option<f64>) -> Result<RunConfig> {
        let ex = self.experiment()?;
        let mut schedule = self.schedule();
        schedule.t_end = ex.t_end(kappa);
        schedule.stability_factor = Some(ex.stability_factor);
        schedule.checkpoint_every = None;
        let mut init = self.init_spec();
        if let Some(a) = amplitude {
            init.amplitude = a;
        }
        Ok(RunConfig {
            grid: self.grid_spec(),
            params: self.physical_at(kappa)?,
            init,
            schedule,
        })
    }

    pub fn experiment(&self) -> Result<&ExperimentSection> {
        self.experiment.as_ref().ok_or_else(|| bad("experiment", "section is missing"))
    }

    /// Lab batch settings; `seed` overrides the configured one.
    pub fn sample_spec(&self, seed: Option<u64>) -> Result<SampleSpec> {
        let mut spec = SampleSpec {
            physical: PhysicalParams::standard(1e-4, 1e-4),
            ..SampleSpec::default()
        };
        let ph = &self.physics;
        spec.physical.gamma = ph.gamma;
        spec.physical.eps = ph.eps;
        spec.physical.s = ph.s;
        spec.physical.delta = ph.delta;
        if let Some(lab) = &self.lab {
            spec = spec.with_counts(lab.n_train, lab.n_test);
            if let Some(s) = lab.seed {
                spec = spec.with_seed(s);
            }
        }
        if let Some(s) = seed {
            spec = spec.with_seed(s);
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl ExperimentSection {
    pub fn validate(&self) -> Result<()> {
        if self.kappas.is_empty() {
            return Err(bad("experiment.kappas", "must not be empty"));
        }
        if let Some(k) = self.kappas.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(bad("experiment.kappas", format!("must be positive, got {k}")));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(bad("experiment.T_max", format!("must be positive, got {}", self.t_max)));
        }
        if !self.t_max_exponent.is_finite() {
            return Err(bad("experiment.T_max_exponent", "must be finite"));
        }
        if !(self.stability_factor > 1.0) {
            return Err(bad(
                "experiment.stability_factor",
                format!("must exceed 1, got {}", self.stability_factor),
            ));
        }
        self.bisection().validate().map_err(|e| bad("experiment.bisection", e))
    }

    pub fn t_end(&self, kappa: f64) -> f64 {
        self.t_max * kappa.powf(-self.t_max_exponent)
    }

    pub fn bisection(&self) -> BisectionSpec {
        BisectionSpec {
            lo: self.bisection_bracket[0],
            hi: self.bisection_bracket[1],
            depth: self.bisection_depth,
            scaling: self.threshold_scaling,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "grid": {"K": 4, "J": 8, "L_Y": 25.0},
        "physics": {"nu": 1e-3, "mu": 1e-3, "gamma": 1.0, "eps": 0.5, "s": 2.0, "delta": 0.25},
        "schedule": {"dt": 0.1, "t_end": 1.0, "sample_every": 2, "linear_only": true},
        "init": {"amplitude": 1e-3, "seed": 7}
    }"#;

    #[test]
    fn loads_and_roundtrips() {
        let c = Config::from_json(BASE).unwrap();
        assert_eq!(c.grid.dealias_fraction, 2.0 / 3.0);
        assert_eq!(c.multipliers.j_sum, DEFAULT_J_SUM);
        assert_eq!(Config::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn names_the_failing_key() {
        let e = Config::from_json(&BASE.replace("\"gamma\": 1.0", "\"gamma\": 0.4")).unwrap_err();
        assert!(e.to_string().contains("gamma") && e.to_string().contains("coercive"), "{e}");
        let e = Config::from_json(&BASE.replace("\"seed\": 7", "\"seed\": 7, \"colour\": 1")).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let e = Config::from_json(&BASE.replace("\"dt\": 0.1", "\"dt\": -0.1")).unwrap_err();
        assert!(e.to_string().contains("schedule") && e.to_string().contains("dt"), "{e}");
    }
}
