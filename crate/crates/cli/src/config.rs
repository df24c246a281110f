//! TOML run configuration.
//!
//! Every random stream is derived from the top-level `seed`: the noise
//! path uses it directly (overriding `model.noise.seed`), and initial
//! fields, calibration and verification use `derive_seed(seed, tag)` with
//! the tags `"init"`, `"calibrate"` and `"verify"`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sns_core::attractor::{MeasureMode, PullbackPlan};
use sns_core::noise::rng::derive_seed;
use sns_core::solver::{IntegratorConfig, ModelConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub t_end: f64,
    /// Diagnostics row every this many steps.
    #[serde(default = "one")]
    pub record_every: usize,
    /// `H` norm of the random initial field.
    #[serde(default = "one_f")]
    pub init_radius: f64,
    #[serde(default = "one_f")]
    pub init_slope: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { t_end: 1.0, record_every: 1, init_radius: 1.0, init_slope: 1.0 }
    }
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PullbackSection {
    pub pullback_times: Vec<f64>,
    pub ensemble: usize,
    pub radius: f64,
    #[serde(default = "one_f")]
    pub slope: f64,
    /// Random triples used to calibrate the constant in the radii.
    #[serde(default = "default_trials")]
    pub calibration_trials: usize,
    /// Pullback times for the class-R series.
    #[serde(default)]
    pub class_r_times: Vec<f64>,
    /// Longest backward horizon for the radius scan.
    #[serde(default = "default_max_back")]
    pub max_back: f64,
    /// Independent paths for the absorption check (0 skips it).
    #[serde(default)]
    pub absorption_paths: u64,
    /// Offsets past the absorption time at which members are checked.
    #[serde(default)]
    pub absorption_after: Vec<f64>,
}

fn default_trials() -> usize {
    1000
}

fn default_max_back() -> f64 {
    400.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub sampling: MeasureMode,
    /// Optional second estimate; both are reported with their discrepancy.
    #[serde(default)]
    pub compare: Option<MeasureMode>,
    #[serde(default)]
    pub init_radius: f64,
    #[serde(default = "one_f")]
    pub init_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_verify_trials")]
    pub trials: usize,
    #[serde(default = "default_b_trials")]
    pub b_trials: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { trials: default_verify_trials(), b_trials: default_b_trials() }
    }
}

fn default_verify_trials() -> usize {
    100
}

fn default_b_trials() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pullback: Option<PullbackSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSection>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing config")?;
        Ok(cfg.resolved())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Propagates the top-level seed and truncation into the noise spec.
    pub fn resolved(mut self) -> Self {
        self.model.noise.seed = self.seed;
        if self.model.noise.truncation == 0 {
            self.model.noise.truncation = self.model.truncation;
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolved()
    }

    pub fn sub_seed(&self, tag: &str) -> u64 {
        derive_seed(self.seed, tag)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.integrator.dt > 0.0) {
            bail!("integrator dt must be > 0");
        }
        if let Some(p) = &self.pullback {
            self.pullback_plan(p).validate(self.integrator.dt)?;
        }
        Ok(())
    }

    pub fn pullback_plan(&self, p: &PullbackSection) -> PullbackPlan {
        PullbackPlan {
            pullback_times: p.pullback_times.clone(),
            ensemble: p.ensemble,
            radius: p.radius,
            init_seed: self.sub_seed("init"),
            slope: p.slope,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7

[model]
nu = 1.0
Omega = 1.0
alpha = 1.0
variant = "delta_only"
L = 8

[[model.forcing]]
l = 2
m = 0
re = 1.0

[model.noise]
sigma = 0.1
s = 1.0
dt_noise = 0.01

[integrator]
dt = 0.02

[pullback]
pullback_times = [0.0, 1.0, 2.0]
ensemble = 3
radius = 2.0
"#;

    #[test]
    fn sample_parses_and_resolves() {
        let cfg = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.model.noise.seed, 7);
        assert_eq!(cfg.model.noise.truncation, 8);
        assert_eq!(cfg.model.forcing[0].im, 0.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut cfg = RunConfig::from_toml(SAMPLE).unwrap();
        cfg.model.nu = 0.1 + 0.2;
        cfg.integrator.burn_tol = 1e-15;
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml(&SAMPLE.replace("seed = 7", "seed = 7\nsed = 1")).is_err());
    }
}
