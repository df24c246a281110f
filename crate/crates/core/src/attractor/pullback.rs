use serde::{Deserialize, Serialize};

use super::radius::{absorbing_radius, absorption_time, exponent_k16, z_track};
use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::par::par_map;
use crate::solver::{h_norm, steps_for, IntegratorConfig, Model, ModelConfig, Recording};
use crate::spectrum::ScalarSpectrum;

/// A pullback experiment: the ensemble is `ensemble` random fields of
/// `H` norm `radius`, drawn from `init_seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackPlan {
    pub pullback_times: Vec<f64>,
    pub ensemble: usize,
    pub radius: f64,
    pub init_seed: u64,
    /// Spectral slope of the random initial fields.
    #[serde(default = "default_slope")]
    pub slope: f64,
}

fn default_slope() -> f64 {
    1.0
}

impl PullbackPlan {
    pub fn validate(&self, dt: f64) -> Result<()> {
        if self.ensemble == 0 {
            return Err(Error::InvalidConfig("pullback ensemble is empty".into()));
        }
        if self.pullback_times.windows(2).any(|w| w[1] <= w[0]) || self.pullback_times.iter().any(|&t| t < 0.0) {
            return Err(Error::InvalidConfig("pullback times must be non-negative and increasing".into()));
        }
        for &t in &self.pullback_times {
            steps_for(t, dt)?;
        }
        Ok(())
    }

    pub fn initial_ensemble(&self, model: &Model) -> Vec<ScalarSpectrum> {
        (0..self.ensemble as u64).map(|i| model.random_initial(self.init_seed, i, self.radius, self.slope)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackRow {
    pub t: f64,
    pub diameter: f64,
    pub max_norm: f64,
}

#[derive(Clone, Debug)]
pub struct PullbackResult {
    pub rows: Vec<PullbackRow>,
    /// Time-0 endpoints for each pullback time.
    pub endpoints: Vec<Vec<ScalarSpectrum>>,
}

impl PullbackResult {
    /// `true` if the diameter never grows by more than `floor` from row
    /// `from` on.
    pub fn monotone_from(&self, from: usize, floor: f64) -> bool {
        self.rows[from.min(self.rows.len())..].windows(2).all(|w| w[1].diameter <= w[0].diameter + floor)
    }
}

/// Largest pairwise `H` distance.
pub fn ensemble_diameter(xs: &[ScalarSpectrum]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in xs.iter().enumerate() {
        for b in &xs[i + 1..] {
            d = d.max(h_norm(&a.sub(b)));
        }
    }
    d
}

/// `max_{x in later} min_{y in earlier} ||x - y||`.
pub fn nesting_defect(later: &[ScalarSpectrum], earlier: &[ScalarSpectrum]) -> f64 {
    later
        .iter()
        .map(|x| earlier.iter().map(|y| h_norm(&x.sub(y))).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Evolves every member over `[-t_n, 0]` along `path` for each pullback
/// time. One stationary `z` series covers the longest window; all
/// `(t_n, member)` pairs run in parallel.
pub fn pullback_experiment(
    model: &Model,
    icfg: &IntegratorConfig,
    path: &NoisePath,
    times: &[f64],
    ensemble: &[ScalarSpectrum],
) -> Result<PullbackResult> {
    let st = model.stepper(icfg)?;
    let offsets: Vec<usize> = times.iter().map(|&t| steps_for(t, icfg.dt)).collect::<Result<_>>()?;
    let n_max = offsets.iter().copied().max().unwrap_or(0);
    let stride = (icfg.dt / path.dt_noise()).round() as i64;
    let zs = model.z_series(path, &st, -(n_max as i64) * stride, n_max + 1, icfg.burn_tol)?;
    let tasks: Vec<(usize, usize)> = (0..offsets.len()).flat_map(|a| (0..ensemble.len()).map(move |b| (a, b))).collect();
    let results = par_map(&tasks, |&(a, b)| -> Result<ScalarSpectrum> {
        let n = offsets[a];
        let x = &ensemble[b];
        if n == 0 {
            return Ok(x.clone());
        }
        let i0 = n_max - n;
        let (v, _) = model.integrate(&st, x.sub(&zs.z[i0]), &zs, i0, n, Recording::None)?;
        Ok(v.add(&zs.z[n_max]))
    });
    let mut endpoints = vec![Vec::with_capacity(ensemble.len()); offsets.len()];
    for (&(a, _), r) in tasks.iter().zip(results) {
        endpoints[a].push(r?);
    }
    let rows = times
        .iter()
        .zip(&endpoints)
        .map(|(&t, e)| PullbackRow {
            t,
            diameter: ensemble_diameter(e),
            max_norm: e.iter().map(h_norm).fold(0.0, f64::max),
        })
        .collect();
    Ok(PullbackResult { rows, endpoints })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionRow {
    pub member: u64,
    pub r13: f64,
    pub t_d: f64,
    pub max_norm: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionReport {
    pub rows: Vec<AbsorptionRow>,
}

impl AbsorptionReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }
}

/// For `paths` independent noise paths: computes `r13` with the `16 nu^3`
/// exponent, the empirical absorption time `t_D` of the plan's ball, and
/// checks `||phi(t, theta_{-t} omega) x|| <= r13` for the plan's ensemble at
/// `t_D + extra` for each `extra` in `after`.
pub fn absorption_check(
    cfg: &ModelConfig,
    icfg: &IntegratorConfig,
    plan: &PullbackPlan,
    c_hat: f64,
    paths: u64,
    after: &[f64],
    max_back: f64,
) -> Result<AbsorptionReport> {
    let model = Model::new(cfg.clone())?;
    let k = exponent_k16(c_hat, cfg.nu);
    let nu_l1 = cfg.nu * model.lambda1();
    let ensemble = plan.initial_ensemble(&model);
    let mut rows = Vec::new();
    for member in 0..paths {
        let path = NoisePath::for_member(&cfg.noise, member);
        let r = absorbing_radius(&model, &path, icfg, k, max_back)?;
        let track = z_track(&model, &path, icfg, (max_back / icfg.dt).round() as usize)?;
        let t_d = absorption_time(&track, plan.radius, nu_l1, k)
            .ok_or_else(|| Error::NonDissipative(format!("ball of radius {} is not absorbed within {max_back}", plan.radius)))?;
        let base = (t_d / icfg.dt).ceil() * icfg.dt;
        let times: Vec<f64> = after.iter().map(|&a| base + (a / icfg.dt).round() * icfg.dt).collect();
        let res = pullback_experiment(&model, icfg, &path, &times, &ensemble)?;
        let norms: Vec<f64> = res.endpoints.iter().flatten().map(h_norm).collect();
        rows.push(AbsorptionRow {
            member,
            r13: r.r13,
            t_d,
            max_norm: norms.iter().cloned().fold(0.0, f64::max),
            violations: norms.iter().filter(|&&n| n > r.r13).count(),
        });
    }
    Ok(AbsorptionReport { rows })
}
