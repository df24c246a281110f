//! Invariant-measure sampling. The comparison between time and ensemble
//! averages is an ergodicity heuristic only: nothing here implies the
//! measure is unique.

use serde::{Deserialize, Serialize};

use super::observe;
use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::par::par_range;
use crate::solver::{steps_for, IntegratorConfig, Model};
use crate::spectrum::{eigenvalue, ScalarSpectrum};
use crate::stats::{Histogram, RunningStats};

pub const OBSERVABLE_BINS: usize = 24;

// batches for the time-average standard error
const BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MeasureMode {
    /// One path; samples every `sample_every` after `burn_in`, over
    /// `t_total`.
    TimeAverage { t_total: f64, burn_in: f64, sample_every: f64 },
    /// `members` independent paths, each evaluated at time `t` from `x0`.
    Ensemble { members: usize, t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub name: String,
    pub mean: f64,
    pub std_err: f64,
    pub samples: Vec<f64>,
    pub histogram: Histogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub mode: MeasureMode,
    pub observables: Vec<Observable>,
}

impl MeasureEstimate {
    pub fn get(&self, name: &str) -> Option<&Observable> {
        self.observables.iter().find(|o| o.name == name)
    }

    /// Rebuilds every histogram on `[lo, hi]` ranges shared with `other`,
    /// so bin masses can be compared.
    pub fn align_histograms(&mut self, other: &mut Self) {
        for (a, b) in self.observables.iter_mut().zip(other.observables.iter_mut()) {
            let lo = a.samples.iter().chain(&b.samples).cloned().fold(f64::INFINITY, f64::min);
            let hi = a.samples.iter().chain(&b.samples).cloned().fold(f64::NEG_INFINITY, f64::max);
            a.histogram = Histogram::build(&a.samples, lo, hi, OBSERVABLE_BINS);
            b.histogram = Histogram::build(&b.samples, lo, hi, OBSERVABLE_BINS);
        }
    }
}

/// Energy, enstrophy, `||u||_{L4}` and the per-degree energies `band_l`.
pub fn observables(model: &Model, u: &ScalarSpectrum) -> Result<Vec<(String, f64)>> {
    let mut out = vec![
        ("energy".to_string(), u.velocity_energy()),
        ("enstrophy".to_string(), u.enstrophy()),
        ("u_l4".to_string(), model.context().l4_norm(u)?),
    ];
    for l in 1..=u.truncation() {
        let e: f64 = (-(l as i64)..=l as i64).map(|m| u.get(l, m).norm_sqr()).sum::<f64>() * eigenvalue(l);
        out.push((format!("band_{l}"), e));
    }
    Ok(out)
}

fn summarize(mode: MeasureMode, names: Vec<String>, columns: Vec<Vec<f64>>, batched: bool) -> MeasureEstimate {
    let observables = names
        .into_iter()
        .zip(columns)
        .map(|(name, samples)| {
            let stats = RunningStats::from_slice(&samples);
            let std_err = if batched { batch_std_err(&samples) } else { stats.std_err() };
            let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let histogram = Histogram::build(&samples, lo, hi, OBSERVABLE_BINS);
            Observable { name, mean: stats.mean, std_err, samples, histogram }
        })
        .collect();
    MeasureEstimate { mode, observables }
}

// Standard error of the mean from batch means, for correlated samples.
fn batch_std_err(x: &[f64]) -> f64 {
    let size = x.len() / BATCHES;
    if size == 0 {
        return RunningStats::from_slice(x).std_err();
    }
    let means: Vec<f64> = x.chunks_exact(size).take(BATCHES).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    RunningStats::from_slice(&means).std_err()
}

/// Samples the observables of `u` from `x0` according to `mode`. Member
/// `i` of an ensemble runs on `NoisePath::for_member(noise, i)`.
pub fn invariant_measure_sample(
    model: &Model,
    icfg: &IntegratorConfig,
    x0: &ScalarSpectrum,
    mode: MeasureMode,
) -> Result<MeasureEstimate> {
    let st = model.stepper(icfg)?;
    match mode {
        MeasureMode::TimeAverage { t_total, burn_in, sample_every } => {
            let burn = steps_for(burn_in, icfg.dt)?;
            let n = steps_for(t_total, icfg.dt)?;
            let every = steps_for(sample_every, icfg.dt)?;
            if n == 0 || every == 0 {
                return Err(Error::InvalidConfig("time average needs t_total > 0 and sample_every > 0".into()));
            }
            let path = model.path();
            let mut names = Vec::new();
            let mut columns: Vec<Vec<f64>> = Vec::new();
            observe(model, &st, &path, x0, 0, burn + n, every, icfg.burn_tol, |k, u| {
                if k <= burn || (k - burn) % every != 0 {
                    return Ok(());
                }
                let obs = observables(model, u)?;
                if names.is_empty() {
                    names = obs.iter().map(|(n, _)| n.clone()).collect();
                    columns = vec![Vec::new(); obs.len()];
                }
                for (c, (_, v)) in columns.iter_mut().zip(obs) {
                    c.push(v);
                }
                Ok(())
            })?;
            Ok(summarize(mode, names, columns, true))
        }
        MeasureMode::Ensemble { members, t } => {
            let n = steps_for(t, icfg.dt)?;
            if members == 0 {
                return Err(Error::InvalidConfig("ensemble needs at least one member".into()));
            }
            let noise = &model.config().noise;
            let rows = par_range(members, |i| -> Result<Vec<(String, f64)>> {
                let path = NoisePath::for_member(noise, i as u64);
                let u = observe(model, &st, &path, x0, 0, n, n.max(1), icfg.burn_tol, |_, _| Ok(()))?;
                observables(model, &u)
            });
            let mut names = Vec::new();
            let mut columns: Vec<Vec<f64>> = Vec::new();
            for r in rows {
                let obs = r?;
                if names.is_empty() {
                    names = obs.iter().map(|(n, _)| n.clone()).collect();
                    columns = vec![Vec::new(); obs.len()];
                }
                for (c, (_, v)) in columns.iter_mut().zip(obs) {
                    c.push(v);
                }
            }
            Ok(summarize(mode, names, columns, false))
        }
    }
}

/// `|mean_a - mean_b| / sqrt(se_a^2 + se_b^2)` per observable. A heuristic
/// ergodicity diagnostic.
pub fn measure_discrepancy(a: &MeasureEstimate, b: &MeasureEstimate) -> Vec<(String, f64)> {
    a.observables
        .iter()
        .zip(&b.observables)
        .map(|(x, y)| {
            let se = (x.std_err.powi(2) + y.std_err.powi(2)).sqrt();
            let d = (x.mean - y.mean).abs();
            (x.name.clone(), if se > 0.0 { d / se } else if d == 0.0 { 0.0 } else { f64::INFINITY })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorVariant;
    use crate::solver::ModelConfig;

    #[test]
    fn quiet_measure_collapses_to_zero() {
        let m = Model::new(ModelConfig::quiet(5, 1.0, OperatorVariant::DeltaOnly)).unwrap();
        let x0 = m.random_initial(2, 0, 1.0, 1.0);
        let icfg = IntegratorConfig::new(0.01);
        let est = invariant_measure_sample(
            &m,
            &icfg,
            &x0,
            MeasureMode::TimeAverage { t_total: 1.0, burn_in: 20.0, sample_every: 0.1 },
        )
        .unwrap();
        assert_eq!(est.get("energy").unwrap().samples.len(), 10);
        for o in &est.observables {
            assert!(o.mean.abs() < 1e-12, "{} {}", o.name, o.mean);
            assert!((o.histogram.total_mass() - 1.0).abs() < 1e-12);
        }
        let ens = invariant_measure_sample(&m, &icfg, &x0, MeasureMode::Ensemble { members: 3, t: 20.0 }).unwrap();
        assert!(ens.get("energy").unwrap().mean < 1e-12);
    }
}
