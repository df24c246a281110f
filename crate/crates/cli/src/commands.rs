//! Subcommand drivers. Each writes its data files plus `config.toml` into
//! the output directory and returns a one-line summary.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sns_core::attractor::{
    absorbing_radius, absorption_check, class_r_decay, exponent_k16, exponent_k4, invariant_measure_sample,
    measure_discrepancy, pullback_experiment, AbsorbingRadius, ClassRSeries, MeasureEstimate,
};
use sns_core::operators::{calibrate_constant, Calibration};
use sns_core::solver::{read_checkpoint, write_checkpoint, write_diagnostics_csv, Checkpoint, Model, Recording};
use sns_core::spectrum::eigenvalue;
use sns_core::verify::{run_checks, VerifyOptions, VerifyReport};
use sns_core::ScalarSpectrum;

use crate::config::RunConfig;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ok(String),
    /// A check ran and failed.
    Failed(String),
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn prepare(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    Ok(())
}

#[derive(Serialize)]
struct Tagged<'a, T> {
    seed: u64,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn tagged<T>(cfg: &RunConfig, body: T) -> Tagged<'_, T> {
    Tagged { seed: cfg.seed, config: cfg, body }
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    prepare(cfg, out)?;
    let opts = VerifyOptions { seed: cfg.sub_seed("verify"), trials: cfg.verify.trials, b_trials: cfg.verify.b_trials };
    let model = Model::new(cfg.model.clone())?;
    let report: VerifyReport = run_checks(model.context(), &opts)?;
    write_json(&out.join("verify.json"), &report)?;
    let summary = format!("verify L={}: {}/{} checks passed", report.truncation, report.checks.iter().filter(|c| c.passed).count(), report.checks.len());
    if report.passed {
        Ok(Outcome::Ok(summary))
    } else {
        Ok(Outcome::Failed(format!("{summary}; failed: {}", report.failed().join(", "))))
    }
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    prepare(cfg, out)?;
    let model = Model::new(cfg.model.clone())?;
    let sim = &cfg.simulate;
    let x0 = model.random_initial(cfg.sub_seed("init"), 0, sim.init_radius, sim.init_slope);
    let path = model.path();
    let tr = model.run(&path, &x0, &cfg.integrator, 0, sim.t_end, Recording::Norms(sim.record_every))?;
    let file = fs::File::create(out.join("diagnostics.csv"))?;
    write_diagnostics_csv(&tr.rows, BufWriter::new(file))?;
    let step = (sim.t_end / path.dt_noise()).round() as i64;
    let ck = Checkpoint { model: cfg.model.clone(), path: path.metadata(), t: sim.t_end, step, spectrum: "state.bin".into() };
    write_checkpoint(&out.join("checkpoint"), &ck, &tr.u_end)?;
    let last = tr.rows.last().map(|r| r.energy).unwrap_or(0.0);
    Ok(Outcome::Ok(format!("simulate: t = {}, {} rows, final energy {last:.6e}", sim.t_end, tr.rows.len())))
}

#[derive(Serialize)]
struct RadiiReport {
    calibration: Calibration,
    k4: f64,
    k16: f64,
    radius_k4: Option<AbsorbingRadius>,
    radius_k16: AbsorbingRadius,
    class_r: Option<ClassRSeries>,
}

pub fn pullback(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let section = cfg.pullback.as_ref().context("config has no [pullback] section")?;
    prepare(cfg, out)?;
    let model = Model::new(cfg.model.clone())?;
    let icfg = &cfg.integrator;
    let plan = cfg.pullback_plan(section);
    let path = model.path();

    let res = pullback_experiment(&model, icfg, &path, &plan.pullback_times, &plan.initial_ensemble(&model))?;
    let mut csv = String::from("t,diameter,max_norm\n");
    for r in &res.rows {
        writeln!(csv, "{},{},{}", r.t, r.diameter, r.max_norm)?;
    }
    fs::write(out.join("pullback.csv"), csv)?;

    let cal = calibrate_constant(model.context(), section.calibration_trials, cfg.sub_seed("calibrate"))?;
    let (k4, k16) = (exponent_k4(cal.c_hat, cfg.model.nu), exponent_k16(cal.c_hat, cfg.model.nu));
    let radius_k16 = absorbing_radius(&model, &path, icfg, k16, section.max_back)?;
    // the larger exponent may fail to be integrable where the smaller one is
    let radius_k4 = absorbing_radius(&model, &path, icfg, k4, section.max_back).ok();
    let class_r = if section.class_r_times.is_empty() {
        None
    } else {
        Some(class_r_decay(&model, &path, icfg, k16, &section.class_r_times, section.max_back)?)
    };
    write_json(&out.join("radii.json"), &tagged(cfg, RadiiReport { calibration: cal, k4, k16, radius_k4, radius_k16, class_r }))?;

    let mut summary = format!(
        "pullback: diameter {:.3e} -> {:.3e} over t = {}; r13 = {:.4}",
        res.rows.first().map(|r| r.diameter).unwrap_or(0.0),
        res.rows.last().map(|r| r.diameter).unwrap_or(0.0),
        plan.pullback_times.last().copied().unwrap_or(0.0),
        radius_k16.r13
    );
    if section.absorption_paths > 0 {
        let rep = absorption_check(
            &cfg.model,
            icfg,
            &plan,
            cal.c_hat,
            section.absorption_paths,
            &section.absorption_after,
            section.max_back,
        )?;
        let mut csv = String::from("member,r13,t_d,max_norm,violations\n");
        for r in &rep.rows {
            writeln!(csv, "{},{},{},{},{}", r.member, r.r13, r.t_d, r.max_norm, r.violations)?;
        }
        fs::write(out.join("absorption.csv"), csv)?;
        let v = rep.violations();
        write!(summary, "; absorption violations {v}")?;
        if v > 0 {
            return Ok(Outcome::Failed(summary));
        }
    }
    Ok(Outcome::Ok(summary))
}

#[derive(Serialize)]
struct MeasureReport {
    estimate: MeasureEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    compare: Option<MeasureEstimate>,
    /// Heuristic ergodicity diagnostic, in combined standard errors.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    discrepancy: Vec<(String, f64)>,
}

pub fn measure(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let section = cfg.measure.as_ref().context("config has no [measure] section")?;
    prepare(cfg, out)?;
    let model = Model::new(cfg.model.clone())?;
    let x0 = model.random_initial(cfg.sub_seed("init"), 0, section.init_radius, section.init_slope);
    let mut estimate = invariant_measure_sample(&model, &cfg.integrator, &x0, section.sampling)?;
    let mut compare = None;
    let mut discrepancy = Vec::new();
    if let Some(mode) = section.compare {
        let mut other = invariant_measure_sample(&model, &cfg.integrator, &x0, mode)?;
        estimate.align_histograms(&mut other);
        discrepancy = measure_discrepancy(&estimate, &other);
        compare = Some(other);
    }
    let energy = estimate.get("energy").map(|o| (o.mean, o.std_err)).unwrap_or_default();
    write_json(&out.join("measure.json"), &tagged(cfg, MeasureReport { estimate, compare, discrepancy }))?;
    Ok(Outcome::Ok(format!("measure: mean energy {:.6e} +- {:.2e}", energy.0, energy.1)))
}

/// Per-degree energy and enstrophy of a spectrum.
pub fn degree_table(u: &ScalarSpectrum) -> String {
    let mut csv = String::from("l,energy,enstrophy\n");
    for l in 1..=u.truncation() {
        let p: f64 = (-(l as i64)..=l as i64).map(|m| u.get(l, m).norm_sqr()).sum();
        let lam = eigenvalue(l);
        let _ = writeln!(csv, "{l},{},{}", lam * p, lam * lam * p);
    }
    csv
}

/// Reads the checkpoint in `from` (default: `<out>/checkpoint`) and writes
/// `spectrum.csv`.
pub fn spectrum(cfg: &RunConfig, out: &Path, from: Option<&Path>) -> Result<Outcome> {
    let dir = from.map(Path::to_path_buf).unwrap_or_else(|| out.join("checkpoint"));
    let (ck, u) = read_checkpoint(&dir).with_context(|| format!("reading checkpoint in {}", dir.display()))?;
    prepare(cfg, out)?;
    fs::write(out.join("spectrum.csv"), degree_table(&u))?;
    Ok(Outcome::Ok(format!("spectrum: L = {} at t = {}", u.truncation(), ck.t)))
}

/// Exit code for an error: 3 for numerical blowup, 2 otherwise.
pub fn error_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<sns_core::Error>() {
        Some(sns_core::Error::Blowup { .. }) => 3,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_table_of_single_mode() {
        let mut u = ScalarSpectrum::zeros(3);
        u.coeffs_mut()[sns_core::spectrum::index(2, 0)].re = 1.0;
        let t = degree_table(&u);
        assert_eq!(t.lines().nth(2).unwrap(), "2,6,36");
        assert_eq!(t.lines().count(), 4);
    }

    #[test]
    fn blowup_maps_to_three() {
        let e = anyhow::Error::from(sns_core::Error::Blowup { t: 1.0, before: 1.0, after: 1e9 });
        assert_eq!(error_code(&e), 3);
        assert_eq!(error_code(&anyhow::anyhow!("bad")), 2);
    }
}
