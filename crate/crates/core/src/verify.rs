//! Named identity checks over the transform, operator and noise layers.
//!
//! Each check reports the worst observed defect against a fixed tolerance.
//! Defects are relative to the natural scale of the quantity, as noted per
//! check.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{GridSpec, ScalarFieldGrid};
use crate::noise::rng::CounterRng;
use crate::noise::radonifying_sum;
use crate::operators::{
    apply_c_physical, apply_c_spectral, nonlinear_b, random_field, trilinear_b, OperatorVariant, StokesSpectrum,
};
use crate::par::par_range;
use crate::spectrum::{eigenvalue, ScalarSpectrum};
use crate::transform::{LongitudeMethod, SphereContext, SphereTransform};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub defect: f64,
    pub tol: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    fn new(name: &str, defect: f64, tol: f64) -> Self {
        Self { name: name.into(), defect, tol, passed: defect <= tol, note: String::new() }
    }

    fn flag(name: &str, passed: bool, note: String) -> Self {
        Self { name: name.into(), defect: if passed { 0.0 } else { 1.0 }, tol: 0.0, passed, note }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    #[serde(rename = "L")]
    pub truncation: usize,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random fields for the calculus identities.
    pub trials: usize,
    /// Random triples for the trilinear checks.
    pub b_trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 1, trials: 100, b_trials: 200 }
    }
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

fn worst(v: Vec<Result<f64>>) -> Result<f64> {
    v.into_iter().try_fold(0.0f64, |a, x| Ok(a.max(x?)))
}

fn max_coeff(s: &ScalarSpectrum) -> f64 {
    s.coeffs().iter().fold(0.0, |a, c| a.max(c.norm()))
}

/// `int 1 dS = 4 pi` and `int cos^2 = 4 pi / 3` on the exact grid.
fn grid_checks(t: &SphereTransform) -> Result<Vec<Check>> {
    let g = t.grid();
    let one = g.integrate_scalar(&ScalarFieldGrid::from_fn(g, |_, _| 1.0))?;
    let c2 = g.integrate_scalar(&ScalarFieldGrid::from_fn(g, |th, _| th.cos().powi(2)))?;
    Ok(vec![
        Check::new("grid_measure", (one / (4.0 * PI) - 1.0).abs(), 1e-13),
        Check::new("grid_cos2", (c2 / (4.0 * PI / 3.0) - 1.0).abs(), 1e-12),
    ])
}

/// `2 pi sum_j w_j P_l^m P_l'^m = delta`.
fn orthonormality(t: &SphereTransform) -> f64 {
    let tab = t.table();
    let w = t.grid().weights();
    let lmax = tab.truncation();
    let mut d: f64 = 0.0;
    for m in 0..=lmax {
        for l in m..=lmax {
            for k in l..=lmax {
                let s: f64 = tab.p(l, m).iter().zip(tab.p(k, m)).zip(w).map(|((a, b), w)| a * b * w).sum();
                d = d.max((2.0 * PI * s - if l == k { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    d
}

/// `sum_m |Y_lm|^2 = (2l + 1) / 4 pi` at every node, via synthesis.
fn addition_theorem(t: &SphereTransform) -> Result<f64> {
    let lmax = t.truncation().min(10);
    let mut d: f64 = 0.0;
    for l in 0..=lmax {
        let mut acc = vec![0.0; t.grid().len()];
        for m in -(l as i64)..=l as i64 {
            let mut y = ScalarSpectrum::zeros(t.truncation());
            y.set(l, m, Complex64::new(1.0, 0.0));
            let (re, im) = t.synth_complex(&y)?;
            for (a, (x, y)) in acc.iter_mut().zip(re.values.iter().zip(&im.values)) {
                *a += x * x + y * y;
            }
        }
        let want = (2 * l + 1) as f64 / (4.0 * PI);
        d = d.max(acc.iter().fold(0.0, |a, &x| a.max((x - want).abs())));
    }
    Ok(d)
}

fn transform_checks(ctx: &SphereContext, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let t = ctx.exact();
    let l = ctx.truncation();
    let rng = CounterRng::new(opts.seed, 1);
    let direct = SphereTransform::with_method(GridSpec::exact(l), LongitudeMethod::Direct)?;
    let rows = par_range(opts.trials, |k| -> Result<[f64; 5]> {
        let psi = random_field(l, &rng, k as u64);
        let f = t.synth_scalar(&psi)?;
        let back = t.analyze_scalar(&f)?;
        let round_trip = back.max_abs_diff(&psi) / max_coeff(&psi);
        let energy: f64 = psi.coeffs().iter().map(|c| c.norm_sqr()).sum();
        let parseval = (t.grid().integrate_scalar(&f.mul(&f))? - energy).abs() / energy;
        let fd = direct.synth_scalar(&psi)?;
        let fft = max_abs(&f.values.iter().zip(&fd.values).map(|(a, b)| a - b).collect::<Vec<_>>()) / max_abs(&fd.values);
        let u = t.curl_of_scalar(&psi)?;
        let div = t.divergence(&u)?.max_abs() / u.max_abs();
        let lap = psi.scale_degrees(eigenvalue);
        let curln = t.curln(&u)?.max_abs_diff(&lap) / max_coeff(&lap);
        Ok([round_trip, parseval, fft, div, curln])
    });
    let mut w = [0.0f64; 5];
    for r in rows {
        for (a, x) in w.iter_mut().zip(r?) {
            *a = a.max(x);
        }
    }
    let mut out = grid_checks(t)?;
    out.extend([
        Check::new("legendre_orthonormality", orthonormality(t), 1e-12),
        Check::new("round_trip", w[0], 1e-12),
        Check::new("parseval", w[1], 1e-11),
        Check::new("fft_vs_direct", w[2], 1e-13),
        Check::new("addition_theorem", addition_theorem(t)?, 1e-10),
        Check::new("div_curl", w[3], 1e-11),
        Check::new("curln_curl", w[4], 1e-10),
    ]);
    Ok(out)
}

fn operator_checks(ctx: &SphereContext, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let l = ctx.truncation();
    let rng = CounterRng::new(opts.seed, 2);
    let skew = worst(par_range(opts.b_trials, |k| -> Result<f64> {
        let k = k as u64;
        let (u, z, w) = (random_field(l, &rng, 3 * k), random_field(l, &rng, 3 * k + 1), random_field(l, &rng, 3 * k + 2));
        let (nu, nz, nw) = (ctx.norms(&u)?, ctx.norms(&z)?, ctx.norms(&w)?);
        let www = trilinear_b(ctx, &u, &w, &w)?.abs() / (nu.l2 * nw.v * nw.v);
        let anti = (trilinear_b(ctx, &u, &z, &w)? + trilinear_b(ctx, &u, &w, &z)?).abs() / (nu.l2 * nz.v * nw.v);
        Ok(www.max(anti))
    }))?;
    let fields: Vec<ScalarSpectrum> = (0..opts.trials as u64).map(|k| random_field(l, &rng, 1_000_000 + k)).collect();
    let t = ctx.product();
    let omega = 1.0;
    let rows = par_range(fields.len(), |k| -> Result<[f64; 4]> {
        let u = &fields[k];
        let n = ctx.norms(u)?;
        let neutral = nonlinear_b(ctx, u)?.velocity_dot(u).abs() / (n.l2 * n.v * n.v);
        let uf = t.curl_of_scalar(u)?;
        let cu = apply_c_physical(&uf, omega, t.grid())?;
        let c_neutral = t.grid().integrate_dot(&cu, &uf)?.abs() / (n.l2 * n.l2);
        let projected = t.hodge_project(&cu)?.0;
        let diagonal = apply_c_spectral(u, omega);
        let c_diag = projected.sub(&diagonal).velocity_energy().sqrt() / diagonal.velocity_energy().sqrt().max(f64::MIN_POSITIVE);
        let stokes = StokesSpectrum::new(l, OperatorVariant::DeltaOnly);
        let poincare = 2.0 - stokes.norm_sq(u) / u.velocity_energy();
        Ok([neutral, c_neutral, c_diag, poincare])
    });
    let mut w = [f64::NEG_INFINITY; 4];
    for r in rows {
        for (a, x) in w.iter_mut().zip(r?) {
            *a = a.max(x);
        }
    }
    let stokes = StokesSpectrum::new(l, OperatorVariant::DeltaOnly);
    let mut ell1 = ScalarSpectrum::zeros(l);
    let mut draws = rng.stream(77);
    ell1.set_real(1, 0, Complex64::new(draws.next_gaussian(), 0.0));
    ell1.set_real(1, 1, Complex64::new(draws.next_gaussian(), draws.next_gaussian()));
    let eq = (stokes.norm_sq(&ell1) / ell1.velocity_energy() - 2.0).abs();
    Ok(vec![
        Check::new("trilinear_skew", skew, 1e-10),
        Check::new("energy_neutrality", w[0], 1e-10),
        Check::new("coriolis_neutrality", w[1], 1e-12),
        Check::new("coriolis_diagonal", w[2], 1e-8),
        Check::new("poincare_lower_bound", w[3].max(0.0), 1e-12),
        Check::new("poincare_equality_l1", eq, 1e-10),
    ])
}

fn noise_checks() -> Vec<Check> {
    let lmax = 10_000;
    let mut out = Vec::new();
    for s in [0.6, 1.0] {
        let r = radonifying_sum(s, lmax);
        out.push(Check::flag(
            &format!("radonifying_s{s}"),
            r.converges,
            format!("block ratio {:.4}", r.block_ratio),
        ));
    }
    for s in [0.3, 0.5] {
        let r = radonifying_sum(s, lmax);
        out.push(Check::flag(
            &format!("non_radonifying_s{s}"),
            !r.converges,
            format!("block ratio {:.4}", r.block_ratio),
        ));
    }
    out
}

/// Runs every check on `ctx`.
pub fn run_checks(ctx: &SphereContext, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = transform_checks(ctx, opts)?;
    checks.extend(operator_checks(ctx, opts)?);
    checks.extend(noise_checks());
    Ok(VerifyReport { truncation: ctx.truncation(), seed: opts.seed, passed: checks.iter().all(|c| c.passed), checks })
}

/// Builds a context at truncation `l` and runs every check.
pub fn verify(l: usize, opts: &VerifyOptions) -> Result<VerifyReport> {
    run_checks(&SphereContext::new(l)?, opts)
}
