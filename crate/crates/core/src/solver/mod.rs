//! Time integration of the shifted equation
//!
//! ```text
//! dv/dt = -nu A v - C v - B(v + z, v + z) + alpha z + f,    u = v + z
//! ```
//!
//! `nu A + C` is diagonal on stream coefficients with symbol
//! `nu a_l + i c_lm`, so the linear part is applied exactly; everything else
//! is treated explicitly by exponential Euler or ETDRK2 (Cox-Matthews).

mod certificate;
mod etd;
mod oracle;
mod output;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{stationary_series, NoisePath, NoiseSpec, OuParams, OuState, ZSeries, DEFAULT_BURN_TOL};
use crate::operators::{coriolis_rate, nonlinear_b, OperatorVariant, StokesSpectrum};
use crate::spectrum::{eigenvalue, index, num_coeffs, ScalarSpectrum};
use crate::transform::{LongitudeMethod, SphereContext};

pub use certificate::{energy_certificate, CertificateReport, ExponentReport};
pub use etd::{phi1, phi2};
pub use oracle::direct_u_oracle;
pub use output::{read_checkpoint, write_checkpoint, write_diagnostics_csv, Checkpoint, CSV_HEADER};

pub(crate) use crate::noise::steps_for;

/// One nonzero forcing coefficient of the stream function `f`; the
/// conjugate partner is implied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingMode {
    pub l: usize,
    pub m: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub nu: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub alpha: f64,
    pub variant: OperatorVariant,
    #[serde(rename = "L")]
    pub truncation: usize,
    #[serde(default = "yes")]
    pub dealias: bool,
    /// `false` drops `B` entirely (linearized runs).
    #[serde(default = "yes")]
    pub nonlinear: bool,
    #[serde(default)]
    pub forcing: Vec<ForcingMode>,
    pub noise: NoiseSpec,
}

impl ModelConfig {
    /// Unforced, noise-free model at truncation `l`.
    pub fn quiet(truncation: usize, nu: f64, variant: OperatorVariant) -> Self {
        Self {
            nu,
            omega: 0.0,
            alpha: 0.0,
            variant,
            truncation,
            dealias: true,
            nonlinear: true,
            forcing: Vec::new(),
            noise: NoiseSpec::new(0.0, 1.0, truncation, 0, 1e-3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 {
            return Err(Error::InvalidConfig("L must be at least 1".into()));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidConfig(format!("nu must be > 0, got {}", self.nu)));
        }
        if !self.omega.is_finite() {
            return Err(Error::InvalidConfig("Omega must be finite".into()));
        }
        if self.noise.truncation != self.truncation {
            return Err(Error::InvalidConfig(format!(
                "noise L = {} differs from model L = {}",
                self.noise.truncation, self.truncation
            )));
        }
        for f in &self.forcing {
            if f.l == 0 || f.l > self.truncation || f.m.unsigned_abs() as usize > f.l {
                return Err(Error::InvalidConfig(format!(
                    "forcing mode (l={}, m={}) must satisfy 1 <= l <= L and |m| <= l",
                    f.l, f.m
                )));
            }
        }
        self.noise.validate()
    }

    pub fn forcing_spectrum(&self) -> ScalarSpectrum {
        let mut s = ScalarSpectrum::zeros(self.truncation);
        for f in &self.forcing {
            s.set_real(f.l, f.m, Complex64::new(f.re, f.im));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExpEuler,
    #[default]
    Etdrk2,
}

fn default_burn_tol() -> f64 {
    DEFAULT_BURN_TOL
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Decay factor of the forgotten initial state when `z` is started
    /// from zero before the window of interest.
    #[serde(default = "default_burn_tol")]
    pub burn_tol: f64,
}

impl IntegratorConfig {
    pub fn new(dt: f64) -> Self {
        Self { dt, scheme: Scheme::Etdrk2, burn_tol: DEFAULT_BURN_TOL }
    }

    pub fn with_scheme(dt: f64, scheme: Scheme) -> Self {
        Self { scheme, ..Self::new(dt) }
    }
}

/// One row of the diagnostics stream. The first six fields are the CSV
/// columns; the rest feed the energy certificate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: f64,
    /// `||v||^2`
    pub energy: f64,
    /// `||v||^2 + ||curl_n v||^2`
    pub vnorm2: f64,
    pub enstrophy: f64,
    /// `||z||_{L4}^4`
    pub z_l4_4: f64,
    /// `||u||_{L4}`
    pub u_l4: f64,
    /// `<A v, v>`
    pub a_form: f64,
    /// `||g||_{V'}^2` with `g = alpha z - B(z, z)`
    pub g_dual2: f64,
    /// `b(v, z, v)`
    pub bvzv: f64,
    /// `<g, v>`
    pub gv: f64,
    /// `<f, v>`
    pub fv: f64,
}

/// What to record along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recording {
    None,
    /// Norms only, every `n` steps.
    Norms(usize),
    /// Norms and certificate terms, every step.
    Full,
}

/// Solver state: `v` at noise-grid index `step`.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub v: ScalarSpectrum,
    pub step: i64,
    pub diagnostics: Vec<DiagnosticRow>,
}

/// End state and diagnostics of a run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub u_end: ScalarSpectrum,
    pub v_end: ScalarSpectrum,
    pub z_end: ScalarSpectrum,
    pub rows: Vec<DiagnosticRow>,
}

/// Immutable runtime form of a [`ModelConfig`]: transforms, operator
/// symbols, and OU coefficients. Safe to share across threads.
#[derive(Clone, Debug)]
pub struct Model {
    cfg: ModelConfig,
    ctx: SphereContext,
    stokes: StokesSpectrum,
    // nu a_l + i c_lm per coefficient
    symbol: Vec<Complex64>,
    forcing: ScalarSpectrum,
    forcing_dual2: f64,
    ou: Arc<OuParams>,
}

/// Exponential factors for one step size.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub dt: f64,
    pub scheme: Scheme,
    noise_steps: usize,
    e: Vec<Complex64>,
    p1: Vec<Complex64>,
    p2: Vec<Complex64>,
}

impl Model {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        Self::with_method(cfg, LongitudeMethod::Fft)
    }

    pub fn with_method(cfg: ModelConfig, method: LongitudeMethod) -> Result<Self> {
        cfg.validate()?;
        let ctx = SphereContext::with_options(cfg.truncation, cfg.dealias, method)?;
        let stokes = StokesSpectrum::new(cfg.truncation, cfg.variant);
        let mut symbol = vec![Complex64::default(); num_coeffs(cfg.truncation)];
        for l in 1..=cfg.truncation {
            for m in -(l as i64)..=l as i64 {
                symbol[index(l, m)] = Complex64::new(cfg.nu * stokes.rate(l), coriolis_rate(l, m, cfg.omega));
            }
        }
        let forcing = cfg.forcing_spectrum();
        let forcing_dual2 = stokes.dual_norm_sq(&forcing).0;
        let ou = Arc::new(OuParams::new(&cfg.noise, cfg.nu, cfg.omega, cfg.variant, cfg.alpha)?);
        Ok(Self { cfg, ctx, stokes, symbol, forcing, forcing_dual2, ou })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn context(&self) -> &SphereContext {
        &self.ctx
    }

    pub fn stokes(&self) -> &StokesSpectrum {
        &self.stokes
    }

    pub fn ou(&self) -> &Arc<OuParams> {
        &self.ou
    }

    pub fn forcing(&self) -> &ScalarSpectrum {
        &self.forcing
    }

    pub fn truncation(&self) -> usize {
        self.cfg.truncation
    }

    /// `lambda_1` of the active variant: the smallest `a_l`.
    pub fn lambda1(&self) -> f64 {
        self.stokes.min_rate()
    }

    /// `nu a_l + i c_lm` at coefficient `(l, m)`.
    pub fn symbol(&self, l: usize, m: i64) -> Complex64 {
        self.symbol[index(l, m)]
    }

    /// The noise path this model's configuration describes.
    pub fn path(&self) -> NoisePath {
        NoisePath::new(&self.cfg.noise)
    }

    pub fn stepper(&self, icfg: &IntegratorConfig) -> Result<Stepper> {
        if !(icfg.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", icfg.dt)));
        }
        let noise_steps = steps_for(icfg.dt, self.cfg.noise.dt_noise)?;
        if noise_steps == 0 {
            return Err(Error::Misaligned { step: icfg.dt, dt_noise: self.cfg.noise.dt_noise });
        }
        let h = icfg.dt;
        let mut e = Vec::with_capacity(self.symbol.len());
        let mut p1 = Vec::with_capacity(self.symbol.len());
        let mut p2 = Vec::with_capacity(self.symbol.len());
        for s in &self.symbol {
            let x = -s * h;
            e.push(x.exp());
            p1.push(phi1(x) * h);
            p2.push(phi2(x) * h);
        }
        Ok(Stepper { dt: h, scheme: icfg.scheme, noise_steps, e, p1, p2 })
    }

    /// `-B(w, w) + alpha z + f` at `w = v + z`; `B` is dropped for
    /// linearized models.
    pub fn explicit_part(&self, v: &ScalarSpectrum, z: &ScalarSpectrum) -> Result<ScalarSpectrum> {
        let mut out = self.forcing.clone();
        out.axpy(self.cfg.alpha, z);
        if self.cfg.nonlinear {
            out.axpy(-1.0, &nonlinear_b(&self.ctx, &v.add(z))?);
        }
        Ok(out)
    }

    /// `-(nu A + C) v`
    pub fn linear_part(&self, v: &ScalarSpectrum) -> ScalarSpectrum {
        let mut out = v.clone();
        for (c, s) in out.coeffs_mut().iter_mut().zip(&self.symbol) {
            *c *= -s;
        }
        out
    }

    /// Full right-hand side of the `v` equation.
    pub fn tendency_v(&self, v: &ScalarSpectrum, z: &ScalarSpectrum) -> Result<ScalarSpectrum> {
        v.check_truncation(self.cfg.truncation)?;
        z.check_truncation(self.cfg.truncation)?;
        Ok(self.linear_part(v).add(&self.explicit_part(v, z)?))
    }

    /// One step from `v` (with `z0 = z(t)`) to `t + dt` (with `z1`).
    pub fn step_pair(
        &self,
        st: &Stepper,
        v: &ScalarSpectrum,
        z0: &ScalarSpectrum,
        z1: &ScalarSpectrum,
        t: f64,
    ) -> Result<ScalarSpectrum> {
        let n0 = self.explicit_part(v, z0)?;
        let mut a = v.clone();
        for ((c, n), (e, p)) in a.coeffs_mut().iter_mut().zip(n0.coeffs()).zip(st.e.iter().zip(&st.p1)) {
            *c = e * *c + p * n;
        }
        let next = match st.scheme {
            Scheme::ExpEuler => a,
            Scheme::Etdrk2 => {
                let n1 = self.explicit_part(&a, z1)?;
                let mut b = a;
                for (((c, x1), x0), p) in b.coeffs_mut().iter_mut().zip(n1.coeffs()).zip(n0.coeffs()).zip(&st.p2) {
                    *c += p * (x1 - x0);
                }
                b
            }
        };
        let mut next = next;
        next.enforce_real();
        guard(v, &next, t + st.dt)?;
        Ok(next)
    }

    /// Advances `state` and `ou` together by one step along `path`.
    pub fn step(&self, st: &Stepper, state: &mut SolverState, ou: &mut OuState, path: &NoisePath) -> Result<()> {
        if ou.step_index() != state.step {
            return Err(Error::InvalidConfig(format!(
                "solver at noise step {} but OU state at {}",
                state.step,
                ou.step_index()
            )));
        }
        let z0 = ou.z.clone();
        ou.advance(path, st.noise_steps);
        let t = state.step as f64 * self.cfg.noise.dt_noise;
        state.v = self.step_pair(st, &state.v, &z0, &ou.z, t)?;
        state.step += st.noise_steps as i64;
        Ok(())
    }

    /// Stationary `z` along `path` at `count` consecutive solver steps
    /// starting from noise index `start_step`.
    pub fn z_series(&self, path: &NoisePath, st: &Stepper, start_step: i64, count: usize, burn_tol: f64) -> Result<ZSeries> {
        stationary_series(&self.ou, path, start_step, st.noise_steps, count, burn_tol)
    }

    /// Integrates `n` steps from entry `i0` of `zs`, starting at `v0`.
    pub fn integrate(
        &self,
        st: &Stepper,
        v0: ScalarSpectrum,
        zs: &ZSeries,
        i0: usize,
        n: usize,
        recording: Recording,
    ) -> Result<(ScalarSpectrum, Vec<DiagnosticRow>)> {
        if zs.stride != st.noise_steps || i0 + n >= zs.len() {
            return Err(Error::InvalidConfig("z series does not cover the integration window".into()));
        }
        let mut v = v0;
        let mut rows = Vec::new();
        let every = match recording {
            Recording::None => 0,
            Recording::Norms(k) => k.max(1),
            Recording::Full => 1,
        };
        let full = recording == Recording::Full;
        for i in 0..=n {
            if every > 0 && i % every == 0 {
                rows.push(self.diagnostics(zs.time(i0 + i), &v, &zs.z[i0 + i], full)?);
            }
            if i < n {
                v = self.step_pair(st, &v, &zs.z[i0 + i], &zs.z[i0 + i + 1], zs.time(i0 + i))?;
            }
        }
        Ok((v, rows))
    }

    /// Runs from noise index `start_step` for `t_len` with `u(start) = x0`.
    pub fn run(
        &self,
        path: &NoisePath,
        x0: &ScalarSpectrum,
        icfg: &IntegratorConfig,
        start_step: i64,
        t_len: f64,
        recording: Recording,
    ) -> Result<Trajectory> {
        x0.check_truncation(self.cfg.truncation)?;
        let st = self.stepper(icfg)?;
        let n = steps_for(t_len, icfg.dt)?;
        let zs = self.z_series(path, &st, start_step, n + 1, icfg.burn_tol)?;
        let v0 = x0.sub(&zs.z[0]);
        let (v, rows) = self.integrate(&st, v0, &zs, 0, n, recording)?;
        let z_end = zs.z[n].clone();
        let u_end = if n == 0 { x0.clone() } else { v.add(&z_end) };
        Ok(Trajectory { u_end, v_end: v, z_end, rows })
    }

    /// The cocycle `phi(t_len, omega) x0`: `z` is the stationary solution
    /// along `path`, `v(0) = x0 - z(0)`, and the result is `v + z` at
    /// `t_len`. `t_len = 0` returns `x0` unchanged.
    pub fn rds_phi(&self, t_len: f64, path: &NoisePath, x0: &ScalarSpectrum, icfg: &IntegratorConfig) -> Result<ScalarSpectrum> {
        Ok(self.run(path, x0, icfg, 0, t_len, Recording::None)?.u_end)
    }

    pub fn diagnostics(&self, t: f64, v: &ScalarSpectrum, z: &ScalarSpectrum, full: bool) -> Result<DiagnosticRow> {
        let u = v.add(z);
        let energy = v.velocity_energy();
        let enstrophy = v.enstrophy();
        let mut row = DiagnosticRow {
            t,
            energy,
            vnorm2: energy + enstrophy,
            enstrophy,
            z_l4_4: self.ctx.l4_norm(z)?.powi(4),
            u_l4: self.ctx.l4_norm(&u)?,
            a_form: self.stokes.norm_sq(v),
            ..DiagnosticRow::default()
        };
        if full {
            let mut g = z.scale(self.cfg.alpha);
            if self.cfg.nonlinear {
                g.axpy(-1.0, &nonlinear_b(&self.ctx, z)?);
                // b(v, z, v) = -b(v, v, z) = -<B(v, v), z>
                row.bvzv = -nonlinear_b(&self.ctx, v)?.velocity_dot(z);
            }
            row.g_dual2 = self.stokes.dual_norm_sq(&g).0;
            row.gv = g.velocity_dot(v);
            row.fv = self.forcing.velocity_dot(v);
        }
        Ok(row)
    }

    /// `||f||_{V'}^2`
    pub fn forcing_dual2(&self) -> f64 {
        self.forcing_dual2
    }

    /// Random initial field with unit velocity energy and spectral slope
    /// `slope`, scaled to energy `radius^2`.
    pub fn random_initial(&self, seed: u64, member: u64, radius: f64, slope: f64) -> ScalarSpectrum {
        let mut draws = crate::noise::rng::CounterRng::new(seed, member).stream(0x1417);
        let s = ScalarSpectrum::random(self.cfg.truncation, self.cfg.truncation, slope, &mut draws);
        let e = s.velocity_energy().sqrt();
        if e == 0.0 {
            s
        } else {
            s.scale(radius / e)
        }
    }
}

fn guard(before: &ScalarSpectrum, after: &ScalarSpectrum, t: f64) -> Result<()> {
    let b = before.velocity_energy().sqrt();
    let a = after.velocity_energy().sqrt();
    if !a.is_finite() || (a > 1e3 * b && a > 1.0) {
        return Err(Error::Blowup { t, before: b, after: a });
    }
    Ok(())
}

/// `H` norm of a stream function: `||Curl psi||_{L2}`.
pub fn h_norm(s: &ScalarSpectrum) -> f64 {
    s.velocity_energy().sqrt()
}

/// `||u||_{V,op}^2 / ||u||^2` lower bound from the spectrum of `A`.
pub fn poincare_ratio(s: &ScalarSpectrum, variant: OperatorVariant) -> f64 {
    s.weighted_sq(|l| variant.rate(l) * eigenvalue(l)) / s.velocity_energy()
}
