//! Stokes and Coriolis operators, the trilinear form, and the projected
//! nonlinear term, all acting on stream-function spectra.
//!
//! Two evaluations of `b(u, v, w) = (grad_u v, w)` are provided:
//!
//! * [`trilinear_b`] is the production path for divergence-free fields. It
//!   uses the vorticity form
//!   `b(u,v,w) = 1/2 int [ -zeta_w X(u,v) + zeta_u X(v,w) + zeta_v X(u,w) ]`
//!   with `X(a,b) = x . (a x b)`, which is skew in `(v, w)` term by term.
//! * [`trilinear_b_covariant`] evaluates the covariant derivative directly
//!   and accepts fields with a gradient part. It is the test oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{QuadratureGrid, VectorFieldGrid};
use crate::noise::rng::CounterRng;
use crate::par::par_map;
use crate::spectrum::{eigenvalue, ScalarSpectrum};
use crate::transform::{SphereContext, SphereTransform};

/// Which Laplacian defines the viscous term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorVariant {
    /// `Delta + 2 Ric`: rates `l(l+1) - 2`, rigid rotations undamped.
    DeltaPlusTwoRic,
    /// `Delta` alone: rates `l(l+1)`.
    #[default]
    DeltaOnly,
}

impl OperatorVariant {
    /// Dissipation rate of degree `l` (zero for `l = 0`).
    pub fn rate(self, l: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        match self {
            OperatorVariant::DeltaPlusTwoRic => eigenvalue(l) - 2.0,
            OperatorVariant::DeltaOnly => eigenvalue(l),
        }
    }
}

/// Per-degree rates `a_l` of the Stokes operator.
#[derive(Clone, Debug, PartialEq)]
pub struct StokesSpectrum {
    variant: OperatorVariant,
    rates: Vec<f64>,
}

impl StokesSpectrum {
    pub fn new(truncation: usize, variant: OperatorVariant) -> Self {
        Self { variant, rates: (0..=truncation).map(|l| variant.rate(l)).collect() }
    }

    pub fn variant(&self) -> OperatorVariant {
        self.variant
    }

    pub fn rate(&self, l: usize) -> f64 {
        self.rates[l]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// `min_{l >= 1} a_l`: the Poincare constant of the operator form.
    pub fn min_rate(&self) -> f64 {
        self.rates[1..].iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn apply(&self, stream: &ScalarSpectrum) -> ScalarSpectrum {
        stream.scale_degrees(|l| self.rates[l])
    }

    /// `<A u, v>` in velocity `L2`.
    pub fn form(&self, u: &ScalarSpectrum, v: &ScalarSpectrum) -> f64 {
        u.weighted_dot(v, |l| self.rates[l] * eigenvalue(l))
    }

    /// `||u||_{V,op}^2 = <A u, u>`.
    pub fn norm_sq(&self, u: &ScalarSpectrum) -> f64 {
        u.weighted_sq(|l| self.rates[l] * eigenvalue(l))
    }

    /// `||g||_{V'}^2 = sum l(l+1) |g_lm|^2 / a_l`. Degrees with `a_l = 0` use
    /// `a_l + lambda_1 / 2` instead; the second value reports whether that
    /// guard changed anything.
    pub fn dual_norm_sq(&self, g: &ScalarSpectrum) -> (f64, bool) {
        let guard = eigenvalue(1) / 2.0;
        let weight = |l: usize| {
            let a = self.rates[l];
            if l == 0 {
                0.0
            } else if a > 0.0 {
                eigenvalue(l) / a
            } else {
                eigenvalue(l) / (a + guard)
            }
        };
        let active = (1..=g.truncation()).any(|l| self.rates[l] <= 0.0 && row_energy(g, l) > 0.0);
        (g.weighted_sq(weight), active)
    }
}

fn row_energy(s: &ScalarSpectrum, l: usize) -> f64 {
    (-(l as i64)..=l as i64).map(|m| s.get(l, m).norm_sqr()).sum()
}

pub fn apply_a(stream: &ScalarSpectrum, variant: OperatorVariant) -> ScalarSpectrum {
    stream.scale_degrees(|l| variant.rate(l))
}

/// Rate `c_lm` such that the projected Coriolis term acts on the stream
/// coefficient `(l, m)` as multiplication by `i c_lm`.
///
/// `P[2 Omega cos(theta) x_hat x Curl psi]` has vorticity
/// `-2 Omega d(psi)/d(phi)`, so `c_lm = -2 Omega m / (l(l+1))`.
pub fn coriolis_rate(l: usize, m: i64, omega: f64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    -2.0 * omega * m as f64 / eigenvalue(l)
}

pub fn apply_c_spectral(stream: &ScalarSpectrum, omega: f64) -> ScalarSpectrum {
    stream.map(|l, m, c| c * Complex64::new(0.0, coriolis_rate(l, m, omega)))
}

/// `2 Omega cos(theta) x_hat x u` in the moving basis.
pub fn apply_c_physical(u: &VectorFieldGrid, omega: f64, grid: &QuadratureGrid) -> Result<VectorFieldGrid> {
    if u.theta.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: u.theta.len() });
    }
    let np = grid.n_phi();
    let mut out = u.rotate();
    for (j, c) in grid.cos_theta().iter().enumerate() {
        let f = 2.0 * omega * c;
        for k in j * np..(j + 1) * np {
            out.theta[k] *= f;
            out.phi[k] *= f;
        }
    }
    Ok(out)
}

/// Stream function of `B(u, u) = P[zeta x_hat x u]`, `u = Curl stream`,
/// with products on the context's product grid.
pub fn nonlinear_b(ctx: &SphereContext, stream: &ScalarSpectrum) -> Result<ScalarSpectrum> {
    let t = ctx.product();
    let u = t.curl_of_scalar(stream)?;
    let zeta = t.synth_scalar(&vorticity(stream))?;
    let w = u.rotate().scale_by(&zeta);
    project_stream(t, &w)
}

/// `-B(u, u)`, the nonlinear contribution to `d psi / dt`.
pub fn nonlinear_tendency(ctx: &SphereContext, stream: &ScalarSpectrum) -> Result<ScalarSpectrum> {
    Ok(nonlinear_b(ctx, stream)?.scale(-1.0))
}

/// Stream function of `P[w]`.
fn project_stream(t: &SphereTransform, w: &VectorFieldGrid) -> Result<ScalarSpectrum> {
    let zeta = t.curln(w)?;
    Ok(zeta.scale_degrees(|l| if l == 0 { 0.0 } else { 1.0 / eigenvalue(l) }))
}

/// `zeta = -Laplacian psi`.
pub fn vorticity(stream: &ScalarSpectrum) -> ScalarSpectrum {
    stream.scale_degrees(eigenvalue)
}

// X(a, b) = a_theta b_phi - a_phi b_theta
fn cross_normal(a: &VectorFieldGrid, b: &VectorFieldGrid) -> Vec<f64> {
    (0..a.theta.len()).map(|i| a.theta[i] * b.phi[i] - a.phi[i] * b.theta[i]).collect()
}

/// `b(u, v, w)` for divergence-free fields given by stream functions.
pub fn trilinear_b(
    ctx: &SphereContext,
    u: &ScalarSpectrum,
    v: &ScalarSpectrum,
    w: &ScalarSpectrum,
) -> Result<f64> {
    let t = ctx.product();
    let (uu, vv, ww) = (t.curl_of_scalar(u)?, t.curl_of_scalar(v)?, t.curl_of_scalar(w)?);
    let zu = t.synth_scalar(&vorticity(u))?;
    let zv = t.synth_scalar(&vorticity(v))?;
    let zw = t.synth_scalar(&vorticity(w))?;
    let (x_uv, x_vw, x_uw) = (cross_normal(&uu, &vv), cross_normal(&vv, &ww), cross_normal(&uu, &ww));
    let integrand: Vec<f64> = (0..x_uv.len())
        .map(|i| 0.5 * (-zw.values[i] * x_uv[i] + zu.values[i] * x_vw[i] + zv.values[i] * x_uw[i]))
        .collect();
    Ok(t.grid().integrate_raw(&integrand))
}

/// Tangent field given as `Curl stream + grad potential`.
#[derive(Clone, Copy, Debug)]
pub struct Potentials<'a> {
    pub stream: &'a ScalarSpectrum,
    pub potential: &'a ScalarSpectrum,
}

/// `int (grad_u v) . w` from the covariant derivative in the moving basis:
///
/// ```text
/// (grad_u v)_theta = u_theta dv_theta/dtheta + (u_phi / sin) dv_theta/dphi - u_phi v_phi cot
/// (grad_u v)_phi   = u_theta dv_phi/dtheta   + (u_phi / sin) dv_phi/dphi   + u_phi v_theta cot
/// ```
///
/// Valid for fields with a gradient part. `w` must live on `t`'s grid.
pub fn trilinear_b_covariant(
    t: &SphereTransform,
    u: Potentials<'_>,
    v: Potentials<'_>,
    w: &VectorFieldGrid,
) -> Result<f64> {
    let grid = t.grid();
    if w.theta.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: w.theta.len() });
    }
    let uf = t.vector_from_potentials(Some(u.stream), Some(u.potential))?;
    let jet = t.vector_with_derivatives(v.stream, v.potential)?;
    let np = grid.n_phi();
    let mut integrand = vec![0.0; grid.len()];
    for j in 0..grid.n_theta() {
        let (s, c) = (grid.sin_theta()[j], grid.cos_theta()[j]);
        let cot = c / s;
        for i in j * np..(j + 1) * np {
            let (ut, up) = (uf.theta[i], uf.phi[i]);
            let gt = ut * jet.dtheta_u_theta[i] + up / s * jet.dphi_u_theta[i] - up * jet.u_phi[i] * cot;
            let gp = ut * jet.dtheta_u_phi[i] + up / s * jet.dphi_u_phi[i] + up * jet.u_theta[i] * cot;
            integrand[i] = gt * w.theta[i] + gp * w.phi[i];
        }
    }
    Ok(grid.integrate_raw(&integrand))
}

/// Largest observed ratios from the random-field sweep. `c_hat` is the
/// maximum of the three and plays the role of the constant `C` in the `L4`
/// interpolation inequality, the `b` estimate, and the energy inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub trials: usize,
    /// `||u||_{L4} / (||u||^{1/2} ||u||_V^{1/2})`
    pub l4_ratio: f64,
    /// `|b(u,v,w)| / (||u||_{L4} ||v||_V ||w||_{L4})`
    pub b_ratio: f64,
    /// `|b(v,z,v)| / (||v||^{1/2} ||v||_{V,op}^{3/2} ||z||_{L4})` with the
    /// `Delta`-only operator norm
    pub energy_ratio: f64,
    pub c_hat: f64,
}

/// Random real stream function with a random spectral slope and cutoff.
pub fn random_field(truncation: usize, rng: &CounterRng, tag: u64) -> ScalarSpectrum {
    let mut draws = rng.stream(tag);
    let slope = 2.0 * draws.next_uniform();
    let lmax = 1 + (draws.next_uniform() * truncation as f64) as usize;
    ScalarSpectrum::random(truncation, lmax.min(truncation), slope, &mut draws)
}

pub(crate) fn ratios(ctx: &SphereContext, u: &ScalarSpectrum, v: &ScalarSpectrum, w: &ScalarSpectrum) -> Result<[f64; 3]> {
    let nu = ctx.norms(u)?;
    let nv = ctx.norms(v)?;
    let nw = ctx.norms(w)?;
    let l4 = nu.l4 / (nu.l2.sqrt() * nu.v.sqrt());
    let b = trilinear_b(ctx, u, v, w)?.abs() / (nu.l4 * nv.v * nw.l4);
    // b(v, z, v) with v = u and z = w
    let e = trilinear_b(ctx, u, w, u)?.abs() / (nu.l2.sqrt() * nu.enstrophy.powf(0.75) * nw.l4);
    Ok([l4, b, e])
}

/// Sweeps `trials` random triples and records the largest ratios.
pub fn calibrate_constant(ctx: &SphereContext, trials: usize, seed: u64) -> Result<Calibration> {
    let rng = CounterRng::new(seed, 0);
    let idx: Vec<u64> = (0..trials as u64).collect();
    let rows = par_map(&idx, |&k| {
        let u = random_field(ctx.truncation(), &rng, 3 * k);
        let v = random_field(ctx.truncation(), &rng, 3 * k + 1);
        let w = random_field(ctx.truncation(), &rng, 3 * k + 2);
        ratios(ctx, &u, &v, &w)
    });
    let mut best = [0.0f64; 3];
    for r in rows {
        let r = r?;
        for (b, x) in best.iter_mut().zip(r) {
            *b = b.max(x);
        }
    }
    Ok(Calibration {
        trials,
        l4_ratio: best[0],
        b_ratio: best[1],
        energy_ratio: best[2],
        c_hat: best.iter().copied().fold(0.0, f64::max),
    })
}
