use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::path::NoisePath;
use super::rng::{CounterRng, GaussianStream};
use super::NoiseSpec;
use crate::error::{Error, Result};
use crate::operators::{coriolis_rate, OperatorVariant};
use crate::par::{par_map, par_range};
use crate::spectrum::{eigenvalue, index, num_coeffs, ScalarSpectrum};
use crate::stats::RunningStats;
use crate::transform::SphereContext;

/// Default relative size of the forgotten initial condition when a
/// stationary path is started from zero.
pub const DEFAULT_BURN_TOL: f64 = 1e-16;

/// Per-mode coefficients of `dz + (nu A + C + alpha) z dt = G dW`.
#[derive(Clone, Debug, PartialEq)]
pub struct OuParams {
    truncation: usize,
    alpha: f64,
    dt_noise: f64,
    mu: Vec<Complex64>,
    gain: Vec<f64>,
    decay: Vec<Complex64>,
    kick: Vec<f64>,
}

impl OuParams {
    /// Fails if a forced mode has `Re mu = 0`; that happens for `l = 1`
    /// under `DeltaPlusTwoRic` with `alpha = 0`.
    pub fn new(noise: &NoiseSpec, nu: f64, omega: f64, variant: OperatorVariant, alpha: f64) -> Result<Self> {
        noise.validate()?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be >= 0, got {alpha}")));
        }
        let n = num_coeffs(noise.truncation);
        let (mut mu, mut decay, mut kick) = (vec![Complex64::default(); n], vec![Complex64::default(); n], vec![0.0; n]);
        let gain: Vec<f64> = (0..=noise.truncation).map(|l| noise.gain(l)).collect();
        let h = noise.dt_noise;
        for l in 1..=noise.truncation {
            let stream_gain = gain[l] / eigenvalue(l).sqrt();
            for m in -(l as i64)..=l as i64 {
                let i = index(l, m);
                mu[i] = Complex64::new(nu * variant.rate(l) + alpha, coriolis_rate(l, m, omega));
                if gain[l] > 0.0 && mu[i].re <= 0.0 {
                    return Err(Error::NonDissipative(format!(
                        "mode (l={l}, m={m}) has Re mu = {}: l = 1 is undamped under DeltaPlusTwoRic, so set alpha > 0 or use DeltaOnly",
                        mu[i].re
                    )));
                }
                decay[i] = (-mu[i] * h).exp();
                let x = 2.0 * mu[i].re * h;
                // sqrt((1 - e^{-x}) / x), equal to 1 in the undamped limit
                let shrink = if x > 0.0 { (-(-x).exp_m1() / x).sqrt() } else { 1.0 };
                kick[i] = stream_gain * shrink;
            }
        }
        Ok(Self { truncation: noise.truncation, alpha, dt_noise: h, mu, gain, decay, kick })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dt_noise(&self) -> f64 {
        self.dt_noise
    }

    pub fn mu(&self, l: usize, m: i64) -> Complex64 {
        self.mu[index(l, m)]
    }

    /// Velocity gain `g_l`.
    pub fn gain(&self, l: usize) -> f64 {
        self.gain[l]
    }

    /// `E |u_lm|^2 = g_l^2 / (2 Re mu_lm)` for the velocity coefficient.
    pub fn stationary_var(&self, l: usize, m: i64) -> f64 {
        let g = self.gain[l];
        if g == 0.0 {
            0.0
        } else {
            g * g / (2.0 * self.mu(l, m).re)
        }
    }

    /// `E ||z||_H^2`.
    pub fn expected_energy(&self) -> f64 {
        (1..=self.truncation)
            .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
            .map(|(l, m)| self.stationary_var(l, m))
            .sum()
    }

    /// Smallest `Re mu` over forced modes.
    pub fn min_decay(&self) -> f64 {
        let mut best = f64::INFINITY;
        for l in 1..=self.truncation {
            if self.gain[l] > 0.0 {
                for m in 0..=l as i64 {
                    best = best.min(self.mu(l, m).re);
                }
            }
        }
        best
    }

    fn is_quiet(&self) -> bool {
        self.gain.iter().all(|&g| g == 0.0)
    }

    #[inline]
    fn substep(&self, z: Complex64, path: &NoisePath, l: usize, m: i64, k: i64) -> Complex64 {
        let i = index(l, m);
        if self.kick[i] == 0.0 {
            self.decay[i] * z
        } else {
            self.decay[i] * z + path.increment(l, m, k) * self.kick[i]
        }
    }
}

/// `z_alpha` at a point of the noise grid.
#[derive(Clone, Debug)]
pub struct OuState {
    pub z: ScalarSpectrum,
    step: i64,
    params: Arc<OuParams>,
}

impl OuState {
    pub fn new(z: ScalarSpectrum, step: i64, params: Arc<OuParams>) -> Self {
        Self { z, step, params }
    }

    pub fn zero(step: i64, params: Arc<OuParams>) -> Self {
        Self { z: ScalarSpectrum::zeros(params.truncation), step, params }
    }

    pub fn params(&self) -> &OuParams {
        &self.params
    }

    pub fn step_index(&self) -> i64 {
        self.step
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * self.params.dt_noise
    }

    /// Advances by `h`, which must be a whole number of noise steps. Each
    /// noise step applies the exact decay and an increment rescaled to the
    /// exact stochastic-convolution variance.
    pub fn step(&mut self, path: &NoisePath, h: f64) -> Result<()> {
        let n = steps_for(h, self.params.dt_noise)?;
        self.advance(path, n);
        Ok(())
    }

    pub fn advance(&mut self, path: &NoisePath, n: usize) {
        if n == 0 {
            return;
        }
        let p = &*self.params;
        for l in 1..=p.truncation {
            for m in 0..=l as i64 {
                let mut c = self.z.get(l, m);
                for k in self.step..self.step + n as i64 {
                    c = p.substep(c, path, l, m, k);
                }
                self.z.set(l, m, c);
            }
        }
        self.z.enforce_real();
        self.step += n as i64;
    }
}

/// Number of noise steps in `h`; rejects misaligned steps.
pub(crate) fn steps_for(h: f64, dt_noise: f64) -> Result<usize> {
    let r = h / dt_noise;
    let n = r.round();
    if !(h >= 0.0) || (r - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::Misaligned { step: h, dt_noise });
    }
    Ok(n as usize)
}

/// `ou_step` in free-function form.
pub fn ou_step(state: &mut OuState, path: &NoisePath, h: f64) -> Result<()> {
    state.step(path, h)
}

/// Independent draw from the stationary law: each mode is complex Gaussian
/// with `E|u_lm|^2 = g^2 / (2 Re mu)` (real for `m = 0`).
pub fn sample_stationary(params: &Arc<OuParams>, draws: &mut GaussianStream, step: i64) -> OuState {
    let mut z = ScalarSpectrum::zeros(params.truncation);
    for l in 1..=params.truncation {
        let to_stream = 1.0 / eigenvalue(l).sqrt();
        for m in 0..=l as i64 {
            let var = params.stationary_var(l, m);
            let c = if m == 0 {
                Complex64::new(var.sqrt() * draws.next_gaussian(), 0.0)
            } else {
                let sd = (0.5 * var).sqrt();
                Complex64::new(sd * draws.next_gaussian(), sd * draws.next_gaussian())
            };
            z.set(l, m, c * to_stream);
        }
    }
    z.enforce_real();
    OuState { z, step, params: Arc::clone(params) }
}

/// Stationary `z` sampled every `stride` noise steps along a fixed path.
#[derive(Clone, Debug)]
pub struct ZSeries {
    pub start_step: i64,
    pub stride: usize,
    pub dt_noise: f64,
    pub z: Vec<ScalarSpectrum>,
}

impl ZSeries {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        (self.start_step + (i * self.stride) as i64) as f64 * self.dt_noise
    }

    pub fn dt(&self) -> f64 {
        self.stride as f64 * self.dt_noise
    }
}

/// Pathwise stationary solution on the window `start_step + i * stride`,
/// `i < count`. Each mode starts from zero far enough in the past that the
/// forgotten initial condition has decayed by `tol`, so the result is the
/// stationary process driven by `path` up to that tolerance.
pub fn stationary_series(
    params: &OuParams,
    path: &NoisePath,
    start_step: i64,
    stride: usize,
    count: usize,
    tol: f64,
) -> Result<ZSeries> {
    if path.truncation() != params.truncation {
        return Err(Error::TruncationMismatch { expected: params.truncation, got: path.truncation() });
    }
    let mut z = vec![ScalarSpectrum::zeros(params.truncation); count];
    if !params.is_quiet() && count > 0 {
        let modes: Vec<(usize, i64)> =
            (1..=params.truncation).flat_map(|l| (0..=l as i64).map(move |m| (l, m))).collect();
        let columns = par_map(&modes, |&(l, m)| {
            let rate = params.mu(l, m).re;
            let burn = ((1.0 / tol).ln() / (rate * params.dt_noise)).ceil() as i64;
            let mut c = Complex64::default();
            for k in start_step - burn..start_step {
                c = params.substep(c, path, l, m, k);
            }
            let mut out = Vec::with_capacity(count);
            out.push(c);
            let mut k = start_step;
            for _ in 1..count {
                for _ in 0..stride {
                    c = params.substep(c, path, l, m, k);
                    k += 1;
                }
                out.push(c);
            }
            out
        });
        for (&(l, m), col) in modes.iter().zip(&columns) {
            for (s, c) in z.iter_mut().zip(col) {
                s.set(l, m, *c);
            }
        }
        z.iter_mut().for_each(|s| s.enforce_real());
    }
    Ok(ZSeries { start_step, stride, dt_noise: params.dt_noise, z })
}

/// `||z||_X = ||z||_H + ||z||_{L4}` raised to the fourth power, and the
/// `H` part alone.
fn x4_h4(ctx: &SphereContext, z: &ScalarSpectrum) -> Result<(f64, f64)> {
    let h = z.velocity_energy().sqrt();
    let x = h + ctx.l4_norm(z)?;
    Ok((x.powi(4), h.powi(4)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlnAverage {
    /// `(1/T) int ||z||_X^4`
    pub x4: f64,
    /// `(1/T) int ||z||_H^4`
    pub h4: f64,
    pub samples: usize,
}

/// Time average of `||z||_X^4` over `[-T, 0]`, starting from a stationary
/// draw at `-T` and following `path`. Samples are taken after every step of
/// length `dt`.
pub fn sln_time_average(
    params: &Arc<OuParams>,
    ctx: &SphereContext,
    path: &NoisePath,
    draws: &mut GaussianStream,
    t_total: f64,
    dt: f64,
) -> Result<SlnAverage> {
    let per = steps_for(dt, params.dt_noise)?;
    let n = steps_for(t_total, dt)?;
    let mut state = sample_stationary(params, draws, -((n * per) as i64));
    let (mut x4, mut h4) = (0.0, 0.0);
    for _ in 0..n {
        state.advance(path, per);
        let (a, b) = x4_h4(ctx, &state.z)?;
        x4 += a;
        h4 += b;
    }
    let nf = n.max(1) as f64;
    Ok(SlnAverage { x4: x4 / nf, h4: h4 / nf, samples: n })
}

/// Monte Carlo `E ||z(0)||_X^4` and `E ||z(0)||_H^4` from independent
/// stationary draws; sample `i` uses the generator `(seed, i)`, so the same
/// seed gives common random numbers across parameter values.
pub fn monte_carlo_x4(
    params: &Arc<OuParams>,
    ctx: &SphereContext,
    samples: usize,
    seed: u64,
) -> Result<(RunningStats, RunningStats)> {
    let rows = par_range(samples, |i| {
        let mut draws = CounterRng::new(seed, i as u64).stream(0);
        x4_h4(ctx, &sample_stationary(params, &mut draws, 0).z)
    });
    let (mut x, mut h) = (RunningStats::default(), RunningStats::default());
    for r in rows {
        let (a, b) = r?;
        x.push(a);
        h.push(b);
    }
    Ok((x, h))
}

/// Exact `E ||z||_H^4` for the diagonal Gaussian stationary law:
/// `(sum v)^2 + sum_l [2 v_l0^2 + 4 sum_{m>0} v_lm^2]`.
pub fn gaussian_fourth_moment_h(params: &OuParams) -> f64 {
    let mut total = 0.0;
    let mut extra = 0.0;
    for l in 1..=params.truncation {
        let v0 = params.stationary_var(l, 0);
        total += v0;
        extra += 2.0 * v0 * v0;
        for m in 1..=l as i64 {
            let v = params.stationary_var(l, m);
            total += 2.0 * v;
            extra += 4.0 * v * v;
        }
    }
    total * total + extra
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub mean_x4: f64,
    pub std_err: f64,
    pub below_threshold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaTable {
    /// `8 nu^4 lambda_1 / (27 C^4)`
    pub threshold: f64,
    pub rows: Vec<AlphaRow>,
    pub smallest_alpha: Option<f64>,
}

/// `E ||z_alpha(0)||_X^4` for each `alpha` under common random numbers,
/// and the smallest `alpha` whose estimate is below the threshold.
#[allow(clippy::too_many_arguments)]
pub fn alpha_threshold_probe(
    noise: &NoiseSpec,
    nu: f64,
    omega: f64,
    variant: OperatorVariant,
    alphas: &[f64],
    ctx: &SphereContext,
    samples: usize,
    seed: u64,
    c_hat: f64,
) -> Result<AlphaTable> {
    let lambda1 = (1..=noise.truncation).map(|l| variant.rate(l)).fold(f64::INFINITY, f64::min);
    let threshold = 8.0 * nu.powi(4) * lambda1 / (27.0 * c_hat.powi(4));
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let params = Arc::new(OuParams::new(noise, nu, omega, variant, alpha)?);
        let (x, _) = monte_carlo_x4(&params, ctx, samples, seed)?;
        rows.push(AlphaRow { alpha, mean_x4: x.mean, std_err: x.std_err(), below_threshold: x.mean < threshold });
    }
    let smallest_alpha = rows.iter().filter(|r| r.below_threshold).map(|r| r.alpha).reduce(f64::min);
    Ok(AlphaTable { threshold, rows, smallest_alpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sigma: f64) -> NoiseSpec {
        NoiseSpec::new(sigma, 1.0, 6, 11, 0.01)
    }

    #[test]
    fn undamped_modes_are_rejected_with_the_rule() {
        let e = OuParams::new(&spec(1.0), 1.0, 0.0, OperatorVariant::DeltaPlusTwoRic, 0.0).unwrap_err();
        assert!(e.to_string().contains("alpha > 0"));
        assert!(OuParams::new(&spec(1.0), 1.0, 0.0, OperatorVariant::DeltaPlusTwoRic, 0.5).is_ok());
        assert!(OuParams::new(&spec(0.0), 1.0, 0.0, OperatorVariant::DeltaPlusTwoRic, 0.0).is_ok());
    }

    #[test]
    fn zero_step_and_pure_decay() {
        let p = Arc::new(OuParams::new(&spec(0.0), 1.0, 0.7, OperatorVariant::DeltaOnly, 0.3).unwrap());
        let path = NoisePath::new(&spec(0.0));
        let z0 = ScalarSpectrum::single(6, 3, 2, Complex64::new(1.0, -0.5));
        let mut s = OuState::new(z0.clone(), 0, Arc::clone(&p));
        s.step(&path, 0.0).unwrap();
        assert_eq!(s.z, z0);
        s.step(&path, 0.25).unwrap();
        let want = z0.get(3, 2) * (-p.mu(3, 2) * 0.25).exp();
        assert!((s.z.get(3, 2) - want).norm() < 1e-14);
        assert!(s.step(&path, 0.015).is_err());
    }

    #[test]
    fn quiet_noise_gives_zero() {
        let p = Arc::new(OuParams::new(&spec(0.0), 1.0, 0.0, OperatorVariant::DeltaOnly, 0.0).unwrap());
        let mut d = CounterRng::new(1, 0).stream(0);
        assert!(sample_stationary(&p, &mut d, 0).z.coeffs().iter().all(|c| *c == Complex64::default()));
        let zs = stationary_series(&p, &NoisePath::new(&spec(0.0)), -10, 1, 5, DEFAULT_BURN_TOL).unwrap();
        assert!(zs.z.iter().all(|z| z.velocity_energy() == 0.0));
    }

    #[test]
    fn series_matches_stepping() {
        let n = spec(0.5);
        let p = Arc::new(OuParams::new(&n, 1.0, 1.0, OperatorVariant::DeltaOnly, 0.2).unwrap());
        let path = NoisePath::new(&n);
        let zs = stationary_series(&p, &path, -40, 4, 6, DEFAULT_BURN_TOL).unwrap();
        let mut s = OuState::new(zs.z[0].clone(), -40, Arc::clone(&p));
        for i in 1..6 {
            s.advance(&path, 4);
            assert!(s.z.max_abs_diff(&zs.z[i]) < 1e-15);
        }
        assert_eq!(zs.time(2), -0.32);
        assert!(zs.z[3].reality_defect() == 0.0);
    }

    #[test]
    fn fourth_moment_formula_matches_chi_square() {
        // at L = 1 with equal variances v, ||z||^2 = v (X0^2 + X1^2 + X2^2)
        // is v times a chi-square with 3 degrees of freedom: E = 15 v^2
        let n = NoiseSpec::new(1.0, 1.0, 1, 3, 0.01);
        let p = OuParams::new(&n, 1.0, 0.0, OperatorVariant::DeltaOnly, 0.0).unwrap();
        let v = p.stationary_var(1, 0);
        assert!((gaussian_fourth_moment_h(&p) - 15.0 * v * v).abs() < 1e-14);
    }
}
