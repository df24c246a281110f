use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::operators::nonlinear_b;
use crate::par::par_map;
use crate::solver::{IntegratorConfig, Model};
use crate::stats::fit_slope;

/// The backward scan for `r11` stops once the weight drops below this.
pub const WEIGHT_CUTOFF: f64 = 1e-12;

/// `27 C^4 / (4 nu^3)`
pub fn exponent_k4(c_hat: f64, nu: f64) -> f64 {
    27.0 * c_hat.powi(4) / (4.0 * nu.powi(3))
}

/// `27 C^4 / (16 nu^3)`, the exponent of the radii.
pub fn exponent_k16(c_hat: f64, nu: f64) -> f64 {
    27.0 * c_hat.powi(4) / (16.0 * nu.powi(3))
}

/// Scalar functionals of the stationary `z` on `[-t_back, 0]`, sampled at
/// the solver step. Index 0 is the earliest time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZTrack {
    pub dt: f64,
    pub t: Vec<f64>,
    /// `||z||^2`
    pub z_h2: Vec<f64>,
    /// `||z||_{L4}^4`
    pub z_l4_4: Vec<f64>,
    /// `||alpha z - B(z, z)||_{V'}^2`
    pub g_dual2: Vec<f64>,
}

impl ZTrack {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Samples `z` over `steps` solver steps ending at time 0.
pub fn z_track(model: &Model, path: &NoisePath, icfg: &IntegratorConfig, steps: usize) -> Result<ZTrack> {
    let st = model.stepper(icfg)?;
    let stride = (st.dt / path.dt_noise()).round() as i64;
    let zs = model.z_series(path, &st, -(steps as i64) * stride, steps + 1, icfg.burn_tol)?;
    let alpha = model.config().alpha;
    let nonlinear = model.config().nonlinear;
    let rows = par_map(&zs.z, |z| -> Result<(f64, f64, f64)> {
        let mut g = z.scale(alpha);
        if nonlinear {
            g.axpy(-1.0, &nonlinear_b(model.context(), z)?);
        }
        Ok((z.velocity_energy(), model.context().l4_norm(z)?.powi(4), model.stokes().dual_norm_sq(&g).0))
    });
    let mut track = ZTrack { dt: st.dt, t: Vec::new(), z_h2: Vec::new(), z_l4_4: Vec::new(), g_dual2: Vec::new() };
    for (i, r) in rows.into_iter().enumerate() {
        let (h2, l4, g) = r?;
        track.t.push(zs.time(i));
        track.z_h2.push(h2);
        track.z_l4_4.push(l4);
        track.g_dual2.push(g);
    }
    Ok(track)
}

/// `r11^2` evaluated at track index `e` (the shifted fiber whose time 0 is
/// `t[e]`), or `None` if the track ends before the weight is negligible.
fn r11_sq_at(track: &ZTrack, e: usize, nu_l1: f64, k: f64, three_over_nu: f64, f2: f64) -> Option<f64> {
    let h = track.dt;
    let mut log_w = 0.0;
    let mut w_prev = 1.0;
    let mut src_prev = track.g_dual2[e] + f2;
    let mut integral = 0.0;
    let mut sup = 2.0 * track.z_h2[e];
    for i in (0..e).rev() {
        log_w += -nu_l1 * h + k * 0.5 * h * (track.z_l4_4[i] + track.z_l4_4[i + 1]);
        let w = log_w.exp();
        let src = track.g_dual2[i] + f2;
        integral += 0.5 * h * (src * w + src_prev * w_prev);
        sup = sup.max(2.0 * track.z_h2[i] * w + three_over_nu * integral);
        if w < WEIGHT_CUTOFF {
            return Some(2.0 + sup);
        }
        w_prev = w;
        src_prev = src;
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingRadius {
    pub r11: f64,
    pub r12: f64,
    pub r13: f64,
    pub k: f64,
    /// How far back the scan had to go.
    pub horizon: f64,
}

/// `r11`, `r12 = ||z(0)||` and `r13 = r11 + r12` on `path` with exponent
/// `k`. The backward horizon doubles until the weight falls below
/// [`WEIGHT_CUTOFF`]; past `max_back` the weight is declared
/// non-integrable.
pub fn absorbing_radius(
    model: &Model,
    path: &NoisePath,
    icfg: &IntegratorConfig,
    k: f64,
    max_back: f64,
) -> Result<AbsorbingRadius> {
    let nu_l1 = model.config().nu * model.lambda1();
    let mut back = initial_horizon(nu_l1, icfg.dt, max_back);
    loop {
        let steps = (back / icfg.dt).round() as usize;
        let track = z_track(model, path, icfg, steps)?;
        let e = track.len() - 1;
        if let Some(r11_sq) = r11_sq_at(&track, e, nu_l1, k, 3.0 / model.config().nu, model.forcing_dual2()) {
            let r11 = r11_sq.sqrt();
            let r12 = track.z_h2[e].sqrt();
            return Ok(AbsorbingRadius { r11, r12, r13: r11 + r12, k, horizon: back });
        }
        back = grow(back, max_back, nu_l1)?;
    }
}

fn initial_horizon(nu_l1: f64, dt: f64, max_back: f64) -> f64 {
    let guess = if nu_l1 > 0.0 { 1.5 * (1.0 / WEIGHT_CUTOFF).ln() / nu_l1 } else { max_back };
    (guess.min(max_back) / dt).ceil().max(1.0) * dt
}

fn grow(back: f64, max_back: f64, nu_l1: f64) -> Result<f64> {
    if back >= max_back {
        return Err(Error::NonDissipative(format!(
            "radius weight exp(nu l1 t + K int |z|^4) still above {WEIGHT_CUTOFF:e} after t = -{back} (nu l1 = {nu_l1})"
        )));
    }
    Ok((2.0 * back).min(max_back))
}

/// First `t` on the track grid with
/// `r_d^2 exp(-nu l1 t + k int_{-t}^0 |z|^4) <= 1`.
pub fn absorption_time(track: &ZTrack, r_d: f64, nu_l1: f64, k: f64) -> Option<f64> {
    let e = track.len() - 1;
    let mut log = 2.0 * r_d.ln();
    if log <= 0.0 {
        return Some(0.0);
    }
    for i in (0..e).rev() {
        log += -nu_l1 * track.dt + k * 0.5 * track.dt * (track.z_l4_4[i] + track.z_l4_4[i + 1]);
        if log <= 0.0 {
            return Some(track.t[e] - track.t[i]);
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRSeries {
    pub t: Vec<f64>,
    /// `r(theta_{-t} omega)^2 exp(-nu l1 t + k int_{-t}^0 |z|^4)` for
    /// `r11`, `r12`, `r13`.
    pub values: [Vec<f64>; 3],
    /// Least-squares slope of the log series; `None` when a series hits 0.
    pub slopes: [Option<f64>; 3],
}

/// Class-R decay of the three radii along `t_grid` (positive pullback
/// times, multiples of `dt`).
pub fn class_r_decay(
    model: &Model,
    path: &NoisePath,
    icfg: &IntegratorConfig,
    k: f64,
    t_grid: &[f64],
    max_back: f64,
) -> Result<ClassRSeries> {
    let nu_l1 = model.config().nu * model.lambda1();
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let offsets: Vec<usize> = t_grid.iter().map(|t| (t / icfg.dt).round() as usize).collect();
    let mut back = initial_horizon(nu_l1, icfg.dt, max_back);
    loop {
        let steps = ((t_max + back) / icfg.dt).round() as usize;
        let track = z_track(model, path, icfg, steps)?;
        let end = track.len() - 1;
        let q = crate::stats::cumulative_trapezoid(&track.z_l4_4, track.dt);
        let r11 = par_map(&offsets, |&o| {
            r11_sq_at(&track, end - o, nu_l1, k, 3.0 / model.config().nu, model.forcing_dual2())
        });
        if r11.iter().all(Option::is_some) {
            let mut values = [Vec::new(), Vec::new(), Vec::new()];
            for (&o, r) in offsets.iter().zip(&r11) {
                let e = end - o;
                let weight = (-nu_l1 * track.dt * o as f64 + k * (q[end] - q[e])).exp();
                let r11 = r.unwrap_or_default().sqrt();
                let r12 = track.z_h2[e].sqrt();
                values[0].push(r11 * r11 * weight);
                values[1].push(r12 * r12 * weight);
                values[2].push((r11 + r12).powi(2) * weight);
            }
            let slopes = values.clone().map(|v| {
                if v.len() < 2 || v.iter().any(|&x| !(x > 0.0)) {
                    None
                } else {
                    Some(fit_slope(t_grid, &v.iter().map(|x| x.ln()).collect::<Vec<_>>()))
                }
            });
            return Ok(ClassRSeries { t: t_grid.to_vec(), values, slopes });
        }
        back = grow(back, max_back, nu_l1)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorVariant;
    use crate::solver::ModelConfig;

    #[test]
    fn quiet_radii() {
        let m = Model::new(ModelConfig::quiet(4, 1.0, OperatorVariant::DeltaOnly)).unwrap();
        let icfg = IntegratorConfig::new(0.01);
        let r = absorbing_radius(&m, &m.path(), &icfg, 1.0, 100.0).unwrap();
        assert!((r.r11 * r.r11 - 2.0).abs() < 1e-14);
        assert_eq!(r.r12, 0.0);
        let s = class_r_decay(&m, &m.path(), &icfg, 1.0, &[1.0, 2.0, 3.0], 100.0).unwrap();
        assert!((s.slopes[0].unwrap() + 2.0).abs() < 1e-9);
        assert!(s.slopes[1].is_none());
        assert!(s.values[1].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn undamped_mode_is_non_dissipative() {
        let m = Model::new(ModelConfig::quiet(4, 1.0, OperatorVariant::DeltaPlusTwoRic)).unwrap();
        let err = absorbing_radius(&m, &m.path(), &IntegratorConfig::new(0.1), 1.0, 5.0).unwrap_err();
        assert!(matches!(err, Error::NonDissipative(_)));
    }
}
