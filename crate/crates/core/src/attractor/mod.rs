//! Pullback experiments, absorbing radii, class-R decay and invariant
//! measure sampling.
//!
//! Pullback time `t` means: start at noise index `-t / dt_noise` and
//! integrate along the same path up to time 0, so every fiber is evaluated
//! on one realization of the noise.

mod measure;
mod pullback;
mod radius;

pub use measure::{
    invariant_measure_sample, measure_discrepancy, observables, MeasureEstimate, MeasureMode, Observable, OBSERVABLE_BINS,
};
pub use pullback::{
    absorption_check, ensemble_diameter, nesting_defect, pullback_experiment, AbsorptionReport, AbsorptionRow,
    PullbackPlan, PullbackResult, PullbackRow,
};
pub use radius::{
    absorbing_radius, absorption_time, class_r_decay, exponent_k16, exponent_k4, z_track, AbsorbingRadius, ClassRSeries,
    ZTrack, WEIGHT_CUTOFF,
};

use crate::error::Result;
use crate::noise::NoisePath;
use crate::solver::{Model, Stepper};
use crate::spectrum::ScalarSpectrum;

/// Longest stretch of `z` held in memory at once, in solver steps.
pub(crate) const CHUNK: usize = 2048;

/// Integrates `n` steps from noise index `start_step` with `u = x0`,
/// calling `visit(i, u)` at steps `0, every, 2 every, ...` and at `n`.
/// The stationary `z` is regenerated in chunks, so memory stays bounded.
#[allow(clippy::too_many_arguments)]
pub(crate) fn observe(
    model: &Model,
    st: &Stepper,
    path: &NoisePath,
    x0: &ScalarSpectrum,
    start_step: i64,
    n: usize,
    every: usize,
    burn_tol: f64,
    mut visit: impl FnMut(usize, &ScalarSpectrum) -> Result<()>,
) -> Result<ScalarSpectrum> {
    let stride = (st.dt / path.dt_noise()).round() as i64;
    let every = every.max(1);
    let mut u = x0.clone();
    let mut done = 0;
    visit(0, &u)?;
    while done < n {
        let len = CHUNK.min(n - done);
        let zs = model.z_series(path, st, start_step + done as i64 * stride, len + 1, burn_tol)?;
        let mut v = u.sub(&zs.z[0]);
        for i in 0..len {
            v = model.step_pair(st, &v, &zs.z[i], &zs.z[i + 1], zs.time(i))?;
            let k = done + i + 1;
            if k % every == 0 || k == n {
                visit(k, &v.add(&zs.z[i + 1]))?;
            }
        }
        u = v.add(&zs.z[len]);
        done += len;
    }
    Ok(u)
}
