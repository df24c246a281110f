//! Driving noise: the counter-based increment store, the smoothing operator
//! `G = sigma A^{-s}`, and the stationary Ornstein-Uhlenbeck process.
//!
//! `G` acts diagonally on velocity coefficients `u_lm = sqrt(l(l+1)) psi_lm`
//! with gain `g_l = sigma (l(l+1))^{-s}`. All states are stored as stream
//! functions; the stream gain is `g_l / sqrt(l(l+1))`.

mod ou;
mod path;
mod radonify;
pub mod rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::eigenvalue;

pub use ou::{
    alpha_threshold_probe, gaussian_fourth_moment_h, monte_carlo_x4, ou_step, sample_stationary, sln_time_average,
    stationary_series, AlphaRow, AlphaTable, OuParams, OuState, SlnAverage, ZSeries, DEFAULT_BURN_TOL,
};
pub(crate) use ou::steps_for;
pub use path::{shift_path, NoisePath, PathMetadata};
pub use radonify::{radonifying_sum, RadonifyReport, BLOCK_RATIO_THRESHOLD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub s: f64,
    /// Defaults to 0 so run configs can inherit the model truncation.
    #[serde(rename = "L", default)]
    pub truncation: usize,
    #[serde(default)]
    pub seed: u64,
    pub dt_noise: f64,
    /// Permits `s <= 1/2`, for demonstrating the divergent regime.
    #[serde(default)]
    pub allow_non_radonifying: bool,
}

impl NoiseSpec {
    pub fn new(sigma: f64, s: f64, truncation: usize, seed: u64, dt_noise: f64) -> Self {
        Self { sigma, s, truncation, seed, dt_noise, allow_non_radonifying: false }
    }

    /// Velocity gain `g_l`.
    pub fn gain(&self, l: usize) -> f64 {
        if l == 0 {
            0.0
        } else {
            self.sigma * eigenvalue(l).powf(-self.s)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.dt_noise > 0.0 && self.dt_noise.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt_noise must be > 0, got {}", self.dt_noise)));
        }
        if self.s <= 0.5 && !self.allow_non_radonifying {
            return Err(Error::InvalidConfig(format!(
                "smoothness s = {} <= 1/2 does not give a radonifying noise; set allow_non_radonifying to run it anyway",
                self.s
            )));
        }
        Ok(())
    }

    /// Warnings that `--strict` turns into errors.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.s <= 0.5 {
            w.push(format!("noise smoothness s = {} is not radonifying", self.s));
        }
        w
    }
}
