//! Spectral Galerkin simulator for the stochastic Navier-Stokes equations
//! on the unit sphere.
//!
//! Divergence-free velocity fields are stored as stream-function spectra
//! (`u = Curl psi`), so incompressibility holds by construction. The
//! stochastic equation is shifted by a stationary Ornstein-Uhlenbeck process
//! `z` to a random ODE for `v = u - z`, which is integrated with an
//! exponential time-differencing scheme along reproducible noise paths.

pub mod attractor;
pub mod error;
pub mod grid;
pub mod legendre;
pub mod noise;
pub mod operators;
pub mod par;
pub mod solver;
pub mod spectrum;
pub mod stats;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{GridSpec, QuadratureGrid, ScalarFieldGrid, VectorFieldGrid};
pub use spectrum::ScalarSpectrum;
pub use transform::{SphereContext, SphereTransform};
