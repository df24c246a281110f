//! Quadrature grid on the unit sphere.
//!
//! Colatitudes are Gauss-Legendre nodes in `mu = cos(theta)`, longitudes are
//! uniform. A band-limited integrand of total degree `<= 2 n_theta - 1` whose
//! longitudinal wavenumbers stay below `n_phi` is integrated exactly. The
//! poles are never nodes, so the `1/sin(theta)` factors of the surface
//! calculus are always finite.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resolution of a quadrature grid together with the spectral truncation it
/// has to carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub truncation: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl GridSpec {
    /// Smallest grid on which synthesis and analysis of degree `truncation`
    /// are exact.
    pub fn exact(truncation: usize) -> Self {
        Self { truncation, n_theta: truncation + 1, n_phi: 2 * truncation + 1 }
    }

    /// 3/2-rule grid: exact for the projection of quadratic products of
    /// degree-`truncation` fields back onto degree `truncation`.
    pub fn dealiased(truncation: usize) -> Self {
        let n_theta = (3 * (truncation + 1)).div_ceil(2);
        Self { truncation, n_theta, n_phi: fft_friendly(3 * truncation + 1) }
    }

    /// Grid exact for integrals of quartic products (`|u|^4`) of
    /// degree-`truncation` fields.
    pub fn quartic(truncation: usize) -> Self {
        Self { truncation, n_theta: 2 * truncation + 1, n_phi: fft_friendly(4 * truncation + 1) }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.truncation;
        if self.n_theta < l + 1 {
            return Err(Error::GridTooCoarse(format!(
                "n_theta = {} < L + 1 = {}",
                self.n_theta,
                l + 1
            )));
        }
        if self.n_phi < 2 * l + 1 {
            return Err(Error::GridTooCoarse(format!(
                "n_phi = {} < 2L + 1 = {}",
                self.n_phi,
                2 * l + 1
            )));
        }
        Ok(())
    }

    /// Checks the 3/2-rule bounds required for products.
    pub fn validate_dealiased(&self) -> Result<()> {
        self.validate()?;
        let l = self.truncation;
        let min_theta = (3 * (l + 1)).div_ceil(2);
        if self.n_theta < min_theta || self.n_phi < 3 * l + 1 {
            return Err(Error::GridTooCoarse(format!(
                "dealiasing needs n_theta >= {min_theta} and n_phi >= {}, got {} x {}",
                3 * l + 1,
                self.n_theta,
                self.n_phi
            )));
        }
        Ok(())
    }

    /// Highest polynomial degree in `mu` integrated exactly.
    pub fn exactness_degree(&self) -> usize {
        2 * self.n_theta - 1
    }
}

// Rounds up to a size with only small prime factors so the FFT path stays fast.
fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Immutable node, weight, and tangent-basis tables.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    spec: GridSpec,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    weights: Vec<f64>,
    phi: Vec<f64>,
    e_theta: Vec<[f64; 3]>,
    e_phi: Vec<[f64; 3]>,
}

/// Gauss-Legendre nodes on `[-1, 1]` (descending) and weights, by Newton
/// iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl QuadratureGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let (mu, weights) = gauss_legendre(spec.n_theta);
        let theta: Vec<f64> = mu.iter().map(|m| m.acos()).collect();
        let sin_theta: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let phi: Vec<f64> =
            (0..spec.n_phi).map(|k| 2.0 * PI * k as f64 / spec.n_phi as f64).collect();

        let mut e_theta = Vec::with_capacity(spec.n_theta * spec.n_phi);
        let mut e_phi = Vec::with_capacity(spec.n_theta * spec.n_phi);
        for j in 0..spec.n_theta {
            let (ct, st) = (mu[j], sin_theta[j]);
            for &p in &phi {
                let (sp, cp) = p.sin_cos();
                e_theta.push([ct * cp, ct * sp, -st]);
                e_phi.push([-sp, cp, 0.0]);
            }
        }

        let grid = Self { spec, theta, cos_theta: mu, sin_theta, weights, phi, e_theta, e_phi };
        grid.check_basis();
        Ok(grid)
    }

    fn check_basis(&self) {
        for j in 0..self.n_theta() {
            for k in 0..self.n_phi() {
                let idx = j * self.n_phi() + k;
                let x = self.position(j, k);
                let (a, b) = (self.e_theta[idx], self.e_phi[idx]);
                let tol = 1e-14;
                assert!(dot3(a, b).abs() < tol, "e_theta . e_phi != 0 at node ({j},{k})");
                assert!((dot3(a, a) - 1.0).abs() < tol, "|e_theta| != 1 at node ({j},{k})");
                assert!((dot3(b, b) - 1.0).abs() < tol, "|e_phi| != 1 at node ({j},{k})");
                assert!(dot3(a, x).abs() < tol && dot3(b, x).abs() < tol, "basis not tangent");
            }
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn n_theta(&self) -> usize {
        self.spec.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.spec.n_phi
    }

    pub fn len(&self) -> usize {
        self.spec.n_theta * self.spec.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    /// Gauss-Legendre weights in `mu`; they sum to 2.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn e_theta(&self, j: usize, k: usize) -> [f64; 3] {
        self.e_theta[j * self.n_phi() + k]
    }

    pub fn e_phi(&self, j: usize, k: usize) -> [f64; 3] {
        self.e_phi[j * self.n_phi() + k]
    }

    /// Unit position vector of node `(j, k)`.
    pub fn position(&self, j: usize, k: usize) -> [f64; 3] {
        let (sp, cp) = self.phi[k].sin_cos();
        let st = self.sin_theta[j];
        [st * cp, st * sp, self.cos_theta[j]]
    }

    /// Longitude quadrature weight `2 pi / n_phi`.
    pub fn dphi(&self) -> f64 {
        2.0 * PI / self.n_phi() as f64
    }

    pub fn integrate_scalar(&self, values: &ScalarFieldGrid) -> Result<f64> {
        self.check_len(values.values.len())?;
        Ok(self.integrate_raw(&values.values))
    }

    /// Integral of `u . v` over the sphere (the L2 inner product of tangent
    /// fields).
    pub fn integrate_dot(&self, u: &VectorFieldGrid, v: &VectorFieldGrid) -> Result<f64> {
        self.check_len(u.theta.len())?;
        self.check_len(v.theta.len())?;
        self.check_len(u.phi.len())?;
        self.check_len(v.phi.len())?;
        let n_phi = self.n_phi();
        let mut total = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            let row = j * n_phi..(j + 1) * n_phi;
            let s: f64 = u.theta[row.clone()]
                .iter()
                .zip(&v.theta[row.clone()])
                .zip(u.phi[row.clone()].iter().zip(&v.phi[row]))
                .map(|((a, b), (c, d))| a * b + c * d)
                .sum();
            total += w * s;
        }
        Ok(total * self.dphi())
    }

    pub(crate) fn integrate_raw(&self, values: &[f64]) -> f64 {
        let n_phi = self.n_phi();
        let total: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * values[j * n_phi..(j + 1) * n_phi].iter().sum::<f64>())
            .sum();
        total * self.dphi()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got });
        }
        Ok(())
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Real scalar values at every node, row-major in `(theta, phi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFieldGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub values: Vec<f64>,
}

impl ScalarFieldGrid {
    pub fn zeros(grid: &QuadratureGrid) -> Self {
        Self { n_theta: grid.n_theta(), n_phi: grid.n_phi(), values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &QuadratureGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &t in grid.theta() {
            for &p in grid.phi() {
                values.push(f(t, p));
            }
        }
        Self { n_theta: grid.n_theta(), n_phi: grid.n_phi(), values }
    }

    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n_phi + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Self { values, ..*self }
    }
}

/// Tangent vector field stored as `(u_theta, u_phi)` components in the moving
/// basis `(e_theta, e_phi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl VectorFieldGrid {
    pub fn zeros(grid: &QuadratureGrid) -> Self {
        Self {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            theta: vec![0.0; grid.len()],
            phi: vec![0.0; grid.len()],
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            theta: self.theta.iter().map(|v| c * v).collect(),
            phi: self.phi.iter().map(|v| c * v).collect(),
            ..*self
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            theta: self.theta.iter().zip(&other.theta).map(|(a, b)| a + b).collect(),
            phi: self.phi.iter().zip(&other.phi).map(|(a, b)| a + b).collect(),
            ..*self
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Pointwise `x_hat x u`, which rotates a tangent vector by +90 degrees:
    /// `(u_theta, u_phi) -> (-u_phi, u_theta)`.
    pub fn rotate(&self) -> Self {
        Self { theta: self.phi.iter().map(|v| -v).collect(), phi: self.theta.clone(), ..*self }
    }

    /// Pointwise product with a scalar field.
    pub fn scale_by(&self, f: &ScalarFieldGrid) -> Self {
        Self {
            theta: self.theta.iter().zip(&f.values).map(|(a, b)| a * b).collect(),
            phi: self.phi.iter().zip(&f.values).map(|(a, b)| a * b).collect(),
            ..*self
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.theta.iter().chain(&self.phi).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise `|u|^2`.
    pub fn magnitude_sq(&self) -> ScalarFieldGrid {
        ScalarFieldGrid {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            values: self.theta.iter().zip(&self.phi).map(|(a, b)| a * a + b * b).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_zero_rule_is_the_equator() {
        let g = QuadratureGrid::new(GridSpec { truncation: 0, n_theta: 1, n_phi: 1 }).unwrap();
        assert!((g.theta()[0] - PI / 2.0).abs() < 1e-15);
        assert!((g.weights()[0] - 2.0).abs() < 1e-15);
        let one = ScalarFieldGrid::from_fn(&g, |_, _| 1.0);
        assert!((g.integrate_scalar(&one).unwrap() - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn total_measure_and_cos_squared() {
        let g = QuadratureGrid::new(GridSpec { truncation: 21, n_theta: 22, n_phi: 43 }).unwrap();
        let one = ScalarFieldGrid::from_fn(&g, |_, _| 1.0);
        let area = g.integrate_scalar(&one).unwrap();
        assert!((area - 4.0 * PI).abs() / (4.0 * PI) < 1e-13);
        let c2 = ScalarFieldGrid::from_fn(&g, |t, _| t.cos().powi(2));
        assert!((g.integrate_scalar(&c2).unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_polynomials_integrate_to_zero() {
        let l = 21;
        let g = QuadratureGrid::new(GridSpec::exact(l)).unwrap();
        for deg in 1..=2 * l + 1 {
            let f = ScalarFieldGrid::from_fn(&g, |t, _| legendre_with_derivative(deg, t.cos()).0);
            assert!(g.integrate_scalar(&f).unwrap().abs() < 1e-12, "P_{deg}");
        }
    }

    #[test]
    fn rejects_coarse_grids() {
        assert!(QuadratureGrid::new(GridSpec { truncation: 5, n_theta: 5, n_phi: 11 }).is_err());
        assert!(QuadratureGrid::new(GridSpec { truncation: 5, n_theta: 6, n_phi: 10 }).is_err());
        let spec = GridSpec { truncation: 5, n_theta: 6, n_phi: 11 };
        assert!(spec.validate().is_ok());
        assert!(spec.validate_dealiased().is_err());
        assert!(GridSpec::dealiased(21).validate_dealiased().is_ok());
        assert!(GridSpec::quartic(21).validate_dealiased().is_ok());
    }

    #[test]
    fn dot_of_zero_is_zero_and_length_is_checked() {
        let g = QuadratureGrid::new(GridSpec::exact(4)).unwrap();
        let z = VectorFieldGrid::zeros(&g);
        let mut v = VectorFieldGrid::zeros(&g);
        v.theta.iter_mut().for_each(|x| *x = 1.0);
        assert_eq!(g.integrate_dot(&z, &v).unwrap(), 0.0);
        let bad = ScalarFieldGrid { n_theta: 1, n_phi: 1, values: vec![1.0] };
        assert!(matches!(g.integrate_scalar(&bad), Err(Error::DimensionMismatch { .. })));
    }
}
