//! Scalar spherical-harmonic transforms and the surface vector calculus.
//!
//! Tangent fields are decomposed as `u = Curl psi + grad chi` with
//! `Curl f = -x_hat x grad f`, so in the moving basis
//!
//! ```text
//! (Curl f)_theta =  (1/sin theta) df/dphi      (grad f)_theta = df/dtheta
//! (Curl f)_phi   = -df/dtheta                  (grad f)_phi   = (1/sin theta) df/dphi
//! ```
//!
//! With this orientation `curl_n Curl psi = -Laplacian psi` and
//! `div Curl psi = 0`. All derivatives come from the tabulated Legendre
//! derivatives and `i m` multipliers; analysis of vector fields uses the
//! adjoint identities `(u, Curl Y) = (curl_n u, Y)` and
//! `(u, grad Y) = -(div u, Y)`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, QuadratureGrid, ScalarFieldGrid, VectorFieldGrid};
use crate::legendre::LegendreTable;
use crate::spectrum::{eigenvalue, ScalarSpectrum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How longitude sums are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LongitudeMethod {
    #[default]
    Fft,
    Direct,
}

/// Which Legendre table a meridional sum uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Table {
    P,
    DTheta,
    D2Theta,
}

/// Transform engine for one truncation on one quadrature grid.
#[derive(Clone)]
pub struct SphereTransform {
    truncation: usize,
    grid: QuadratureGrid,
    table: LegendreTable,
    method: LongitudeMethod,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // cos/sin of m * phi_k for the direct path, m-major
    trig: Vec<(f64, f64)>,
}

impl std::fmt::Debug for SphereTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SphereTransform")
            .field("truncation", &self.truncation)
            .field("grid", &self.grid.spec())
            .field("method", &self.method)
            .finish()
    }
}

impl SphereTransform {
    pub fn new(spec: GridSpec) -> Result<Self> {
        Self::with_method(spec, LongitudeMethod::Fft)
    }

    pub fn with_method(spec: GridSpec, method: LongitudeMethod) -> Result<Self> {
        let grid = QuadratureGrid::new(spec)?;
        let table = LegendreTable::new(spec.truncation, grid.cos_theta(), grid.sin_theta());
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(spec.n_phi);
        let inverse = planner.plan_fft_inverse(spec.n_phi);
        let mut trig = Vec::with_capacity((spec.truncation + 1) * spec.n_phi);
        for m in 0..=spec.truncation {
            for &p in grid.phi() {
                // reduce m*k mod n_phi so the angle is computed exactly the same
                // way as the FFT twiddles would see it
                let (s, c) = (m as f64 * p).sin_cos();
                trig.push((c, s));
            }
        }
        Ok(Self { truncation: spec.truncation, grid, table, method, forward, inverse, trig })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn table(&self) -> &LegendreTable {
        &self.table
    }

    #[doc(hidden)]
    pub fn table_mut(&mut self) -> &mut LegendreTable {
        &mut self.table
    }

    pub fn method(&self) -> LongitudeMethod {
        self.method
    }

    fn n_theta(&self) -> usize {
        self.grid.n_theta()
    }

    fn n_phi(&self) -> usize {
        self.grid.n_phi()
    }

    fn check_spec(&self, spec: &ScalarSpectrum) -> Result<()> {
        if spec.truncation() > self.truncation {
            return Err(Error::TruncationMismatch {
                expected: self.truncation,
                got: spec.truncation(),
            });
        }
        Ok(())
    }

    fn check_grid_len(&self, n: usize) -> Result<()> {
        if n != self.grid.len() {
            return Err(Error::DimensionMismatch { expected: self.grid.len(), got: n });
        }
        Ok(())
    }

    // G[m][j] = sum_l c_lm T_lm(theta_j) for m >= 0
    fn meridional_sum(&self, spec: &ScalarSpectrum, which: Table) -> Vec<Complex64> {
        let nt = self.n_theta();
        let lmax = spec.truncation().min(self.truncation);
        let mut out = vec![ZERO; (self.truncation + 1) * nt];
        let (cos_t, sin_t) = (self.grid.cos_theta(), self.grid.sin_theta());
        for m in 0..=lmax {
            let row = &mut out[m * nt..(m + 1) * nt];
            for l in m..=lmax {
                let c = spec.get(l, m as i64);
                if c == ZERO {
                    continue;
                }
                match which {
                    Table::P => {
                        for (g, p) in row.iter_mut().zip(self.table.p(l, m)) {
                            *g += c * *p;
                        }
                    }
                    Table::DTheta => {
                        for (g, p) in row.iter_mut().zip(self.table.dp(l, m)) {
                            *g += c * *p;
                        }
                    }
                    Table::D2Theta => {
                        // Legendre equation:
                        // P'' = -cot(theta) P' - (l(l+1) - m^2 / sin^2 theta) P
                        let (p, dp) = (self.table.p(l, m), self.table.dp(l, m));
                        let (lam, m2) = (eigenvalue(l), (m * m) as f64);
                        for j in 0..nt {
                            let s = sin_t[j];
                            let d2 = -cos_t[j] / s * dp[j] - (lam - m2 / (s * s)) * p[j];
                            row[j] += c * d2;
                        }
                    }
                }
            }
        }
        out
    }

    // Real field from m >= 0 coefficients of a real expansion: each row is
    // Re[ sum_m c_m g_m e^{i m phi} ] with c_0 = 1, c_m = 2.
    fn synth_rows(&self, g: &[Complex64]) -> Vec<f64> {
        let (nt, np, lmax) = (self.n_theta(), self.n_phi(), self.truncation);
        let mut out = vec![0.0; nt * np];
        match self.method {
            LongitudeMethod::Fft => {
                let mut buf = vec![ZERO; np];
                let mut scratch = vec![ZERO; self.inverse.get_inplace_scratch_len()];
                for j in 0..nt {
                    buf.iter_mut().for_each(|b| *b = ZERO);
                    buf[0] = Complex64::new(g[j].re, 0.0);
                    for m in 1..=lmax {
                        buf[m] = g[m * nt + j] * 2.0;
                    }
                    self.inverse.process_with_scratch(&mut buf, &mut scratch);
                    for (o, b) in out[j * np..(j + 1) * np].iter_mut().zip(&buf) {
                        *o = b.re;
                    }
                }
            }
            LongitudeMethod::Direct => {
                for j in 0..nt {
                    let row = &mut out[j * np..(j + 1) * np];
                    for (k, o) in row.iter_mut().enumerate() {
                        let mut acc = g[j].re;
                        for m in 1..=lmax {
                            let (c, s) = self.trig[m * np + k];
                            let gm = g[m * nt + j];
                            acc += 2.0 * (gm.re * c - gm.im * s);
                        }
                        *o = acc;
                    }
                }
            }
        }
        out
    }

    // F[m][j] = dphi * sum_k f(j, k) e^{-i m phi_k} for 0 <= m <= L
    fn analyze_rows(&self, values: &[f64]) -> Vec<Complex64> {
        let (nt, np, lmax) = (self.n_theta(), self.n_phi(), self.truncation);
        let dphi = self.grid.dphi();
        let mut out = vec![ZERO; (lmax + 1) * nt];
        match self.method {
            LongitudeMethod::Fft => {
                let mut buf = vec![ZERO; np];
                let mut scratch = vec![ZERO; self.forward.get_inplace_scratch_len()];
                for j in 0..nt {
                    for (b, v) in buf.iter_mut().zip(&values[j * np..(j + 1) * np]) {
                        *b = Complex64::new(*v, 0.0);
                    }
                    self.forward.process_with_scratch(&mut buf, &mut scratch);
                    for m in 0..=lmax {
                        out[m * nt + j] = buf[m] * dphi;
                    }
                }
            }
            LongitudeMethod::Direct => {
                for j in 0..nt {
                    let row = &values[j * np..(j + 1) * np];
                    for m in 0..=lmax {
                        let mut acc = ZERO;
                        for (k, v) in row.iter().enumerate() {
                            let (c, s) = self.trig[m * np + k];
                            acc += Complex64::new(v * c, -v * s);
                        }
                        out[m * nt + j] = acc * dphi;
                    }
                }
            }
        }
        out
    }

    // coefficient(l, m) = sum_j w_j sum_t T_t,lm(j) F_t[m][j], mirrored to m < 0
    fn project(&self, terms: &[(&[Complex64], Table, Weight)], lmax: usize) -> ScalarSpectrum {
        let nt = self.n_theta();
        let w = self.grid.weights();
        let sin_t = self.grid.sin_theta();
        let mut out = ScalarSpectrum::zeros(lmax);
        for m in 0..=lmax.min(self.truncation) {
            let im = Complex64::new(0.0, m as f64);
            for l in m..=lmax.min(self.truncation) {
                let mut acc = ZERO;
                for (f, table, weight) in terms {
                    let row = &f[m * nt..(m + 1) * nt];
                    let t = match table {
                        Table::P => self.table.p(l, m),
                        Table::DTheta => self.table.dp(l, m),
                        Table::D2Theta => unreachable!("not used in analysis"),
                    };
                    let mut s = ZERO;
                    match weight {
                        Weight::One => {
                            for j in 0..nt {
                                s += row[j] * (w[j] * t[j]);
                            }
                        }
                        Weight::MinusIm => {
                            let mut part = ZERO;
                            for j in 0..nt {
                                part += row[j] * (w[j] * t[j] / sin_t[j]);
                            }
                            s = -im * part;
                        }
                        Weight::Neg => {
                            for j in 0..nt {
                                s -= row[j] * (w[j] * t[j]);
                            }
                        }
                    }
                    acc += s;
                }
                out.set(l, m as i64, acc);
            }
        }
        out.enforce_real();
        out
    }

    /// Synthesis of a real scalar field.
    pub fn synth_scalar(&self, spec: &ScalarSpectrum) -> Result<ScalarFieldGrid> {
        self.check_spec(spec)?;
        let g = self.meridional_sum(spec, Table::P);
        Ok(self.field(self.synth_rows(&g)))
    }

    /// Synthesis without assuming conjugate symmetry; returns real and
    /// imaginary parts. Uses direct longitude sums over all `m`.
    pub fn synth_complex(&self, spec: &ScalarSpectrum) -> Result<(ScalarFieldGrid, ScalarFieldGrid)> {
        self.check_spec(spec)?;
        let (nt, np) = (self.n_theta(), self.n_phi());
        let lmax = spec.truncation();
        let mut re = vec![0.0; nt * np];
        let mut imag = vec![0.0; nt * np];
        for j in 0..nt {
            for k in 0..np {
                let phi = self.grid.phi()[k];
                let mut acc = ZERO;
                for l in 0..=lmax {
                    for m in -(l as i64)..=l as i64 {
                        let c = spec.get(l, m);
                        if c == ZERO {
                            continue;
                        }
                        let ma = m.unsigned_abs() as usize;
                        let mut p = self.table.p(l, ma)[j];
                        if m < 0 && ma % 2 == 1 {
                            p = -p;
                        }
                        acc += c * p * Complex64::from_polar(1.0, m as f64 * phi);
                    }
                }
                re[j * np + k] = acc.re;
                imag[j * np + k] = acc.im;
            }
        }
        Ok((self.field(re), self.field(imag)))
    }

    pub fn analyze_scalar(&self, field: &ScalarFieldGrid) -> Result<ScalarSpectrum> {
        self.check_grid_len(field.values.len())?;
        let f = self.analyze_rows(&field.values);
        Ok(self.project(&[(&f, Table::P, Weight::One)], self.truncation))
    }

    /// `grad f` in the moving basis.
    pub fn grad(&self, spec: &ScalarSpectrum) -> Result<VectorFieldGrid> {
        self.vector_from_potentials(None, Some(spec))
    }

    /// `Curl f = -x_hat x grad f`.
    pub fn curl_of_scalar(&self, spec: &ScalarSpectrum) -> Result<VectorFieldGrid> {
        self.vector_from_potentials(Some(spec), None)
    }

    /// `u = Curl stream + grad potential`; either part may be absent.
    pub fn vector_from_potentials(
        &self,
        stream: Option<&ScalarSpectrum>,
        potential: Option<&ScalarSpectrum>,
    ) -> Result<VectorFieldGrid> {
        let nt = self.n_theta();
        let n = (self.truncation + 1) * nt;
        let mut gt = vec![ZERO; n];
        let mut gp = vec![ZERO; n];
        let over_sin = |g: &mut [Complex64], src: &[Complex64], sign: f64| {
            let sin_t = self.grid.sin_theta();
            for m in 0..=self.truncation {
                let im = Complex64::new(0.0, sign * m as f64);
                for j in 0..nt {
                    g[m * nt + j] += im * src[m * nt + j] / sin_t[j];
                }
            }
        };
        if let Some(psi) = stream {
            self.check_spec(psi)?;
            let p = self.meridional_sum(psi, Table::P);
            let d = self.meridional_sum(psi, Table::DTheta);
            over_sin(&mut gt, &p, 1.0);
            gp.iter_mut().zip(&d).for_each(|(a, b)| *a -= b);
        }
        if let Some(chi) = potential {
            self.check_spec(chi)?;
            let p = self.meridional_sum(chi, Table::P);
            let d = self.meridional_sum(chi, Table::DTheta);
            gt.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
            over_sin(&mut gp, &p, 1.0);
        }
        Ok(VectorFieldGrid {
            n_theta: nt,
            n_phi: self.n_phi(),
            theta: self.synth_rows(&gt),
            phi: self.synth_rows(&gp),
        })
    }

    /// Spectrum of `curl_n u = x . (curl u)`, from `(curl_n u, Y) = (u, Curl Y)`.
    pub fn curln(&self, u: &VectorFieldGrid) -> Result<ScalarSpectrum> {
        self.check_grid_len(u.theta.len())?;
        self.check_grid_len(u.phi.len())?;
        let ft = self.analyze_rows(&u.theta);
        let fp = self.analyze_rows(&u.phi);
        Ok(self.project(
            &[(&ft, Table::P, Weight::MinusIm), (&fp, Table::DTheta, Weight::Neg)],
            self.truncation,
        ))
    }

    /// Spectrum of `div u`, from `(div u, Y) = -(u, grad Y)`.
    pub fn divergence_spectrum(&self, u: &VectorFieldGrid) -> Result<ScalarSpectrum> {
        self.check_grid_len(u.theta.len())?;
        self.check_grid_len(u.phi.len())?;
        let ft = self.analyze_rows(&u.theta);
        let fp = self.analyze_rows(&u.phi);
        let inner = self.project(
            &[(&ft, Table::DTheta, Weight::One), (&fp, Table::P, Weight::MinusIm)],
            self.truncation,
        );
        Ok(inner.scale(-1.0))
    }

    pub fn divergence(&self, u: &VectorFieldGrid) -> Result<ScalarFieldGrid> {
        let d = self.divergence_spectrum(u)?;
        self.synth_scalar(&d)
    }

    /// Hodge decomposition `u = Curl stream + grad potential` (the harmonic
    /// part is trivial on the sphere).
    pub fn helmholtz(&self, u: &VectorFieldGrid) -> Result<(ScalarSpectrum, ScalarSpectrum)> {
        let zeta = self.curln(u)?;
        let div = self.divergence_spectrum(u)?;
        let inv = |l: usize| if l == 0 { 0.0 } else { 1.0 / eigenvalue(l) };
        Ok((zeta.scale_degrees(inv), div.scale_degrees(|l| -inv(l))))
    }

    /// Leray projection: stream function of the divergence-free part and the
    /// `L2` norm of the discarded gradient part.
    pub fn hodge_project(&self, u: &VectorFieldGrid) -> Result<(ScalarSpectrum, f64)> {
        let (stream, potential) = self.helmholtz(u)?;
        let residual = potential.velocity_energy().sqrt();
        Ok((stream, residual))
    }

    /// Inverse Laplacian on `l >= 1`; the mean is dropped.
    pub fn inverse_laplacian(spec: &ScalarSpectrum) -> ScalarSpectrum {
        spec.scale_degrees(|l| if l == 0 { 0.0 } else { -1.0 / eigenvalue(l) })
    }

    pub fn laplacian(spec: &ScalarSpectrum) -> ScalarSpectrum {
        spec.scale_degrees(|l| -eigenvalue(l))
    }

    /// Fields needed by the covariant-derivative form: components and their
    /// theta/phi derivatives for `u = Curl stream + grad potential`.
    pub fn vector_with_derivatives(
        &self,
        stream: &ScalarSpectrum,
        potential: &ScalarSpectrum,
    ) -> Result<VectorJet> {
        self.check_spec(stream)?;
        self.check_spec(potential)?;
        let nt = self.n_theta();
        let (cos_t, sin_t) = (self.grid.cos_theta(), self.grid.sin_theta());
        let sums = |s: &ScalarSpectrum| {
            (
                self.meridional_sum(s, Table::P),
                self.meridional_sum(s, Table::DTheta),
                self.meridional_sum(s, Table::D2Theta),
            )
        };
        let (psi, psi_t, psi_tt) = sums(stream);
        let (chi, chi_t, chi_tt) = sums(potential);
        let n = psi.len();
        let mut comps: [Vec<Complex64>; 6] = std::array::from_fn(|_| vec![ZERO; n]);
        for m in 0..=self.truncation {
            let im = Complex64::new(0.0, m as f64);
            let m2 = (m * m) as f64;
            for j in 0..nt {
                let i = m * nt + j;
                let (s, c) = (sin_t[j], cos_t[j]);
                // u_theta = psi_phi / s + chi_theta
                comps[0][i] = im * psi[i] / s + chi_t[i];
                // u_phi = -psi_theta + chi_phi / s
                comps[1][i] = -psi_t[i] + im * chi[i] / s;
                // d_theta u_theta = -c/s^2 psi_phi + psi_theta_phi / s + chi_theta_theta
                comps[2][i] = -c / (s * s) * im * psi[i] + im * psi_t[i] / s + chi_tt[i];
                // d_phi u_theta = psi_phi_phi / s + chi_theta_phi
                comps[3][i] = -m2 * psi[i] / s + im * chi_t[i];
                // d_theta u_phi = -psi_theta_theta - c/s^2 chi_phi + chi_theta_phi / s
                comps[4][i] = -psi_tt[i] - c / (s * s) * im * chi[i] + im * chi_t[i] / s;
                // d_phi u_phi = -psi_theta_phi + chi_phi_phi / s
                comps[5][i] = -im * psi_t[i] - m2 * chi[i] / s;
            }
        }
        let [a, b, c, d, e, f] = comps.map(|g| self.synth_rows(&g));
        Ok(VectorJet { u_theta: a, u_phi: b, dtheta_u_theta: c, dphi_u_theta: d, dtheta_u_phi: e, dphi_u_phi: f })
    }

    fn field(&self, values: Vec<f64>) -> ScalarFieldGrid {
        ScalarFieldGrid { n_theta: self.n_theta(), n_phi: self.n_phi(), values }
    }
}

#[derive(Clone, Copy, Debug)]
enum Weight {
    One,
    Neg,
    // multiply by -i m / sin(theta)
    MinusIm,
}

/// Components and first derivatives of a tangent field on the grid.
#[derive(Clone, Debug)]
pub struct VectorJet {
    pub u_theta: Vec<f64>,
    pub u_phi: Vec<f64>,
    pub dtheta_u_theta: Vec<f64>,
    pub dphi_u_theta: Vec<f64>,
    pub dtheta_u_phi: Vec<f64>,
    pub dphi_u_phi: Vec<f64>,
}

/// The three transforms a simulation needs: exact (truncation grid),
/// dealiased (quadratic products), and quartic (`L4` norms).
#[derive(Clone, Debug)]
pub struct SphereContext {
    truncation: usize,
    exact: SphereTransform,
    product: SphereTransform,
    quartic: SphereTransform,
    dealias: bool,
}

impl SphereContext {
    pub fn new(truncation: usize) -> Result<Self> {
        Self::with_options(truncation, true, LongitudeMethod::Fft)
    }

    /// With `dealias = false`, products are evaluated on the truncation grid
    /// (aliased; for speed studies only).
    pub fn with_options(truncation: usize, dealias: bool, method: LongitudeMethod) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::InvalidConfig(
                "truncation L = 0 carries no divergence-free modes".into(),
            ));
        }
        let exact = SphereTransform::with_method(GridSpec::exact(truncation), method)?;
        let product = if dealias {
            SphereTransform::with_method(GridSpec::dealiased(truncation), method)?
        } else {
            exact.clone()
        };
        let quartic = SphereTransform::with_method(GridSpec::quartic(truncation), method)?;
        Ok(Self { truncation, exact, product, quartic, dealias })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn exact(&self) -> &SphereTransform {
        &self.exact
    }

    #[doc(hidden)]
    pub fn exact_mut(&mut self) -> &mut SphereTransform {
        &mut self.exact
    }

    pub fn product(&self) -> &SphereTransform {
        &self.product
    }

    pub fn quartic(&self) -> &SphereTransform {
        &self.quartic
    }

    /// `||u||_{L4}` for `u = Curl stream`, integrated exactly on the quartic
    /// grid.
    pub fn l4_norm(&self, stream: &ScalarSpectrum) -> Result<f64> {
        let u = self.quartic.curl_of_scalar(stream)?;
        let m2 = u.magnitude_sq();
        let q = m2.mul(&m2);
        Ok(self.quartic.grid().integrate_raw(&q.values).max(0.0).powf(0.25))
    }

    pub fn norms(&self, stream: &ScalarSpectrum) -> Result<Norms> {
        let l2_sq = stream.velocity_energy();
        let enstrophy = stream.enstrophy();
        Ok(Norms {
            l2: l2_sq.sqrt(),
            v: (l2_sq + enstrophy).sqrt(),
            l4: self.l4_norm(stream)?,
            enstrophy,
        })
    }
}

/// Norms of a divergence-free field `u = Curl psi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    /// `||u||_{L2}`
    pub l2: f64,
    /// `(||u||^2 + ||curl_n u||^2)^(1/2)`
    pub v: f64,
    pub l4: f64,
    /// `||curl_n u||^2`
    pub enstrophy: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::rng::CounterRng;
    use std::f64::consts::PI;

    fn rand_spec(l: usize, seed: u64) -> ScalarSpectrum {
        let mut d = CounterRng::new(seed, 0).stream(9);
        ScalarSpectrum::random(l, l, 0.5, &mut d)
    }

    #[test]
    fn y00_is_constant() {
        let t = SphereTransform::new(GridSpec::exact(4)).unwrap();
        let s = ScalarSpectrum::single(4, 0, 0, Complex64::new(1.0, 0.0));
        let f = t.synth_scalar(&s).unwrap();
        for v in &f.values {
            assert!((v - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_both_longitude_paths() {
        let l = 21;
        let fast = SphereTransform::new(GridSpec::exact(l)).unwrap();
        let slow = SphereTransform::with_method(GridSpec::exact(l), LongitudeMethod::Direct).unwrap();
        let s = rand_spec(l, 1);
        let a = fast.synth_scalar(&s).unwrap();
        let b = slow.synth_scalar(&s).unwrap();
        let diff = a.values.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-13, "fft vs direct synthesis {diff}");
        let back_fast = fast.analyze_scalar(&a).unwrap();
        let back_slow = slow.analyze_scalar(&a).unwrap();
        assert!(back_fast.max_abs_diff(&back_slow) < 1e-13);
        assert!(back_fast.max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn real_and_complex_synthesis_agree() {
        let t = SphereTransform::new(GridSpec::exact(8)).unwrap();
        let s = rand_spec(8, 4);
        let (re, im) = t.synth_complex(&s).unwrap();
        let f = t.synth_scalar(&s).unwrap();
        assert!(im.max_abs() < 1e-13);
        let d = re.values.iter().zip(&f.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(d < 1e-13);
    }

    #[test]
    fn gradient_of_cos_theta() {
        let l = 5;
        let t = SphereTransform::new(GridSpec::exact(l)).unwrap();
        // cos(theta) = sqrt(4 pi / 3) Y_10
        let s = ScalarSpectrum::single(l, 1, 0, Complex64::new((4.0 * PI / 3.0).sqrt(), 0.0));
        let g = t.grad(&s).unwrap();
        for j in 0..t.grid().n_theta() {
            for k in 0..t.grid().n_phi() {
                let i = j * t.grid().n_phi() + k;
                assert!((g.theta[i] + t.grid().sin_theta()[j]).abs() < 1e-14);
                assert!(g.phi[i].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let t = SphereTransform::new(GridSpec::exact(3)).unwrap();
        let s = ScalarSpectrum::single(3, 0, 0, Complex64::new(2.0, 0.0));
        assert!(t.grad(&s).unwrap().max_abs() < 1e-15);
        assert!(t.curl_of_scalar(&s).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn helmholtz_separates_parts() {
        let l = 12;
        let t = SphereTransform::new(GridSpec::dealiased(l)).unwrap();
        let psi = rand_spec(l, 2);
        let chi = rand_spec(l, 3);
        let u = t.vector_from_potentials(Some(&psi), Some(&chi)).unwrap();
        let (p, c) = t.helmholtz(&u).unwrap();
        assert!(p.max_abs_diff(&psi) < 1e-12);
        assert!(c.max_abs_diff(&chi) < 1e-12);
    }

    #[test]
    fn mismatched_truncation_is_rejected() {
        let t = SphereTransform::new(GridSpec::exact(4)).unwrap();
        assert!(t.synth_scalar(&ScalarSpectrum::zeros(5)).is_err());
        assert!(SphereContext::new(0).is_err());
    }
}
