//! Fully normalized associated Legendre functions (Condon-Shortley phase
//! included) tabulated at the Gauss-Legendre colatitudes.
//!
//! Normalization: `Y_lm(theta, phi) = P_lm(cos theta) e^{i m phi}` has unit
//! `L2` norm on the sphere, i.e. `2 pi int_{-1}^{1} P_lm(mu)^2 dmu = 1`.

use std::f64::consts::PI;

/// `P_lm` and `dP_lm/dtheta` for `0 <= m <= l <= L` at a set of colatitudes.
#[derive(Clone, Debug)]
pub struct LegendreTable {
    truncation: usize,
    n_theta: usize,
    // runs of n_theta values ordered by (m, l), with l in m..=L+1
    p: Vec<f64>,
    dp: Vec<f64>,
}

#[inline]
fn eps(l: usize, m: usize) -> f64 {
    if l < m || l == 0 {
        return 0.0;
    }
    let (l, m) = (l as f64, m as f64);
    ((l * l - m * m) / (4.0 * l * l - 1.0)).sqrt()
}

/// Normalized `P_lm(cos theta)` for `l` in `m..=lmax` at a single node.
pub fn column(lmax: usize, m: usize, cos_theta: f64, sin_theta: f64) -> Vec<f64> {
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        pmm *= -((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * sin_theta;
    }
    let mut out = Vec::with_capacity(lmax + 1 - m.min(lmax + 1));
    if m > lmax {
        return out;
    }
    out.push(pmm);
    if lmax == m {
        return out;
    }
    out.push((2.0 * m as f64 + 3.0).sqrt() * cos_theta * pmm);
    for l in m + 2..=lmax {
        let (lf, mf) = (l as f64, m as f64);
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let n = out.len();
        out.push(a * (cos_theta * out[n - 1] - b * out[n - 2]));
    }
    out
}

impl LegendreTable {
    pub fn new(truncation: usize, cos_theta: &[f64], sin_theta: &[f64]) -> Self {
        let n_theta = cos_theta.len();
        let lmax = truncation + 1;
        let total: usize = (0..=truncation).map(|m| (lmax + 1 - m) * n_theta).sum();
        let mut p = vec![0.0; total];
        let mut dp = vec![0.0; total];
        let mut table = Self { truncation, n_theta, p: Vec::new(), dp: Vec::new() };
        for j in 0..n_theta {
            let (c, s) = (cos_theta[j], sin_theta[j]);
            for m in 0..=truncation {
                let col = column(lmax, m, c, s);
                for (i, v) in col.iter().enumerate() {
                    p[table.offset(m, m + i) + j] = *v;
                }
                for l in m..=truncation {
                    let up = l as f64 * eps(l + 1, m) * col[l + 1 - m];
                    let down = if l > m { (l + 1) as f64 * eps(l, m) * col[l - 1 - m] } else { 0.0 };
                    dp[table.offset(m, l) + j] = (up - down) / s;
                }
            }
        }
        table.p = p;
        table.dp = dp;
        table
    }

    #[inline]
    fn offset(&self, m: usize, l: usize) -> usize {
        // rows for m start after sum_{m' < m} (L + 2 - m') runs
        let lmax = self.truncation + 1;
        let before = m * (lmax + 1) - m * m.saturating_sub(1) / 2;
        (before + l - m) * self.n_theta
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Values of `P_lm` over all nodes.
    #[inline]
    pub fn p(&self, l: usize, m: usize) -> &[f64] {
        let o = self.offset(m, l);
        &self.p[o..o + self.n_theta]
    }

    /// Values of `dP_lm/dtheta` over all nodes (valid for `l <= L`).
    #[inline]
    pub fn dp(&self, l: usize, m: usize) -> &[f64] {
        let o = self.offset(m, l);
        &self.dp[o..o + self.n_theta]
    }

    /// Overwrites a tabulated value. Only used to exercise failure paths of
    /// the verification suite.
    #[doc(hidden)]
    pub fn corrupt(&mut self, l: usize, m: usize, j: usize, value: f64) {
        let o = self.offset(m, l);
        self.p[o + j] = value;
    }
}
