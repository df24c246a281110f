//! Small statistics helpers: running moments, histograms, slope fits.

use serde::{Deserialize, Serialize};

/// Welford running mean and variance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut s = Self::default();
        xs.iter().for_each(|&x| s.push(x));
        s
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Equal-width histogram. `mass` sums to one once any sample is in range;
/// samples outside `[lo, hi]` go to the end bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub mass: Vec<f64>,
    pub count: u64,
}

impl Histogram {
    pub fn build(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let bins = bins.max(1);
        let mut counts = vec![0u64; bins];
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 0.0 };
        for &x in samples {
            let b = if width > 0.0 { ((x - lo) / width).floor() } else { 0.0 };
            counts[(b.max(0.0) as usize).min(bins - 1)] += 1;
        }
        let n = samples.len() as u64;
        let mass = counts.iter().map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect();
        Self { lo, hi, mass, count: n }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Largest bin-mass difference against another histogram on the same
    /// bins, in units of the binomial standard error of the difference.
    pub fn max_z_score(&self, other: &Self) -> f64 {
        let (n1, n2) = (self.count as f64, other.count as f64);
        let mut worst: f64 = 0.0;
        for (p, q) in self.mass.iter().zip(&other.mass) {
            let pooled = (p * n1 + q * n2) / (n1 + n2);
            let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
            if se > 0.0 {
                worst = worst.max((p - q).abs() / se);
            }
        }
        worst
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Cumulative trapezoid integral of samples `y` on a uniform grid.
pub fn cumulative_trapezoid(y: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    for (i, v) in y.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (y[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 7.25];
        let s = RunningStats::from_slice(&xs);
        let m = xs.iter().sum::<f64>() / 5.0;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean - m).abs() < 1e-15);
        assert!((s.variance() - v).abs() < 1e-13);
    }

    #[test]
    fn histogram_mass_is_one() {
        let h = Histogram::build(&[0.1, 0.5, 0.9, 2.0, -1.0], 0.0, 1.0, 4);
        assert!((h.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(h.mass[0], 0.4);
        let degenerate = Histogram::build(&[0.0; 10], 0.0, 0.0, 8);
        assert_eq!(degenerate.mass[0], 1.0);
    }

    #[test]
    fn slope_and_trapezoid() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-15);
        let c = cumulative_trapezoid(&y, 1.0);
        assert_eq!(c, vec![0.0, 2.0, 6.0, 12.0]);
    }
}
