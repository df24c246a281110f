use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rng::{derive_seed, CounterRng};
use super::NoiseSpec;

/// Two-sided store of Wiener increments, generated on demand.
///
/// Increment `k` covers `[k dt, (k+1) dt)` and is a pure function of
/// `(seed, member, l, m, k + shift_offset)`: the generator key is
/// `CounterRng::new(derive_seed(seed, "noise"), member)` and the Gaussian
/// pair is drawn at `(l, m, k + shift_offset)`. For `m > 0` the real and
/// imaginary parts each have variance `dt / 2`; for `m = 0` the increment is
/// real with variance `dt`; negative `m` is the conjugate partner.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    seed: u64,
    member: u64,
    dt_noise: f64,
    shift_offset: i64,
    truncation: usize,
    s: f64,
    sigma: f64,
    rng: CounterRng,
}

/// JSON description of a path, enough to regenerate every increment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMetadata {
    pub seed: u64,
    #[serde(default)]
    pub member: u64,
    pub dt_noise: f64,
    pub shift_offset: i64,
    #[serde(rename = "L")]
    pub truncation: usize,
    pub s: f64,
    pub sigma: f64,
}

impl NoisePath {
    pub fn new(spec: &NoiseSpec) -> Self {
        Self::for_member(spec, 0)
    }

    /// Independent path for ensemble member `member`.
    pub fn for_member(spec: &NoiseSpec, member: u64) -> Self {
        Self::from_metadata(&PathMetadata {
            seed: spec.seed,
            member,
            dt_noise: spec.dt_noise,
            shift_offset: 0,
            truncation: spec.truncation,
            s: spec.s,
            sigma: spec.sigma,
        })
    }

    pub fn from_metadata(m: &PathMetadata) -> Self {
        Self {
            seed: m.seed,
            member: m.member,
            dt_noise: m.dt_noise,
            shift_offset: m.shift_offset,
            truncation: m.truncation,
            s: m.s,
            sigma: m.sigma,
            rng: CounterRng::new(derive_seed(m.seed, "noise"), m.member),
        }
    }

    pub fn metadata(&self) -> PathMetadata {
        PathMetadata {
            seed: self.seed,
            member: self.member,
            dt_noise: self.dt_noise,
            shift_offset: self.shift_offset,
            truncation: self.truncation,
            s: self.s,
            sigma: self.sigma,
        }
    }

    pub fn dt_noise(&self) -> f64 {
        self.dt_noise
    }

    pub fn shift_offset(&self) -> i64 {
        self.shift_offset
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Wiener shift: increment `k` of the result is increment `k + steps`
    /// of `self`.
    pub fn shift(&self, steps: i64) -> Self {
        Self { shift_offset: self.shift_offset + steps, ..self.clone() }
    }

    /// Unit-amplitude increment of mode `(l, m)` over step `k`.
    #[inline]
    pub fn increment(&self, l: usize, m: i64, k: i64) -> Complex64 {
        let ma = m.unsigned_abs() as i64;
        let (a, b) = self.rng.gaussian_pair(l as u64, ma, k + self.shift_offset);
        let inc = if ma == 0 {
            Complex64::new(a * self.dt_noise.sqrt(), 0.0)
        } else {
            Complex64::new(a, b) * (0.5 * self.dt_noise).sqrt()
        };
        if m >= 0 {
            inc
        } else if ma % 2 == 0 {
            inc.conj()
        } else {
            -inc.conj()
        }
    }
}

/// Free-function form of [`NoisePath::shift`].
pub fn shift_path(path: &NoisePath, steps: i64) -> NoisePath {
    path.shift(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RunningStats;

    fn path() -> NoisePath {
        NoisePath::new(&NoiseSpec::new(1.0, 1.0, 8, 99, 0.01))
    }

    #[test]
    fn shift_is_a_flow() {
        let p = path();
        assert_eq!(p.shift(0), p);
        let a = p.shift(5).shift(-12);
        let b = p.shift(-7);
        for k in -20..20 {
            assert_eq!(a.increment(3, 2, k).re.to_bits(), b.increment(3, 2, k).re.to_bits());
            assert_eq!(p.shift(4).increment(2, 1, k), p.increment(2, 1, k + 4));
        }
    }

    #[test]
    fn conjugate_linked_and_real_zonal() {
        let p = path();
        for k in 0..10 {
            assert_eq!(p.increment(3, 0, k).im, 0.0);
            assert_eq!(p.increment(3, -1, k), -p.increment(3, 1, k).conj());
            assert_eq!(p.increment(3, -2, k), p.increment(3, 2, k).conj());
        }
    }

    #[test]
    fn increment_variance() {
        let p = path();
        let (mut re, mut im, mut zonal) = (RunningStats::default(), RunningStats::default(), RunningStats::default());
        for k in 0..40_000 {
            let c = p.increment(4, 3, k);
            re.push(c.re);
            im.push(c.im);
            zonal.push(p.increment(4, 0, k).re);
        }
        let tol = 4.0 * 0.005 * (2.0f64 / 40_000.0).sqrt();
        assert!((re.variance() - 0.005).abs() < tol);
        assert!((im.variance() - 0.005).abs() < tol);
        assert!((zonal.variance() - 0.01).abs() < 2.0 * tol);
    }

    #[test]
    fn metadata_round_trip() {
        let p = path().shift(-3);
        let json = serde_json::to_string(&p.metadata()).unwrap();
        assert!(json.contains("\"L\":8"));
        let back: PathMetadata = serde_json::from_str(&json).unwrap();
        assert_eq!(NoisePath::from_metadata(&back), p);
        assert_ne!(NoisePath::for_member(&NoiseSpec::new(1.0, 1.0, 8, 99, 0.01), 1).increment(1, 0, 0), p.increment(1, 0, 0));
    }
}
