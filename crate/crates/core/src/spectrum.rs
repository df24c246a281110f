//! Complex spherical-harmonic coefficients.
//!
//! Coefficients are stored for every `(l, m)` with `0 <= l <= L` and
//! `-l <= m <= l`, in row-major order: index `l^2 + l + m`. Real fields obey
//! `c(l, -m) = (-1)^m conj(c(l, m))`.
//!
//! # Serialized form
//!
//! Binary (all little-endian):
//!
//! ```text
//! bytes 0..4   magic  b"SNSS"
//! bytes 4..8   u32    format version (1)
//! bytes 8..12  u32    truncation L
//! then (L+1)^2 pairs of f64 (re, im) in row-major (l, m) order
//! ```
//!
//! JSON: `{"L": <int>, "coeffs": [re, im, re, im, ...]}` in the same order.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::rng::GaussianStream;

const MAGIC: &[u8; 4] = b"SNSS";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SpectrumRecord", try_from = "SpectrumRecord")]
pub struct ScalarSpectrum {
    truncation: usize,
    coeffs: Vec<Complex64>,
}

#[inline]
pub fn index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

#[inline]
pub fn eigenvalue(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

pub fn num_coeffs(truncation: usize) -> usize {
    (truncation + 1) * (truncation + 1)
}

impl ScalarSpectrum {
    pub fn zeros(truncation: usize) -> Self {
        Self { truncation, coeffs: vec![Complex64::new(0.0, 0.0); num_coeffs(truncation)] }
    }

    pub fn from_coeffs(truncation: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != num_coeffs(truncation) {
            return Err(Error::DimensionMismatch {
                expected: num_coeffs(truncation),
                got: coeffs.len(),
            });
        }
        Ok(Self { truncation, coeffs })
    }

    /// A single real harmonic: `c` at `(l, m)` and its conjugate partner.
    pub fn single(truncation: usize, l: usize, m: i64, c: Complex64) -> Self {
        let mut s = Self::zeros(truncation);
        s.set_real(l, m, c);
        s
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.coeffs[index(l, m)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, m: i64, c: Complex64) {
        self.coeffs[index(l, m)] = c;
    }

    /// Sets `(l, m)` and `(l, -m)` so the field stays real. For `m = 0` only
    /// the real part of `c` is kept.
    pub fn set_real(&mut self, l: usize, m: i64, c: Complex64) {
        if m == 0 {
            self.set(l, 0, Complex64::new(c.re, 0.0));
            return;
        }
        let (mp, cp) = if m > 0 { (m, c) } else { (-m, conj_partner(-m, c)) };
        self.set(l, mp, cp);
        self.set(l, -mp, conj_partner(mp, cp));
    }

    /// Rebuilds the negative-`m` half from the non-negative half.
    pub fn enforce_real(&mut self) {
        for l in 0..=self.truncation {
            let c0 = self.get(l, 0);
            self.set(l, 0, Complex64::new(c0.re, 0.0));
            for m in 1..=l as i64 {
                let c = self.get(l, m);
                self.set(l, -m, conj_partner(m, c));
            }
        }
    }

    /// Largest violation of the reality condition.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..=self.truncation {
            worst = worst.max(self.get(l, 0).im.abs());
            for m in 1..=l as i64 {
                worst = worst.max((self.get(l, -m) - conj_partner(m, self.get(l, m))).norm());
            }
        }
        worst
    }

    pub fn check_truncation(&self, expected: usize) -> Result<()> {
        if self.truncation != expected {
            return Err(Error::TruncationMismatch { expected, got: self.truncation });
        }
        Ok(())
    }

    /// Applies `f(l, m, c)` to every coefficient.
    pub fn map(&self, f: impl Fn(usize, i64, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.truncation {
            for m in -(l as i64)..=l as i64 {
                let i = index(l, m);
                out.coeffs[i] = f(l, m, self.coeffs[i]);
            }
        }
        out
    }

    /// Multiplies degree `l` by `f(l)`.
    pub fn scale_degrees(&self, f: impl Fn(usize) -> f64) -> Self {
        self.map(|l, _, c| c * f(l))
    }

    pub fn add(&self, other: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self { truncation: self.truncation, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Self { truncation: self.truncation, coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { truncation: self.truncation, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (c, d) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += d * a;
        }
    }

    /// Degree-weighted sum `sum_{l,m} w(l) |c_lm|^2`.
    pub fn weighted_sq(&self, w: impl Fn(usize) -> f64) -> f64 {
        let mut total = 0.0;
        for l in 0..=self.truncation {
            let wl = w(l);
            if wl == 0.0 {
                continue;
            }
            let row = &self.coeffs[l * l..(l + 1) * (l + 1)];
            total += wl * row.iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        total
    }

    /// Degree-weighted real inner product `Re sum w(l) c_lm conj(d_lm)`.
    pub fn weighted_dot(&self, other: &Self, w: impl Fn(usize) -> f64) -> f64 {
        let mut total = 0.0;
        for l in 0..=self.truncation {
            let wl = w(l);
            if wl == 0.0 {
                continue;
            }
            let r = l * l..(l + 1) * (l + 1);
            let s: f64 = self.coeffs[r.clone()]
                .iter()
                .zip(&other.coeffs[r])
                .map(|(a, b)| a.re * b.re + a.im * b.im)
                .sum();
            total += wl * s;
        }
        total
    }

    /// Kinetic energy `||Curl psi||^2 = sum l(l+1) |psi_lm|^2` when `self` is
    /// a stream function.
    pub fn velocity_energy(&self) -> f64 {
        self.weighted_sq(eigenvalue)
    }

    /// Enstrophy `||curl_n u||^2 = sum l^2 (l+1)^2 |psi_lm|^2`.
    pub fn enstrophy(&self) -> f64 {
        self.weighted_sq(|l| eigenvalue(l).powi(2))
    }

    /// Velocity `L2` inner product of two stream functions.
    pub fn velocity_dot(&self, other: &Self) -> f64 {
        self.weighted_dot(other, eigenvalue)
    }

    /// Copies into a different truncation, zero-padding or dropping modes.
    pub fn retruncate(&self, truncation: usize) -> Self {
        let mut out = Self::zeros(truncation);
        let lm = self.truncation.min(truncation);
        let n = num_coeffs(lm);
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.truncation as u32).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head)?;
        if &head[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let truncation = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let mut coeffs = Vec::with_capacity(num_coeffs(truncation));
        let mut buf = [0u8; 16];
        for _ in 0..num_coeffs(truncation) {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
            coeffs.push(Complex64::new(re, im));
        }
        Ok(Self { truncation, coeffs })
    }

    pub fn to_record(&self) -> SpectrumRecord {
        SpectrumRecord {
            truncation: self.truncation,
            coeffs: self.coeffs.iter().flat_map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_record(rec: &SpectrumRecord) -> Result<Self> {
        if rec.coeffs.len() != 2 * num_coeffs(rec.truncation) {
            return Err(Error::Format(format!(
                "expected {} numbers for L={}, found {}",
                2 * num_coeffs(rec.truncation),
                rec.truncation,
                rec.coeffs.len()
            )));
        }
        let coeffs = rec.coeffs.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        Ok(Self { truncation: rec.truncation, coeffs })
    }

    /// Random real band-limited spectrum with `l = 0` removed. Coefficients
    /// are Gaussian with standard deviation `l^(-slope)`, up to degree `lmax`.
    pub fn random(truncation: usize, lmax: usize, slope: f64, draws: &mut GaussianStream) -> Self {
        let mut s = Self::zeros(truncation);
        for l in 1..=lmax.min(truncation) {
            let amp = (l as f64).powf(-slope);
            s.set(l, 0, Complex64::new(amp * draws.next_gaussian(), 0.0));
            for m in 1..=l as i64 {
                let c = Complex64::new(draws.next_gaussian(), draws.next_gaussian());
                s.set(l, m, c * (amp / std::f64::consts::SQRT_2));
            }
        }
        s.enforce_real();
        s
    }
}

#[inline]
fn conj_partner(m: i64, c: Complex64) -> Complex64 {
    if m % 2 == 0 {
        c.conj()
    } else {
        -c.conj()
    }
}

/// JSON form of a spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    #[serde(rename = "L")]
    pub truncation: usize,
    pub coeffs: Vec<f64>,
}

impl From<ScalarSpectrum> for SpectrumRecord {
    fn from(s: ScalarSpectrum) -> Self {
        s.to_record()
    }
}

impl TryFrom<SpectrumRecord> for ScalarSpectrum {
    type Error = Error;

    fn try_from(rec: SpectrumRecord) -> Result<Self> {
        Self::from_record(&rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::rng::CounterRng;
    use proptest::prelude::*;

    #[test]
    fn indexing_is_row_major() {
        assert_eq!(index(0, 0), 0);
        assert_eq!(index(1, -1), 1);
        assert_eq!(index(1, 1), 3);
        assert_eq!(index(2, -2), 4);
        assert_eq!(num_coeffs(21), 484);
    }

    #[test]
    fn set_real_links_conjugates() {
        let mut s = ScalarSpectrum::zeros(3);
        s.set_real(3, -1, Complex64::new(0.5, 2.0));
        assert_eq!(s.get(3, 1), Complex64::new(-0.5, 2.0));
        assert_eq!(s.reality_defect(), 0.0);
        s.set(2, 2, Complex64::new(1.0, 1.0));
        assert!(s.reality_defect() > 0.0);
        s.enforce_real();
        assert_eq!(s.get(2, -2), Complex64::new(1.0, -1.0));
    }

    #[test]
    fn bad_binary_is_rejected() {
        assert!(ScalarSpectrum::read_binary(&b"XXXX\x01\0\0\0\0\0\0\0"[..]).is_err());
        let rec = SpectrumRecord { truncation: 1, coeffs: vec![0.0; 3] };
        assert!(ScalarSpectrum::from_record(&rec).is_err());
    }

    proptest! {
        #[test]
        fn binary_and_json_round_trip(seed in any::<u64>(), l in 0usize..12) {
            let mut draws = CounterRng::new(seed, 0).stream(0);
            let s = ScalarSpectrum::random(l, l, 1.0, &mut draws);
            let mut buf = Vec::new();
            s.write_binary(&mut buf).unwrap();
            prop_assert_eq!(buf.len(), 12 + 16 * num_coeffs(l));
            prop_assert_eq!(&ScalarSpectrum::read_binary(&buf[..]).unwrap(), &s);
            let json = serde_json::to_string(&s.to_record()).unwrap();
            let back: SpectrumRecord = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(ScalarSpectrum::from_record(&back).unwrap(), s);
        }
    }
}
