//! `phi` functions of exponential time differencing, accurate for small
//! arguments.

use num_complex::Complex64;

const SERIES_RADIUS: f64 = 0.5;

/// `phi_1(x) = (e^x - 1) / x`
pub fn phi1(x: Complex64) -> Complex64 {
    if x.norm() < SERIES_RADIUS {
        series(x, 1)
    } else {
        (x.exp() - 1.0) / x
    }
}

/// `phi_2(x) = (e^x - 1 - x) / x^2`
pub fn phi2(x: Complex64) -> Complex64 {
    if x.norm() < SERIES_RADIUS {
        series(x, 2)
    } else {
        (x.exp() - 1.0 - x) / (x * x)
    }
}

// sum_{k >= 0} x^k / (k + j)!
fn series(x: Complex64, j: u32) -> Complex64 {
    let mut fact: f64 = (1..=j).map(f64::from).product();
    let mut term = Complex64::new(1.0 / fact, 0.0);
    let mut sum = term;
    for k in 1..24u32 {
        fact = f64::from(k + j);
        term = term * x / fact;
        sum += term;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_and_branch_agreement() {
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(phi1(z), Complex64::new(1.0, 0.0));
        assert_eq!(phi2(z), Complex64::new(0.5, 0.0));
        for x in [Complex64::new(-0.49, 0.1), Complex64::new(0.3, -0.35), Complex64::new(-0.2, 0.0)] {
            let direct1 = (x.exp() - 1.0) / x;
            let direct2 = (x.exp() - 1.0 - x) / (x * x);
            assert!((series(x, 1) - direct1).norm() < 1e-14);
            assert!((series(x, 2) - direct2).norm() < 1e-13);
        }
        let big = Complex64::new(-40.0, 3.0);
        assert!((phi1(big) - (big.exp() - 1.0) / big).norm() < 1e-16);
    }
}
