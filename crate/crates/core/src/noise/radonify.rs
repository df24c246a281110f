use serde::{Deserialize, Serialize};

use crate::spectrum::eigenvalue;

/// Block-ratio threshold below which the partial sums are declared
/// convergent.
pub const BLOCK_RATIO_THRESHOLD: f64 = 0.9;

/// Partial sums of `sum_l (l(l+1))^{-2s} (2l+1) / (4 pi)` and a convergence
/// verdict.
///
/// The verdict uses Cauchy condensation: with dyadic block sums
/// `B_j = sum_{2^j <= l < 2^{j+1}} term(l)`, a series with regularly varying
/// terms converges iff the block ratio `B_J / B_{J-1}` tends to a limit
/// below one. The ratio is read off the last two complete blocks below
/// `lmax` and compared against [`BLOCK_RATIO_THRESHOLD`]; for this series
/// it approaches `2^{2-4s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonifyReport {
    pub s: f64,
    pub lmax: usize,
    pub partial_sums: Vec<f64>,
    pub block_ratio: f64,
    /// Share of the total contributed by degrees above `lmax / 10`.
    pub tail_fraction: f64,
    pub converges: bool,
}

pub fn radonifying_sum(s: f64, lmax: usize) -> RadonifyReport {
    let term = |l: usize| eigenvalue(l).powf(-2.0 * s) * (2 * l + 1) as f64 / (4.0 * std::f64::consts::PI);
    let mut partial_sums = Vec::with_capacity(lmax);
    let mut acc = 0.0;
    for l in 1..=lmax {
        acc += term(l);
        partial_sums.push(acc);
    }
    let mut j = 0;
    while (1usize << (j + 2)) <= lmax + 1 {
        j += 1;
    }
    // blocks j-1 and j both end at or below lmax
    let block = |j: usize| ((1usize << j)..(1usize << (j + 1))).map(term).sum::<f64>();
    let block_ratio = if j >= 1 { block(j) / block(j - 1) } else { f64::NAN };
    let cut = (lmax / 10).max(1);
    let tail_fraction = if lmax > cut { (acc - partial_sums[cut - 1]) / acc } else { 0.0 };
    RadonifyReport {
        s,
        lmax,
        partial_sums,
        block_ratio,
        tail_fraction,
        converges: block_ratio < BLOCK_RATIO_THRESHOLD,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dichotomy_at_ten_thousand() {
        for s in [0.6, 0.75, 1.0] {
            assert!(radonifying_sum(s, 10_000).converges, "s = {s}");
        }
        for s in [0.3, 0.5] {
            assert!(!radonifying_sum(s, 10_000).converges, "s = {s}");
        }
    }

    #[test]
    fn partial_sums_increase() {
        let r = radonifying_sum(0.6, 500);
        assert!(r.partial_sums.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn block_ratio_approaches_power_law_limit() {
        for s in [0.6, 0.75, 1.0] {
            let r = radonifying_sum(s, 10_000);
            let limit = 2f64.powf(2.0 - 4.0 * s);
            assert!((r.block_ratio - limit).abs() < 1e-3 * limit.max(1.0), "s = {s}: {}", r.block_ratio);
        }
    }

    #[test]
    fn large_s_is_dominated_by_first_degree() {
        let s = 8.0;
        let r = radonifying_sum(s, 100);
        let first = 3.0 / (4.0 * std::f64::consts::PI) * 2f64.powf(-2.0 * s);
        assert!((r.partial_sums.last().unwrap() / first - 1.0).abs() < 1e-3);
    }

    #[test]
    fn log_growth_at_one_half() {
        let r = radonifying_sum(0.5, 10_000);
        // term ~ 2/(4 pi l), so S(10^4) - S(10^3) ~ ln(10) / (2 pi)
        let d = r.partial_sums[9_999] - r.partial_sums[999];
        assert!((d - 10f64.ln() / (2.0 * std::f64::consts::PI)).abs() < 1e-3);
    }
}
