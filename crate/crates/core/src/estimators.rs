//! Realized-variance family estimators and noise-moment estimators.
//!
//! All functions have a `TickSeries` front end and a price-slice back end
//! (`*_prices`) that the tests and the liquidity/regression modules reuse on
//! re-indexed windows. Sums are compensated throughout.

use crate::error::{Error, Result};
use crate::sum::{csum, CompensatedSum};
use crate::ticks::TickSeries;

#[inline]
fn increment(prices: &[f64], j: usize) -> f64 {
    prices[j] - prices[j - 1]
}

/// Compensated sum of `f(Y_j − Y_{j−1})` over increments `j ∈ range`.
pub(crate) fn increment_sum(
    prices: &[f64],
    range: std::ops::RangeInclusive<usize>,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let (lo, hi) = range.into_inner();
    if lo > hi {
        return 0.0;
    }
    csum((lo..=hi).map(|j| f(increment(prices, j))))
}

/// `[Y,Y]` over the full grid.
pub fn rv_full_prices(prices: &[f64]) -> f64 {
    increment_sum(prices, 1..=prices.len() - 1, |d| d * d)
}

/// `[Y;4]` over the full grid.
pub fn quarticity_prices(prices: &[f64]) -> f64 {
    increment_sum(prices, 1..=prices.len() - 1, |d| {
        let d2 = d * d;
        d2 * d2
    })
}

fn check_avg_k(n: usize, k: usize) -> Result<()> {
    if k < 2 || k > n / 2 {
        return Err(Error::InvalidK { k, n, reason: "requires 2 <= K <= n/2" });
    }
    Ok(())
}

/// Averaged subsampled RV, `(1/K)·Σ_k [Y,Y]_{G^(K,k)}`, as one pass over the
/// lag-K differences `Y_i − Y_{i−K}`, `i = K..⌊n/K⌋K − 1`.
pub fn avg_rv_prices(prices: &[f64], k: usize) -> Result<f64> {
    let n = prices.len() - 1;
    check_avg_k(n, k)?;
    let last = (n / k) * k - 1;
    let sum = csum((k..=last).map(|i| {
        let d = prices[i] - prices[i - k];
        d * d
    }));
    Ok(sum / k as f64)
}

/// `[Y,Y]^{n}`: half of the RV over increments `1..n−K` plus the RV over
/// increments `K+1..n`.
pub fn modified_rv_prices(prices: &[f64], k: usize) -> Result<f64> {
    let n = prices.len() - 1;
    if k < 2 || k + 1 > n {
        return Err(Error::InvalidK { k, n, reason: "requires 2 <= K <= n-1" });
    }
    let head = increment_sum(prices, 1..=n - k, |d| d * d);
    let tail = increment_sum(prices, k + 1..=n, |d| d * d);
    Ok(0.5 * (head + tail))
}

pub fn tsrv_prices(prices: &[f64], k: usize) -> Result<f64> {
    let n = prices.len() - 1;
    let avg = avg_rv_prices(prices, k)?;
    let rv = rv_full_prices(prices);
    Ok(avg - (n - k + 1) as f64 / (n as f64 * k as f64) * rv)
}

pub fn wtsrv_prices(prices: &[f64], k: usize) -> Result<f64> {
    let avg = avg_rv_prices(prices, k)?;
    let modified = modified_rv_prices(prices, k)?;
    Ok(avg - modified / k as f64)
}

/// `WTSRV − TSRV` without forming either estimator: the averaged RV
/// cancels, leaving `(½·E − (K−1)/n·[Y,Y]) / K` with `E` the squared
/// increments of the first and last K.
pub(crate) fn wtsrv_minus_tsrv_prices(prices: &[f64], k: usize) -> Result<f64> {
    let n = prices.len() - 1;
    check_avg_k(n, k)?;
    let rv = rv_full_prices(prices);
    let mut edges = CompensatedSum::new();
    edges += increment_sum(prices, 1..=k, |d| d * d);
    edges += increment_sum(prices, n - k + 1..=n, |d| d * d);
    Ok((0.5 * edges.value() - (k - 1) as f64 / n as f64 * rv) / k as f64)
}

/// `(1/n)[Y;4] − (3/2n²)[Y,Y]²`, the null-consistent estimate of `2E(ε⁴)`.
pub(crate) fn centered_quarticity(n: usize, quarticity: f64, rv: f64) -> f64 {
    let n = n as f64;
    quarticity / n - 1.5 * rv * rv / (n * n)
}

/// `[Y,Y]` on an arbitrary strictly increasing index sequence.
pub fn realized_variance(series: &TickSeries, indices: &[usize]) -> Result<f64> {
    if indices.len() < 2 {
        return Err(Error::InvalidIndices(format!(
            "need at least 2 grid points, got {}",
            indices.len()
        )));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i > series.n()) {
        return Err(Error::InvalidIndices(format!("index {bad} beyond n={}", series.n())));
    }
    if indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidIndices("indices must be strictly increasing".into()));
    }
    let p = series.prices();
    Ok(csum(indices.windows(2).map(|w| {
        let d = p[w[1]] - p[w[0]];
        d * d
    })))
}

pub fn rv_full(series: &TickSeries) -> f64 {
    rv_full_prices(series.prices())
}

pub fn quarticity(series: &TickSeries) -> f64 {
    quarticity_prices(series.prices())
}

pub fn avg_rv(series: &TickSeries, k: usize) -> Result<f64> {
    avg_rv_prices(series.prices(), k)
}

pub fn modified_rv(series: &TickSeries, k: usize) -> Result<f64> {
    modified_rv_prices(series.prices(), k)
}

/// Two-scale realized volatility. Negative finite-sample values are kept.
pub fn tsrv(series: &TickSeries, k: usize) -> Result<f64> {
    tsrv_prices(series.prices(), k)
}

/// Sample-weighted TSRV: the fast-scale correction uses `[Y,Y]^{n}`.
pub fn wtsrv(series: &TickSeries, k: usize) -> Result<f64> {
    wtsrv_prices(series.prices(), k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorBundle {
    pub rv_full: f64,
    pub quarticity: f64,
    pub avg_rv: f64,
    pub modified_rv: f64,
    pub tsrv: f64,
    pub wtsrv: f64,
    pub k: usize,
    pub n: usize,
}

impl EstimatorBundle {
    pub fn compute(series: &TickSeries, k: usize) -> Result<Self> {
        let p = series.prices();
        let n = series.n();
        let rv = rv_full_prices(p);
        let avg = avg_rv_prices(p, k)?;
        let modified = modified_rv_prices(p, k)?;
        Ok(Self {
            rv_full: rv,
            quarticity: quarticity_prices(p),
            avg_rv: avg,
            modified_rv: modified,
            tsrv: avg - (n - k + 1) as f64 / (n as f64 * k as f64) * rv,
            wtsrv: avg - modified / k as f64,
            k,
            n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMoments {
    /// Estimate of `E(ε²)`.
    pub m2_hat: f64,
    /// Estimate of `E(ε⁴)`.
    pub q4_hat: f64,
    /// `(1/n)[Y;4] − (3/2n²)[Y,Y]²`, consistent for `2E(ε⁴)` under the null.
    pub q2sum_hat: f64,
    pub eta_hat: f64,
    /// Set when the η̂² radicand was not positive and clamped to zero.
    pub degenerate: bool,
}

impl NoiseMoments {
    pub(crate) fn from_sums(n: usize, quarticity: f64, rv: f64) -> Self {
        let nf = n as f64;
        let q2sum = centered_quarticity(n, quarticity, rv);
        let radicand = eta_squared(n, quarticity, rv);
        let degenerate = !(radicand > 0.0);
        Self {
            m2_hat: rv / (2.0 * nf),
            q4_hat: 0.5 * q2sum,
            q2sum_hat: q2sum,
            eta_hat: if degenerate { 0.0 } else { radicand.sqrt() },
            degenerate,
        }
    }
}

/// η̂² = 6/n²·[Y;4]² − 21/n³·[Y;4]·[Y,Y]² + 39/(2n⁴)·[Y,Y]⁴ (unclamped).
pub fn eta_squared(n: usize, quarticity: f64, rv: f64) -> f64 {
    // Written in the normalized quantities a = [Y;4]/n, b = [Y,Y]/n to keep
    // every power in range.
    let nf = n as f64;
    let a = quarticity / nf;
    let b = rv / nf;
    let b2 = b * b;
    6.0 * a * a - 21.0 * a * b2 + 19.5 * b2 * b2
}

pub fn noise_moments(series: &TickSeries) -> Result<NoiseMoments> {
    let n = series.n();
    if n < 4 {
        return Err(Error::InvalidIndices(format!("noise moments need n >= 4, got {n}")));
    }
    let p = series.prices();
    Ok(NoiseMoments::from_sums(n, quarticity_prices(p), rv_full_prices(p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(prices: &[f64]) -> TickSeries {
        TickSeries::new((0..prices.len()).map(|i| i as f64).collect(), prices.to_vec()).unwrap()
    }

    #[test]
    fn rv_and_quarticity_examples() {
        let s = series(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(rv_full(&s), 3.0);
        assert_eq!(realized_variance(&s, &[0, 1, 2, 3]).unwrap(), 3.0);
        assert_eq!(quarticity(&s), 3.0);
        assert_eq!(quarticity(&series(&[0.0, 2.0])), 16.0);
        assert_eq!(rv_full(&series(&[4.6; 10])), 0.0);
    }

    #[test]
    fn realized_variance_rejects_bad_indices() {
        let s = series(&[0.0, 1.0, 0.0, 1.0]);
        assert!(realized_variance(&s, &[0]).is_err());
        assert!(realized_variance(&s, &[0, 2, 2]).is_err());
        assert!(realized_variance(&s, &[0, 4]).is_err());
    }

    #[test]
    fn avg_rv_unit_steps() {
        let s = series(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        // n = 6, K = 2: subgrids {0,2,4} and {1,3,5}, each RV = 4 + 4.
        assert_eq!(avg_rv(&s, 2).unwrap(), 8.0);
        assert!(matches!(avg_rv(&s, 1), Err(Error::InvalidK { .. })));
        assert!(matches!(avg_rv(&s, 4), Err(Error::InvalidK { .. })));
    }

    #[test]
    fn modified_rv_example_and_bound() {
        let s = series(&[0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(modified_rv(&s, 2).unwrap(), 2.0);
        let t = series(&[0.0, 0.3, -0.2, 0.5, 0.1, 0.9, 0.4]);
        for k in 2..t.n() {
            assert!(modified_rv(&t, k).unwrap() <= rv_full(&t));
        }
        assert!(modified_rv(&s, 4).is_err());
    }

    #[test]
    fn modified_rv_drops_half_of_edges() {
        let p: [f64; 9] = [0.0, 0.3, -0.2, 0.5, 0.1, 0.9, 0.4, 0.45, -0.1];
        let n = p.len() - 1;
        let sq: Vec<f64> = (1..=n).map(|j| (p[j] - p[j - 1]).powi(2)).collect();
        for k in 2..n {
            let expected = sq.iter().sum::<f64>()
                - 0.5 * (sq[..k].iter().sum::<f64>() + sq[n - k..].iter().sum::<f64>());
            assert!((modified_rv_prices(&p, k).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_prices_give_zero_everywhere() {
        let s = series(&[4.6; 40]);
        let b = EstimatorBundle::compute(&s, 5).unwrap();
        assert_eq!(
            [b.rv_full, b.quarticity, b.avg_rv, b.modified_rv, b.tsrv, b.wtsrv],
            [0.0; 6]
        );
        let m = noise_moments(&s).unwrap();
        assert_eq!([m.m2_hat, m.q4_hat, m.q2sum_hat, m.eta_hat], [0.0; 4]);
        assert!(m.degenerate);
    }

    #[test]
    fn contrast_matches_difference_of_estimators() {
        let p: Vec<f64> = (0..200).map(|i| ((i * 7919) % 101) as f64 * 1e-3).collect();
        for k in [2, 5, 17, 99] {
            let direct = wtsrv_prices(&p, k).unwrap() - tsrv_prices(&p, k).unwrap();
            let contrast = wtsrv_minus_tsrv_prices(&p, k).unwrap();
            assert!((direct - contrast).abs() < 1e-12 * direct.abs().max(1e-6), "k={k}");
        }
    }

    #[test]
    fn eta_polynomial_is_consistent() {
        let p: Vec<f64> = (0..50).map(|i| ((i * 31) % 7) as f64 * 0.01).collect();
        let s = series(&p);
        let m = noise_moments(&s).unwrap();
        let n = s.n() as f64;
        let q = quarticity(&s);
        let rv = rv_full(&s);
        let literal = 6.0 / n.powi(2) * q * q - 21.0 / n.powi(3) * q * rv * rv
            + 39.0 / (2.0 * n.powi(4)) * rv.powi(4);
        if literal > 0.0 {
            assert!((m.eta_hat.powi(2) - literal).abs() <= 1e-12 * literal);
        } else {
            assert!(m.degenerate);
        }
        assert_eq!(m.q2sum_hat, 2.0 * m.q4_hat);
    }
}
