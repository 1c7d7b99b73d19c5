//! Aggregate liquidity risk: an estimate of the quadratic variation `[g,g]`
//! of the noise-variance path, its variance proxy Γ̂ and a 95% interval.

use crate::error::{Error, Result};
use crate::estimators::increment_sum;
use crate::stationarity::{block_rvs, u_bar_prices};
use crate::sum::CompensatedSum;
use crate::ticks::TickSeries;

/// Two-sided 95% normal quantile used for the interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiquidityReport {
    pub gg_hat: f64,
    pub gamma_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub k: usize,
    pub l: usize,
    pub r: usize,
    /// Γ̂² came out non-positive and was clamped to zero.
    pub degenerate: bool,
    /// The symmetric interval reaches below zero; it is reported unclipped.
    pub ci_low_negative: bool,
}

/// Default block size `⌊n^{0.62}⌋`.
pub fn default_k_liquidity(n: usize) -> usize {
    ((n as f64).powf(0.62) + 1e-9).floor() as usize
}

/// Default long-window length `⌊√(n/K)⌋`, at least 1.
pub fn default_l(n: usize, k: usize) -> usize {
    (((n as f64 / k as f64).sqrt() + 1e-12).floor() as usize).max(1)
}

/// `(3n/2K²)·Ū`.
pub fn gg_estimate(series: &TickSeries, k: usize) -> Result<f64> {
    let n = series.n();
    if k < 1 || k > n || n / k < 3 {
        return Err(Error::InvalidK { k, n, reason: "needs at least 3 blocks" });
    }
    Ok(gg_from_u_bar(n, k, u_bar_prices(series.prices(), k)))
}

pub(crate) fn gg_from_u_bar(n: usize, k: usize, u_bar: f64) -> f64 {
    let kf = k as f64;
    3.0 * n as f64 / (2.0 * kf * kf) * u_bar
}

/// Γ̂ and whether its square had to be clamped.
pub fn gamma_hat(series: &TickSeries, k: usize, l: usize) -> Result<(f64, bool)> {
    let n = series.n();
    if k < 1 || k > n {
        return Err(Error::InvalidWindow(format!("K={k} invalid for n={n}")));
    }
    let r = n / k;
    if l < 1 || r < l + 1 {
        return Err(Error::InvalidWindow(format!(
            "need l >= 1 and ⌊n/K⌋ >= l + 1 (l={l}, r={r})"
        )));
    }
    let prices = series.prices();
    let rv = block_rvs(prices, k);
    let quart: Vec<f64> = (1..=r)
        .map(|i| {
            increment_sum(prices, (i - 1) * k + 1..=i * k, |d| {
                let d2 = d * d;
                d2 * d2
            })
        })
        .collect();
    let kf = k as f64;
    let lf = l as f64;

    // diffs[m] = ([Y,Y]_{S_{m+2}} − [Y,Y]_{S_{m+1}})², m = 0..r−2
    let diffs: Vec<f64> = rv.windows(2).map(|w| (w[1] - w[0]).powi(2)).collect();
    let mut long = CompensatedSum::new();
    for i in 1..=r - l {
        // j = 1..l uses blocks i+j and i+j−1, i.e. diffs[i+j−2]
        let inner: CompensatedSum = diffs[i - 1..i - 1 + l].iter().copied().collect();
        long += inner.value().powi(2);
    }
    let mut local = CompensatedSum::new();
    for (&q, &v) in quart.iter().zip(&rv) {
        let v2 = v * v;
        local += 4.0 / kf.powi(2) * q * q - 14.0 / kf.powi(3) * q * v2 + 13.0 / kf.powi(4) * v2 * v2;
    }
    let gamma2 = 27.0 / (128.0 * lf * lf * kf.powi(4)) * long.value()
        + 27.0 / (8.0 * kf * kf) * local.value();
    if gamma2 > 0.0 {
        Ok((gamma2.sqrt(), false))
    } else {
        Ok((0.0, true))
    }
}

pub fn liquidity_report(
    series: &TickSeries,
    k: Option<usize>,
    l: Option<usize>,
) -> Result<LiquidityReport> {
    let n = series.n();
    let k = k.unwrap_or_else(|| default_k_liquidity(n));
    let gg_hat = gg_estimate(series, k)?;
    let l = l.unwrap_or_else(|| default_l(n, k));
    let (gamma, degenerate) = gamma_hat(series, k, l)?;
    let half = Z_95 * gamma;
    let ci_low = gg_hat - half;
    Ok(LiquidityReport {
        gg_hat,
        gamma_hat: gamma,
        ci_low,
        ci_high: gg_hat + half,
        k,
        l,
        r: n / k,
        degenerate,
        ci_low_negative: ci_low < 0.0,
    })
}
