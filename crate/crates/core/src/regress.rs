//! Regression of the noise variance on the spot volatility across blocks.
//!
//! Each block of `m` increments yields a pair `(σ̂², ĝ)`: the WTSRV of the
//! block scaled by its duration, and the block RV over `2m`. The pairs are
//! then fitted by ordinary least squares, in levels or in logs.

use std::io::Write;

use crate::error::{Error, Result};
use crate::estimators::{rv_full_prices, wtsrv_prices};
use crate::grids::default_k;
use crate::sum::{cmean, csum};
use crate::ticks::{TickSeries, YEARS_PER_SECOND};

/// Smallest admissible block.
pub const MIN_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockPair {
    pub sigma2_hat: f64,
    pub g_hat: f64,
    /// Start time of the block (years).
    pub t_start: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionReport {
    pub beta_hat: f64,
    pub alpha_hat: f64,
    pub r_squared: f64,
    pub pairs: Vec<BlockPair>,
    pub block_size: usize,
    pub log_log: bool,
    /// Pairs entering the fit.
    pub used: usize,
    /// Non-positive pairs left out of a log-log fit.
    pub dropped: usize,
}

/// Block size covering roughly ten minutes of ticks at the series' average
/// sampling rate, never below [`MIN_BLOCK`].
pub fn default_block_size(series: &TickSeries) -> usize {
    let seconds = series.duration() / YEARS_PER_SECOND;
    let per_second = series.n() as f64 / seconds;
    ((600.0 * per_second).round() as usize).max(MIN_BLOCK)
}

pub fn block_estimates(series: &TickSeries, m: usize) -> Result<Vec<BlockPair>> {
    let n = series.n();
    if m < MIN_BLOCK {
        return Err(Error::BlockTooSmall(format!("m={m} is below {MIN_BLOCK}")));
    }
    if n / m < 3 {
        return Err(Error::BlockTooSmall(format!(
            "n={n} holds {} blocks of m={m}; at least 3 are needed",
            n / m
        )));
    }
    let k = default_k(m, 1.0);
    let prices = series.prices();
    let times = series.times();
    (0..n / m)
        .map(|b| {
            let (lo, hi) = (b * m, (b + 1) * m);
            let block = &prices[lo..=hi];
            let duration = times[hi] - times[lo];
            Ok(BlockPair {
                sigma2_hat: wtsrv_prices(block, k)? / duration,
                g_hat: rv_full_prices(block) / (2.0 * m as f64),
                t_start: times[lo],
            })
        })
        .collect()
}

/// Least-squares fit of `ĝ` on `σ̂²` (or of their logs).
pub fn ols(pairs: &[BlockPair], log_log: bool, block_size: usize) -> Result<RegressionReport> {
    let points: Vec<(f64, f64)> = if log_log {
        pairs
            .iter()
            .filter(|p| p.sigma2_hat > 0.0 && p.g_hat > 0.0)
            .map(|p| (p.sigma2_hat.ln(), p.g_hat.ln()))
            .collect()
    } else {
        pairs.iter().map(|p| (p.sigma2_hat, p.g_hat)).collect()
    };
    if points.len() < 3 {
        return Err(Error::DegenerateDesign(format!(
            "{} usable pairs; at least 3 are needed",
            points.len()
        )));
    }
    let mx = cmean(points.iter().map(|p| p.0));
    let my = cmean(points.iter().map(|p| p.1));
    let sxx = csum(points.iter().map(|p| (p.0 - mx).powi(2)));
    let sxy = csum(points.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let syy = csum(points.iter().map(|p| (p.1 - my).powi(2)));
    if !(sxx > 0.0) {
        return Err(Error::DegenerateDesign("regressor has zero variance".into()));
    }
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let ss_res = csum(points.iter().map(|p| (p.1 - alpha - beta * p.0).powi(2)));
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RegressionReport {
        beta_hat: beta,
        alpha_hat: alpha,
        r_squared,
        pairs: pairs.to_vec(),
        block_size,
        log_log,
        used: points.len(),
        dropped: pairs.len() - points.len(),
    })
}

/// Block estimates of every series, pooled into one fit.
pub fn regress(series: &[TickSeries], m: usize, log_log: bool) -> Result<RegressionReport> {
    let mut pairs = Vec::new();
    for s in series {
        pairs.extend(block_estimates(s, m)?);
    }
    ols(&pairs, log_log, m)
}

/// Pairs as `t_start,sigma2_hat,g_hat` CSV.
pub fn write_pairs<W: Write>(pairs: &[BlockPair], mut sink: W) -> Result<()> {
    writeln!(sink, "t_start,sigma2_hat,g_hat")?;
    for p in pairs {
        writeln!(sink, "{:.17e},{:.17e},{:.17e}", p.t_start, p.sigma2_hat, p.g_hat)?;
    }
    Ok(())
}
