//! Noise-stationarity tests `N`, `V`, `V′` and `V̄`.
//!
//! All four statistics are one-sided: non-stationary noise drives them to
//! `+∞`, so p-values are upper-tail normal probabilities. A vanishing
//! denominator yields statistic 0, p-value 1 and the `degenerate` flag.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::estimators::{
    centered_quarticity, increment_sum, quarticity_prices, rv_full_prices,
    wtsrv_minus_tsrv_prices, NoiseMoments,
};
use crate::grids::default_k;
use crate::sum::{cmean, csum};
use crate::ticks::TickSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    N,
    V,
    VPrime,
    VBar,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [TestKind::N, TestKind::V, TestKind::VPrime, TestKind::VBar];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::N => "N",
            TestKind::V => "V",
            TestKind::VPrime => "Vprime",
            TestKind::VBar => "Vbar",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" => Ok(TestKind::N),
            "V" | "v" => Ok(TestKind::V),
            "Vprime" | "vprime" | "V'" => Ok(TestKind::VPrime),
            "Vbar" | "vbar" => Ok(TestKind::VBar),
            other => Err(Error::InvalidConfig(format!("unknown test {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub kind: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub k: usize,
    pub s: Option<usize>,
    pub n: usize,
    pub degenerate: bool,
    pub intermediates: BTreeMap<&'static str, f64>,
}

impl TestReport {
    fn finish(
        kind: TestKind,
        numerator: f64,
        denominator: f64,
        k: usize,
        s: Option<usize>,
        n: usize,
        intermediates: BTreeMap<&'static str, f64>,
    ) -> Result<Self> {
        let degenerate = !(denominator > 0.0);
        let statistic = if degenerate { 0.0 } else { numerator / denominator };
        let p = if degenerate { 1.0 } else { p_value(statistic)? };
        Ok(Self {
            kind,
            statistic,
            p_value: p,
            k,
            s,
            n,
            degenerate,
            intermediates,
        })
    }
}

/// Upper-tail standard normal probability `1 − Φ(x)`.
pub fn p_value(statistic: f64) -> Result<f64> {
    if !statistic.is_finite() {
        return Err(Error::NonFiniteStatistic(statistic));
    }
    Ok(0.5 * erfc(statistic / std::f64::consts::SQRT_2))
}

/// Default K for `N`: `default_k(n, 1)`, i.e. order `n^{2/3}`.
pub fn default_k_n(n: usize) -> usize {
    default_k(n, 1.0)
}

/// Default K for the window tests: `⌊n^{0.6}⌋`.
pub fn default_k_v(n: usize) -> usize {
    ((n as f64).powf(0.6) + 1e-9).floor() as usize
}

/// Default window length: `clamp(⌊√(n/K)⌋, 2, ⌊n/K⌋ − 1)`.
pub fn default_s(n: usize, k: usize) -> usize {
    let r = n / k;
    let s = ((n as f64 / k as f64).sqrt() + 1e-12).floor() as usize;
    s.clamp(2, r.saturating_sub(1).max(2))
}

pub fn test_n(series: &TickSeries, k: usize) -> Result<TestReport> {
    let n = series.n();
    if k < 4 || k > n / 2 {
        return Err(Error::InvalidK { k, n, reason: "test N requires 4 <= K <= n/2" });
    }
    let p = series.prices();
    let rv = rv_full_prices(p);
    let q4 = quarticity_prices(p);
    let q2sum = centered_quarticity(n, q4, rv);
    let contrast = wtsrv_minus_tsrv_prices(p, k)?;
    let numerator = (k as f64).sqrt() * contrast;
    let mut diag = BTreeMap::new();
    diag.insert("wtsrv_minus_tsrv", contrast);
    diag.insert("q2sum_hat", q2sum);
    let denominator = if q2sum > 0.0 { q2sum.sqrt() } else { 0.0 };
    TestReport::finish(TestKind::N, numerator, denominator, k, None, n, diag)
}

/// Local contrast on the window of blocks `start_block..start_block+s−1`
/// (1-based). The window is re-indexed as a standalone series so its edge
/// terms are window-local.
pub fn local_d(series: &TickSeries, k: usize, start_block: usize, s: usize) -> Result<f64> {
    local_d_prices(series.prices(), k, start_block, s)
}

fn local_d_prices(prices: &[f64], k: usize, start_block: usize, s: usize) -> Result<f64> {
    let n = prices.len() - 1;
    if start_block < 1 || s < 2 || k < 2 {
        return Err(Error::InvalidWindow(format!(
            "start_block={start_block}, s={s}, K={k}: need start_block >= 1, s >= 2, K >= 2"
        )));
    }
    let lo = (start_block - 1) * k;
    let hi = (start_block - 1 + s) * k;
    if hi > n {
        return Err(Error::WindowOutOfRange { start: start_block, s, k, n });
    }
    let window = &prices[lo..=hi];
    Ok((k as f64).sqrt() * wtsrv_minus_tsrv_prices(window, k)?)
}

fn check_window(n: usize, k: usize, s: usize) -> Result<usize> {
    if k < 2 || k > n {
        return Err(Error::InvalidWindow(format!("K={k} invalid for n={n}")));
    }
    let r = n / k;
    if s < 2 || s > r {
        return Err(Error::InvalidWindow(format!(
            "window s={s} must satisfy 2 <= s <= ⌊n/K⌋ = {r}"
        )));
    }
    Ok(r)
}

/// Every overlapping window's `D_i`, `i = 1..=⌊n/K⌋ − s + 1`.
pub fn local_d_sequence(series: &TickSeries, k: usize, s: usize) -> Result<Vec<f64>> {
    let r = check_window(series.n(), k, s)?;
    (1..=r - s + 1)
        .map(|i| local_d_prices(series.prices(), k, i, s))
        .collect()
}

/// Mean of `D_i²` over overlapping windows.
pub fn u_overlap(series: &TickSeries, k: usize, s: usize) -> Result<f64> {
    let d = local_d_sequence(series, k, s)?;
    Ok(cmean(d.iter().map(|x| x * x)))
}

/// Mean of `D_{(i−1)s+1}²` over the `⌊n/(sK)⌋` non-overlapping windows.
pub fn u_nonoverlap(series: &TickSeries, k: usize, s: usize) -> Result<f64> {
    check_window(series.n(), k, s)?;
    let windows = series.n() / (s * k);
    let mut squares = Vec::with_capacity(windows);
    for i in 1..=windows {
        let d = local_d_prices(series.prices(), k, (i - 1) * s + 1, s)?;
        squares.push(d * d);
    }
    Ok(cmean(squares))
}

/// RV of every block `S_i`, `i = 1..=⌊n/K⌋`.
pub(crate) fn block_rvs(prices: &[f64], k: usize) -> Vec<f64> {
    let r = (prices.len() - 1) / k;
    (1..=r)
        .map(|i| increment_sum(prices, (i - 1) * k + 1..=i * k, |d| d * d))
        .collect()
}

/// `Ū = (1/4n)·Σ_{i=1}^{r−1} ([Y,Y]_{S_{i+1}} − [Y,Y]_{S_i})²`.
pub fn u_bar(series: &TickSeries, k: usize) -> Result<f64> {
    let n = series.n();
    if k < 1 || k > n || n / k < 2 {
        return Err(Error::InvalidWindow(format!("Ū needs at least 2 blocks (n={n}, K={k})")));
    }
    Ok(u_bar_prices(series.prices(), k))
}

pub(crate) fn u_bar_prices(prices: &[f64], k: usize) -> f64 {
    let n = prices.len() - 1;
    let rvs = block_rvs(prices, k);
    csum(rvs.windows(2).map(|w| {
        let d = w[1] - w[0];
        d * d
    })) / (4.0 * n as f64)
}

fn window_test(
    kind: TestKind,
    series: &TickSeries,
    k: usize,
    s: Option<usize>,
    u: f64,
    rate: f64,
) -> Result<TestReport> {
    let n = series.n();
    let p = series.prices();
    let moments = NoiseMoments::from_sums(n, quarticity_prices(p), rv_full_prices(p));
    let mut diag = BTreeMap::new();
    diag.insert("u", u);
    diag.insert("q2sum_hat", moments.q2sum_hat);
    diag.insert("eta_hat", moments.eta_hat);
    let numerator = rate.sqrt() * (u - moments.q2sum_hat);
    TestReport::finish(kind, numerator, moments.eta_hat, k, s, n, diag)
}

pub fn test_v(series: &TickSeries, k: usize, s: usize) -> Result<TestReport> {
    let d = local_d_sequence(series, k, s)?;
    let u = cmean(d.iter().map(|x| x * x));
    let n = series.n();
    let mut report = window_test(TestKind::V, series, k, Some(s), u, n as f64 / k as f64)?;
    report.intermediates.insert("d_mean", cmean(d.iter().copied()));
    report.intermediates.insert("d_count", d.len() as f64);
    Ok(report)
}

pub fn test_v_prime(series: &TickSeries, k: usize, s: usize) -> Result<TestReport> {
    let u = u_nonoverlap(series, k, s)?;
    let n = series.n();
    window_test(TestKind::VPrime, series, k, Some(s), u, n as f64 / (s * k) as f64)
}

pub fn test_v_bar(series: &TickSeries, k: usize) -> Result<TestReport> {
    let u = u_bar(series, k)?;
    let n = series.n();
    window_test(TestKind::VBar, series, k, None, u, n as f64 / k as f64)
}

/// Runs `kind` with the default tuning unless `k`/`s` are given.
pub fn run_test(
    kind: TestKind,
    series: &TickSeries,
    k: Option<usize>,
    s: Option<usize>,
) -> Result<TestReport> {
    let n = series.n();
    match kind {
        TestKind::N => test_n(series, k.unwrap_or_else(|| default_k_n(n))),
        TestKind::V | TestKind::VPrime => {
            let k = k.unwrap_or_else(|| default_k_v(n));
            let s = s.unwrap_or_else(|| default_s(n, k.max(1)));
            if kind == TestKind::V {
                test_v(series, k, s)
            } else {
                test_v_prime(series, k, s)
            }
        }
        TestKind::VBar => test_v_bar(series, k.unwrap_or_else(|| default_k_v(n))),
    }
}
