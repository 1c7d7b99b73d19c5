//! Index-level subsampling: offset subgrids and consecutive K-blocks.
//!
//! Indices beyond `⌊n/K⌋·K` are never used by either construction.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// Offset-`offset`, step-`step` subgrid `{k, k+K, …, k+(⌊n/K⌋−1)K}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubgridSpec {
    pub step: usize,
    pub offset: usize,
    len: usize,
}

impl SubgridSpec {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn first(&self) -> usize {
        self.offset
    }

    pub fn last(&self) -> usize {
        self.offset + (self.len - 1) * self.step
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |j| self.offset + j * self.step)
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidK { k, n, reason: "K must be at least 1" });
    }
    if k > n {
        return Err(Error::InvalidK { k, n, reason: "K exceeds the number of increments" });
    }
    Ok(())
}

/// The `K` offset subgrids of an `n`-increment grid, `k = 0..K−1`.
pub fn subgrids(n: usize, k: usize) -> Result<Vec<SubgridSpec>> {
    check_k(n, k)?;
    let len = n / k;
    Ok((0..k)
        .map(|offset| SubgridSpec { step: k, offset, len })
        .collect())
}

/// Consecutive blocks `S_i = {(i−1)K, …, iK}`, `i = 1..=⌊n/K⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    pub block_size: usize,
    pub count: usize,
    pub n: usize,
}

impl BlockPartition {
    /// Index range of block `i` (1-based, as `S_i`).
    pub fn block(&self, i: usize) -> RangeInclusive<usize> {
        assert!(i >= 1 && i <= self.count, "block {i} out of 1..={}", self.count);
        (i - 1) * self.block_size..=i * self.block_size
    }

    pub fn blocks(&self) -> impl Iterator<Item = RangeInclusive<usize>> + '_ {
        (1..=self.count).map(move |i| self.block(i))
    }

    /// Last index covered by any block.
    pub fn end(&self) -> usize {
        self.count * self.block_size
    }
}

pub fn block_partition(n: usize, k: usize) -> Result<BlockPartition> {
    check_k(n, k)?;
    Ok(BlockPartition { block_size: k, count: n / k, n })
}

/// Tuning parameter of order `c·n^{2/3}` with a small unused remainder.
///
/// Searches `⌊c·n^{2/3}⌋ ± 3` (clamped to `[2, n/2]`) for the K minimizing
/// `n − ⌊n/K⌋·K`; ties go to the K closest to the base value, then the
/// smaller one.
pub fn default_k(n: usize, scale: f64) -> usize {
    default_k_within(n, scale, 3)
}

/// [`default_k`] over the wider window `⌊c·n^{2/3}⌋ ± radius`.
pub fn default_k_within(n: usize, scale: f64, radius: usize) -> usize {
    let upper = (n / 2).max(2);
    let base = (scale * (n as f64).cbrt().powi(2) + 1e-9).floor() as i64;
    let r = radius as i64;
    let lo = (base - r).clamp(2, upper as i64) as usize;
    let hi = (base + r).clamp(2, upper as i64) as usize;
    (lo..=hi)
        .min_by_key(|&k| (n % k, (k as i64 - base).unsigned_abs(), k))
        .unwrap_or(2)
}
