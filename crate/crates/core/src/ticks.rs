//! Tick-data model and CSV ingestion.
//!
//! A [`TickSeries`] holds strictly increasing observation times (in years)
//! and the observed log-prices at those times. Index `i` is the i-th
//! observation `t_i`, with `t_0` the reference start and `n` increments.
//!
//! Gaps (overnight, halts) are not special-cased: the loaded window is one
//! continuous interval.

use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Seconds in one trading day.
pub const SECONDS_PER_DAY: f64 = 23_400.0;
/// Trading days per year.
pub const DAYS_PER_YEAR: f64 = 252.0;
/// One trading second expressed in years.
pub const YEARS_PER_SECOND: f64 = 1.0 / (SECONDS_PER_DAY * DAYS_PER_YEAR);

#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    times: Vec<f64>,
    prices: Vec<f64>,
}

impl TickSeries {
    /// Builds a validated series from times (years) and log-prices.
    pub fn new(times: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        check_invariants(&times, &prices)?;
        Ok(Self { times, prices })
    }

    /// Re-checks the invariants and hands the series back.
    pub fn validate(self) -> Result<Self> {
        check_invariants(&self.times, &self.prices)?;
        Ok(self)
    }

    /// Number of increments.
    pub fn n(&self) -> usize {
        self.prices.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn duration(&self) -> f64 {
        self.times[self.n()] - self.times[0]
    }

    /// Observations `start..=end`, re-indexed from zero.
    pub fn slice(&self, start: usize, end: usize) -> Result<TickSeries> {
        if start >= end || end > self.n() {
            return Err(Error::InvalidIndices(format!(
                "slice {start}..={end} of a series with n={}",
                self.n()
            )));
        }
        Ok(TickSeries {
            times: self.times[start..=end].to_vec(),
            prices: self.prices[start..=end].to_vec(),
        })
    }

    /// Applies `p -> scale * p + shift` to every price.
    pub fn affine(&self, scale: f64, shift: f64) -> TickSeries {
        TickSeries {
            times: self.times.clone(),
            prices: self.prices.iter().map(|p| scale * p + shift).collect(),
        }
    }

    /// Mirrors times around the window and reverses the price order.
    pub fn reversed(&self) -> TickSeries {
        let first = self.times[0];
        let last = self.times[self.n()];
        TickSeries {
            times: self.times.iter().rev().map(|t| first + last - t).collect(),
            prices: self.prices.iter().rev().copied().collect(),
        }
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.times, self.prices)
    }
}

fn check_invariants(times: &[f64], prices: &[f64]) -> Result<()> {
    if times.len() != prices.len() {
        return Err(Error::InvalidIndices(format!(
            "{} times but {} prices",
            times.len(),
            prices.len()
        )));
    }
    if times.len() < 2 {
        return Err(Error::FewerThanTwoTicks(times.len()));
    }
    for (index, (t, p)) in times.iter().zip(prices).enumerate() {
        if !t.is_finite() {
            return Err(Error::NonFiniteValue { field: "time", index });
        }
        if !p.is_finite() {
            return Err(Error::NonFiniteValue { field: "price", index });
        }
    }
    if let Some(pos) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneTimes { index: pos + 1 });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeUnit {
    /// Seconds of trading time; converted with one day = 23 400 s = 1/252 yr.
    Seconds,
    #[default]
    Years,
}

impl TimeUnit {
    fn to_years(self, t: f64) -> f64 {
        match self {
            TimeUnit::Seconds => t * YEARS_PER_SECOND,
            TimeUnit::Years => t,
        }
    }
}

impl FromStr for TimeUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sec" | "s" | "seconds" => Ok(TimeUnit::Seconds),
            "yr" | "y" | "years" => Ok(TimeUnit::Years),
            other => Err(Error::InvalidConfig(format!("unknown time unit {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceScale {
    /// Raw prices; log-transformed on load.
    Raw,
    #[default]
    Log,
}

impl FromStr for PriceScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(PriceScale::Raw),
            "log" => Ok(PriceScale::Log),
            other => Err(Error::InvalidConfig(format!("unknown price scale {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub time_unit: TimeUnit,
    pub price_scale: PriceScale,
    /// Collapse duplicate timestamps, keeping the last record in file order.
    pub dedup: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            time_unit: TimeUnit::Years,
            price_scale: PriceScale::Log,
            dedup: true,
        }
    }
}

/// Reads a `time,price` CSV into a validated series.
///
/// Unsorted rows are sorted by time (stable, so file order decides among
/// equal timestamps); with `dedup` the last record per timestamp wins.
pub fn load_csv<R: Read>(source: R, options: LoadOptions) -> Result<TickSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    let header: Vec<&str> = headers.iter().collect();
    if header.len() != 2
        || !header[0].eq_ignore_ascii_case("time")
        || !header[1].eq_ignore_ascii_case("price")
    {
        if header.iter().all(|h| h.is_empty()) {
            return Err(Error::FewerThanTwoTicks(0));
        }
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("expected header `time,price`, found `{}`", header.join(",")),
        });
    }

    let mut rows: Vec<(f64, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let time = parse_field(&record[0], line, "time")?;
        let raw = parse_field(&record[1], line, "price")?;
        let index = rows.len();
        if !time.is_finite() {
            return Err(Error::NonFiniteValue { field: "time", index });
        }
        let price = match options.price_scale {
            PriceScale::Log => raw,
            PriceScale::Raw => raw.ln(),
        };
        if !price.is_finite() {
            return Err(Error::NonFiniteValue { field: "price", index });
        }
        rows.push((options.time_unit.to_years(time), price));
    }

    if rows.windows(2).any(|w| w[1].0 < w[0].0) {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if options.dedup {
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
        for row in rows {
            match kept.last_mut() {
                Some(last) if last.0 == row.0 => *last = row,
                _ => kept.push(row),
            }
        }
        rows = kept;
    }

    let (times, prices): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    TickSeries::new(times, prices)
}

fn parse_field(field: &str, line: u64, name: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::MalformedRow {
        line,
        reason: format!("cannot parse {name} field {field:?} as a decimal"),
    })
}

fn csv_error(err: csv::Error, fallback_line: u64) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(fallback_line);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::MalformedRow {
            line,
            reason: format!("{other:?}"),
        },
    }
}

/// Writes the series as `time,price` with 17 significant digits, so that
/// [`load_csv`] reproduces every value bit for bit.
pub fn write_csv<W: Write>(series: &TickSeries, mut sink: W) -> Result<()> {
    writeln!(sink, "time,price")?;
    for (t, p) in series.times.iter().zip(&series.prices) {
        writeln!(sink, "{t:.16e},{p:.16e}")?;
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<TickSeries> {
        load_csv(text.as_bytes(), LoadOptions::default())
    }

    #[test]
    fn minimal_parse() {
        let s = load("time,price\n0.0,4.60\n1.0,4.61\n2.0,4.59").unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.prices(), &[4.60, 4.61, 4.59]);
    }

    #[test]
    fn duplicate_time_keeps_last_record() {
        let s = load("time,price\n0.0,4.60\n1.0,4.61\n1.0,4.70\n2.0,4.59\n").unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.prices()[1], 4.70);
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let s = load("time,price\n2.0,3.0\n0.0,1.0\n1.0,2.0\n").unwrap();
        assert_eq!(s.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.prices(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn duplicates_without_dedup_are_rejected() {
        let opts = LoadOptions { dedup: false, ..LoadOptions::default() };
        let err = load_csv("time,price\n0,1\n1,1\n1,2\n".as_bytes(), opts).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneTimes { index: 2 }));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = load("time,price\n0.0,4.60\n1.0,abc\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, .. }), "{err:?}");
        let err = load("time,price\n0.0,4.60\n1.0\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, .. }), "{err:?}");
        let err = load("t,p\n0.0,4.60\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn too_few_ticks() {
        assert!(matches!(load("time,price\n0.0,1.0\n"), Err(Error::FewerThanTwoTicks(1))));
        assert!(matches!(load(""), Err(Error::FewerThanTwoTicks(0))));
        assert!(matches!(
            TickSeries::new(vec![], vec![]),
            Err(Error::FewerThanTwoTicks(0))
        ));
    }

    #[test]
    fn non_finite_values_rejected() {
        assert!(matches!(
            load("time,price\n0.0,NaN\n1.0,1.0\n"),
            Err(Error::NonFiniteValue { field: "price", index: 0 })
        ));
        assert!(matches!(
            load("time,price\n0.0,1.0\ninf,1.0\n"),
            Err(Error::NonFiniteValue { field: "time", index: 1 })
        ));
        let raw = LoadOptions { price_scale: PriceScale::Raw, ..LoadOptions::default() };
        assert!(matches!(
            load_csv("time,price\n0,100\n1,0\n".as_bytes(), raw),
            Err(Error::NonFiniteValue { field: "price", index: 1 })
        ));
    }

    #[test]
    fn raw_prices_and_seconds_are_converted() {
        let opts = LoadOptions {
            time_unit: TimeUnit::Seconds,
            price_scale: PriceScale::Raw,
            dedup: true,
        };
        let s = load_csv("time,price\n0,100\n23400,101\n".as_bytes(), opts).unwrap();
        assert_eq!(s.prices()[0], 100f64.ln());
        assert!((s.times()[1] - 1.0 / 252.0).abs() < 1e-15);
    }

    #[test]
    fn validate_detects_ties_and_is_idempotent() {
        let bad = TickSeries { times: vec![0.0, 1.0, 1.0], prices: vec![0.0; 3] };
        assert!(matches!(bad.validate(), Err(Error::NonMonotoneTimes { index: 2 })));
        let good = TickSeries::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
        let once = good.clone().validate().unwrap();
        assert_eq!(once.clone().validate().unwrap(), once);
        assert_eq!(once, good);
    }

    #[test]
    fn reversal_mirrors_times() {
        let s = TickSeries::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 4.0]).unwrap();
        let r = s.reversed();
        assert_eq!(r.times(), &[0.0, 2.0, 3.0]);
        assert_eq!(r.prices(), &[4.0, 2.0, 1.0]);
    }
}
