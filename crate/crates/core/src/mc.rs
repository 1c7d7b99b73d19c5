//! Monte Carlo studies of the stationarity tests: null densities, rejection
//! rates and ROC curves over simulated paths.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::{tsrv_prices, wtsrv_prices};
use crate::grids::default_k;
use crate::simulate::{map_paths, NoiseKind, SimConfig, SimTruth};
use crate::stationarity::{default_k_v, default_s, run_test, TestKind, TestReport};
use crate::sum::cmean;
use crate::ticks::TickSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Null1d,
    Null5d,
    UShape1d,
    UShape5d,
    /// The base configuration unchanged.
    Custom,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Null1d => "null_1d",
            Scenario::Null5d => "null_5d",
            Scenario::UShape1d => "ushape_1d",
            Scenario::UShape5d => "ushape_5d",
            Scenario::Custom => "custom",
        }
    }

    /// `base` with the scenario's horizon and noise kind.
    pub fn config(self, base: &SimConfig) -> SimConfig {
        let mut c = base.clone();
        match self {
            Scenario::Null1d => (c.days, c.noise) = (1, NoiseKind::Stationary),
            Scenario::Null5d => (c.days, c.noise) = (5, NoiseKind::Stationary),
            Scenario::UShape1d => (c.days, c.noise) = (1, NoiseKind::UShape),
            Scenario::UShape5d => (c.days, c.noise) = (5, NoiseKind::UShape),
            Scenario::Custom => {}
        }
        c
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null_1d" => Ok(Scenario::Null1d),
            "null_5d" => Ok(Scenario::Null5d),
            "ushape_1d" => Ok(Scenario::UShape1d),
            "ushape_5d" => Ok(Scenario::UShape5d),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::InvalidConfig(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct McStudySpec {
    pub reps: usize,
    pub scenario: Scenario,
    pub tests: Vec<TestKind>,
    pub alpha_level: f64,
    pub base_seed: u64,
    /// Fixed K for every test; per-test defaults when unset.
    pub k: Option<usize>,
    /// Fixed window length for V and V′.
    pub s: Option<usize>,
}

impl McStudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be >= 1".into()));
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha_level must lie in (0, 1), got {}",
                self.alpha_level
            )));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidConfig("no tests selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub kind: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub degenerate: bool,
    pub k: usize,
    pub s: Option<usize>,
    /// `U` (or `Ū`) rescaled as in the alternative-regime expansion, and
    /// the sum of its bias terms computed from the simulation truth.
    pub bias_check: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct RepRecord {
    pub rep: u64,
    pub n: usize,
    pub iv: f64,
    pub gg: f64,
    pub tsrv: f64,
    pub wtsrv: f64,
    pub outcomes: Vec<TestOutcome>,
}

impl RepRecord {
    pub fn outcome(&self, kind: TestKind) -> Option<&TestOutcome> {
        self.outcomes.iter().find(|o| o.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSummary {
    pub kind: TestKind,
    pub reps: usize,
    pub mean: f64,
    pub variance: f64,
    pub ks_distance: f64,
    pub rejection_rate: f64,
    pub degenerate: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub level: f64,
    pub threshold: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
    pub normal_density: f64,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub spec: McStudySpec,
    pub records: Vec<RepRecord>,
    pub summaries: Vec<TestSummary>,
    /// Companion stationary-noise run used for the ROC thresholds; absent
    /// when the scenario itself is a null scenario.
    pub null_records: Option<Vec<RepRecord>>,
    pub roc: BTreeMap<TestKind, Vec<RocPoint>>,
}

/// Type-I levels of the ROC sweep: 0.001, 0.002, 0.005, then 0.01 to 0.5
/// in steps of 0.01.
pub fn level_grid() -> Vec<f64> {
    let mut levels = vec![0.001, 0.002, 0.005];
    levels.extend((1..=50).map(|i| i as f64 / 100.0));
    levels
}

/// `sup |F_n − Φ|` of the sample against the standard normal.
pub fn ks_distance_normal(samples: &[f64]) -> f64 {
    let mut x: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
    if x.is_empty() {
        return f64::NAN;
    }
    x.sort_by(f64::total_cmp);
    let phi = Normal::standard();
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = phi.cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn rejection_rate(p_values: &[f64], level: f64) -> f64 {
    if p_values.is_empty() {
        return f64::NAN;
    }
    p_values.iter().filter(|&&p| p < level).count() as f64 / p_values.len() as f64
}

/// Empirical `(1 − q)` quantile of `values`: the threshold above which a
/// fraction of at most `q` of them lie.
pub fn upper_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let allowed = (q * n as f64 + 1e-9).floor() as usize;
    if allowed >= n {
        return f64::NEG_INFINITY;
    }
    v[n - 1 - allowed]
}

/// Power of `alt` at each level when rejecting above the null quantile.
pub fn roc_curve(null: &[f64], alt: &[f64], levels: &[f64]) -> Vec<RocPoint> {
    levels
        .iter()
        .map(|&level| {
            let threshold = upper_quantile(null, level);
            let power = alt.iter().filter(|&&a| a > threshold).count() as f64 / alt.len() as f64;
            RocPoint { level, threshold, power }
        })
        .collect()
}

/// Density histogram on `[lo, hi)` with the standard normal density at the
/// bin centres. Samples outside the range count toward the total only.
pub fn histogram(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<HistogramBin> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in samples {
        if v >= lo && v < hi {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    let total = samples.len().max(1) as f64;
    let phi = Normal::standard();
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let a = lo + b as f64 * width;
            HistogramBin {
                lo: a,
                hi: a + width,
                density: c as f64 / (total * width),
                normal_density: phi.pdf(a + 0.5 * width),
            }
        })
        .collect()
}

/// Bias terms of the rescaled `U` and `Ū` under a time-varying `g`, from
/// the simulation truth. `h = 3g²` (Gaussian noise), and the spot `σ^(g)`
/// at the window ends is replaced by its window average.
fn bias_check(kind: TestKind, report: &TestReport, truth: &SimTruth) -> Option<(f64, f64)> {
    let n = report.n as f64;
    let k = report.k as f64;
    let u = *report.intermediates.get("u")?;
    let mean_h = cmean(truth.g_path.iter().map(|g| 3.0 * g * g));
    let gg = truth.gg;
    match kind {
        TestKind::V => {
            let s = report.s? as f64;
            let e1 = (s - 2.0).powi(2) / (3.0 * s * s) * gg;
            let e2 = -(s * k) / (3.0 * n) * gg;
            let e3 = 2.0 * n / (s * k * k) * mean_h;
            Some((n / (s * k * k) * u, e1 + e2 + e3))
        }
        TestKind::VBar => {
            let e1 = 2.0 / 3.0 * gg;
            let e2 = 2.0 * n / (k * k) * mean_h;
            Some((n / (k * k) * u, e1 + e2))
        }
        _ => None,
    }
}

fn evaluate(
    rep: u64,
    series: &TickSeries,
    truth: &SimTruth,
    tests: &[TestKind],
    k: Option<usize>,
    s: Option<usize>,
) -> Result<RepRecord> {
    let n = series.n();
    let kk = default_k(n, 1.0);
    let mut outcomes = Vec::with_capacity(tests.len());
    for &kind in tests {
        let report = run_test(kind, series, k, s)?;
        outcomes.push(TestOutcome {
            kind,
            statistic: report.statistic,
            p_value: report.p_value,
            degenerate: report.degenerate,
            k: report.k,
            s: report.s,
            bias_check: bias_check(kind, &report, truth),
        });
    }
    Ok(RepRecord {
        rep,
        n,
        iv: truth.iv,
        gg: truth.gg,
        tsrv: tsrv_prices(series.prices(), kk)?,
        wtsrv: wtsrv_prices(series.prices(), kk)?,
        outcomes,
    })
}

/// Simulates `reps` paths of `config` and evaluates `tests` on each.
pub fn run_reps(
    config: &SimConfig,
    reps: usize,
    tests: &[TestKind],
    k: Option<usize>,
    s: Option<usize>,
) -> Result<Vec<RepRecord>> {
    map_paths(config, reps, |i, series, truth| evaluate(i, &series, &truth, tests, k, s))
}

fn summarize(records: &[RepRecord], kind: TestKind, level: f64) -> TestSummary {
    let outcomes: Vec<&TestOutcome> = records.iter().filter_map(|r| r.outcome(kind)).collect();
    let stats: Vec<f64> = outcomes.iter().map(|o| o.statistic).collect();
    let p: Vec<f64> = outcomes.iter().map(|o| o.p_value).collect();
    let mean = cmean(stats.iter().copied());
    let variance = if stats.len() > 1 {
        stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (stats.len() - 1) as f64
    } else {
        0.0
    };
    TestSummary {
        kind,
        reps: stats.len(),
        mean,
        variance,
        ks_distance: ks_distance_normal(&stats),
        rejection_rate: rejection_rate(&p, level),
        degenerate: outcomes.iter().filter(|o| o.degenerate).count(),
    }
}

pub fn statistics(records: &[RepRecord], kind: TestKind) -> Vec<f64> {
    records.iter().filter_map(|r| r.outcome(kind)).map(|o| o.statistic).collect()
}

pub fn p_values(records: &[RepRecord], kind: TestKind) -> Vec<f64> {
    records.iter().filter_map(|r| r.outcome(kind)).map(|o| o.p_value).collect()
}

/// Runs the study. Non-null scenarios also run the stationary-noise twin
/// (seeds offset by `reps`) to place the ROC thresholds.
pub fn run_study(spec: &McStudySpec, base: &SimConfig) -> Result<StudyResult> {
    spec.validate()?;
    let mut config = spec.scenario.config(base);
    config.seed = spec.base_seed;
    config.validate()?;
    let records = run_reps(&config, spec.reps, &spec.tests, spec.k, spec.s)?;
    let summaries = spec
        .tests
        .iter()
        .map(|&kind| summarize(&records, kind, spec.alpha_level))
        .collect();

    let mut roc = BTreeMap::new();
    let null_records = if config.noise == NoiseKind::Stationary {
        None
    } else {
        let mut null_config = config.clone();
        null_config.noise = NoiseKind::Stationary;
        null_config.seed = spec.base_seed.wrapping_add(spec.reps as u64);
        let null = run_reps(&null_config, spec.reps, &spec.tests, spec.k, spec.s)?;
        for &kind in &spec.tests {
            roc.insert(kind, roc_curve(&statistics(&null, kind), &statistics(&records, kind), &level_grid()));
        }
        Some(null)
    };
    Ok(StudyResult { spec: spec.clone(), records, summaries, null_records, roc })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_records<W: Write>(records: &[RepRecord], tests: &[TestKind], mut w: W) -> Result<()> {
    write!(w, "rep,n,iv,gg,tsrv,wtsrv")?;
    for t in tests {
        write!(w, ",{t}_stat,{t}_p,{t}_degenerate,{t}_k,{t}_s")?;
    }
    for t in tests.iter().filter(|t| matches!(t, TestKind::V | TestKind::VBar)) {
        write!(w, ",{t}_u_scaled,{t}_bias_sum")?;
    }
    writeln!(w)?;
    for r in records {
        write!(w, "{},{},{:e},{:e},{:e},{:e}", r.rep, r.n, r.iv, r.gg, r.tsrv, r.wtsrv)?;
        for o in &r.outcomes {
            let s = o.s.map_or(String::new(), |s| s.to_string());
            write!(w, ",{:e},{:e},{},{},{}", o.statistic, o.p_value, o.degenerate, o.k, s)?;
        }
        for o in r.outcomes.iter().filter(|o| matches!(o.kind, TestKind::V | TestKind::VBar)) {
            match o.bias_check {
                Some((u, e)) => write!(w, ",{u:e},{e:e}")?,
                None => write!(w, ",,")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Writes `reps.csv`, `density_<test>.csv`, `rejection.csv` and, for
/// non-null scenarios, `null_reps.csv` and `roc_<test>.csv` into `dir`.
pub fn write_study(result: &StudyResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let tests = &result.spec.tests;
    let mut w = create(dir, "reps.csv")?;
    write_records(&result.records, tests, &mut w)?;
    w.flush()?;
    if let Some(null) = &result.null_records {
        let mut w = create(dir, "null_reps.csv")?;
        write_records(null, tests, &mut w)?;
        w.flush()?;
    }

    for &kind in tests {
        let mut w = create(dir, &format!("density_{kind}.csv"))?;
        writeln!(w, "bin_lo,bin_hi,density,normal_density")?;
        for b in histogram(&statistics(&result.records, kind), 40, -5.0, 5.0) {
            writeln!(w, "{},{},{:e},{:e}", b.lo, b.hi, b.density, b.normal_density)?;
        }
        w.flush()?;
    }

    let mut w = create(dir, "rejection.csv")?;
    writeln!(w, "test,reps,alpha_level,rejection_rate,mean,variance,ks_distance,degenerate")?;
    for s in &result.summaries {
        writeln!(
            w,
            "{},{},{},{},{:e},{:e},{},{}",
            s.kind, s.reps, result.spec.alpha_level, s.rejection_rate, s.mean, s.variance, s.ks_distance, s.degenerate
        )?;
    }
    w.flush()?;

    for (kind, points) in &result.roc {
        let mut w = create(dir, &format!("roc_{kind}.csv"))?;
        writeln!(w, "level,threshold,power")?;
        for p in points {
            writeln!(w, "{},{:e},{}", p.level, p.threshold, p.power)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Default K and window length the study uses for `kind` at `n`.
pub fn default_tuning(kind: TestKind, n: usize) -> (usize, Option<usize>) {
    match kind {
        TestKind::N => (default_k(n, 1.0), None),
        TestKind::V | TestKind::VPrime => {
            let k = default_k_v(n);
            (k, Some(default_s(n, k)))
        }
        TestKind::VBar => (default_k_v(n), None),
    }
}
