use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use micronoise::simulate::{simulate_path, NoiseKind, SimConfig};
use rayon::prelude::*;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_micronoise"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = run(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_line(out: &Output) -> String {
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    err.trim_end().to_string()
}

fn kv(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
        .to_string()
}

#[test]
fn simulate_is_deterministic_and_writes_truth() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let summary = ok(&["simulate", "--days", "1", "--noise", "ushape", "--seed", "7", "--out", "a.csv"], d);
    ok(&["simulate", "--days", "1", "--noise", "ushape", "--seed", "7", "--out", "b.csv"], d);
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    assert_eq!(fs::read(d.join("a.csv.truth")).unwrap(), fs::read(d.join("b.csv.truth")).unwrap());

    let config = SimConfig { noise: NoiseKind::UShape, seed: 7, ..SimConfig::default() };
    let (series, truth) = simulate_path(&config, 0).unwrap();
    let sidecar = fs::read_to_string(d.join("a.csv.truth")).unwrap();
    let iv: f64 = kv(&sidecar, "iv").parse().unwrap();
    assert_eq!(iv, truth.iv);
    assert!(sidecar.contains("iq=") && sidecar.contains("gg="));
    assert_eq!(kv(&summary, "n"), series.n().to_string());
    let rows = fs::read_to_string(d.join("a.csv")).unwrap().lines().count();
    assert_eq!(rows, series.n() + 2);
}

#[test]
fn config_file_and_overrides() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("sim.conf"), "# two days, coarse sampling\ndays = 2\navg_dt_seconds = 10\n").unwrap();
    let s = ok(&["simulate", "--config", "sim.conf", "--set", "a0=0.001", "--seed", "3", "--out", "x.csv"], d);
    let n: usize = kv(&s, "n").parse().unwrap();
    assert!((4_400..5_000).contains(&n), "n={n}");
    let bad = run(&["simulate", "--set", "a0=abc"], d);
    assert!(error_line(&bad).starts_with("error[InvalidConfig]"));
    let bad = run(&["simulate", "--set", "u=0.7"], d);
    assert!(error_line(&bad).starts_with("error[InvalidU]"));
}

#[test]
fn test_command_reports_every_statistic() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["simulate", "--seed", "11", "--out", "t.csv"], d);
    let table = ok(&["test", "t.csv"], d);
    for name in ["N", "V", "Vprime", "Vbar"] {
        assert!(table.lines().any(|l| l.starts_with(&format!("{name} "))), "{table}");
    }
    let csv = ok(&["test", "t.csv", "--tests", "N,Vbar", "--csv", "--out", "r/report.csv"], d);
    assert_eq!(csv, fs::read_to_string(d.join("r/report.csv")).unwrap());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "test,n,k,s,statistic,p_value,degenerate");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("N,"));

    let k = ok(&["test", "t.csv", "--tests", "N", "--k", "100", "--csv"], d);
    assert!(k.lines().nth(1).unwrap().contains(",100,,"));
}

#[test]
fn errors_are_single_line_with_code() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("empty.csv"), "").unwrap();
    let out = run(&["test", "empty.csv"], d);
    assert!(error_line(&out).starts_with("error[FewerThanTwoTicks]"));
    assert_ne!(out.status.code(), Some(0));

    let out = run(&["liquidity", "missing.csv"], d);
    assert!(error_line(&out).starts_with("error[Io]"));

    fs::write(d.join("bad.csv"), "time,price\n0,1\n1,x\n").unwrap();
    assert!(error_line(&run(&["test", "bad.csv"], d)).starts_with("error[MalformedRow]"));

    ok(&["simulate", "--days", "1", "--avg-dt", "20", "--seed", "1", "--out", "short.csv"], d);
    let out = run(&["regress", "short.csv", "--m", "600"], d);
    assert!(error_line(&out).starts_with("error[BlockTooSmall]"));
    let out = run(&["test", "short.csv", "--tests", "N", "--k", "2"], d);
    assert!(error_line(&out).starts_with("error[InvalidK]"));
}

#[test]
fn liquidity_on_constant_prices_is_zero() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let mut text = String::from("time,price\n");
    for i in 0..2000 {
        text.push_str(&format!("{},{}\n", i, 100.0));
    }
    fs::write(d.join("flat.csv"), text).unwrap();
    let out = ok(&["liquidity", "flat.csv", "--time-unit", "sec", "--price-scale", "raw"], d);
    for key in ["gg_hat", "gamma_hat", "ci_low", "ci_high"] {
        assert_eq!(kv(&out, key).parse::<f64>().unwrap(), 0.0, "{key}");
    }
    assert_eq!(kv(&out, "ci_low_negative"), "false");
}

#[test]
fn regress_writes_pairs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["simulate", "--days", "2", "--noise", "custom_g", "--set", "g_model=linear_in_vol", "--seed", "5", "--out", "g.csv"], d);
    let out = ok(&["regress", "g.csv", "--out", "pairs.csv"], d);
    let pairs = fs::read_to_string(d.join("pairs.csv")).unwrap();
    assert_eq!(pairs.lines().next().unwrap(), "t_start,sigma2_hat,g_hat");
    assert_eq!(pairs.lines().count() - 1, kv(&out, "pairs").parse::<usize>().unwrap());
    assert!(kv(&out, "beta_hat").parse::<f64>().unwrap().is_finite());
    let r2: f64 = kv(&out, "r_squared").parse().unwrap();
    assert!((0.0..=1.0).contains(&r2));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = |threads: &'static str, out: &'static str| {
        vec!["mc", "--scenario", "ushape_1d", "--reps", "6", "--seed", "9", "--set", "avg_dt_seconds=4", "--threads", threads, "--out", out]
    };
    let a = ok(&args("1", "one"), d);
    let b = ok(&args("4", "four"), d);
    assert_eq!(a.replace("one", ""), b.replace("four", ""));
    let mut files: Vec<_> = fs::read_dir(d.join("one")).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert!(files.len() >= 10);
    for f in files {
        assert_eq!(fs::read(d.join("one").join(&f)).unwrap(), fs::read(d.join("four").join(&f)).unwrap(), "{f:?}");
    }
}

#[test]
fn mc_single_rep() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["mc", "--scenario", "null_1d", "--reps", "1", "--tests", "N", "--out", "s"], d);
    let reps = fs::read_to_string(d.join("s/reps.csv")).unwrap();
    assert_eq!(reps.lines().count(), 2);
    assert!(!d.join("s/roc_N.csv").exists());
}

/// Level of N over simulated null files, end to end through the binary.
#[test]
fn n_level_over_500_null_files() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let p: Vec<f64> = (0..500)
        .into_par_iter()
        .map(|i| {
            let name = format!("null_{i}.csv");
            ok(&["simulate", "--seed", "2024", "--path", &i.to_string(), "--out", &name], d);
            let csv = ok(&["test", &name, "--tests", "N", "--csv"], d);
            fs::remove_file(d.join(&name)).unwrap();
            csv.lines().nth(1).unwrap().split(',').nth(5).unwrap().parse().unwrap()
        })
        .collect();
    let rate = p.iter().filter(|&&v| v < 0.05).count() as f64 / p.len() as f64;
    assert!((0.025..=0.08).contains(&rate), "rejection {rate}");
}

#[test]
fn n_power_on_ushape_files() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let rejected = (0..40)
        .into_par_iter()
        .filter(|i| {
            let name = format!("u_{i}.csv");
            ok(&["simulate", "--noise", "ushape", "--seed", "99", "--path", &i.to_string(), "--out", &name], d);
            let csv = ok(&["test", &name, "--tests", "N", "--csv"], d);
            let p: f64 = csv.lines().nth(1).unwrap().split(',').nth(5).unwrap().parse().unwrap();
            p < 0.05
        })
        .count();
    assert!(rejected as f64 / 40.0 >= 0.8, "{rejected}/40");
}
