//! `micronoise` command-line front end.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use micronoise::liquidity::liquidity_report;
use micronoise::mc::{run_study, write_study, McStudySpec, Scenario};
use micronoise::regress::{default_block_size, regress, write_pairs};
use micronoise::simulate::{simulate_path, SimConfig};
use micronoise::stationarity::{run_test, TestKind, TestReport};
use micronoise::ticks::{load_csv, write_csv, LoadOptions, PriceScale, TimeUnit};
use micronoise::{Error, Result, TickSeries};

#[derive(Parser, Debug)]
#[command(name = "micronoise", version, about = "Volatility estimation and noise-stationarity tests for tick data")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Random seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo runs; never changes any result.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Unit of the time column of input CSVs: sec or yr.
    #[arg(long, global = true, default_value = "yr")]
    time_unit: String,
    /// Price column of input CSVs: raw prices or log-prices.
    #[arg(long, global = true, default_value = "log")]
    price_scale: String,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Simulation config file (key=value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Config override, repeatable: --set kappa=4
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a tick series; writes the CSV and a `.truth` sidecar.
    Simulate {
        #[arg(long)]
        days: Option<usize>,
        /// stationary, ushape or custom_g
        #[arg(long)]
        noise: Option<String>,
        /// Mean gap between observations (seconds).
        #[arg(long)]
        avg_dt: Option<f64>,
        /// Path index within the seed's family of paths.
        #[arg(long, default_value_t = 0)]
        path: u64,
    },
    /// Run stationarity tests on a tick CSV.
    Test {
        input: PathBuf,
        /// Comma-separated subset of N,V,Vprime,Vbar.
        #[arg(long, default_value = "N,V,Vprime,Vbar")]
        tests: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        /// Print CSV instead of the table.
        #[arg(long)]
        csv: bool,
    },
    /// Monte Carlo study of the tests.
    Mc {
        #[arg(long, default_value = "null_1d")]
        scenario: String,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value = "N,V,Vprime,Vbar")]
        tests: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
    },
    /// Aggregate liquidity risk estimate with a 95% interval.
    Liquidity {
        input: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
    },
    /// Regress block noise variance on block volatility.
    Regress {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Observations per block; about ten minutes of ticks by default.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        log_log: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {}", e.code(), msg);
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(threads) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate { days, noise, avg_dt, path } => {
            let mut config = sim_config(g)?;
            if let Some(d) = days {
                config.set("days", &d.to_string())?;
            }
            if let Some(kind) = noise {
                config.set("noise", kind)?;
            }
            if let Some(dt) = avg_dt {
                config.set("avg_dt_seconds", &dt.to_string())?;
            }
            config.validate()?;
            cmd_simulate(&config, *path, g.out.as_deref())
        }
        Command::Test { input, tests, k, s, csv } => {
            let series = load(g, input)?;
            let kinds = parse_tests(tests)?;
            let reports = kinds
                .iter()
                .map(|&kind| run_test(kind, &series, *k, *s))
                .collect::<Result<Vec<_>>>()?;
            if let Some(out) = &g.out {
                write_reports(&reports, create(out)?)?;
            }
            let stdout = io::stdout();
            if *csv {
                write_reports(&reports, stdout.lock())
            } else {
                print_table(&reports, stdout.lock())
            }
        }
        Command::Mc { scenario, reps, tests, alpha, k, s } => {
            let base = sim_config(g)?;
            let spec = McStudySpec {
                reps: *reps,
                scenario: scenario.parse::<Scenario>()?,
                tests: parse_tests(tests)?,
                alpha_level: *alpha,
                base_seed: base.seed,
                k: *k,
                s: *s,
            };
            let result = run_study(&spec, &base)?;
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("mc_out"));
            write_study(&result, &dir)?;
            let mut w = io::stdout().lock();
            writeln!(w, "scenario={} reps={} alpha={} out={}", spec.scenario, spec.reps, spec.alpha_level, dir.display())?;
            writeln!(w, "{:<7} {:>10} {:>10} {:>10} {:>10} {:>5}", "test", "mean", "variance", "ks", "reject", "degen")?;
            for t in &result.summaries {
                writeln!(
                    w,
                    "{:<7} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>5}",
                    t.kind.name(),
                    t.mean,
                    t.variance,
                    t.ks_distance,
                    t.rejection_rate,
                    t.degenerate
                )?;
            }
            Ok(())
        }
        Command::Liquidity { input, k, l } => {
            let series = load(g, input)?;
            let r = liquidity_report(&series, *k, *l)?;
            let text = format!(
                "n={}\nk={}\nl={}\nr={}\ngg_hat={:e}\ngamma_hat={:e}\nci_low={:e}\nci_high={:e}\ndegenerate={}\nci_low_negative={}\n",
                series.n(),
                r.k,
                r.l,
                r.r,
                r.gg_hat,
                r.gamma_hat,
                r.ci_low,
                r.ci_high,
                r.degenerate,
                r.ci_low_negative
            );
            if let Some(out) = &g.out {
                create(out)?.write_all(text.as_bytes())?;
            }
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
        Command::Regress { inputs, m, log_log } => {
            let series = inputs.iter().map(|p| load(g, p)).collect::<Result<Vec<_>>>()?;
            let m = m.unwrap_or_else(|| default_block_size(&series[0]));
            let r = regress(&series, m, *log_log)?;
            if let Some(out) = &g.out {
                let mut w = create(out)?;
                write_pairs(&r.pairs, &mut w)?;
                w.flush()?;
            }
            let mut w = io::stdout().lock();
            writeln!(w, "block_size={}", r.block_size)?;
            writeln!(w, "log_log={}", r.log_log)?;
            writeln!(w, "pairs={}", r.pairs.len())?;
            writeln!(w, "used={}", r.used)?;
            writeln!(w, "dropped={}", r.dropped)?;
            writeln!(w, "beta_hat={:e}", r.beta_hat)?;
            writeln!(w, "alpha_hat={:e}", r.alpha_hat)?;
            writeln!(w, "r_squared={}", r.r_squared)?;
            Ok(())
        }
    }
}

fn sim_config(g: &Global) -> Result<SimConfig> {
    let mut config = SimConfig::default();
    if let Some(path) = &g.config {
        config.apply_text(&fs::read_to_string(path)?)?;
    }
    let pairs = g
        .overrides
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::InvalidConfig(format!("expected KEY=VALUE, got {kv:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    config.apply_pairs(pairs)?;
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn load(g: &Global, path: &Path) -> Result<TickSeries> {
    let options = LoadOptions {
        time_unit: g.time_unit.parse::<TimeUnit>()?,
        price_scale: g.price_scale.parse::<PriceScale>()?,
        ..LoadOptions::default()
    };
    load_csv(File::open(path)?, options)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn parse_tests(list: &str) -> Result<Vec<TestKind>> {
    let mut kinds = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind = item.parse::<TestKind>()?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(Error::InvalidConfig("no tests selected".into()));
    }
    Ok(kinds)
}

fn cmd_simulate(config: &SimConfig, path: u64, out: Option<&Path>) -> Result<()> {
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("ticks.csv"));
    let (series, truth) = simulate_path(config, path)?;
    let mut w = create(&out)?;
    write_csv(&series, &mut w)?;
    w.flush()?;
    let truth_path = truth_path(&out);
    let mut w = create(&truth_path)?;
    truth.write_sidecar(&mut w)?;
    w.flush()?;
    println!("n={}", series.n());
    println!("iv={:e}", truth.iv);
    println!("gg={:e}", truth.gg);
    println!("out={}", out.display());
    println!("truth={}", truth_path.display());
    Ok(())
}

/// `ticks.csv` → `ticks.csv.truth`.
fn truth_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".truth");
    PathBuf::from(name)
}

fn write_reports<W: Write>(reports: &[TestReport], mut w: W) -> Result<()> {
    writeln!(w, "test,n,k,s,statistic,p_value,degenerate")?;
    for r in reports {
        let s = r.s.map_or(String::new(), |s| s.to_string());
        writeln!(w, "{},{},{},{},{:e},{:e},{}", r.kind, r.n, r.k, s, r.statistic, r.p_value, r.degenerate)?;
    }
    w.flush()?;
    Ok(())
}

fn print_table<W: Write>(reports: &[TestReport], mut w: W) -> Result<()> {
    writeln!(w, "{:<7} {:>8} {:>6} {:>4} {:>11} {:>9} {:>6}", "test", "n", "K", "s", "statistic", "p-value", "degen")?;
    for r in reports {
        let s = r.s.map_or("-".to_string(), |s| s.to_string());
        writeln!(
            w,
            "{:<7} {:>8} {:>6} {:>4} {:>11.4} {:>9.4} {:>6}",
            r.kind.name(),
            r.n,
            r.k,
            s,
            r.statistic,
            r.p_value,
            r.degenerate
        )?;
    }
    Ok(())
}
