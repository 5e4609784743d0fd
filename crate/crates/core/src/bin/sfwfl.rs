use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sfwfl::harness::{
    emit_csv, format_csv, run_experiment, run_selftest, ExperimentConfig, RawConfig, RunSummary, SEED_ENV,
};
use sfwfl::metrics::{fit_slope, speedup};
use sfwfl::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_SELFTEST: u8 = 3;

#[derive(Parser)]
#[command(name = "sfwfl", version, about = "Server-free wireless federated learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trial-averaged CSV.
    Run {
        config: PathBuf,
        /// Output CSV (overrides run.output; stdout when neither is set).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment per value of a single key.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`
        #[arg(long)]
        vary: String,
        /// Base output path; each run writes `<stem>_<key>-<value>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the log-log slope of a CSV column over a round window.
    Fit {
        csv: PathBuf,
        /// `k_low,k_high`
        #[arg(long)]
        window: String,
        #[arg(long, default_value = "err_alpha")]
        column: String,
    },
    /// Wall-time speedup of zero-wait over compute-and-wait training.
    Speedup {
        #[arg(long = "M")]
        m: f64,
        #[arg(long = "D")]
        d: f64,
        #[arg(long = "tau-l", default_value_t = 0.0)]
        tau_l: f64,
        #[arg(long = "tau-g", default_value_t = 0.0)]
        tau_g: f64,
    },
    /// Run the built-in property battery.
    Selftest {
        /// Also write the check results as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Validation(String),
    Selftest,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn load(path: &Path) -> Result<RawConfig, Failure> {
    let mut raw = RawConfig::load(path)?;
    if let Ok(seed) = std::env::var(SEED_ENV) {
        raw.set("run.seed", seed.trim())?;
    }
    Ok(raw)
}

fn report(summary: &RunSummary) {
    let done = summary.trials.len() - summary.divergences;
    eprintln!(
        "{} trials completed, {} diverged; mu = {}, lambda = {}, G = {}, C = {}, L = {}",
        done,
        summary.divergences,
        summary.constants.mu,
        summary.constants.lambda_smooth,
        summary.constants.g,
        summary.constants.c,
        summary.contraction.l
    );
    if !summary.theta_valid {
        eprintln!("warning: theta does not satisfy theta > (alpha - 1) / (M L)");
    }
    if let Some(fit) = &summary.slope {
        eprintln!("err_alpha slope over [{}, {}]: {} (r^2 = {})", fit.window.0, fit.window.1, fit.exponent, fit.r_squared);
    }
    if let Some(l3) = &summary.lemma3 {
        eprintln!("deviation bound max ratio: {} at round {}", l3.max_ratio, l3.worst_round);
    }
    if let Some(s) = summary.speedup {
        eprintln!("speedup: {s:?}");
    }
}

fn write_out(summary: &RunSummary, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => Ok(emit_csv(summary, path)?),
        None => {
            print!("{}", format_csv(summary));
            Ok(())
        }
    }
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let cfg: ExperimentConfig = load(config)?.build()?;
    let summary = run_experiment(&cfg)?;
    report(&summary);
    write_out(&summary, out.or(cfg.run.output.clone()).as_deref())
}

fn sweep(config: &Path, vary: &str, out: Option<PathBuf>) -> Result<(), Failure> {
    let (key, values) = vary
        .split_once('=')
        .ok_or_else(|| Failure::Usage(format!("--vary expects key=v1,v2,..., got `{vary}`")))?;
    let raw = load(config)?;
    let base = out
        .or_else(|| raw.get("run.output").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep").to_string();
    let short = key.rsplit('.').next().unwrap_or(key);
    for value in values.split(',').map(str::trim).filter(|v| !v.is_empty()) {
        let mut raw = raw.clone();
        raw.set(key, value)?;
        let cfg = raw.build()?;
        let summary = run_experiment(&cfg)?;
        let path = base.with_file_name(format!("{stem}_{short}-{value}.csv"));
        eprintln!("{key} = {value} -> {}", path.display());
        report(&summary);
        emit_csv(&summary, &path)?;
    }
    Ok(())
}

fn fit(csv: &Path, window: &str, column: &str) -> Result<(), Failure> {
    let (lo, hi) = window
        .split_once(',')
        .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
        .ok_or_else(|| Failure::Usage(format!("--window expects k_low,k_high, got `{window}`")))?;
    let text = std::fs::read_to_string(csv).map_err(Error::from)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == column)
        .ok_or_else(|| Failure::Usage(format!("column `{column}` not in header")))?;
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Failure::Validation(format!("line {}: malformed row", i + 2));
        let k: usize = fields.first().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let v = fields.get(col).ok_or_else(bad)?;
        if v.is_empty() {
            continue;
        }
        points.push((k, v.parse::<f64>().map_err(|_| bad())?));
    }
    let f = fit_slope(&points, lo, hi)?;
    println!("exponent {}\nintercept {}\nr_squared {}\npoints {}", f.exponent, f.intercept, f.r_squared, f.points);
    Ok(())
}

fn selftest(out: Option<PathBuf>) -> Result<(), Failure> {
    let rep = run_selftest()?;
    for c in &rep.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(path) = out {
        std::fs::write(path, rep.to_csv()).map_err(Error::from)?;
    }
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure::Selftest)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Sweep { config, vary, out } => sweep(&config, &vary, out),
        Command::Fit { csv, window, column } => fit(&csv, &window, &column),
        Command::Speedup { m, d, tau_l, tau_g } => speedup(m, d, tau_l, tau_g)
            .map(|s| println!("{s:?}"))
            .map_err(Failure::from),
        Command::Selftest { out } => selftest(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Selftest) => {
            eprintln!("selftest failed");
            ExitCode::from(EXIT_SELFTEST)
        }
    }
}
