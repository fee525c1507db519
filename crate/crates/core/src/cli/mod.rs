//! `turboce` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error,
//! 3 selftest failure.

pub mod config;
pub mod selftest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::harness::ga::{calibrate_c, Calibration, FitnessKind};
use crate::harness::{run_sweep, HarnessError, SweepResult, SweepSpec};
use crate::ldpc::{self, LdpcCode};
use config::{ConfigError, RunConfig};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_SELFTEST: i32 = 3;

/// Environment variable overriding the master seed below the config file.
pub const SEED_ENV: &str = "TURBOCE_SEED";

pub const RESULTS_HEADER: &str =
    "snr_db,estimator,iteration,fer,fer_lo,fer_hi,mse,trials,frame_errors,seed";

#[derive(Parser, Debug)]
#[command(name = "turboce", version, about = "Data-aided channel estimation link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value` override, applied after the file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Omit timestamp lines from output files.
    #[arg(long)]
    deterministic: bool,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// FER / MSE versus SNR for each configured estimator.
    Sweep(Common),
    /// GA search for the soft-param constant C.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Optimise the known-optimum fitness |C - 5| instead.
        #[arg(long)]
        test_fitness: bool,
    },
    /// Oracle-equivalence checks.
    Selftest(Common),
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::Channel(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs the command. `seed_env` is the
/// value of [`SEED_ENV`], if set.
pub fn run<I, T>(args: I, seed_env: Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Sweep(common) => cmd_sweep(&common, seed_env),
        Command::Calibrate {
            common,
            test_fitness,
        } => cmd_calibrate(&common, seed_env, test_fitness),
        Command::Selftest(common) => cmd_selftest(&common, seed_env),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            EXIT_RUNTIME
        }
    }
}

/// Builds the effective configuration: defaults, then the seed environment
/// variable, then the config file, then `--set` overrides, then `--out`.
fn effective_config(common: &Common, seed_env: Option<String>) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(seed) = seed_env {
        cfg.set("harness.master_seed", &seed).map_err(|e| {
            Failure::Config(format!("{SEED_ENV}: {e}"))
        })?;
    }
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    for o in &common.set {
        cfg.apply_override(o)?;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn load_code(cfg: &RunConfig) -> Result<LdpcCode, Failure> {
    match &cfg.code_path {
        None => Ok(LdpcCode::shipped()),
        Some(p) => ldpc::load_code(p).map_err(|e| {
            Failure::Runtime(format!("cannot load code from {}: {e}", p.display()))
        }),
    }
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join("effective.conf");
    fs::write(&path, cfg.to_text()).map_err(|e| io_err(&path, e))
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| io_err(&path, e))
}

fn timestamp_line(deterministic: bool) -> String {
    if deterministic {
        return String::new();
    }
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated_unix_time={secs}\n")
}

/// Reads a calibrated C written by `calibrate`.
fn read_c(path: &Path) -> Result<f64, Failure> {
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::Config(format!("receiver.c_from: cannot read {}: {e}", path.display()))
    })?;
    let c: f64 = text.trim().parse().map_err(|e| {
        Failure::Config(format!("receiver.c_from: {}: {e}", path.display()))
    })?;
    if !(c.is_finite() && c >= 0.0) {
        return Err(Failure::Config(format!(
            "receiver.c_from: {} holds {c}, expected a finite non-negative value",
            path.display()
        )));
    }
    Ok(c)
}

/// `results.csv` body: one row per (SNR, configuration, iteration).
pub fn results_csv(spec: &SweepSpec, result: &SweepResult) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for p in &result.points {
        for (i, s) in p.iterations.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                p.snr_db,
                p.label,
                i,
                s.fer,
                s.fer_lo,
                s.fer_hi,
                s.mean_mse,
                p.trials_run,
                s.frame_errors,
                spec.master_seed
            );
        }
    }
    out
}

/// `curves.csv` body: SNR against final-iteration FER, one column per
/// configuration.
pub fn curves_csv(spec: &SweepSpec, result: &SweepResult) -> String {
    let n = spec.configs.len();
    let mut out = String::from("snr_db");
    for c in &spec.configs {
        let _ = write!(out, ",{}", c.label);
    }
    out.push('\n');
    for (s, snr) in spec.snr_points_db.iter().enumerate() {
        let _ = write!(out, "{snr}");
        for c in 0..n {
            let _ = write!(out, ",{}", result.point(s, c, n).final_stats().fer);
        }
        out.push('\n');
    }
    out
}

/// `calibration.csv` body: one row per generation.
pub fn calibration_csv(cal: &Calibration) -> String {
    let mut out = String::from("generation,best_c,best_fitness,mean_fitness\n");
    for g in &cal.history {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            g.generation, g.best_c, g.best_fitness, g.mean_fitness
        );
    }
    out
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Runtime(format!("cannot build worker pool: {e}")))
}

fn cmd_sweep(common: &Common, seed_env: Option<String>) -> Result<i32, Failure> {
    let cfg = effective_config(common, seed_env)?;
    let c_param = match &cfg.c_from {
        Some(p) => read_c(p)?,
        None => cfg.c_param,
    };
    let spec = cfg.sweep_spec(c_param)?;
    let code = load_code(&cfg)?;
    spec.validate(&code)?;
    prepare_out_dir(&cfg)?;

    let result = run_sweep(&spec, &code, common.workers)?;
    let stamp = timestamp_line(common.deterministic);
    write_file(
        &cfg.out_dir,
        "results.csv",
        &format!("{stamp}{}", results_csv(&spec, &result)),
    )?;
    write_file(
        &cfg.out_dir,
        "curves.csv",
        &format!("{stamp}{}", curves_csv(&spec, &result)),
    )?;
    eprintln!(
        "sweep finished in {:.1} s; results in {}",
        result.wall_time.as_secs_f64(),
        cfg.out_dir.display()
    );
    Ok(0)
}

fn cmd_calibrate(
    common: &Common,
    seed_env: Option<String>,
    test_fitness: bool,
) -> Result<i32, Failure> {
    let mut cfg = effective_config(common, seed_env)?;
    if test_fitness {
        cfg.ga_fitness = FitnessKind::Synthetic;
    }
    let spec = cfg.ga_spec();
    let code = load_code(&cfg)?;
    prepare_out_dir(&cfg)?;

    let cal = pool(common.workers)?.install(|| calibrate_c(&spec, &code))?;
    write_file(&cfg.out_dir, "calibration.csv", &calibration_csv(&cal))?;
    write_file(&cfg.out_dir, "c_best.txt", &format!("{}\n", cal.c_best))?;
    println!("c_best = {}", cal.c_best);
    Ok(0)
}

fn cmd_selftest(common: &Common, seed_env: Option<String>) -> Result<i32, Failure> {
    let cfg = effective_config(common, seed_env)?;
    let outcomes = pool(common.workers)?.install(|| selftest::run_all(&cfg));
    let mut failed = false;
    for o in &outcomes {
        match &o.result {
            Ok(()) => println!("PASS {}", o.name),
            Err(m) => {
                failed = true;
                println!("FAIL {}: {m}", o.name);
            }
        }
    }
    Ok(if failed { EXIT_SELFTEST } else { 0 })
}
