//! `fks`: runs, constants, oracle comparison, refinement studies, lemma
//! checks and parameter sweeps.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fks_core::io::{
    self, certificate_json, constants_report, execute_run, exit_code, lemma_suite, oracle_check,
    refinement_study, run_sweep, twin_compare, InitialData, InitialKind, LemmaRequest, SweepSpec,
};
use fks_core::verifier::certify_twin;
use fks_core::{DataNorms, IoError, ModelParams, RunConfig, TorusGrid};

/// Exit status for invalid input, I/O failures and other errors.
const ERROR_EXIT: u8 = 3;

#[derive(Parser)]
#[command(name = "fks", version, about = "Fractional Keller-Segel solver with bound certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and certify the trajectory.
    Run { config: PathBuf },
    /// Print the constants for a parameter point as JSON.
    Constants(ConstantsArgs),
    /// Compare the Fourier multiplier with the singular-integral quadrature.
    OracleCheck(OracleArgs),
    /// Compare two configurations, or refine one in dt with --dts.
    Twin(TwinArgs),
    /// Check the functional inequalities on seeded positive fields.
    Lemmas(LemmaArgs),
    /// Run every combination of a sweep specification.
    Sweep {
        spec: PathBuf,
        /// Worker threads; defaults to the available cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    chi: f64,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    eps: Option<f64>,
    /// Initial datum the data-dependent constants are built from.
    #[arg(long, value_parser = parse_kind, default_value = "constant")]
    init: InitialKind,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 1)]
    modes: i64,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid used to sample a non-constant datum.
    #[arg(long, default_value_t = 256)]
    n: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Largest accepted relative discrepancy.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Args)]
struct TwinArgs {
    a: PathBuf,
    b: Option<PathBuf>,
    /// Comma-separated time steps for a refinement study of `a`.
    #[arg(long, value_delimiter = ',')]
    dts: Vec<f64>,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Grid size; defaults to 64 in 1D and 32 in 2D.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Write certificates here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<InitialKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown initial data kind {s:?}"))
}

fn init_logging() {
    let level = match std::env::var("FKS_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).init();
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn print_json(v: &serde_json::Value) -> Result<(), IoError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(config: &Path) -> Result<i32, IoError> {
    let cfg = RunConfig::load(config)?;
    let outcome = execute_run(&cfg, &base_dir(config))?;
    for c in &outcome.certificates {
        println!("{:<32} {:<20} margin {:e}", c.label(), format!("{:?}", c.status), c.worst_margin);
    }
    if let Some(e) = &outcome.trajectory.abort {
        eprintln!("solver stopped early: {e}");
    }
    Ok(outcome.exit_code())
}

fn constants(a: &ConstantsArgs) -> Result<i32, IoError> {
    let params = match a.eps {
        Some(eps) => ModelParams::new(a.d, a.alpha, a.chi, a.r, eps)?,
        None => ModelParams::with_default_eps(a.d, a.alpha, a.chi, a.r)?.0,
    };
    let data = match a.init {
        InitialKind::Constant => DataNorms::constant(a.d, params.p(), a.amplitude),
        kind => {
            let init = InitialData { kind, amplitude: a.amplitude, modes: a.modes, seed: a.seed };
            let u0 = init.sample(TorusGrid::new(a.d, a.n)?)?;
            DataNorms::of(&u0, params.p())
        }
    };
    print_json(&constants_report(&params, &data)?)?;
    Ok(0)
}

fn oracle(a: &OracleArgs) -> Result<i32, IoError> {
    let rep = oracle_check(a.d, a.alpha, a.n, a.seed, a.count)?;
    print_json(&serde_json::to_value(&rep)?)?;
    Ok(if rep.max_discrepancy <= a.tol { 0 } else { 1 })
}

fn twin(a: &TwinArgs) -> Result<i32, IoError> {
    let cfg = RunConfig::load(&a.a)?;
    if let Some(b) = &a.b {
        let other = RunConfig::load(b)?;
        println!("t,distance");
        for s in twin_compare(&cfg, &other)? {
            println!("{:.16e},{:.16e}", s.t, s.distance);
        }
        return Ok(0);
    }
    if a.dts.is_empty() {
        return Err(IoError::Config("twin needs a second config or --dts".into()));
    }
    let study = refinement_study(&cfg, &a.dts)?;
    let cert = certify_twin(&study).map_err(|e| IoError::Config(e.to_string()))?;
    print_json(&serde_json::json!({
        "study": study,
        "certificate": certificate_json(&cert, &cfg.digest()),
    }))?;
    Ok(exit_code(&[cert], true))
}

fn lemmas(a: &LemmaArgs) -> Result<i32, IoError> {
    let req = LemmaRequest {
        d: a.d,
        n: a.n.unwrap_or(if a.d == 1 { 64 } else { 32 }),
        count: a.count,
        seed: a.seed,
        alpha: a.alpha,
        s: a.s,
        delta: a.delta,
    };
    let certs = lemma_suite(&req)?;
    match &a.out {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| IoError::File { path: p.clone(), source: e })?;
            io::write_certificates(std::io::BufWriter::new(f), &certs, &req.digest())?;
        }
        None => io::write_certificates(std::io::stdout().lock(), &certs, &req.digest())?,
    }
    Ok(exit_code(&certs, true))
}

fn sweep(spec: &Path, jobs: Option<usize>) -> Result<i32, IoError> {
    let s = SweepSpec::load(spec)?;
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let entries = run_sweep(&s, &base_dir(spec), jobs.max(1))?;
    for e in &entries {
        println!("{} alpha={} chi={} r={} exit={}", e.digest, e.alpha, e.chi, e.r, e.exit_code);
    }
    Ok(entries.iter().map(|e| e.exit_code).max().unwrap_or(0))
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => run(config),
        Command::Constants(a) => constants(a),
        Command::OracleCheck(a) => oracle(a),
        Command::Twin(a) => twin(a),
        Command::Lemmas(a) => lemmas(a),
        Command::Sweep { spec, jobs } => sweep(spec, *jobs),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ERROR_EXIT)
        }
    }
}
