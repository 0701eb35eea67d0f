use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use msvp::harness::{compare, parse_grid, run_sweep, run_sweep_timed, AlphaRule, Strategy, SweepConfig, SweepTable};
use msvp::lattice::Method;
use msvp::predict::{d_limit, db_to_sigma2, e_mmse, e_vp, high_snr_asymptote, MmseLimit};
use msvp::Error;

/// Vector-perturbation precoding: predictions and Monte-Carlo sweeps.
#[derive(Parser)]
#[command(name = "msvp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form large-system predictions as JSON.
    Predict(PredictArgs),
    /// Run a Monte-Carlo sweep for one strategy and write CSV.
    Simulate(SimulateArgs),
    /// Run several strategies on the same channels and write one CSV.
    Compare(CompareArgs),
}

#[derive(Args)]
struct PredictArgs {
    /// Load ratio K/M; derived from --K and --M when omitted.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: f64,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "M")]
    m: Option<usize>,
    /// zero, sigma2 or a non-negative number.
    #[arg(long, default_value = "sigma2")]
    alpha: String,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long, default_value_t = 16)]
    qam: usize,
    /// none, ml, sqr, lll or brute; defaults to sqr for perturbation strategies.
    #[arg(long)]
    solver: Option<String>,
    /// zero, sigma2 or a non-negative number; zfvp always uses zero.
    #[arg(long, default_value = "sigma2")]
    alpha: String,
    /// start:step:stop in dB (inclusive), or a single value.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: String,
    #[arg(long, default_value_t = 200)]
    channels: usize,
    #[arg(long, default_value_t = 500)]
    vectors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "ideal-modulo", default_value_t = true, action = clap::ArgAction::Set)]
    ideal_modulo: bool,
    /// Largest K the sphere decoder accepts.
    #[arg(long = "ml-cap", default_value_t = 16)]
    ml_cap: usize,
    /// Fill the wall_seconds column (makes the output time dependent).
    #[arg(long)]
    timing: bool,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "msvp")]
    strategy: String,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated strategies.
    #[arg(long, default_value = "none,msvp,wfvp,zfvp", value_delimiter = ',')]
    strategies: Vec<String>,
    #[command(flatten)]
    sweep: SweepArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Predict(a) => predict(a),
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

fn predict(a: PredictArgs) -> msvp::Result<()> {
    let c = match (a.c, a.k, a.m) {
        (Some(c), _, _) => c,
        (None, Some(k), Some(m)) if m > 0 => k as f64 / m as f64,
        _ => return Err(Error::Config("give --c or both --K and --M".into())),
    };
    if let (Some(c_flag), Some(k), Some(m)) = (a.c, a.k, a.m) {
        if m == 0 || (c_flag - k as f64 / m as f64).abs() > 1e-12 {
            return Err(Error::Config(format!("--c {c_flag} disagrees with K/M = {k}/{m}")));
        }
    }
    let sigma2 = db_to_sigma2(a.snr_db);
    let alpha_rule: AlphaRule = a.alpha.parse()?;
    let alpha = alpha_rule.alpha(sigma2);
    let d = d_limit(c, alpha).map_err(config)?;
    let mmse = match e_mmse(c, sigma2).map_err(config)? {
        MmseLimit::Finite { sinr_limit, capacity_limit } => {
            json!({ "sinr": sinr_limit, "capacity_bits": capacity_limit })
        }
        MmseLimit::Saturated => json!("saturated"),
    };
    let evp = match (a.k, a.m) {
        (Some(k), Some(m)) if alpha_rule == AlphaRule::Sigma2 => Some(e_vp(k, m, sigma2).map_err(config)?),
        _ => None,
    };
    let out = json!({
        "c": c,
        "snr_db": a.snr_db,
        "sigma2": sigma2,
        "alpha": alpha,
        "d": d,
        "e_mmse": mmse,
        "e_vp": evp,
        "asymptote_bits": high_snr_asymptote(c, 1.0 / sigma2).map_err(config)?,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("JSON value serializes"));
    Ok(())
}

/// Domain errors from user-supplied values are configuration errors.
fn config(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    }
}

fn base_config(s: &SweepArgs, strategy: Strategy) -> msvp::Result<SweepConfig> {
    let mut cfg = SweepConfig::new(s.k, s.m, strategy, parse_grid(&s.snr_db)?)
        .with_qam(s.qam)
        .with_batch(s.channels, s.vectors)
        .with_seed(s.seed)
        .with_alpha(s.alpha.parse()?);
    if strategy == Strategy::Zfvp {
        cfg = cfg.with_alpha(AlphaRule::Zero);
    }
    if let Some(solver) = &s.solver {
        cfg = cfg.with_solver(solver.parse::<Method>()?);
    }
    cfg.ideal_modulo = s.ideal_modulo;
    cfg.solver_options.ml_cap = s.ml_cap;
    Ok(cfg)
}

fn emit(table: &SweepTable, out: &Option<PathBuf>) -> msvp::Result<()> {
    let io_err = |e: io::Error| Error::Config(format!("cannot write output: {e}"));
    match out {
        Some(path) => table.write_csv(File::create(path).map_err(io_err)?),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write_csv(&mut lock)?;
            lock.flush().map_err(io_err)
        }
    }
}

fn simulate(a: SimulateArgs) -> msvp::Result<()> {
    let strategy: Strategy = a.strategy.parse()?;
    let cfg = base_config(&a.sweep, strategy)?;
    let table = if a.sweep.timing { run_sweep_timed(&cfg)? } else { run_sweep(&cfg)? };
    emit(&table, &a.sweep.out)
}

fn compare_cmd(a: CompareArgs) -> msvp::Result<()> {
    let strategies = a.strategies.iter().map(|s| s.parse::<Strategy>()).collect::<msvp::Result<Vec<_>>>()?;
    let mut base = base_config(&a.sweep, Strategy::Msvp)?;
    if a.sweep.solver.is_none() {
        base.solver = Method::SqrBabai;
    }
    let start = std::time::Instant::now();
    let mut table = compare(&base, &strategies)?;
    if a.sweep.timing {
        let t = start.elapsed().as_secs_f64();
        table.rows.iter_mut().for_each(|r| r.wall_seconds = Some(t));
    }
    emit(&table, &a.sweep.out)
}
