//! Seeded, parallel Monte-Carlo sweeps.
//!
//! Every random draw comes from a generator seeded by mixing the sweep seed
//! with the index of the draw (see [`crate::seed`]), so a table depends only
//! on its configuration, never on the number of threads.

mod config;
mod table;

use std::time::Instant;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

pub use config::{parse_grid, AlphaRule, Strategy, SweepConfig};
pub use table::{SweepRow, SweepTable, CSV_HEADER};

use crate::channel::{sample_channel, tikhonov_inverse, ChannelMatrix, Precoder};
use crate::error::{Error, Result};
use crate::lattice::{Method, PerturbationSolver};
use crate::linalg::CVec;
use crate::modulation::{make_constellation, modulo_reduce, sample_data_with, Constellation};
use crate::objective::{
    build_msvp_basis, build_power_basis, build_wfvp_basis, trial_metrics, ObjectiveBasis, TrialMetrics,
};
use crate::predict::{db_to_sigma2, e_mmse, e_vp};
use crate::seed;

const CHANNEL_STREAM: u64 = 1;
const DATA_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// Seed of the channel drawn for `channel_index`; shared by every SNR point
/// and every strategy with the same sweep seed.
pub fn channel_seed(sweep_seed: u64, channel_index: u64) -> u64 {
    seed::derive(sweep_seed, &[CHANNEL_STREAM, channel_index])
}

fn data_seed(sweep_seed: u64, channel_index: u64, rho_db: f64) -> u64 {
    seed::derive(sweep_seed, &[DATA_STREAM, channel_index, rho_db.to_bits()])
}

/// Runs one channel at one SNR: samples the channel and a data batch,
/// perturbs every vector and measures the batch.
pub fn run_trial(config: &SweepConfig, channel_index: usize, rho_db: f64) -> Result<TrialMetrics> {
    config.validate()?;
    let constellation = make_constellation(config.qam_n, config.c_ratio())?;
    let h = sample_channel(config.k_users, config.m_antennas, channel_seed(config.seed, channel_index as u64))?;
    trial_on_channel(config, &constellation, &h, channel_index, rho_db)
}

fn objective_basis(config: &SweepConfig, h: &ChannelMatrix, alpha: f64, sigma2: f64, tau: f64) -> Result<Option<ObjectiveBasis>> {
    if config.solver == Method::None {
        return Ok(None);
    }
    let basis = match config.strategy {
        Strategy::None => return Ok(None),
        Strategy::Msvp => build_msvp_basis(h, alpha, sigma2, tau)?,
        Strategy::Wfvp => build_wfvp_basis(h, sigma2, tau)?,
        Strategy::Zfvp => build_power_basis(h, alpha, tau)?,
    };
    Ok(Some(basis))
}

fn trial_on_channel(
    config: &SweepConfig,
    constellation: &Constellation,
    h: &ChannelMatrix,
    channel_index: usize,
    rho_db: f64,
) -> Result<TrialMetrics> {
    let sigma2 = db_to_sigma2(rho_db);
    let alpha = config.alpha_rule.alpha(sigma2);
    let k = config.k_users;
    let tau = constellation.tau();
    let mut precoder = tikhonov_inverse(h, alpha)?;
    let solver = objective_basis(config, h, alpha, sigma2, tau)?
        .map(|b| PerturbationSolver::new(&b, config.solver, config.solver_options))
        .transpose()?;

    let mut rng = seed::rng(data_seed(config.seed, channel_index as u64, rho_db));
    let mut batch = Vec::with_capacity(config.n_vectors);
    for _ in 0..config.n_vectors {
        let u = sample_data_with(constellation, k, &mut rng);
        let x = match &solver {
            Some(s) => s.solve(&u)?.x,
            None => CVec::zeros(k),
        };
        batch.push((u, x));
    }
    let perturbed: Vec<CVec> = batch.iter().map(|(u, x)| u + x).collect();
    precoder.renorm_gamma(&perturbed)?;
    let mut metrics = trial_metrics(h, &precoder, &batch, sigma2)?;
    if !config.ideal_modulo {
        let noise_seed = seed::derive(config.seed, &[NOISE_STREAM, channel_index as u64, rho_db.to_bits()]);
        let per_user = literal_modulo_capacity(h, &precoder, &batch, sigma2, solver.as_ref().map(|_| tau), noise_seed)?;
        metrics.mean_capacity = per_user.iter().sum::<f64>() / k as f64;
        metrics.per_user_capacity = per_user;
    }
    Ok(metrics)
}

/// Per-user `log2(1 + E|u_i|^2 / E|u_i - u_hat_i|^2)` for a receiver that
/// scales by its own diagonal gain and, when `tau` is given, folds the result
/// back into the fundamental cell. Noise is actually drawn, so the modulo
/// losses near the cell edges show up in the error.
fn literal_modulo_capacity(
    h: &ChannelMatrix,
    a: &Precoder,
    batch: &[(CVec, CVec)],
    sigma2: f64,
    tau: Option<f64>,
    noise_seed: u64,
) -> Result<Vec<f64>> {
    let gamma = a.gamma().ok_or_else(|| Error::Degenerate("gamma was not estimated".into()))?;
    let ha = h.entries() * a.matrix();
    let k = h.k_users();
    let mut rng = seed::rng(noise_seed);
    let normal = Normal::new(0.0, (sigma2 / 2.0).sqrt()).map_err(|e| Error::Domain(e.to_string()))?;
    let mut signal = vec![0.0; k];
    let mut error = vec![0.0; k];
    for (u, x) in batch {
        let rx = (&ha * (u + x)).unscale(gamma.sqrt());
        for i in 0..k {
            let w = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            let est = (rx[i] + w) * gamma.sqrt() / ha[(i, i)];
            let est = match tau {
                Some(t) => modulo_reduce(est, t),
                None => est,
            };
            signal[i] += u[i].norm_sqr();
            error[i] += (est - u[i]).norm_sqr();
        }
    }
    Ok(signal.iter().zip(&error).map(|(s, e)| (1.0 + s / e.max(f64::MIN_POSITIVE)).log2()).collect())
}

fn predictor_value(config: &SweepConfig, sigma2: f64) -> Result<Option<f64>> {
    if config.alpha_rule != AlphaRule::Sigma2 {
        return Ok(None);
    }
    match config.strategy {
        Strategy::None => Ok(e_mmse(config.c_ratio(), sigma2)?.sinr()),
        Strategy::Msvp => e_vp(config.k_users, config.m_antennas, sigma2).map(Some),
        _ => Ok(None),
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    s / n as f64
}

/// Runs every channel at every grid point and averages per point.
///
/// Channels run in parallel; results are reduced in channel-index order, so
/// the table is bitwise reproducible.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepTable> {
    config.validate()?;
    let constellation = make_constellation(config.qam_n, config.c_ratio())?;
    let per_channel: Vec<Vec<TrialMetrics>> = (0..config.n_channels)
        .into_par_iter()
        .map(|ch| {
            let h = sample_channel(config.k_users, config.m_antennas, channel_seed(config.seed, ch as u64))?;
            config
                .rho_db_grid
                .iter()
                .map(|&rho| trial_on_channel(config, &constellation, &h, ch, rho))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let n = config.n_channels as f64;
    let k = config.k_users as f64;
    let mut rows = Vec::with_capacity(config.rho_db_grid.len());
    for (j, &rho_db) in config.rho_db_grid.iter().enumerate() {
        let trials = || per_channel.iter().map(move |t| &t[j]);
        let cap_mean = mean(trials().map(|t| t.mean_capacity));
        let cap_stderr = if config.n_channels > 1 {
            let var = trials().map(|t| (t.mean_capacity - cap_mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        rows.push(SweepRow {
            rho_db,
            strategy: config.strategy,
            solver: config.solver,
            mean_sinr: mean(trials().map(|t| t.sinr)),
            mean_capacity_bits: cap_mean,
            capacity_stderr: cap_stderr,
            mean_gamma: mean(trials().map(|t| t.gamma)),
            mean_d: mean(trials().map(|t| t.d)),
            mean_eps1_over_k: mean(trials().map(|t| t.eps1 / k)),
            predictor_value: predictor_value(config, db_to_sigma2(rho_db))?,
            n_channels: config.n_channels,
            n_vectors: config.n_vectors,
            wall_seconds: None,
        });
    }
    Ok(SweepTable { rows })
}

/// As [`run_sweep`], recording the elapsed time of the whole sweep on every
/// row. The output is then no longer reproducible byte for byte.
pub fn run_sweep_timed(config: &SweepConfig) -> Result<SweepTable> {
    let start = Instant::now();
    let mut table = run_sweep(config)?;
    let elapsed = start.elapsed().as_secs_f64();
    for r in &mut table.rows {
        r.wall_seconds = Some(elapsed);
    }
    Ok(table)
}

/// The configuration `base` would have under `strategy`: strategy none gets
/// solver none, zero-forcing gets `alpha = 0`, and a perturbation strategy
/// without a solver falls back to sorted-QR Babai.
pub fn config_for_strategy(base: &SweepConfig, strategy: Strategy) -> SweepConfig {
    let mut c = base.clone();
    c.strategy = strategy;
    match strategy {
        Strategy::None => c.solver = Method::None,
        _ if c.solver == Method::None => c.solver = Method::SqrBabai,
        _ => {}
    }
    if strategy == Strategy::Zfvp {
        c.alpha_rule = AlphaRule::Zero;
    }
    c
}

/// Runs several strategies on the same channel draws and stacks the tables.
pub fn compare(base: &SweepConfig, strategies: &[Strategy]) -> Result<SweepTable> {
    if strategies.is_empty() {
        return Err(Error::Config("compare needs at least one strategy".into()));
    }
    let configs: Vec<SweepConfig> = strategies.iter().map(|&s| config_for_strategy(base, s)).collect();
    for c in &configs {
        c.validate()?;
    }
    let mut out = SweepTable::default();
    for c in &configs {
        out.extend(run_sweep(c)?);
    }
    Ok(out)
}
