//! Large-system predictions of SINR, capacity and MSE.
//!
//! Everything here is a closed-form scalar function of the system shape.
//! Factorials and products are accumulated as logarithms so the formulas
//! stay finite for `K` in the thousands.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// The dimensions and noise level of a broadcast system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemShape {
    pub k_users: usize,
    pub m_antennas: usize,
    /// `K / M`.
    pub c_ratio: f64,
    /// Noise variance, `1 / rho`.
    pub sigma2: f64,
    /// `10 log10(1 / sigma2)`.
    pub rho_db: f64,
}

impl SystemShape {
    pub fn new(k_users: usize, m_antennas: usize, rho_db: f64) -> Result<Self> {
        if k_users == 0 || k_users > m_antennas {
            return Err(Error::Domain(format!("need 1 <= K <= M, got K = {k_users}, M = {m_antennas}")));
        }
        if !rho_db.is_finite() {
            return Err(Error::Domain(format!("SNR must be finite, got {rho_db} dB")));
        }
        Ok(Self {
            k_users,
            m_antennas,
            c_ratio: k_users as f64 / m_antennas as f64,
            sigma2: db_to_sigma2(rho_db),
            rho_db,
        })
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.sigma2
    }
}

/// `sigma^2 = 10^(-rho_db / 10)`.
pub fn db_to_sigma2(rho_db: f64) -> f64 {
    10f64.powf(-rho_db / 10.0)
}

/// `rho_db = 10 log10(1 / sigma2)`.
pub fn sigma2_to_db(sigma2: f64) -> f64 {
    -10.0 * sigma2.log10()
}

fn check_ratio(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("load ratio c must lie in (0, 1], got {c}")));
    }
    Ok(())
}

/// Limit of the mean diagonal gain of the Tikhonov-regularized effective
/// channel as `K, M -> inf` with `K / M = c`.
pub fn d_limit(c: f64, alpha: f64) -> Result<f64> {
    check_ratio(c)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite and non-negative, got {alpha}")));
    }
    let disc = 1.0 + 2.0 * c * (alpha - 1.0) + c * c * (1.0 + alpha) * (1.0 + alpha);
    Ok((1.0 + c + c * alpha - disc.sqrt()) / (2.0 * c))
}

/// SINR and capacity limits of regularized pre-inversion without perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MmseLimit {
    Finite { sinr_limit: f64, capacity_limit: f64 },
    /// `d = 1`: the noiseless limit, where both quantities are infinite.
    Saturated,
}

impl MmseLimit {
    pub fn sinr(&self) -> Option<f64> {
        match *self {
            MmseLimit::Finite { sinr_limit, .. } => Some(sinr_limit),
            MmseLimit::Saturated => None,
        }
    }

    pub fn capacity(&self) -> Option<f64> {
        match *self {
            MmseLimit::Finite { capacity_limit, .. } => Some(capacity_limit),
            MmseLimit::Saturated => None,
        }
    }
}

/// `(d / (1 - d), -log2(1 - d))` with `d = d_limit(c, sigma2)`.
pub fn e_mmse(c: f64, sigma2: f64) -> Result<MmseLimit> {
    let d = d_limit(c, sigma2)?;
    if d >= 1.0 {
        return Ok(MmseLimit::Saturated);
    }
    Ok(MmseLimit::Finite { sinr_limit: d / (1.0 - d), capacity_limit: -(1.0 - d).log2() })
}

/// Leading high-SNR behaviour of the capacity limit: `log2(rho) + log2((1-c)/c)`
/// below full load and `log2(rho) / 2` at `c = 1`.
pub fn high_snr_asymptote(c: f64, rho: f64) -> Result<f64> {
    check_ratio(c)?;
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    if c == 1.0 {
        Ok(0.5 * rho.log2())
    } else {
        Ok(rho.log2() + ((1.0 - c) / c).log2())
    }
}

/// `ln n!` for `n = 0..=upto`.
fn ln_factorials(upto: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(upto + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..=upto {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn check_km(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::Domain(format!("need 1 <= K <= M, got K = {k}, M = {m}")));
    }
    Ok(())
}

/// `ln sum_{i=0}^{K} C(K,i) M!/(M-i)! beta^i`.
pub fn ln_wishart_det_mean(k: usize, m: usize, beta: f64) -> Result<f64> {
    check_km(k, m)?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be finite and non-negative, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    let lf = ln_factorials(m);
    let lb = beta.ln();
    let terms: Vec<f64> = (0..=k)
        .map(|i| lf[k] - lf[i] - lf[k - i] + lf[m] - lf[m - i] + i as f64 * lb)
        .collect();
    Ok(log_sum_exp(&terms))
}

/// `E det(I + beta X X^†)` for a `K x M` matrix `X` of unit-variance
/// circular Gaussians. Overflows to infinity only when the value itself
/// exceeds `f64`; use [`ln_wishart_det_mean`] for large systems.
pub fn wishart_det_mean(k: usize, m: usize, beta: f64) -> Result<f64> {
    ln_wishart_det_mean(k, m, beta).map(f64::exp)
}

/// Predicted SINR of max-SINR vector perturbation with `alpha = sigma2`.
pub fn e_vp(k: usize, m: usize, sigma2: f64) -> Result<f64> {
    check_km(k, m)?;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    let kf = k as f64;
    let d = d_limit(kf / m as f64, sigma2)?;
    let beta1 = ((1.0 - d) / d).powi(2) / (kf * sigma2);
    let beta2 = 1.0 / (kf * sigma2);
    let ln_kfact = ln_factorials(k)[k];
    let ln_ratio = ln_wishart_det_mean(k, m, beta2)? - ln_wishart_det_mean(k, m, beta1)?;
    Ok(PI / 6.0 * (kf + 1.0) * ((ln_ratio - ln_kfact) / kf).exp())
}

/// Lower bound on the per-vector MSE of any lattice perturbation for a basis
/// whose Gram matrix has eigenvalues `lambdas`, with data energy `c`.
pub fn mse_lower_bound(lambdas: &[f64], c: f64) -> Result<f64> {
    if lambdas.is_empty() {
        return Err(Error::Domain("need at least one eigenvalue".into()));
    }
    if let Some(&bad) = lambdas.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::Domain(format!("eigenvalues must be positive, got {bad}")));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    let k = lambdas.len();
    let kf = k as f64;
    let ln_det = lambdas.iter().map(|l| l.ln()).sum::<f64>();
    let ln_kfact = ln_factorials(k)[k];
    Ok(6.0 * c / PI * kf / (kf + 1.0) * ((ln_kfact + ln_det) / kf).exp())
}
