//! Perturbation objectives and per-channel performance metrics.
//!
//! For a Tikhonov precoder `A = H_alpha` the mean square error of a perturbed
//! data vector `z = u + x` is, up to the diagonal-gain spread, the quadratic
//! form `||T z||^2` with
//!
//! ```text
//! T^† T = d^2 I - 2 d H H_alpha + H H_alpha H_mmse^+ H_alpha
//!       = U diag(lambda_i) U^†,
//! lambda_i = d^2 - 2 d s_i^2/(s_i^2 + alpha) + s_i^2 (s_i^2 + sigma^2)/(s_i^2 + alpha)^2
//! ```
//!
//! so every basis built here has the canonical shape `diag(sqrt(w_i)) U^†`.
//! Only the Gram matrix `B^† B` matters to the lattice search.

use num_complex::Complex64;

use crate::channel::{gain, ChannelMatrix, Precoder};
use crate::error::{Error, Result};
use crate::linalg::{dg, frob_sq, norm_sq, CMat, CVec};

/// Which perturbation criterion a basis encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// Max-SINR perturbation, `B = T`.
    MsvpT,
    /// Wiener-filter perturbation, `B^† B = (sigma^2 I + H H^†)^{-1}`.
    WfvpL,
    /// Power-minimizing perturbation, `B^† B = A^† A`.
    ZfA,
}

/// A `K x K` matrix `B` defining the search `min_x ||B (u + x)||^2` over
/// `x in tau Z[i]^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveBasis {
    matrix: CMat,
    kind: BasisKind,
    tau: f64,
    alpha: f64,
    d: f64,
    eigenvalues: Vec<f64>,
}

impl ObjectiveBasis {
    /// Wraps an arbitrary nonsingular square matrix; mostly useful in tests.
    pub fn from_matrix(matrix: CMat, kind: BasisKind, tau: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!("basis must be square, got {:?}", matrix.shape())));
        }
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("tau must be positive, got {tau}")));
        }
        let gram = matrix.adjoint() * &matrix;
        let eigenvalues = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
        Ok(Self { matrix, kind, tau, alpha: 0.0, d: 1.0, eigenvalues })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn k(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues of `B^† B`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn gram(&self) -> CMat {
        self.matrix.adjoint() * &self.matrix
    }

    /// `||B z||^2`.
    pub fn objective(&self, z: &CVec) -> f64 {
        norm_sq(&(&self.matrix * z))
    }
}

fn check_noise(sigma2: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { sigma2 >= 0.0 } else { sigma2 > 0.0 };
    if !ok || !sigma2.is_finite() {
        return Err(Error::Domain(format!("invalid noise variance {sigma2}")));
    }
    Ok(())
}

fn check_full_rank(h: &ChannelMatrix) -> Result<()> {
    let tolerance = crate::channel::DEFAULT_RANK_TOL * h.max_singular_value();
    let smallest = h.min_singular_value();
    if !(smallest > tolerance) {
        return Err(Error::RankDeficient { smallest, tolerance });
    }
    Ok(())
}

/// `diag(sqrt(w)) U^†`.
fn scaled_adjoint(u: &CMat, weights: &[f64]) -> CMat {
    let mut b = u.adjoint();
    for (i, &w) in weights.iter().enumerate() {
        b.row_mut(i).scale_mut(w.sqrt());
    }
    b
}

/// Eigenvalues of `T^† T`, one per singular value of `H`.
pub fn msvp_eigenvalues(h: &ChannelMatrix, alpha: f64, sigma2: f64) -> Result<Vec<f64>> {
    check_noise(sigma2, false)?;
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be non-negative, got {alpha}")));
    }
    if alpha == 0.0 {
        check_full_rank(h)?;
    }
    let d = h.mean_gain(alpha);
    h.singular_values()
        .iter()
        .map(|&s| {
            let s2 = s * s;
            let g = gain(s, alpha);
            let lambda = d * d - 2.0 * d * g + s2 * (s2 + sigma2) / ((s2 + alpha) * (s2 + alpha));
            if lambda > 0.0 && lambda.is_finite() {
                Ok(lambda)
            } else {
                Err(Error::NotPositive { eigenvalue: lambda, singular_value: s })
            }
        })
        .collect()
}

/// The max-SINR objective `T = diag(sqrt(lambda_i)) U^†`, using the
/// instantaneous mean gain `d` of this channel.
pub fn build_msvp_basis(h: &ChannelMatrix, alpha: f64, sigma2: f64, tau: f64) -> Result<ObjectiveBasis> {
    let eigenvalues = msvp_eigenvalues(h, alpha, sigma2)?;
    Ok(ObjectiveBasis {
        matrix: scaled_adjoint(h.u(), &eigenvalues),
        kind: BasisKind::MsvpT,
        tau,
        alpha,
        d: h.mean_gain(alpha),
        eigenvalues,
    })
}

/// The Wiener-filter objective `L = diag(1/sqrt(s_i^2 + sigma^2)) U^†`.
pub fn build_wfvp_basis(h: &ChannelMatrix, sigma2: f64, tau: f64) -> Result<ObjectiveBasis> {
    check_noise(sigma2, true)?;
    if sigma2 == 0.0 {
        check_full_rank(h)?;
    }
    let eigenvalues: Vec<f64> = h.singular_values().iter().map(|&s| 1.0 / (s * s + sigma2)).collect();
    Ok(ObjectiveBasis {
        matrix: scaled_adjoint(h.u(), &eigenvalues),
        kind: BasisKind::WfvpL,
        tau,
        alpha: sigma2,
        d: h.mean_gain(sigma2),
        eigenvalues,
    })
}

/// A square factor of `A^† A` for the Tikhonov precoder with parameter
/// `alpha`: `diag(s_i / (s_i^2 + alpha)) U^†`. Minimizing it minimizes the
/// transmit power `||A (u + x)||^2`.
pub fn build_power_basis(h: &ChannelMatrix, alpha: f64, tau: f64) -> Result<ObjectiveBasis> {
    if alpha == 0.0 {
        check_full_rank(h)?;
    }
    let eigenvalues: Vec<f64> = h
        .singular_values()
        .iter()
        .map(|&s| {
            let w = s / (s * s + alpha);
            w * w
        })
        .collect();
    if let Some((i, _)) = eigenvalues.iter().enumerate().find(|(_, &w)| !(w > 0.0)) {
        return Err(Error::NotPositive { eigenvalue: eigenvalues[i], singular_value: h.singular_values()[i] });
    }
    Ok(ObjectiveBasis {
        matrix: scaled_adjoint(h.u(), &eigenvalues),
        kind: BasisKind::ZfA,
        tau,
        alpha,
        d: h.mean_gain(alpha),
        eigenvalues,
    })
}

/// `d^2 I - 2 d H H_alpha + H H_alpha H_mmse^+ H_alpha` assembled from dense
/// products (LU inverses and a pseudo-inverse), independent of the SVD route.
pub fn msvp_gram_dense(h: &ChannelMatrix, alpha: f64, sigma2: f64) -> Result<CMat> {
    let k = h.k_users();
    let hm = h.entries();
    let h_alpha = crate::channel::tikhonov_dense(hm, alpha)
        .ok_or_else(|| Error::Degenerate("H H^† + alpha I is singular".into()))?;
    let h_mmse = crate::channel::tikhonov_dense(hm, sigma2)
        .ok_or_else(|| Error::Degenerate("H H^† + sigma^2 I is singular".into()))?;
    let pinv = h_mmse
        .pseudo_inverse(1e-14)
        .map_err(|e| Error::Degenerate(format!("pseudo-inverse failed: {e}")))?;
    let hh_alpha = hm * &h_alpha;
    let d = hh_alpha.trace().re / k as f64;
    let eye = CMat::identity(k, k);
    Ok(eye * Complex64::new(d * d, 0.0) - &hh_alpha * Complex64::new(2.0 * d, 0.0)
        + &hh_alpha * pinv * h_alpha)
}

/// `H H_alpha = U diag(s_i^2/(s_i^2+alpha)) U^†`.
pub fn effective_channel(h: &ChannelMatrix, alpha: f64) -> CMat {
    let mut ug = h.u().clone();
    for (j, &s) in h.singular_values().iter().enumerate() {
        ug.column_mut(j).scale_mut(gain(s, alpha));
    }
    ug * h.u().adjoint()
}

fn check_pair_dims(k: usize, u: &CVec, x: &CVec) -> Result<()> {
    if u.len() != k || x.len() != k {
        return Err(Error::Dimension(format!(
            "data vector of length {} and offset of length {} for K = {k}",
            u.len(),
            x.len()
        )));
    }
    Ok(())
}

fn check_precoder(h: &ChannelMatrix, a: &Precoder) -> Result<()> {
    let (k, m) = h.entries().shape();
    if a.matrix().shape() != (m, k) {
        return Err(Error::Dimension(format!(
            "precoder is {:?}, channel is {k}x{m}",
            a.matrix().shape()
        )));
    }
    Ok(())
}

/// Stacks `u + x` for every pair into the columns of a `K x n` matrix.
fn stack(k: usize, batch: &[(CVec, CVec)]) -> Result<CMat> {
    let mut z = CMat::zeros(k, batch.len());
    for (j, (u, x)) in batch.iter().enumerate() {
        check_pair_dims(k, u, x)?;
        z.set_column(j, &(u + x));
    }
    Ok(z)
}

/// Per-vector error `||(HA - dg(HA)) z||^2 + sigma^2 ||A z||^2` with `z = u + x`.
pub fn mse_for_vector(h: &ChannelMatrix, a: &Precoder, u: &CVec, x: &CVec, sigma2: f64) -> Result<f64> {
    check_precoder(h, a)?;
    check_pair_dims(h.k_users(), u, x)?;
    let z = u + x;
    let ha = h.entries() * a.matrix();
    let off = &ha - dg(&ha);
    Ok(norm_sq(&(off * &z)) + sigma2 * norm_sq(&(a.matrix() * &z)))
}

/// Batch statistics shared by the SINR, capacity and error-term routines.
struct BatchPowers {
    /// `mean |dg(HA)_ii u_i|^2` per user.
    signal: Vec<f64>,
    /// `mean |((HA - dg(HA)) z)_i|^2` per user.
    interference: Vec<f64>,
    /// `mean ||A z||^2`.
    transmit: f64,
}

fn batch_powers(h: &ChannelMatrix, a: &Precoder, batch: &[(CVec, CVec)]) -> Result<BatchPowers> {
    check_precoder(h, a)?;
    if batch.is_empty() {
        return Err(Error::Domain("metrics need a non-empty batch".into()));
    }
    let k = h.k_users();
    let n = batch.len() as f64;
    let z = stack(k, batch)?;
    let ha = h.entries() * a.matrix();
    let diag: Vec<Complex64> = (0..k).map(|i| ha[(i, i)]).collect();
    let off = &ha - dg(&ha);
    let interf = off * &z;
    let tx = a.matrix() * &z;

    let mut signal = vec![0.0; k];
    for (u, _) in batch {
        for i in 0..k {
            signal[i] += (diag[i] * u[i]).norm_sqr();
        }
    }
    let interference = (0..k).map(|i| interf.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>() / n).collect();
    Ok(BatchPowers {
        signal: signal.into_iter().map(|s| s / n).collect(),
        interference,
        transmit: frob_sq(&tx) / n,
    })
}

/// `||dg(HA)||_F^2 c / mean_batch(mse_for_vector)`, with `c = K/M`.
pub fn sinr_empirical(h: &ChannelMatrix, a: &Precoder, batch: &[(CVec, CVec)], sigma2: f64) -> Result<f64> {
    let p = batch_powers(h, a, batch)?;
    let k = h.k_users();
    let c = k as f64 / h.m_antennas() as f64;
    let ha = h.entries() * a.matrix();
    let num = (0..k).map(|i| ha[(i, i)].norm_sqr()).sum::<f64>() * c;
    let den = p.interference.iter().sum::<f64>() + sigma2 * p.transmit;
    if !(den > 0.0) {
        return Err(Error::Degenerate("SINR denominator vanished".into()));
    }
    Ok(num / den)
}

/// The unit-gain receiver model: `K c / mean(||(HA - I) z||^2 + sigma^2 ||A z||^2)`.
///
/// Diagnostic only; it ignores that the diagonal gains of `HA` are below one
/// for regularized precoders, and so overstates the SINR.
pub fn sinr_unit_gain_model(h: &ChannelMatrix, a: &Precoder, batch: &[(CVec, CVec)], sigma2: f64) -> Result<f64> {
    check_precoder(h, a)?;
    let k = h.k_users();
    let c = k as f64 / h.m_antennas() as f64;
    let z = stack(k, batch)?;
    let ha = h.entries() * a.matrix();
    let resid = (ha - CMat::identity(k, k)) * &z;
    let n = batch.len() as f64;
    let den = (frob_sq(&resid) + sigma2 * frob_sq(&(a.matrix() * &z))) / n;
    if !(den > 0.0) {
        return Err(Error::Degenerate("SINR denominator vanished".into()));
    }
    Ok(k as f64 * c / den)
}

/// Per-user and average capacities in bits per channel use, with `gamma`
/// estimated from the same batch.
pub fn capacity_empirical(
    h: &ChannelMatrix,
    a: &Precoder,
    batch: &[(CVec, CVec)],
    sigma2: f64,
) -> Result<(Vec<f64>, f64)> {
    let p = batch_powers(h, a, batch)?;
    let k = h.k_users() as f64;
    capacities_from_powers(&p, p.transmit / k, sigma2)
}

fn capacities_from_powers(p: &BatchPowers, gamma: f64, sigma2: f64) -> Result<(Vec<f64>, f64)> {
    if !(gamma > 0.0) || p.signal.iter().all(|&s| s == 0.0) {
        return Err(Error::Degenerate("batch carries no power".into()));
    }
    let per_user: Vec<f64> = p
        .signal
        .iter()
        .zip(&p.interference)
        .map(|(&s, &i)| (1.0 + s / (i + gamma * sigma2)).log2())
        .collect();
    let mean = per_user.iter().sum::<f64>() / per_user.len() as f64;
    Ok((per_user, mean))
}

/// The diagonal-gain error terms `(eps1, eps2)` for the Tikhonov precoder
/// with parameter `alpha`.
pub fn theorem1_errors(h: &ChannelMatrix, alpha: f64, batch: &[(CVec, CVec)]) -> Result<(f64, f64)> {
    if batch.is_empty() {
        return Err(Error::Domain("error terms need a non-empty batch".into()));
    }
    let k = h.k_users();
    let hh = effective_channel(h, alpha);
    let d = hh.trace().re / k as f64;
    let eps1: f64 = (0..k).map(|i| (hh[(i, i)] - Complex64::new(d, 0.0)).norm_sqr()).sum();
    let z = stack(k, batch)?;
    let with_dg = (&hh - dg(&hh)) * &z;
    let with_d = (&hh - CMat::identity(k, k) * Complex64::new(d, 0.0)) * &z;
    let eps2 = (frob_sq(&with_dg) - frob_sq(&with_d)) / batch.len() as f64;
    Ok((eps1, eps2))
}

/// `mean_batch ||B z||^2`.
pub fn mean_objective(basis: &ObjectiveBasis, batch: &[(CVec, CVec)]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Domain("objective mean needs a non-empty batch".into()));
    }
    let z = stack(basis.k(), batch)?;
    Ok(frob_sq(&(basis.matrix() * z)) / batch.len() as f64)
}

/// The SINR estimate `d^2 K c / mean ||T z||^2`.
pub fn sinr_estimate(basis: &ObjectiveBasis, c: f64, batch: &[(CVec, CVec)]) -> Result<f64> {
    let k = basis.k() as f64;
    let den = mean_objective(basis, batch)?;
    if !(den > 0.0) {
        return Err(Error::Degenerate("objective vanished".into()));
    }
    Ok(basis.d() * basis.d() * k * c / den)
}

/// `E_u ||M u||^2 = c ||M||_F^2` for i.i.d. zero-mean data of energy `c`.
pub fn expected_quadratic_unperturbed(m: &CMat, c: f64) -> f64 {
    c * frob_sq(m)
}

/// The two-sided SINR bracket for the Tikhonov precoder, with batch
/// expectations: `[d^2 K c / (E||Tz||^2 + eps2), (d^2 K c + eps1) / E||Tz||^2]`.
pub fn sinr_bracket(
    h: &ChannelMatrix,
    alpha: f64,
    sigma2: f64,
    batch: &[(CVec, CVec)],
) -> Result<(f64, f64)> {
    let k = h.k_users() as f64;
    let c = k / h.m_antennas() as f64;
    let t = build_msvp_basis(h, alpha, sigma2, 1.0)?;
    let mse_hat = mean_objective(&t, batch)?;
    let (eps1, eps2) = theorem1_errors(h, alpha, batch)?;
    let d = t.d();
    Ok((d * d * k * c / (mse_hat + eps2), (d * d * k * c + eps1) / mse_hat))
}

/// Everything measured for one channel and one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub sinr: f64,
    pub mse: f64,
    pub per_user_capacity: Vec<f64>,
    pub mean_capacity: f64,
    pub gamma: f64,
    pub d: f64,
    pub eps1: f64,
    pub eps2: f64,
}

/// Computes [`TrialMetrics`] in one pass over the batch.
pub fn trial_metrics(
    h: &ChannelMatrix,
    a: &Precoder,
    batch: &[(CVec, CVec)],
    sigma2: f64,
) -> Result<TrialMetrics> {
    let p = batch_powers(h, a, batch)?;
    let k = h.k_users();
    let c = k as f64 / h.m_antennas() as f64;
    let gamma = p.transmit / k as f64;
    let ha = h.entries() * a.matrix();
    let num = (0..k).map(|i| ha[(i, i)].norm_sqr()).sum::<f64>() * c;
    let mse = p.interference.iter().sum::<f64>() + sigma2 * p.transmit;
    if !(mse > 0.0) {
        return Err(Error::Degenerate("SINR denominator vanished".into()));
    }
    let (per_user_capacity, mean_capacity) = capacities_from_powers(&p, gamma, sigma2)?;
    let (eps1, eps2) = theorem1_errors(h, a.alpha(), batch)?;
    Ok(TrialMetrics {
        sinr: num / mse,
        mse,
        per_user_capacity,
        mean_capacity,
        gamma,
        d: ha.trace().re / k as f64,
        eps1,
        eps2,
    })
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{from_real, sample_channel, tikhonov_inverse};
    use crate::linalg::rel_frob;
    use crate::modulation::{make_constellation, sample_data};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn zero(k: usize) -> CVec {
        CVec::zeros(k)
    }

    #[test]
    fn scalar_msvp_basis() {
        let h = ChannelMatrix::new(from_real(1, 1, &[1.0])).unwrap();
        let t = build_msvp_basis(&h, 0.01, 0.01, 1.0).unwrap();
        assert!((t.d() - 1.0 / 1.01).abs() < 1e-12);
        assert!((t.d() - 0.990099).abs() < 1e-6);
        let lambda = 0.01 / (1.01 * 1.01);
        assert!((t.eigenvalues()[0] - lambda).abs() < 1e-15);
        assert!((t.eigenvalues()[0] - 0.0098030).abs() < 1e-7);
        assert!((t.matrix()[(0, 0)].norm() - 0.099010).abs() < 1e-6);
    }

    #[test]
    fn identity_msvp_basis() {
        let h = ChannelMatrix::new(CMat::identity(2, 2)).unwrap();
        let s2 = 0.05;
        let t = build_msvp_basis(&h, s2, s2, 1.0).unwrap();
        let expect = CMat::identity(2, 2) * c(s2 / ((1.0 + s2) * (1.0 + s2)));
        assert!(rel_frob(&t.gram(), &expect) < 1e-12);
        let scale = s2.sqrt() / (1.0 + s2);
        assert!((t.eigenvalues()[0].sqrt() - scale).abs() < 1e-14);
    }

    #[test]
    fn msvp_gram_matches_dense_cholesky() {
        for seed in 0..10 {
            let h = sample_channel(6, 6, seed).unwrap();
            let (alpha, s2) = (0.03, 0.03);
            let t = build_msvp_basis(&h, alpha, s2, 1.0).unwrap();
            let dense = msvp_gram_dense(&h, alpha, s2).unwrap();
            let chol = dense.clone().cholesky().expect("dense form is positive definite");
            let t2 = chol.l().adjoint();
            let g2 = t2.adjoint() * &t2;
            assert!(rel_frob(&t.gram(), &g2) < 1e-9, "seed {seed}");
            assert!(min_eigenvalue(&t.gram()) > 0.0);
        }
    }

    #[test]
    fn wfvp_basis_examples() {
        let h = ChannelMatrix::new(from_real(1, 1, &[1.0])).unwrap();
        let l = build_wfvp_basis(&h, 0.01, 1.0).unwrap();
        assert!((l.matrix()[(0, 0)].norm() - 1.0 / 1.01f64.sqrt()).abs() < 1e-12);
        assert!((l.matrix()[(0, 0)].norm() - 0.995037).abs() < 1e-6);

        let h = ChannelMatrix::new(CMat::identity(3, 3)).unwrap();
        let l = build_wfvp_basis(&h, 0.0, 1.0).unwrap();
        assert!(rel_frob(&l.gram(), &CMat::identity(3, 3)) < 1e-14);

        for seed in 0..5 {
            let h = sample_channel(5, 7, seed).unwrap();
            let s2 = 0.1;
            let l = build_wfvp_basis(&h, s2, 1.0).unwrap();
            let m = h.entries() * h.entries().adjoint() + CMat::identity(5, 5) * c(s2);
            assert!(rel_frob(&(l.gram() * m), &CMat::identity(5, 5)) < 1e-9);
        }
    }

    #[test]
    fn power_basis_matches_precoder_gram() {
        let h = sample_channel(4, 6, 9).unwrap();
        let a = tikhonov_inverse(&h, 0.0).unwrap();
        let b = build_power_basis(&h, 0.0, 1.0).unwrap();
        assert!(rel_frob(&b.gram(), &(a.matrix().adjoint() * a.matrix())) < 1e-9);
    }

    #[test]
    fn rejects_bad_noise() {
        let h = sample_channel(2, 2, 1).unwrap();
        assert!(matches!(build_msvp_basis(&h, 0.1, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(build_wfvp_basis(&h, -1.0, 1.0), Err(Error::Domain(_))));
        let sing = ChannelMatrix::new(from_real(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(matches!(build_msvp_basis(&sing, 0.0, 0.1, 1.0), Err(Error::RankDeficient { .. })));
        assert!(matches!(build_wfvp_basis(&sing, 0.0, 1.0), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn mse_examples() {
        let h = ChannelMatrix::new(from_real(1, 1, &[1.0])).unwrap();
        let a = tikhonov_inverse(&h, 0.0).unwrap();
        let u = CVec::from_vec(vec![Complex64::new(0.6, -0.8)]);
        let m = mse_for_vector(&h, &a, &u, &zero(1), 0.02).unwrap();
        assert!((m - 0.02).abs() < 1e-15);
        let m0 = mse_for_vector(&h, &a, &u, &(-&u), 0.02).unwrap();
        assert_eq!(m0, 0.0);
    }

    #[test]
    fn mse_matches_elementwise_formula() {
        let h = sample_channel(3, 4, 21).unwrap();
        let a = tikhonov_inverse(&h, 0.05).unwrap();
        let u = CVec::from_vec(vec![c(0.7), Complex64::new(-0.2, 1.1), Complex64::new(0.4, -0.4)]);
        let x = CVec::from_vec(vec![c(0.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, -2.0)]);
        let s2 = 0.05;
        let z = &u + &x;
        let hm = h.entries();
        let am = a.matrix();
        let mut hand = 0.0;
        let ha = |i: usize, j: usize| (0..4).map(|l| hm[(i, l)] * am[(l, j)]).sum::<Complex64>();
        for i in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                if i != j {
                    acc += ha(i, j) * z[j];
                }
            }
            hand += acc.norm_sqr();
        }
        for l in 0..4 {
            let s: Complex64 = (0..3).map(|j| am[(l, j)] * z[j]).sum();
            hand += s.norm_sqr() * s2;
        }
        assert!((mse_for_vector(&h, &a, &u, &x, s2).unwrap() - hand).abs() < 1e-12);
    }

    #[test]
    fn scalar_sinr_and_capacity() {
        let h = ChannelMatrix::new(from_real(1, 1, &[1.0])).unwrap();
        let a = tikhonov_inverse(&h, 0.0).unwrap();
        let q = make_constellation(4, 1.0).unwrap();
        let batch: Vec<_> = (0..50).map(|i| (sample_data(&q, 1, i), zero(1))).collect();
        let s2 = 0.01;
        let sinr = sinr_empirical(&h, &a, &batch, s2).unwrap();
        assert!((sinr - 100.0).abs() < 1e-9);
        let (per, mean) = capacity_empirical(&h, &a, &batch, s2).unwrap();
        assert!((per[0] - 101f64.log2()).abs() < 1e-12);
        assert_eq!(per[0], mean);
    }

    #[test]
    fn all_zero_batch_rejected() {
        let h = sample_channel(2, 2, 4).unwrap();
        let a = tikhonov_inverse(&h, 0.1).unwrap();
        let batch = vec![(zero(2), zero(2)); 4];
        assert!(matches!(capacity_empirical(&h, &a, &batch, 0.1), Err(Error::Degenerate(_))));
        assert!(matches!(sinr_empirical(&h, &a, &batch, 0.1), Err(Error::Degenerate(_))));
        assert!(matches!(sinr_empirical(&h, &a, &[], 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn lemma_one_closed_form() {
        for seed in 0..20 {
            let h = sample_channel(6, 9, seed).unwrap();
            let s2 = 0.04;
            let t = build_msvp_basis(&h, s2, s2, 1.0).unwrap();
            let cc = 6.0 / 9.0;
            let d = t.d();
            let approx = d * d * 6.0 * cc / expected_quadratic_unperturbed(t.matrix(), cc);
            assert!((approx - d / (1.0 - d)).abs() < 1e-9 * (d / (1.0 - d)));
            let trace: f64 = t.eigenvalues().iter().sum();
            assert!((trace - d * 6.0 * (1.0 - d)).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_form_matches_eigen_sum() {
        let h = sample_channel(5, 5, 77).unwrap();
        let t = build_msvp_basis(&h, 0.02, 0.02, 1.0).unwrap();
        let z = CVec::from_fn(5, |i, _| Complex64::new(i as f64 - 2.0, 0.5 * i as f64));
        let zp = h.u().adjoint() * &z;
        let eig_sum: f64 = t.eigenvalues().iter().zip(zp.iter()).map(|(l, w)| l * w.norm_sqr()).sum();
        assert!((t.objective(&z) - eig_sum).abs() < 1e-10);
    }

    #[test]
    fn eps1_zero_for_identity_and_numerator_bracket() {
        let h = ChannelMatrix::new(CMat::identity(4, 4)).unwrap();
        let batch = vec![(CVec::from_element(4, c(1.0)), zero(4))];
        let (e1, _) = theorem1_errors(&h, 0.1, &batch).unwrap();
        assert!(e1.abs() < 1e-20);
        for seed in 0..30 {
            let h = sample_channel(4, 5, seed).unwrap();
            let (e1, _) = theorem1_errors(&h, 0.05, &batch).unwrap();
            assert!(e1 >= 0.0);
            let hh = effective_channel(&h, 0.05);
            let d = hh.trace().re / 4.0;
            let dgn = (0..4).map(|i| hh[(i, i)].norm_sqr()).sum::<f64>();
            assert!(d * d * 4.0 <= dgn + 1e-12);
            assert!(dgn <= d * d * 4.0 + e1 + 1e-12);
        }
    }

    #[test]
    fn effective_channel_matches_dense() {
        let h = sample_channel(4, 6, 2).unwrap();
        let a = tikhonov_inverse(&h, 0.2).unwrap();
        assert!(rel_frob(&effective_channel(&h, 0.2), &(h.entries() * a.matrix())) < 1e-10);
    }
}
