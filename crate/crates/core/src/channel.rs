//! Random fading channels, Tikhonov-regularized inverses and the power
//! renormalization constant.
//!
//! Channel entries are circularly symmetric complex Gaussians with
//! `E|h_ij|^2 = 1/K`, so that `K * H H^†` is a standard complex Wishart
//! matrix. All inverses go through the SVD cached on [`ChannelMatrix`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{norm_sq, CMat, CVec};
use crate::seed;

/// Default relative rank tolerance used for zero-forcing inversion.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// A `K x M` channel together with its thin SVD `H = U diag(s) V^†`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: CMat,
    u: CMat,
    s: Vec<f64>,
    v: CMat,
}

impl ChannelMatrix {
    /// Wraps explicit channel gains; requires `1 <= K <= M`.
    pub fn new(entries: CMat) -> Result<Self> {
        let (k, m) = entries.shape();
        if k == 0 || m == 0 {
            return Err(Error::Domain(format!("channel must be non-empty, got {k}x{m}")));
        }
        if k > m {
            return Err(Error::Dimension(format!(
                "need K <= M, got K = {k} users and M = {m} antennas"
            )));
        }
        let svd = entries.clone().svd(true, true);
        let u = svd.u.expect("svd computed with U");
        let v = svd.v_t.expect("svd computed with V^T").adjoint();
        let s = svd.singular_values.iter().copied().collect();
        Ok(Self { entries, u, s, v })
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn k_users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn m_antennas(&self) -> usize {
        self.entries.ncols()
    }

    /// Left singular vectors, `K x K`.
    pub fn u(&self) -> &CMat {
        &self.u
    }

    /// Right singular vectors, `M x K` with orthonormal columns.
    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    pub fn max_singular_value(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_singular_value(&self) -> f64 {
        self.s.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `U diag(s) V^†`.
    pub fn reconstruct(&self) -> CMat {
        let sig = CMat::from_diagonal(&CVec::from_iterator(
            self.s.len(),
            self.s.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        &self.u * sig * self.v.adjoint()
    }

    /// `(1/K) sum_i s_i^2 / (s_i^2 + alpha)`, the mean diagonal gain of
    /// `H H_alpha`.
    pub fn mean_gain(&self, alpha: f64) -> f64 {
        let k = self.s.len() as f64;
        self.s.iter().map(|&s| gain(s, alpha)).sum::<f64>() / k
    }

    fn check_rank(&self, alpha: f64, rel_tol: f64) -> Result<()> {
        if alpha == 0.0 {
            let tolerance = rel_tol * self.max_singular_value();
            let smallest = self.min_singular_value();
            if !(smallest > tolerance) {
                return Err(Error::RankDeficient { smallest, tolerance });
            }
        }
        Ok(())
    }
}

/// `s^2 / (s^2 + alpha)`; equals 1 for `alpha = 0`.
#[inline]
pub(crate) fn gain(s: f64, alpha: f64) -> f64 {
    let s2 = s * s;
    if alpha == 0.0 {
        1.0
    } else {
        s2 / (s2 + alpha)
    }
}

/// Draws an i.i.d. Rayleigh channel, deterministic in `seed`.
pub fn sample_channel(k_users: usize, m_antennas: usize, seed: u64) -> Result<ChannelMatrix> {
    if k_users == 0 || m_antennas == 0 {
        return Err(Error::Domain("K and M must be positive".into()));
    }
    if k_users > m_antennas {
        return Err(Error::Dimension(format!(
            "need K <= M, got K = {k_users} and M = {m_antennas}"
        )));
    }
    let mut rng = seed::rng(seed);
    let normal = Normal::new(0.0, (0.5 / k_users as f64).sqrt()).expect("finite std dev");
    let entries = CMat::from_fn(k_users, m_antennas, |_, _| {
        let re = normal.sample(&mut rng);
        let im = normal.sample(&mut rng);
        Complex64::new(re, im)
    });
    ChannelMatrix::new(entries)
}

/// A precoding matrix `A` (`M x K`) and its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    matrix_a: CMat,
    alpha: f64,
    d: f64,
    gamma: Option<f64>,
}

impl Precoder {
    /// An arbitrary precoding matrix with a caller-supplied `d`.
    pub fn from_parts(matrix_a: CMat, alpha: f64, d: f64) -> Self {
        Self { matrix_a, alpha, d, gamma: None }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix_a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// The renormalization constant, once [`Precoder::renorm_gamma`] ran.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Estimates `gamma = mean ||A (u + x)||^2 / K` from a batch of perturbed
    /// data vectors and stores it.
    pub fn renorm_gamma(&mut self, perturbed_batch: &[CVec]) -> Result<f64> {
        let gamma = renorm_gamma(&self.matrix_a, perturbed_batch)?;
        self.gamma = Some(gamma);
        Ok(gamma)
    }
}

/// `mean_batch ||A v||^2 / K` without touching any precoder state.
pub fn renorm_gamma(matrix_a: &CMat, perturbed_batch: &[CVec]) -> Result<f64> {
    if perturbed_batch.is_empty() {
        return Err(Error::Domain("gamma needs a non-empty batch".into()));
    }
    let k = matrix_a.ncols();
    let mut total = 0.0;
    for v in perturbed_batch {
        if v.len() != k {
            return Err(Error::Dimension(format!("batch vector of length {} for K = {k}", v.len())));
        }
        total += norm_sq(&(matrix_a * v));
    }
    Ok(total / perturbed_batch.len() as f64 / k as f64)
}

/// `H^† (alpha I + H H^†)^{-1}` through the cached SVD.
pub fn tikhonov_inverse(h: &ChannelMatrix, alpha: f64) -> Result<Precoder> {
    tikhonov_inverse_with_tol(h, alpha, DEFAULT_RANK_TOL)
}

/// As [`tikhonov_inverse`] with an explicit relative rank tolerance for the
/// `alpha = 0` case.
pub fn tikhonov_inverse_with_tol(h: &ChannelMatrix, alpha: f64, rel_tol: f64) -> Result<Precoder> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be a finite non-negative real, got {alpha}")));
    }
    h.check_rank(alpha, rel_tol)?;
    let k = h.k_users();
    // A = V diag(s / (s^2 + alpha)) U^†
    let mut scaled_v = h.v.clone();
    for (j, &s) in h.s.iter().enumerate() {
        let w = if s == 0.0 { 0.0 } else { s / (s * s + alpha) };
        scaled_v.column_mut(j).scale_mut(w);
    }
    let matrix_a = scaled_v * h.u.adjoint();
    debug_assert_eq!(matrix_a.shape(), (h.m_antennas(), k));
    Ok(Precoder { matrix_a, alpha, d: h.mean_gain(alpha), gamma: None })
}

/// `tr(H A) / K`.
pub fn diag_gain_d(h: &ChannelMatrix, a: &Precoder) -> Result<f64> {
    let (k, m) = h.entries.shape();
    if a.matrix_a.shape() != (m, k) {
        return Err(Error::Dimension(format!(
            "precoder is {:?}, channel is {k}x{m}",
            a.matrix_a.shape()
        )));
    }
    let tr = (&h.entries * &a.matrix_a).trace();
    Ok(tr.re / k as f64)
}

/// Dense `H^† (alpha I + H H^†)^{-1}` via LU; used to cross-check the SVD route.
pub fn tikhonov_dense(h: &CMat, alpha: f64) -> Option<CMat> {
    let k = h.nrows();
    let gram = h * h.adjoint() + CMat::identity(k, k) * Complex64::new(alpha, 0.0);
    gram.lu().try_inverse().map(|inv| h.adjoint() * inv)
}

/// Real identity helper for building channels in tests and docs.
pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMat {
    DMatrix::from_row_slice(rows, cols, data).map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_frob;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_channel(2, 4, 7).unwrap();
        let b = sample_channel(2, 4, 7).unwrap();
        assert_eq!(a.entries(), b.entries());
        assert_ne!(a.entries(), sample_channel(2, 4, 8).unwrap().entries());
    }

    #[test]
    fn sampling_rejects_bad_shapes() {
        assert!(matches!(sample_channel(3, 2, 0), Err(Error::Dimension(_))));
        assert!(matches!(sample_channel(0, 2, 0), Err(Error::Domain(_))));
        assert!(matches!(sample_channel(1, 0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn scalar_channel_has_unit_power() {
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|i| sample_channel(1, 1, i).unwrap().entries()[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean |h|^2 = {mean}");
    }

    #[test]
    fn frobenius_power_equals_antenna_count() {
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|i| crate::linalg::frob_sq(sample_channel(4, 8, i).unwrap().entries()))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 8.0).abs() < 0.02 * 8.0, "mean ||H||^2 = {mean}");
    }

    #[test]
    fn svd_reconstructs() {
        for seed in 0..20 {
            let h = sample_channel(5, 9, seed).unwrap();
            assert!(rel_frob(&h.reconstruct(), h.entries()) < 1e-10);
            assert!(h.singular_values().iter().all(|&s| s >= 0.0));
        }
    }

    #[test]
    fn identity_channel_zero_forcing() {
        let h = ChannelMatrix::new(from_real(1, 1, &[1.0])).unwrap();
        let a = tikhonov_inverse(&h, 0.0).unwrap();
        assert!((a.matrix()[(0, 0)] - c(1.0)).norm() < 1e-15);
        assert!((a.d() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_channel_regularized() {
        let h = ChannelMatrix::new(CMat::identity(2, 2)).unwrap();
        let a = tikhonov_inverse(&h, 1.0).unwrap();
        assert!(rel_frob(a.matrix(), &(CMat::identity(2, 2) * c(0.5))) < 1e-15);
        assert!((a.d() - 0.5).abs() < 1e-15);
        for k in [1, 3, 7] {
            let h = ChannelMatrix::new(CMat::identity(k, k)).unwrap();
            let a = tikhonov_inverse(&h, 1.0).unwrap();
            assert!((diag_gain_d(&h, &a).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn orthonormal_row_pseudo_inverse() {
        let h = ChannelMatrix::new(from_real(1, 2, &[1.0, 0.0])).unwrap();
        let a = tikhonov_inverse(&h, 0.0).unwrap();
        assert_eq!(a.matrix().shape(), (2, 1));
        assert!((a.matrix()[(0, 0)] - c(1.0)).norm() < 1e-15);
        assert!(a.matrix()[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn scalar_zero_forcing_gain_is_one() {
        let h = ChannelMatrix::new(from_real(1, 1, &[2f64.sqrt()])).unwrap();
        let a = tikhonov_inverse(&h, 0.0).unwrap();
        assert!((diag_gain_d(&h, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn d_matches_singular_value_formula() {
        let h = sample_channel(8, 8, 3).unwrap();
        let a = tikhonov_inverse(&h, 0.1).unwrap();
        let oracle: f64 =
            h.singular_values().iter().map(|s| s * s / (s * s + 0.1)).sum::<f64>() / 8.0;
        assert!((diag_gain_d(&h, &a).unwrap() - oracle).abs() < 1e-10);
        let tr = (h.entries() * a.matrix()).trace();
        assert!(tr.im.abs() / 8.0 < 1e-12);
    }

    #[test]
    fn zero_forcing_refuses_singular_channel() {
        let h = ChannelMatrix::new(from_real(2, 2, &[1.0, 2.0, 2.0, 4.0])).unwrap();
        assert!(matches!(tikhonov_inverse(&h, 0.0), Err(Error::RankDeficient { .. })));
        assert!(tikhonov_inverse(&h, 0.1).is_ok());
        assert!(matches!(tikhonov_inverse(&h, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn svd_route_matches_dense_route() {
        for seed in 0..100u64 {
            let k = 1 + (seed % 16) as usize;
            let m = k + (seed / 16 % 4) as usize * 3 % 17;
            let m = m.min(16).max(k);
            let alpha = [1e-3, 1e-2, 0.1, 1.0][(seed % 4) as usize];
            let h = sample_channel(k, m, 1000 + seed).unwrap();
            let a = tikhonov_inverse(&h, alpha).unwrap();
            let dense = tikhonov_dense(h.entries(), alpha).unwrap();
            assert!(rel_frob(a.matrix(), &dense) < 1e-9, "seed {seed}");
            let dense_d = (h.entries() * &dense).trace().re / k as f64;
            assert!((a.d() - dense_d).abs() < 1e-10);
            assert!(a.d() > 0.0 && a.d() < 1.0);
        }
    }

    #[test]
    fn gamma_examples() {
        let u = CVec::from_vec(vec![c(1.0), Complex64::new(0.0, 1.0)]);
        let mut a = Precoder::from_parts(CMat::identity(2, 2), 0.0, 1.0);
        assert!((a.renorm_gamma(&[u.clone()]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(a.gamma(), Some(1.0));
        let mut a2 = Precoder::from_parts(CMat::identity(2, 2) * c(2.0), 0.0, 1.0);
        assert!((a2.renorm_gamma(&[u]).unwrap() - 4.0).abs() < 1e-15);
        assert!(matches!(a2.renorm_gamma(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_matches_hand_sum() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.3, -0.1),
                Complex64::new(1.2, 0.4),
                Complex64::new(-0.7, 0.9),
                Complex64::new(0.05, 0.0),
            ],
        );
        let batch = vec![
            CVec::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(-1.0, 3.0)]),
            CVec::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, -2.0)]),
            CVec::from_vec(vec![Complex64::new(-2.0, 0.25), Complex64::new(1.0, 1.0)]),
        ];
        // element-wise evaluation of ||A v||^2
        let mut hand = 0.0;
        for v in &batch {
            for i in 0..2 {
                let yi = a[(i, 0)] * v[0] + a[(i, 1)] * v[1];
                hand += yi.re * yi.re + yi.im * yi.im;
            }
        }
        hand /= 3.0 * 2.0;
        assert!((renorm_gamma(&a, &batch).unwrap() - hand).abs() < 1e-12);
        let mut rev = batch.clone();
        rev.reverse();
        assert!((renorm_gamma(&a, &rev).unwrap() - hand).abs() < 1e-12);
    }
}
