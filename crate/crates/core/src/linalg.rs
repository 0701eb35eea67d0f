//! Small dense helpers shared by the modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Squared Euclidean norm of a complex vector.
pub fn norm_sq(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Squared Frobenius norm.
pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// The diagonal part of a square matrix, zero elsewhere.
pub fn dg(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, m.ncols(), |i, j| if i == j { m[(i, j)] } else { Complex64::new(0.0, 0.0) })
}

/// Real embedding of a complex matrix: `[[Re, -Im], [Im, Re]]`.
///
/// Acting on `[Re v; Im v]` it reproduces `B v`, so `Z[i]^K` maps onto `Z^{2K}`.
pub fn real_embedding(b: &CMat) -> DMatrix<f64> {
    let (r, c) = b.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = b[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// `[Re v; Im v]`.
pub fn real_vector(v: &CVec) -> DVector<f64> {
    let k = v.len();
    DVector::from_fn(2 * k, |i, _| if i < k { v[i].re } else { v[i - k].im })
}

/// Inverse of [`real_vector`].
pub fn complex_vector(v: &DVector<f64>) -> CVec {
    let k = v.len() / 2;
    CVec::from_fn(k, |i, _| Complex64::new(v[i], v[i + k]))
}

/// Rounds to the nearest integer with ties going up (towards +inf).
#[inline]
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Relative Frobenius distance `||a - b|| / ||b||`.
pub fn rel_frob(a: &CMat, b: &CMat) -> f64 {
    let denom = frob_sq(b).sqrt();
    let num = frob_sq(&(a - b)).sqrt();
    if denom == 0.0 {
        num
    } else {
        num / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_reproduces_complex_product() {
        let b = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 2.0),
                Complex64::new(-0.5, 0.25),
                Complex64::new(0.0, -1.0),
                Complex64::new(3.0, 0.5),
            ],
        );
        let v = CVec::from_vec(vec![Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.7)]);
        let direct = &b * &v;
        let via_real = complex_vector(&(real_embedding(&b) * real_vector(&v)));
        for (a, b) in direct.iter().zip(via_real.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn half_up_ties() {
        assert_eq!(round_half_up(0.5), 1.0);
        assert_eq!(round_half_up(-0.5), 0.0);
        assert_eq!(round_half_up(1.49), 1.0);
        assert_eq!(round_half_up(-1.5), -1.0);
    }
}
