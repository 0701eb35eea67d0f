//! Sorted QR decomposition and the Babai point.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use super::{Method, PerturbationResult};
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, round_half_up, CVec};

/// `B = Q R P`: `Q` unitary, `R` upper triangular with positive real
/// diagonal, `P` a column permutation.
///
/// The permutation is stored as `order`, where column `k` of `Q R` is
/// column `order[k]` of `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedQr<T: ComplexField = Complex64> {
    q: DMatrix<T>,
    r: DMatrix<T>,
    order: Vec<usize>,
}

impl<T: ComplexField<RealField = f64>> SortedQr<T> {
    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<T> {
        &self.r
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    /// The permutation matrix `P` with `B = Q R P`.
    pub fn permutation(&self) -> DMatrix<T> {
        let k = self.order.len();
        let mut p = DMatrix::zeros(k, k);
        for (row, &col) in self.order.iter().enumerate() {
            p[(row, col)] = T::one();
        }
        p
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        &self.q * &self.r * self.permutation()
    }
}

/// Modified Gram-Schmidt with column pivoting: at every step the remaining
/// column with the smallest residual norm is orthogonalized next, which
/// pushes the large diagonal entries of `R` towards the last rows, where the
/// Babai recursion starts.
pub fn sorted_qr<T: ComplexField<RealField = f64>>(basis: &DMatrix<T>) -> Result<SortedQr<T>> {
    if !basis.is_square() || basis.nrows() == 0 {
        return Err(Error::Dimension(format!("sorted QR needs a non-empty square basis, got {:?}", basis.shape())));
    }
    let k = basis.nrows();
    let mut q = basis.clone();
    let mut r = DMatrix::<T>::zeros(k, k);
    let mut order: Vec<usize> = (0..k).collect();
    let mut norms: Vec<f64> = (0..k).map(|j| q.column(j).norm_squared()).collect();
    let scale = norms.iter().copied().fold(0.0, f64::max).sqrt();

    for i in 0..k {
        let pick = (i..k)
            .min_by(|&a, &b| norms[a].total_cmp(&norms[b]))
            .expect("non-empty range");
        if pick != i {
            q.swap_columns(i, pick);
            r.swap_columns(i, pick);
            order.swap(i, pick);
            norms.swap(i, pick);
        }
        let rii = q.column(i).norm();
        if !(rii > 1e-12 * scale) {
            return Err(Error::RankDeficient { smallest: rii, tolerance: 1e-12 * scale });
        }
        r[(i, i)] = T::from_real(rii);
        q.column_mut(i).unscale_mut(rii);
        for l in (i + 1)..k {
            let ril = q.column(i).dotc(&q.column(l));
            r[(i, l)] = ril.clone();
            let qi = q.column(i).clone_owned();
            q.column_mut(l).axpy(-ril, &qi, T::one());
            norms[l] = q.column(l).norm_squared();
        }
    }
    Ok(SortedQr { q, r, order })
}

/// Nearest point of `scale Z[i]` to each coordinate, ties rounded up.
#[inline]
fn round_gaussian(c: Complex64, scale: f64) -> (i64, i64) {
    (round_half_up(c.re / scale) as i64, round_half_up(c.im / scale) as i64)
}

/// Babai's nearest-plane estimate of `argmin_v ||y - B v||` over
/// `v in scale Z[i]^K`, by back substitution through `R` from the last
/// row up.
pub fn babai_nearest(sq: &SortedQr<Complex64>, y: &CVec, scale: f64) -> Result<PerturbationResult> {
    let k = sq.dim();
    if y.len() != k {
        return Err(Error::Dimension(format!("target of length {} for a {k}-dim basis", y.len())));
    }
    let yt = sq.q.adjoint() * y;
    let mut z = vec![Complex64::new(0.0, 0.0); k];
    let mut coords_sorted = vec![(0i64, 0i64); k];
    for i in (0..k).rev() {
        let mut acc = yt[i];
        for j in (i + 1)..k {
            acc -= sq.r[(i, j)] * z[j];
        }
        let c = acc / sq.r[(i, i)];
        let g = round_gaussian(c, scale);
        coords_sorted[i] = g;
        z[i] = Complex64::new(g.0 as f64 * scale, g.1 as f64 * scale);
    }
    // undo the column ordering: v[order[i]] = z[i]
    let mut coords = vec![(0i64, 0i64); k];
    for (i, &col) in sq.order.iter().enumerate() {
        coords[col] = coords_sorted[i];
    }
    let x = super::lattice_point(&coords, scale);
    // Q is unitary, so the distance can be measured in the rotated frame.
    let zs = CVec::from_vec(z);
    let objective = norm_sq(&(yt - &sq.r * zs));
    Ok(PerturbationResult { x, coords, objective, method: Method::SqrBabai, node_count: k as u64 })
}

/// Back substitution used by the real-embedding solvers: returns integer
/// coordinates `w` approximately minimizing `||y - R w||` for upper
/// triangular `R`.
pub(crate) fn babai_real(r: &DMatrix<f64>, y: &DVector<f64>) -> Vec<i64> {
    let n = r.nrows();
    let mut w = vec![0i64; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for j in (i + 1)..n {
            acc -= r[(i, j)] * w[j] as f64;
        }
        w[i] = round_half_up(acc / r[(i, i)]) as i64;
    }
    w
}

/// Householder QR with the signs of `R`'s diagonal made positive.
pub(crate) fn real_qr(basis: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = basis.clone().qr();
    let (mut q, mut r) = (qr.q(), qr.r());
    for i in 0..r.nrows() {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    (q, r)
}
