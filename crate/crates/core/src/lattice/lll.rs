//! LLL reduction of the real embedding of a complex lattice basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{real_embedding, CMat};

/// A reduced basis `B U` together with the unimodular integer transform `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct LllReduction {
    /// Columns are the reduced basis vectors.
    pub basis: DMatrix<f64>,
    /// Integer matrix with `|det| = 1` and `basis = original * transform`.
    pub transform: DMatrix<i64>,
}

/// LLL-reduces the `2K x 2K` real embedding of `basis`.
pub fn lll_reduce(basis: &CMat, delta: f64) -> Result<LllReduction> {
    if !basis.is_square() {
        return Err(Error::Dimension(format!("LLL needs a square basis, got {:?}", basis.shape())));
    }
    lll_reduce_real(&real_embedding(basis), delta)
}

/// Floating-point LLL on the columns of a real square basis.
pub fn lll_reduce_real(basis: &DMatrix<f64>, delta: f64) -> Result<LllReduction> {
    if !(delta > 0.25 && delta < 1.0) {
        return Err(Error::Domain(format!("LLL delta must lie in (1/4, 1), got {delta}")));
    }
    if !basis.is_square() || basis.nrows() == 0 {
        return Err(Error::Dimension(format!("LLL needs a non-empty square basis, got {:?}", basis.shape())));
    }
    let n = basis.ncols();
    let mut b = basis.clone();
    let mut u = DMatrix::<i64>::identity(n, n);
    let (mut mu, mut bn) = gram_schmidt(&b);
    let scale = (0..n).map(|j| b.column(j).norm_squared()).fold(0.0, f64::max);
    if let Some(&small) = bn.iter().find(|&&x| !(x > 1e-24 * scale)) {
        return Err(Error::RankDeficient { smallest: small.max(0.0).sqrt(), tolerance: 1e-12 * scale.sqrt() });
    }

    let mut k = 1;
    let mut iterations = 0usize;
    while k < n {
        iterations += 1;
        if iterations > 100_000 * n {
            return Err(Error::Degenerate("LLL failed to converge".into()));
        }
        for j in (0..k).rev() {
            size_reduce(&mut b, &mut u, &mut mu, k, j);
        }
        let m = mu[(k, k - 1)];
        if bn[k] >= (delta - m * m) * bn[k - 1] {
            k += 1;
        } else {
            b.swap_columns(k, k - 1);
            u.swap_columns(k, k - 1);
            let big = bn[k] + m * m * bn[k - 1];
            mu[(k, k - 1)] = m * bn[k - 1] / big;
            bn[k] = bn[k - 1] * bn[k] / big;
            bn[k - 1] = big;
            for j in 0..k.saturating_sub(1) {
                let t = mu[(k - 1, j)];
                mu[(k - 1, j)] = mu[(k, j)];
                mu[(k, j)] = t;
            }
            for i in (k + 1)..n {
                let t = mu[(i, k)];
                mu[(i, k)] = mu[(i, k - 1)] - m * t;
                mu[(i, k - 1)] = t + mu[(k, k - 1)] * mu[(i, k)];
            }
            k = (k - 1).max(1);
        }
    }
    Ok(LllReduction { basis: b, transform: u })
}

/// Gram-Schmidt coefficients `mu` (strictly lower part used) and squared
/// norms of the orthogonalized vectors.
fn gram_schmidt(b: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = b.ncols();
    let mut star = b.clone();
    let mut mu = DMatrix::<f64>::identity(n, n);
    let mut bn = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            let m = b.column(i).dot(&star.column(j)) / bn[j];
            mu[(i, j)] = m;
            let sj = star.column(j).clone_owned();
            star.column_mut(i).axpy(-m, &sj, 1.0);
        }
        bn[i] = star.column(i).norm_squared();
    }
    (mu, bn)
}

fn size_reduce(b: &mut DMatrix<f64>, u: &mut DMatrix<i64>, mu: &mut DMatrix<f64>, k: usize, j: usize) {
    let q = mu[(k, j)].round();
    if q == 0.0 {
        return;
    }
    let bj = b.column(j).clone_owned();
    b.column_mut(k).axpy(-q, &bj, 1.0);
    let qi = q as i64;
    for row in 0..u.nrows() {
        u[(row, k)] -= qi * u[(row, j)];
    }
    for l in 0..j {
        mu[(k, l)] -= q * mu[(j, l)];
    }
    mu[(k, j)] -= q;
}

/// Exact determinant of a small integer matrix (fraction-free Bareiss).
pub fn integer_det(m: &DMatrix<i64>) -> i128 {
    let n = m.nrows();
    let mut a: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)] as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match ((k + 1)..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}
