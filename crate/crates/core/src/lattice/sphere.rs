//! Exact closest-vector search by Schnorr-Euchner sphere decoding on the
//! real `2K`-dimensional embedding of the complex lattice.

use nalgebra::{DMatrix, DVector};

use super::sqr::{babai_real, sorted_qr};
use super::{embedded, point_from_real, Method, PerturbationResult};
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, real_vector, round_half_up, CMat, CVec};

/// Sphere decoder for one basis, reusable across targets.
pub struct SphereDecoder {
    basis: CMat,
    tau: f64,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    order: Vec<usize>,
}

impl SphereDecoder {
    pub fn new(basis: &CMat, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("tau must be positive, got {tau}")));
        }
        let sq = sorted_qr(&embedded(basis, tau))?;
        Ok(Self {
            basis: basis.clone(),
            tau,
            q: sq.q().clone(),
            r: sq.r().clone(),
            order: sq.order().to_vec(),
        })
    }

    /// Exact minimizer of `||y - B v||^2` over `v in tau Z[i]^K`.
    pub fn solve(&self, y: &CVec) -> Result<PerturbationResult> {
        let n = self.r.nrows();
        if 2 * y.len() != n {
            return Err(Error::Dimension(format!("target of length {} for a {}-dim basis", y.len(), n / 2)));
        }
        let yt = self.q.transpose() * real_vector(y);
        let start = babai_real(&self.r, &yt);
        let mut search = Search {
            r: &self.r,
            yt: &yt,
            best: distance(&self.r, &yt, &start),
            best_w: start.clone(),
            w: start,
            nodes: 0,
        };
        search.descend(n - 1, 0.0);

        let mut v = vec![0i64; n];
        for (k, &col) in self.order.iter().enumerate() {
            v[col] = search.best_w[k];
        }
        let (x, coords) = point_from_real(&v, self.tau);
        let objective = norm_sq(&(y - &self.basis * &x));
        Ok(PerturbationResult { x, coords, objective, method: Method::MlSphere, node_count: search.nodes })
    }
}

fn distance(r: &DMatrix<f64>, yt: &DVector<f64>, w: &[i64]) -> f64 {
    let n = r.nrows();
    (0..n)
        .map(|i| {
            let fit: f64 = (i..n).map(|j| r[(i, j)] * w[j] as f64).sum();
            (yt[i] - fit).powi(2)
        })
        .sum()
}

struct Search<'a> {
    r: &'a DMatrix<f64>,
    yt: &'a DVector<f64>,
    best: f64,
    best_w: Vec<i64>,
    w: Vec<i64>,
    nodes: u64,
}

impl Search<'_> {
    fn descend(&mut self, level: usize, partial: f64) {
        let n = self.r.nrows();
        let mut acc = self.yt[level];
        for j in (level + 1)..n {
            acc -= self.r[(level, j)] * self.w[j] as f64;
        }
        let rll = self.r[(level, level)];
        let center = acc / rll;
        let first = round_half_up(center);
        // Zig-zag around the centre; |cand - center| is non-decreasing along
        // the sequence, so the first candidate outside the radius ends the level.
        let up_first = center >= first;
        let mut offset = 0i64;
        loop {
            let cand = first + offset as f64;
            let dist = partial + (rll * (cand - center)).powi(2);
            self.nodes += 1;
            if dist >= self.best {
                break;
            }
            self.w[level] = cand as i64;
            if level == 0 {
                self.best = dist;
                self.best_w.copy_from_slice(&self.w);
            } else {
                self.descend(level - 1, dist);
            }
            offset = next_offset(offset, up_first);
        }
    }
}

/// 0, +1, -1, +2, -2, ... (or the mirror image when the centre lies below
/// the first candidate).
fn next_offset(offset: i64, up_first: bool) -> i64 {
    let sign = if up_first { 1 } else { -1 };
    if offset * sign > 0 {
        -offset
    } else {
        -offset + sign
    }
}

/// One-shot exact search; refuses dimensions above `ml_cap`.
pub fn sphere_cvp(basis: &CMat, y: &CVec, tau: f64, ml_cap: usize) -> Result<PerturbationResult> {
    let k = basis.nrows();
    if k > ml_cap {
        return Err(Error::SolverRefused(format!(
            "sphere decoding is exponential in K; K = {k} exceeds the cap of {ml_cap}, use the sqr solver instead"
        )));
    }
    SphereDecoder::new(basis, tau)?.solve(y)
}
