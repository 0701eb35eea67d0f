//! Exhaustive closest-vector search, used as a test oracle.

use num_complex::Complex64;

use super::sqr::{babai_nearest, sorted_qr};
use super::{lattice_point, Method, PerturbationResult};
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, CMat, CVec};

pub(crate) const MAX_K: usize = 4;
pub(crate) const MAX_HALFWIDTH: i64 = 8;

/// Minimizes `||y - B v||^2` over every `v in tau Z[i]^K` whose coordinates
/// lie within `box_halfwidth` (per real and imaginary part) of the sorted-QR
/// Babai point.
pub fn brute_force_cvp(basis: &CMat, y: &CVec, tau: f64, box_halfwidth: i64) -> Result<PerturbationResult> {
    let k = basis.nrows();
    if k > MAX_K {
        return Err(Error::SolverRefused(format!("brute force is limited to K <= {MAX_K}, got {k}")));
    }
    if !(0..=MAX_HALFWIDTH).contains(&box_halfwidth) {
        return Err(Error::SolverRefused(format!(
            "brute-force half-width must be in 0..={MAX_HALFWIDTH}, got {box_halfwidth}"
        )));
    }
    if y.len() != k || !basis.is_square() {
        return Err(Error::Dimension(format!("basis {:?} and target of length {}", basis.shape(), y.len())));
    }
    let center = babai_nearest(&sorted_qr(basis)?, y, tau)?.coords;
    let columns: Vec<CVec> = (0..k).map(|j| basis.column(j) * Complex64::new(tau, 0.0)).collect();

    let mut residuals = vec![vec![Complex64::new(0.0, 0.0); k]; k + 1];
    residuals[0].copy_from_slice(y.as_slice());
    let mut state = Enum {
        columns: &columns,
        center: &center,
        h: box_halfwidth,
        current: vec![(0, 0); k],
        residuals,
        best: f64::INFINITY,
        best_coords: center.clone(),
        nodes: 0,
    };
    state.walk(0);

    let x = lattice_point(&state.best_coords, tau);
    let objective = norm_sq(&(y - basis * &x));
    Ok(PerturbationResult { x, coords: state.best_coords, objective, method: Method::Brute, node_count: state.nodes })
}

struct Enum<'a> {
    columns: &'a [CVec],
    center: &'a [(i64, i64)],
    h: i64,
    current: Vec<(i64, i64)>,
    /// `residuals[j]` is `y` minus the contribution of coordinates `< j`.
    residuals: Vec<Vec<Complex64>>,
    best: f64,
    best_coords: Vec<(i64, i64)>,
    nodes: u64,
}

impl Enum<'_> {
    fn walk(&mut self, j: usize) {
        let k = self.columns.len();
        if j == k {
            let d: f64 = self.residuals[k].iter().map(|z| z.norm_sqr()).sum();
            if d < self.best {
                self.best = d;
                self.best_coords.copy_from_slice(&self.current);
            }
            return;
        }
        let (c_re, c_im) = self.center[j];
        for a in (c_re - self.h)..=(c_re + self.h) {
            for b in (c_im - self.h)..=(c_im + self.h) {
                self.nodes += 1;
                self.current[j] = (a, b);
                let g = Complex64::new(a as f64, b as f64);
                let (head, tail) = self.residuals.split_at_mut(j + 1);
                for ((out, r), col) in tail[0].iter_mut().zip(&head[j]).zip(self.columns[j].iter()) {
                    *out = r - col * g;
                }
                self.walk(j + 1);
            }
        }
    }
}
