//! Closest-vector solvers for the perturbation search
//! `min_x ||B (u + x)||^2, x in tau Z[i]^K`.
//!
//! Every solver works on the equivalent problem `min_v ||y - B v||^2` with
//! `y = -B u`, so the returned lattice point is the offset `x` itself.
//! Coordinates are kept as Gaussian integers and scaled by `tau` once.

mod brute;
mod lll;
mod sphere;
mod sqr;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use brute::brute_force_cvp;
pub use lll::{integer_det, lll_reduce, lll_reduce_real, LllReduction};
pub use sphere::sphere_cvp;
pub use sqr::{babai_nearest, sorted_qr, SortedQr};

use crate::error::{Error, Result};
use crate::linalg::{complex_vector, norm_sq, real_embedding, real_vector, CMat, CVec};
use crate::objective::ObjectiveBasis;

/// Perturbation search algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// No perturbation: `x = 0`.
    None,
    /// Exhaustive search in a box around the Babai point (small `K` only).
    Brute,
    /// Exact search by sphere decoding.
    MlSphere,
    /// Babai point after a sorted QR decomposition.
    SqrBabai,
    /// Babai point on an LLL-reduced basis.
    LllBabai,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Brute => "brute",
            Method::MlSphere => "ml",
            Method::SqrBabai => "sqr",
            Method::LllBabai => "lll",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Method::None),
            "brute" => Ok(Method::Brute),
            "ml" | "ml_sphere" | "sphere" => Ok(Method::MlSphere),
            "sqr" | "sqr_babai" => Ok(Method::SqrBabai),
            "lll" | "lll_babai" => Ok(Method::LllBabai),
            other => Err(Error::Config(format!("unknown solver '{other}'"))),
        }
    }
}

/// Limits and parameters shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Largest `K` the sphere decoder accepts.
    pub ml_cap: usize,
    /// Half-width of the brute-force box, per real coordinate.
    pub brute_halfwidth: i64,
    /// LLL parameter in `(1/4, 1)`.
    pub lll_delta: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { ml_cap: 16, brute_halfwidth: 3, lll_delta: 0.75 }
    }
}

/// A lattice point found by one of the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationResult {
    /// The point `tau * coords`.
    pub x: CVec,
    /// Gaussian-integer coordinates `(re, im)` of `x / tau`.
    pub coords: Vec<(i64, i64)>,
    /// `||y - B x||^2`, which equals `||B (u + x)||^2` for perturbation searches.
    pub objective: f64,
    pub method: Method,
    /// Enumeration effort: tree nodes for the exact solvers, `K` for Babai.
    pub node_count: u64,
}

pub(crate) fn lattice_point(coords: &[(i64, i64)], scale: f64) -> CVec {
    CVec::from_iterator(
        coords.len(),
        coords.iter().map(|&(a, b)| Complex64::new(a as f64 * scale, b as f64 * scale)),
    )
}

/// Splits `[re; im]` integer coordinates of the real embedding into pairs.
pub(crate) fn pair_coords(w: &[i64]) -> Vec<(i64, i64)> {
    let k = w.len() / 2;
    (0..k).map(|i| (w[i], w[i + k])).collect()
}

enum Prepared {
    None,
    Brute,
    Sphere,
    Sqr(SortedQr<Complex64>),
    Lll { q: DMatrix<f64>, r: DMatrix<f64>, transform: DMatrix<i64> },
}

/// A solver with its per-basis preprocessing done, ready to be applied to
/// many data vectors for the same channel.
pub struct PerturbationSolver {
    basis: CMat,
    tau: f64,
    method: Method,
    options: SolverOptions,
    prepared: Prepared,
}

impl PerturbationSolver {
    pub fn new(objective: &ObjectiveBasis, method: Method, options: SolverOptions) -> Result<Self> {
        Self::for_matrix(objective.matrix().clone(), objective.tau(), method, options)
    }

    pub fn for_matrix(basis: CMat, tau: f64, method: Method, options: SolverOptions) -> Result<Self> {
        let k = basis.nrows();
        check_method_allowed(method, k, &options)?;
        let prepared = match method {
            Method::None => Prepared::None,
            Method::Brute => Prepared::Brute,
            Method::MlSphere => Prepared::Sphere,
            Method::SqrBabai => Prepared::Sqr(sorted_qr(&basis)?),
            Method::LllBabai => {
                let red = lll_reduce(&basis, options.lll_delta)?;
                let (q, r) = sqr::real_qr(&(&red.basis * tau));
                Prepared::Lll { q, r, transform: red.transform }
            }
        };
        Ok(Self { basis, tau, method, options, prepared })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Minimizes `||B (u + x)||^2` over `x in tau Z[i]^K`.
    pub fn solve(&self, u: &CVec) -> Result<PerturbationResult> {
        let k = self.basis.nrows();
        if u.len() != k {
            return Err(Error::Dimension(format!("data vector of length {} for K = {k}", u.len())));
        }
        let y = -(&self.basis * u);
        match &self.prepared {
            Prepared::None => Ok(PerturbationResult {
                x: CVec::zeros(k),
                coords: vec![(0, 0); k],
                objective: norm_sq(&y),
                method: Method::None,
                node_count: 0,
            }),
            Prepared::Brute => brute_force_cvp(&self.basis, &y, self.tau, self.options.brute_halfwidth),
            Prepared::Sphere => sphere_cvp(&self.basis, &y, self.tau, self.options.ml_cap),
            Prepared::Sqr(sq) => babai_nearest(sq, &y, self.tau),
            Prepared::Lll { q, r, transform } => {
                let yt = q.transpose() * real_vector(&y);
                let w = sqr::babai_real(r, &yt);
                let v: Vec<i64> = (0..w.len())
                    .map(|i| (0..w.len()).map(|j| transform[(i, j)] * w[j]).sum())
                    .collect();
                let coords = pair_coords(&v);
                let x = lattice_point(&coords, self.tau);
                let objective = norm_sq(&(&y - &self.basis * &x));
                Ok(PerturbationResult { x, coords, objective, method: Method::LllBabai, node_count: k as u64 })
            }
        }
    }
}

fn check_method_allowed(method: Method, k: usize, options: &SolverOptions) -> Result<()> {
    match method {
        Method::MlSphere if k > options.ml_cap => Err(Error::SolverRefused(format!(
            "sphere decoding is exponential in K; K = {k} exceeds the cap of {}, use the sqr solver instead",
            options.ml_cap
        ))),
        Method::Brute if k > brute::MAX_K || options.brute_halfwidth > brute::MAX_HALFWIDTH => {
            Err(Error::SolverRefused(format!(
                "brute force is limited to K <= {} and half-width <= {}",
                brute::MAX_K,
                brute::MAX_HALFWIDTH
            )))
        }
        _ => Ok(()),
    }
}

/// One-shot perturbation search with default options.
pub fn solve_perturbation(objective: &ObjectiveBasis, u: &CVec, method: Method) -> Result<PerturbationResult> {
    PerturbationSolver::new(objective, method, SolverOptions::default())?.solve(u)
}

/// Real-embedding view of a scaled complex basis.
pub(crate) fn embedded(basis: &CMat, scale: f64) -> DMatrix<f64> {
    real_embedding(basis) * scale
}

/// Complex offset for real-embedding integer coordinates.
pub(crate) fn point_from_real(w: &[i64], scale: f64) -> (CVec, Vec<(i64, i64)>) {
    let coords = pair_coords(w);
    let v = nalgebra::DVector::from_iterator(w.len(), w.iter().map(|&a| a as f64 * scale));
    debug_assert_eq!(complex_vector(&v), lattice_point(&coords, scale));
    (lattice_point(&coords, scale), coords)
}
