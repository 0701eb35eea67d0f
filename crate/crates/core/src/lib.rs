//! Channel pre-inversion and max-SINR vector perturbation for multi-user
//! broadcast channels.
//!
//! A base station with `M` antennas serves `K <= M` single-antenna users
//! through a channel `H` (`K x M`). The crate provides:
//!
//! * [`channel`]: channel sampling, the Tikhonov-regularized inverse and its
//!   bookkeeping,
//! * [`modulation`]: scaled QAM alphabets and modulo reduction,
//! * [`objective`]: the quadratic forms a perturbation search minimizes and
//!   the SINR / capacity measurements,
//! * [`lattice`]: closest-vector solvers (sphere decoder, sorted-QR Babai,
//!   LLL-Babai, brute force),
//! * [`predict`]: closed-form large-system predictions,
//! * [`harness`]: reproducible parallel Monte-Carlo sweeps.
//!
//! ```
//! use msvp::channel::sample_channel;
//! use msvp::lattice::{solve_perturbation, Method};
//! use msvp::modulation::{make_constellation, sample_data};
//! use msvp::objective::build_msvp_basis;
//!
//! let h = sample_channel(4, 4, 1)?;
//! let q = make_constellation(16, 1.0)?;
//! let t = build_msvp_basis(&h, 0.01, 0.01, q.tau())?;
//! let u = sample_data(&q, 4, 2);
//! let best = solve_perturbation(&t, &u, Method::MlSphere)?;
//! assert!(best.objective <= t.objective(&u) + 1e-12);
//! # Ok::<(), msvp::Error>(())
//! ```

pub mod channel;
mod error;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod modulation;
pub mod objective;
pub mod predict;
pub mod seed;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/modulation.md")]
    mod modulation {}
    #[doc = include_str!("../../../book/src/objective.md")]
    mod objective {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/predict.md")]
    mod predict {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
