//! Scaled square QAM alphabets and the receivers' modulo-lattice reduction.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{round_half_up, CVec};
use crate::seed;

/// An `N`-QAM alphabet scaled to mean energy `c`, with the period `tau` of
/// the perturbation lattice `tau Z[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    n_points: usize,
    c_energy: f64,
    tau: f64,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn c_energy(&self) -> f64 {
        self.c_energy
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Mean of `|p|^2` over the alphabet.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.n_points as f64
    }
}

/// Builds the square `N`-QAM grid `{±1, ±3, ...} + i{±1, ±3, ...}` scaled by
/// `sqrt(c / (2(N-1)/3))`; `tau = sqrt(6 c N / (N - 1))`.
pub fn make_constellation(n_points: usize, c_energy: f64) -> Result<Constellation> {
    let side = (n_points as f64).sqrt().round() as usize;
    if n_points < 4 || side * side != n_points {
        return Err(Error::Domain(format!("N = {n_points} is not a perfect square >= 4")));
    }
    if !(c_energy > 0.0) || !c_energy.is_finite() {
        return Err(Error::Domain(format!("symbol energy must be positive, got {c_energy}")));
    }
    let n = n_points as f64;
    let scale = (c_energy / (2.0 * (n - 1.0) / 3.0)).sqrt();
    let levels: Vec<f64> = (0..side).map(|j| (2 * j) as f64 - (side as f64 - 1.0)).collect();
    let points = levels
        .iter()
        .flat_map(|&im| levels.iter().map(move |&re| Complex64::new(re * scale, im * scale)))
        .collect();
    Ok(Constellation {
        n_points,
        c_energy,
        tau: (6.0 * c_energy * n / (n - 1.0)).sqrt(),
        points,
    })
}

/// Draws `k` i.i.d. uniform symbols, deterministic in `seed`.
pub fn sample_data(constellation: &Constellation, k: usize, seed: u64) -> CVec {
    let mut rng = seed::rng(seed);
    sample_data_with(constellation, k, &mut rng)
}

/// As [`sample_data`] but continuing an existing generator.
pub fn sample_data_with<R: Rng + ?Sized>(constellation: &Constellation, k: usize, rng: &mut R) -> CVec {
    let n = constellation.points.len();
    CVec::from_fn(k, |_, _| constellation.points[rng.random_range(0..n)])
}

/// Reduces `value` into the centred cell `[-scale/2, scale/2)^2` of the
/// lattice `scale Z[i]`, rounding ties up on each real coordinate.
pub fn modulo_reduce(value: Complex64, scale: f64) -> Complex64 {
    debug_assert!(scale > 0.0);
    Complex64::new(
        value.re - scale * round_half_up(value.re / scale),
        value.im - scale * round_half_up(value.im / scale),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn qpsk_unit_energy() {
        let q = make_constellation(4, 1.0).unwrap();
        let r = 0.5f64.sqrt();
        for p in q.points() {
            assert!((p.re.abs() - r).abs() < 1e-15 && (p.im.abs() - r).abs() < 1e-15);
        }
        assert!((q.tau() - 8f64.sqrt()).abs() < 1e-12);
        assert!((q.tau() - 2.828427).abs() < 1e-6);
    }

    #[test]
    fn sixteen_qam_tau() {
        let q = make_constellation(16, 1.0).unwrap();
        assert!((q.tau() - 6.4f64.sqrt()).abs() < 1e-12);
        assert!((q.tau() - 2.529822).abs() < 1e-6);
    }

    #[test]
    fn energy_and_symmetry() {
        for n in [4, 16, 64, 256] {
            for c in [0.25, 1.0 / 3.0, 1.0] {
                let q = make_constellation(n, c).unwrap();
                assert!((q.mean_energy() - c).abs() < 1e-12);
                let nn = n as f64;
                assert!((q.tau() - (6.0 * c * nn / (nn - 1.0)).sqrt()).abs() < 1e-12);
                for p in q.points() {
                    assert!(q.points().iter().any(|o| (o + p).norm() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn rejects_non_square() {
        for n in [0, 1, 2, 3, 8, 15, 32] {
            assert!(matches!(make_constellation(n, 1.0), Err(Error::Domain(_))));
        }
        assert!(make_constellation(4, 0.0).is_err());
    }

    #[test]
    fn sampling_is_uniform_and_deterministic() {
        let q = make_constellation(4, 0.5).unwrap();
        assert_eq!(sample_data(&q, 6, 3), sample_data(&q, 6, 3));
        let draws = sample_data(&q, 100_000, 11);
        let mut counts = [0usize; 4];
        let mut energy = 0.0;
        for u in draws.iter() {
            let idx = q.points().iter().position(|p| p == u).unwrap();
            counts[idx] += 1;
            energy += u.norm_sqr();
        }
        for cnt in counts {
            assert!((cnt as f64 / 1e5 - 0.25).abs() < 0.01);
        }
        assert!((energy / 1e5 - 0.5).abs() < 0.01 * 0.5);

        let q16 = make_constellation(16, 1.0).unwrap();
        let draws = sample_data(&q16, 100_000, 12);
        let e: f64 = draws.iter().map(|u| u.norm_sqr()).sum::<f64>() / 1e5;
        assert!((e - 1.0).abs() < 0.01);
    }

    #[test]
    fn modulo_examples() {
        let r = modulo_reduce(Complex64::new(1.7, 0.2), 1.0);
        assert!((r - Complex64::new(-0.3, 0.2)).norm() < 1e-12);
        let r = modulo_reduce(Complex64::new(0.3, -0.4), 1.0);
        assert!((r - Complex64::new(0.3, -0.4)).norm() < 1e-15);
        let r = modulo_reduce(Complex64::new(0.5, 0.0), 1.0);
        assert_eq!(r, Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn constellation_survives_lattice_offsets() {
        for n in [4, 16, 64] {
            let q = make_constellation(n, 0.75).unwrap();
            let tau = q.tau();
            for &u in q.points() {
                for a in -5..=5 {
                    for b in -5..=5 {
                        let x = Complex64::new(a as f64 * tau, b as f64 * tau);
                        assert!((modulo_reduce(u + x, tau) - u).norm() < 1e-12);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn modulo_is_idempotent_and_periodic(
            re in -50.0f64..50.0, im in -50.0f64..50.0,
            scale in 0.1f64..5.0,
            ga in -10i32..=10, gb in -10i32..=10,
        ) {
            let v = Complex64::new(re, im);
            let once = modulo_reduce(v, scale);
            prop_assert!(once.re >= -scale / 2.0 - 1e-12 && once.re < scale / 2.0 + 1e-12);
            prop_assert!(once.im >= -scale / 2.0 - 1e-12 && once.im < scale / 2.0 + 1e-12);
            let twice = modulo_reduce(once, scale);
            prop_assert!((twice - once).norm() < 1e-12);
            let shifted = v + Complex64::new(ga as f64 * scale, gb as f64 * scale);
            let r = modulo_reduce(shifted, scale);
            // Floating error may flip a point sitting on the cell boundary.
            let on_edge = (once.re.abs() - scale / 2.0).abs() < 1e-9
                || (once.im.abs() - scale / 2.0).abs() < 1e-9;
            prop_assert!((r - once).norm() < 1e-12 || on_edge);
        }
    }
}
