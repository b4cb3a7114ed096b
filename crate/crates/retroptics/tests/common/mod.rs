#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use retroptics::fock::DensityMatrix;

/// Random full-rank density matrix `A A† / Tr`.
pub fn random_density(cutoff: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = cutoff + 1;
    let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    DensityMatrix::from_entries(&a * a.adjoint()).normalize()
}

pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

/// Haar-ish random unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> retroptics::multiport::UnitaryMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(gauss(rng), gauss(rng)));
    retroptics::multiport::UnitaryMatrix::new(g.qr().q()).expect("QR factor is unitary")
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(1e-12..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
