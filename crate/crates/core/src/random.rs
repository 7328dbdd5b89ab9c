//! Seeded random instances: vectors, symmetric and SPD matrices.
//!
//! All generators take an explicit RNG so that test instances and solver start
//! vectors are reproducible from a single `u64` seed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Standard-normal vector scaled to unit length.
pub fn random_unit_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = random_vector(rng, n);
        let norm = v.norm();
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// Symmetric matrix with standard-normal entries on and below the diagonal.
pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v: f64 = rng.sample(StandardNormal);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Haar-ish random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// `Q diag(spectrum) Q^T` for a random orthogonal `Q`.
pub fn with_spectrum<R: Rng>(rng: &mut R, spectrum: &[f64]) -> DMatrix<f64> {
    let n = spectrum.len();
    let q = random_orthogonal(rng, n);
    let m = &q * DMatrix::from_diagonal(&DVector::from_column_slice(spectrum)) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// SPD matrix with eigenvalues drawn uniformly from `[lo, hi]`, `0 < lo < hi`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let spectrum: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    with_spectrum(rng, &spectrum)
}
