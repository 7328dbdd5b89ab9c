#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use spam_core::linop::sym_eig;
use spam_core::random::{random_vector, SeededRng};
use spam_core::spamop::SearchState;

/// Orthonormal completion `V_perp` of the orthonormal columns `v`.
pub fn complement(v: &DMatrix<f64>, rng: &mut SeededRng) -> DMatrix<f64> {
    let (n, k) = v.shape();
    let mut full = DMatrix::zeros(n, n);
    full.columns_mut(0, k).copy_from(v);
    for j in k..n {
        full.set_column(j, &random_vector(rng, n));
    }
    let q = full.qr().q();
    q.columns(k, n - k).into_owned()
}

/// `A_k = Q [[M, R^T], [R, V_perp^T A0 V_perp]] Q^T` with `Q = (V | V_perp)`
/// and `R = V_perp^T A V`, assembled in the completed basis.
pub fn ak_from_blocks(state: &SearchState, a_dense: &DMatrix<f64>, a0_dense: &DMatrix<f64>, rng: &mut SeededRng) -> DMatrix<f64> {
    let v = state.basis();
    let (n, k) = v.shape();
    let perp = complement(v, rng);
    let hat = hat_matrix(v, &perp, a_dense, a0_dense);
    let mut q = DMatrix::zeros(n, n);
    q.columns_mut(0, k).copy_from(v);
    q.columns_mut(k, n - k).copy_from(&perp);
    sym(&(&q * hat * q.transpose()))
}

/// `[[V^T A V, V^T A P], [P^T A V, P^T A0 P]]` for `P = perp`.
pub fn hat_matrix(v: &DMatrix<f64>, perp: &DMatrix<f64>, a: &DMatrix<f64>, a0: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = v.shape();
    let mut hat = DMatrix::zeros(n, n);
    hat.view_mut((0, 0), (k, k)).copy_from(&(v.transpose() * a * v));
    let r = perp.transpose() * a * v;
    hat.view_mut((k, 0), (n - k, k)).copy_from(&r);
    hat.view_mut((0, k), (k, n - k)).copy_from(&r.transpose());
    hat.view_mut((k, k), (n - k, n - k)).copy_from(&(perp.transpose() * a0 * perp));
    hat
}

/// Sine of the largest principal angle between two orthonormal bases.
pub fn subspace_sin(v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> f64 {
    let proj = v2 - v1 * (v1.transpose() * v2);
    proj.singular_values().max()
}

/// Oracle products carry rounding-level asymmetry.
pub fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Descending eigenvalues.
pub fn descending(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = sym_eig(&sym(m)).unwrap().values.iter().copied().collect();
    v.reverse();
    v
}

pub fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(b).abs() / (a.norm() * b.norm())
}
