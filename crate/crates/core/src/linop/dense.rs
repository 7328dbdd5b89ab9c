use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_symmetric, symmetrized};
use crate::error::{Error, Result};

/// Full eigendecomposition of a symmetric matrix, values ascending.
///
/// Column `j` of `vectors` belongs to `values[j]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(value, vector)` of the `p`-th largest eigenvalue, 1-based.
    pub fn pth_largest(&self, p: usize) -> Option<(f64, DVector<f64>)> {
        let m = self.len();
        if p == 0 || p > m {
            return None;
        }
        let idx = m - p;
        Some((self.values[idx], self.vectors.column(idx).into_owned()))
    }
}

/// Dense symmetric eigensolver (Householder tridiagonalization followed by
/// implicit symmetric QR, via nalgebra), with eigenpairs sorted ascending.
///
/// Ties keep the order produced by the underlying solver, which makes the
/// output deterministic.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<EigenDecomposition> {
    if s.nrows() == 0 {
        return Err(Error::invalid("cannot decompose an empty matrix"));
    }
    check_symmetric(s, 1e-12)?;
    let eig = SymmetricEigen::new(symmetrized(s));
    let m = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(m, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition { values, vectors })
}

/// A second Gram-Schmidt pass runs when the first one shrinks the vector below
/// this fraction of its original norm.
pub const REORTH_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// The new direction counts as lost when its component outside the basis is
/// at most this fraction of the input norm.
pub const BREAKDOWN_RATIO: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Orthonormalized {
    /// Unit vector orthogonal to the basis. When `lost` is set this is the
    /// normalized remainder (or zero), and should not be used for expansion.
    pub vector: DVector<f64>,
    pub lost: bool,
}

fn mgs_pass(w: &mut DVector<f64>, basis: &DMatrix<f64>) {
    for col in basis.column_iter() {
        let c = col.dot(w);
        w.axpy(-c, &col, 1.0);
    }
}

/// Modified Gram-Schmidt of `v` against the orthonormal columns of `basis`,
/// with one reorthogonalization pass when the first pass cancels heavily.
pub fn orthonormalize_against(v: &DVector<f64>, basis: &DMatrix<f64>) -> Orthonormalized {
    assert_eq!(v.len(), basis.nrows(), "vector/basis dimension mismatch");
    let original = v.norm();
    let mut w = v.clone();
    if basis.ncols() > 0 {
        mgs_pass(&mut w, basis);
        if w.norm() < REORTH_RATIO * original {
            mgs_pass(&mut w, basis);
        }
    }
    let remaining = w.norm();
    let lost = !(remaining > BREAKDOWN_RATIO * original) || original == 0.0;
    if remaining > 0.0 && remaining.is_finite() {
        w /= remaining;
    } else {
        w.fill(0.0);
    }
    Orthonormalized { vector: w, lost }
}
