//! Symmetric linear operators and the dense kernels the solvers are built on.
//!
//! Every matrix in the crate is reached through [`LinearMap`]: the sparse test
//! matrices, the approximating matrix, the implicit projected operator and the
//! bordered correction-equation operator. [`SymmetricOperator`] is the concrete
//! storage type for "real" matrices and carries an observable matvec counter so
//! that products with the original matrix and with its approximation can be
//! accounted for separately.

mod dense;
mod sparse;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use dense::{orthonormalize_against, sym_eig, EigenDecomposition, Orthonormalized};
pub use dense::{BREAKDOWN_RATIO, REORTH_RATIO};
pub use sparse::SparseLower;

use crate::error::{Error, Result};

/// Largest dimension that [`SymmetricOperator::to_dense`] will materialize.
pub const DENSIFY_CAP: usize = 4096;

/// Whether an application should be charged to the matvec counters.
///
/// Diagnostics (true residual recomputation, test probes) use [`Tally::Skip`]
/// so that the counters reflect only the work an algorithm actually needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tally {
    Count,
    Skip,
}

/// A real symmetric linear map of fixed dimension.
pub trait LinearMap: Sync {
    fn dim(&self) -> usize;

    /// `y <- Op x`. Both slices must have length [`LinearMap::dim`].
    fn apply_into(&self, x: &[f64], y: &mut [f64], tally: Tally);

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.apply_tallied(x, Tally::Count)
    }

    fn apply_tallied(&self, x: &DVector<f64>, tally: Tally) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut y = DVector::zeros(self.dim());
        self.apply_into(x.as_slice(), y.as_mut_slice(), tally);
        Ok(y)
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], tally: Tally) {
        (**self).apply_into(x, y, tally)
    }
}

#[derive(Debug, Clone)]
pub enum Representation {
    Dense(DMatrix<f64>),
    Sparse(SparseLower),
    Diagonal(DVector<f64>),
    /// `B C B^T` with `B` n x m and `C` m x m symmetric.
    LowRank { basis: DMatrix<f64>, core: DMatrix<f64> },
    /// `alpha I - inner`.
    ShiftedNegated {
        alpha: f64,
        inner: Arc<SymmetricOperator>,
    },
}

/// Concrete symmetric matrix with a matvec counter.
///
/// The counter is the only interior-mutable state and is atomic, so an operator
/// can be shared between threads. Cloning produces a fresh counter at zero.
#[derive(Debug)]
pub struct SymmetricOperator {
    dim: usize,
    repr: Representation,
    matvecs: AtomicU64,
}

impl Clone for SymmetricOperator {
    fn clone(&self) -> Self {
        Self::from_repr(self.dim, self.repr.clone())
    }
}

/// `max |S - S^T|` together with `max |S|`.
pub(crate) fn asymmetry(s: &DMatrix<f64>) -> (f64, f64) {
    let n = s.nrows();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
            scale = scale.max(s[(i, j)].abs());
        }
    }
    (worst, scale)
}

pub(crate) fn check_symmetric(s: &DMatrix<f64>, rel_tol: f64) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(Error::DimensionMismatch {
            expected: s.nrows(),
            got: s.ncols(),
        });
    }
    let (worst, scale) = asymmetry(s);
    if worst > rel_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { asymmetry: worst });
    }
    Ok(())
}

pub(crate) fn symmetrized(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

impl SymmetricOperator {
    fn from_repr(dim: usize, repr: Representation) -> Self {
        Self {
            dim,
            repr,
            matvecs: AtomicU64::new(0),
        }
    }

    /// Dense symmetric matrix; asymmetry beyond `1e-12` relative is rejected
    /// and the remainder is symmetrized away.
    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        check_symmetric(&matrix, 1e-12)?;
        let n = matrix.nrows();
        Ok(Self::from_repr(n, Representation::Dense(symmetrized(&matrix))))
    }

    /// Sparse matrix from 0-based `(row, col, value)` triplets of the lower
    /// triangle. Entries given in the upper triangle are mirrored into the
    /// lower one; duplicates are summed.
    pub fn sparse(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        Ok(Self::from_sparse(SparseLower::from_triplets(dim, triplets)?))
    }

    pub fn from_sparse(storage: SparseLower) -> Self {
        Self::from_repr(storage.dim(), Representation::Sparse(storage))
    }

    pub fn diagonal(entries: DVector<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        let n = entries.len();
        Ok(Self::from_repr(n, Representation::Diagonal(entries)))
    }

    /// `basis * core * basis^T`.
    pub fn low_rank(basis: DMatrix<f64>, core: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        if core.nrows() != basis.ncols() || core.ncols() != basis.ncols() {
            return Err(Error::DimensionMismatch {
                expected: basis.ncols(),
                got: core.nrows(),
            });
        }
        if core.nrows() > 0 {
            check_symmetric(&core, 1e-12)?;
        }
        let n = basis.nrows();
        let core = symmetrized(&core);
        Ok(Self::from_repr(n, Representation::LowRank { basis, core }))
    }

    /// The zero operator, stored as a rank-0 factorization.
    pub fn zero(dim: usize) -> Result<Self> {
        Self::low_rank(DMatrix::zeros(dim, 0), DMatrix::zeros(0, 0))
    }

    pub fn scaled_identity(dim: usize, alpha: f64) -> Result<Self> {
        Self::diagonal(DVector::from_element(dim, alpha))
    }

    /// `alpha I - inner`. Applications are charged to `inner`'s counter.
    pub fn shifted_negated(alpha: f64, inner: Arc<SymmetricOperator>) -> Self {
        let n = inner.dim;
        Self::from_repr(n, Representation::ShiftedNegated { alpha, inner })
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// Number of counted applications so far. Shifted wrappers report the
    /// count of the operator they wrap.
    pub fn matvecs(&self) -> u64 {
        match &self.repr {
            Representation::ShiftedNegated { inner, .. } => inner.matvecs(),
            _ => self.matvecs.load(Ordering::Relaxed),
        }
    }

    pub fn reset_matvecs(&self) {
        match &self.repr {
            Representation::ShiftedNegated { inner, .. } => inner.reset_matvecs(),
            _ => self.matvecs.store(0, Ordering::Relaxed),
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        self.to_dense_with_cap(DENSIFY_CAP)
    }

    pub fn to_dense_with_cap(&self, cap: usize) -> Result<DMatrix<f64>> {
        if self.dim > cap {
            return Err(Error::DensifyCap { dim: self.dim, cap });
        }
        Ok(match &self.repr {
            Representation::Dense(m) => m.clone(),
            Representation::Sparse(s) => s.to_dense(),
            Representation::Diagonal(d) => DMatrix::from_diagonal(d),
            Representation::LowRank { basis, core } => {
                if core.nrows() == 0 {
                    DMatrix::zeros(self.dim, self.dim)
                } else {
                    symmetrized(&(basis * core * basis.transpose()))
                }
            }
            Representation::ShiftedNegated { alpha, inner } => {
                let mut m = -inner.to_dense_with_cap(cap)?;
                for i in 0..self.dim {
                    m[(i, i)] += alpha;
                }
                m
            }
        })
    }

    /// Main diagonal without densifying.
    pub fn diagonal_entries(&self) -> DVector<f64> {
        match &self.repr {
            Representation::Dense(m) => m.diagonal(),
            Representation::Sparse(s) => s.diagonal(),
            Representation::Diagonal(d) => d.clone(),
            Representation::LowRank { basis, core } => DVector::from_iterator(
                self.dim,
                (0..self.dim).map(|i| {
                    let row = basis.row(i);
                    (row * core * row.transpose())[(0, 0)]
                }),
            ),
            Representation::ShiftedNegated { alpha, inner } => {
                inner.diagonal_entries().map(|d| alpha - d)
            }
        }
    }

    /// Nonzero entries of the lower triangle (including the diagonal) as
    /// 0-based `(row, col, value)` with `row >= col`, sorted by row then column.
    pub fn lower_triplets(&self) -> Result<Vec<(usize, usize, f64)>> {
        Ok(match &self.repr {
            Representation::Sparse(s) => s.triplets().filter(|t| t.2 != 0.0).collect(),
            Representation::Diagonal(d) => d
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, i, *v))
                .collect(),
            _ => {
                let m = self.to_dense()?;
                let mut out = Vec::new();
                for i in 0..self.dim {
                    for j in 0..=i {
                        if m[(i, j)] != 0.0 {
                            out.push((i, j, m[(i, j)]));
                        }
                    }
                }
                out
            }
        })
    }

    /// Stored nonzeros counting both triangles.
    pub fn nnz(&self) -> Result<usize> {
        Ok(self
            .lower_triplets()?
            .iter()
            .map(|&(i, j, _)| if i == j { 1 } else { 2 })
            .sum())
    }

    /// Exact 1-norm for explicit storage, a submultiplicative upper bound for
    /// factored and shifted forms.
    pub fn norm1_estimate(&self) -> f64 {
        fn col_sum_max(m: &DMatrix<f64>) -> f64 {
            m.column_iter()
                .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        }
        match &self.repr {
            Representation::Dense(m) => col_sum_max(m),
            Representation::Sparse(s) => s.norm1(),
            Representation::Diagonal(d) => d.amax(),
            Representation::LowRank { basis, core } => {
                if core.nrows() == 0 {
                    0.0
                } else {
                    let row_sum_max = basis
                        .row_iter()
                        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                        .fold(0.0, f64::max);
                    col_sum_max(basis) * col_sum_max(core) * row_sum_max
                }
            }
            Representation::ShiftedNegated { alpha, inner } => alpha.abs() + inner.norm1_estimate(),
        }
    }

    fn apply_raw(&self, x: &[f64], y: &mut [f64], tally: Tally) {
        match &self.repr {
            Representation::Dense(m) => {
                let n = self.dim;
                y.fill(0.0);
                for (j, &xj) in x.iter().enumerate() {
                    if xj != 0.0 {
                        let col = &m.as_slice()[j * n..(j + 1) * n];
                        for (yi, &mij) in y.iter_mut().zip(col) {
                            *yi += mij * xj;
                        }
                    }
                }
            }
            Representation::Sparse(s) => s.mul_vec_into(x, y),
            Representation::Diagonal(d) => {
                for ((yi, xi), di) in y.iter_mut().zip(x).zip(d.iter()) {
                    *yi = di * xi;
                }
            }
            Representation::LowRank { basis, core } => {
                if core.nrows() == 0 {
                    y.fill(0.0);
                } else {
                    let xv = DVector::from_column_slice(x);
                    let coeffs = core * (basis.transpose() * xv);
                    let out = basis * coeffs;
                    y.copy_from_slice(out.as_slice());
                }
            }
            Representation::ShiftedNegated { alpha, inner } => {
                inner.apply_into(x, y, tally);
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = alpha * xi - *yi;
                }
            }
        }
    }
}

impl LinearMap for SymmetricOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], tally: Tally) {
        assert_eq!(x.len(), self.dim, "operator/vector dimension mismatch");
        assert_eq!(y.len(), self.dim, "operator/vector dimension mismatch");
        let forwards = matches!(self.repr, Representation::ShiftedNegated { .. });
        if tally == Tally::Count && !forwards {
            self.matvecs.fetch_add(1, Ordering::Relaxed);
        }
        self.apply_raw(x, y, tally);
    }
}

/// Materialize any linear map column by column, without charging counters.
/// Meant for desk-scale oracles.
pub fn densify<M: LinearMap + ?Sized>(op: &M) -> Result<DMatrix<f64>> {
    let n = op.dim();
    if n > DENSIFY_CAP {
        return Err(Error::DensifyCap {
            dim: n,
            cap: DENSIFY_CAP,
        });
    }
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_into(&e, &mut col, Tally::Skip);
        out.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    Ok(out)
}
