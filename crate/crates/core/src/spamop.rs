//! The search space bookkeeping and the subspace projected approximate matrix.
//!
//! With an orthonormal basis `V`, its image `W = A V` and `M = V^T W`, the
//! operator
//!
//! ```text
//! A_k = -V M V^T + W V^T + V W^T + P A0 P,    P = I - V V^T
//! ```
//!
//! agrees with `A` on the search space (`A_k V = W`) and with `A0` compressed to
//! the orthogonal complement elsewhere. Its action needs one product with `A0`
//! and none with `A`; it is never formed explicitly during a solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linop::{sym_eig, LinearMap, Tally};

/// Columns must be orthogonal to the basis to within this before expansion.
pub const EXPANSION_ORTHOGONALITY: f64 = 1e-10;

/// Orthonormal basis `V`, cached `W = A V` and projected `M = V^T A V`.
#[derive(Debug, Clone)]
pub struct SearchState {
    basis: DMatrix<f64>,
    images: DMatrix<f64>,
    projected: DMatrix<f64>,
}

/// How far a [`SearchState`] is from its defining identities.
#[derive(Debug, Clone, Copy)]
pub struct StateDiagnostics {
    /// `max |V^T V - I|`
    pub orthonormality: f64,
    /// `max |W - A V|`
    pub image_error: f64,
    /// `max |M - M^T|`
    pub asymmetry: f64,
    /// `max |V^T (W - V M)|`
    pub residual_orthogonality: f64,
}

impl SearchState {
    pub fn new(dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(dim, 0),
            images: DMatrix::zeros(dim, 0),
            projected: DMatrix::zeros(0, 0),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Number of basis vectors `k`.
    pub fn len(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn images(&self) -> &DMatrix<f64> {
        &self.images
    }

    pub fn projected(&self) -> &DMatrix<f64> {
        &self.projected
    }

    /// `W - V M`; its columns are orthogonal to the search space.
    pub fn residual_matrix(&self) -> DMatrix<f64> {
        &self.images - &self.basis * &self.projected
    }

    /// Append a unit vector `q` orthogonal to the basis. Costs one product
    /// with `a`.
    pub fn expand<A: LinearMap + ?Sized>(&mut self, q: &DVector<f64>, a: &A) -> Result<()> {
        let n = self.dim();
        if q.len() != n || a.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if q.len() != n { q.len() } else { a.dim() },
            });
        }
        let overlap = if self.is_empty() {
            0.0
        } else {
            (self.basis.transpose() * q).amax()
        };
        let norm_err = (q.norm() - 1.0).abs();
        if overlap > EXPANSION_ORTHOGONALITY || norm_err > EXPANSION_ORTHOGONALITY {
            return Err(Error::OrthogonalityViolation(overlap.max(norm_err)));
        }
        let aq = a.apply(q)?;
        let k = self.len();
        // New row of M from the cached images, diagonal from the fresh product.
        let row = self.images.transpose() * q;
        let corner = q.dot(&aq);

        let basis = std::mem::replace(&mut self.basis, DMatrix::zeros(0, 0));
        self.basis = basis.insert_column(k, 0.0);
        self.basis.set_column(k, q);
        let images = std::mem::replace(&mut self.images, DMatrix::zeros(0, 0));
        self.images = images.insert_column(k, 0.0);
        self.images.set_column(k, &aq);

        let old = std::mem::replace(&mut self.projected, DMatrix::zeros(0, 0));
        let mut m = old.insert_row(k, 0.0).insert_column(k, 0.0);
        for j in 0..k {
            m[(k, j)] = row[j];
            m[(j, k)] = row[j];
        }
        m[(k, k)] = corner;
        self.projected = m;
        Ok(())
    }

    /// The state spanned by the first `k` basis vectors.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            basis: self.basis.columns(0, k).into_owned(),
            images: self.images.columns(0, k).into_owned(),
            projected: self.projected.view((0, 0), (k, k)).into_owned(),
        }
    }

    /// Checks against `a` with uncounted products.
    pub fn diagnostics<A: LinearMap + ?Sized>(&self, a: &A) -> StateDiagnostics {
        let k = self.len();
        let n = self.dim();
        let gram = self.basis.transpose() * &self.basis;
        let orthonormality = (gram - DMatrix::identity(k, k)).amax();
        let mut image_error = 0.0_f64;
        let mut col = vec![0.0; n];
        for (j, v) in self.basis.column_iter().enumerate() {
            a.apply_into(v.as_slice(), &mut col, Tally::Skip);
            for (x, y) in col.iter().zip(self.images.column(j).iter()) {
                image_error = image_error.max((x - y).abs());
            }
        }
        let asymmetry = (&self.projected - self.projected.transpose()).amax();
        let residual_orthogonality = if k == 0 {
            0.0
        } else {
            (self.basis.transpose() * self.residual_matrix()).amax()
        };
        StateDiagnostics {
            orthonormality,
            image_error,
            asymmetry,
            residual_orthogonality,
        }
    }
}

/// The implicit operator `A_k` for a search state and an approximation `A0`.
pub struct SpamOperator<'a, A0: ?Sized> {
    state: &'a SearchState,
    approx: &'a A0,
}

impl<'a, A0: LinearMap + ?Sized> SpamOperator<'a, A0> {
    pub fn new(state: &'a SearchState, approx: &'a A0) -> Result<Self> {
        if state.dim() != approx.dim() {
            return Err(Error::DimensionMismatch {
                expected: state.dim(),
                got: approx.dim(),
            });
        }
        Ok(Self { state, approx })
    }

    pub fn state(&self) -> &SearchState {
        self.state
    }

    /// Dense `A_k` from `A0`'s dense form, by the four-term expression in the
    /// module docs.
    pub fn to_dense_with(&self, approx_dense: &DMatrix<f64>) -> DMatrix<f64> {
        let v = &self.state.basis;
        let w = &self.state.images;
        let m = &self.state.projected;
        let n = self.state.dim();
        let proj = DMatrix::identity(n, n) - v * v.transpose();
        let dense = -(v * m * v.transpose()) + w * v.transpose() + v * w.transpose() + &proj * approx_dense * &proj;
        crate::linop::symmetrized(&dense)
    }
}

impl<A0: LinearMap + ?Sized> LinearMap for SpamOperator<'_, A0> {
    fn dim(&self) -> usize {
        self.state.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], tally: Tally) {
        let v = &self.state.basis;
        let w = &self.state.images;
        let xv = DVector::from_column_slice(x);
        let coeffs = v.transpose() * &xv;
        let outside = &xv - v * &coeffs;
        let mut z = vec![0.0; self.dim()];
        self.approx.apply_into(outside.as_slice(), &mut z, tally);
        let z = DVector::from_vec(z);
        let z_outside = &z - v * (v.transpose() * &z);
        let out = -(v * (&self.state.projected * &coeffs)) + w * &coeffs + v * (w.transpose() * &xv) + z_outside;
        y.copy_from_slice(out.as_slice());
    }
}

/// The vector `u` with `A_k = A_{k-1} + u v^T + v u^T`, where `v` is the column
/// appended to `previous` to form the new search space:
/// `u = (P_{k-1} - v v^T / 2)(A - A0) v`.
pub fn rank2_update_vectors<A, A0>(
    previous: &SearchState,
    v: &DVector<f64>,
    a: &A,
    approx: &A0,
) -> Result<(DVector<f64>, DVector<f64>)>
where
    A: LinearMap + ?Sized,
    A0: LinearMap + ?Sized,
{
    let diff = a.apply(v)? - approx.apply(v)?;
    let basis = previous.basis();
    let projected = &diff - basis * (basis.transpose() * &diff);
    Ok((projected - v * (0.5 * v.dot(&diff)), v.clone()))
}

#[derive(Debug, Clone)]
pub struct HarmonicRitz {
    /// Descending.
    pub values: Vec<f64>,
    /// How many rounding-level negative values were set to zero.
    pub clamped: usize,
}

/// Harmonic Ritz values: the `k` nonzero eigenvalues of
/// `[[M, R^T], [R, R M^-1 R^T]]`, computed as the eigenvalues of `U M^-1 U^T`
/// with `U^T U = M^2 + R^T R` (upper Cholesky factor).
pub fn harmonic_ritz(state: &SearchState) -> Result<HarmonicRitz> {
    let k = state.len();
    if k == 0 {
        return Err(Error::invalid("harmonic Ritz values need a nonempty search space"));
    }
    let m = state.projected();
    let scale = sym_eig(m)?;
    let largest = scale.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let smallest = scale.values.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if !(smallest > 1e-12 * largest) {
        return Err(Error::Singular(
            "projected matrix M is singular; shift the problem so it is definite on the search space".into(),
        ));
    }
    let r = state.residual_matrix();
    let gram = m * m + r.transpose() * &r;
    let gram = crate::linop::symmetrized(&gram);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("M^2 + R^T R is not positive definite".into()))?;
    let upper = chol.l().transpose();
    let minv_ut = m
        .clone()
        .lu()
        .solve(&upper.transpose())
        .ok_or_else(|| Error::Singular("projected matrix M is singular".into()))?;
    let small = crate::linop::symmetrized(&(&upper * minv_ut));
    let eig = sym_eig(&small)?;
    let top = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut clamped = 0;
    let mut values: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| {
            if v < 0.0 && v >= -1e-12 * top {
                clamped += 1;
                0.0
            } else {
                v
            }
        })
        .collect();
    values.reverse();
    Ok(HarmonicRitz { values, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{orthonormalize_against, SymmetricOperator};
    use crate::random::{random_spd, random_unit_vector, random_vector, rng};

    fn grow(state: &mut SearchState, a: &SymmetricOperator, rng: &mut crate::random::SeededRng, k: usize) {
        for _ in 0..k {
            let v = random_vector(rng, state.dim());
            let q = orthonormalize_against(&v, state.basis());
            state.expand(&q.vector, a).unwrap();
        }
    }

    #[test]
    fn first_expansion() {
        let a = SymmetricOperator::diagonal(DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        let mut s = SearchState::new(3);
        let q = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        s.expand(&q, &a).unwrap();
        assert_eq!(s.projected()[(0, 0)], 2.0);
        assert_eq!(a.matvecs(), 1);
    }

    #[test]
    fn projected_matrix_block_structure() {
        let mut rng = rng(4);
        let n = 10;
        let a = SymmetricOperator::dense(random_spd(&mut rng, n, 1.0, 5.0)).unwrap();
        let mut s = SearchState::new(n);
        grow(&mut s, &a, &mut rng, 3);
        let before = s.clone();
        let q = orthonormalize_against(&random_vector(&mut rng, n), s.basis()).vector;
        s.expand(&q, &a).unwrap();
        let aq = a.apply_tallied(&q, Tally::Skip).unwrap();
        for j in 0..3 {
            assert!((s.projected()[(3, j)] - q.dot(&before.images().column(j))).abs() < 1e-14);
            assert_eq!(s.projected()[(j, 3)], s.projected()[(3, j)]);
        }
        assert_eq!(s.projected()[(3, 3)], q.dot(&aq));
        assert_eq!(s.projected().view((0, 0), (3, 3)), before.projected().view((0, 0), (3, 3)));
    }

    #[test]
    fn expansion_rejects_nonorthogonal_vectors() {
        let a = SymmetricOperator::diagonal(DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let mut s = SearchState::new(2);
        s.expand(&DVector::from_vec(vec![1.0, 0.0]), &a).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(matches!(
            s.expand(&DVector::from_vec(vec![h, h]), &a),
            Err(Error::OrthogonalityViolation(_))
        ));
    }

    #[test]
    fn full_expansion_is_similar_to_a() {
        let mut rng = rng(6);
        let n = 14;
        let dense = random_spd(&mut rng, n, 1.0, 9.0);
        let a = SymmetricOperator::dense(dense.clone()).unwrap();
        let mut s = SearchState::new(n);
        grow(&mut s, &a, &mut rng, n);
        let em = sym_eig(s.projected()).unwrap().values;
        let ea = sym_eig(&dense).unwrap().values;
        assert!((em - ea).amax() < 1e-9);
        let d = s.diagnostics(&a);
        assert!(d.orthonormality <= 1e-12);
        assert!(d.image_error <= 1e-12 * a.norm1_estimate());
        assert!(d.asymmetry <= 1e-12);
        assert!(d.residual_orthogonality <= 1e-11);
    }

    #[test]
    fn empty_state_applies_a0() {
        let mut rng = rng(1);
        let n = 7;
        let a0 = SymmetricOperator::dense(random_spd(&mut rng, n, 1.0, 2.0)).unwrap();
        let s = SearchState::new(n);
        let op = SpamOperator::new(&s, &a0).unwrap();
        let x = random_vector(&mut rng, n);
        let y = op.apply(&x).unwrap();
        let y0 = a0.apply_tallied(&x, Tally::Skip).unwrap();
        assert!((y - y0).amax() < 1e-14);
    }

    #[test]
    fn action_on_search_space_uses_cached_images() {
        let mut rng = rng(2);
        let n = 12;
        let a = SymmetricOperator::dense(random_spd(&mut rng, n, 1.0, 4.0)).unwrap();
        let a0 = SymmetricOperator::diagonal(a.diagonal_entries()).unwrap();
        let mut s = SearchState::new(n);
        grow(&mut s, &a, &mut rng, 4);
        let before_a = a.matvecs();
        let op = SpamOperator::new(&s, &a0).unwrap();
        let c = random_vector(&mut rng, 4);
        let x = s.basis() * &c;
        let y = op.apply(&x).unwrap();
        let expected = s.images() * &c;
        assert!((y - expected).amax() <= 1e-11 * a.norm1_estimate());
        assert_eq!(a.matvecs(), before_a);
        assert_eq!(a0.matvecs(), 1);
    }

    #[test]
    fn rank2_vector_vanishes_for_exact_approximation() {
        let mut rng = rng(3);
        let n = 9;
        let a = SymmetricOperator::dense(random_spd(&mut rng, n, 1.0, 4.0)).unwrap();
        let mut s = SearchState::new(n);
        grow(&mut s, &a, &mut rng, 2);
        let v = orthonormalize_against(&random_unit_vector(&mut rng, n), s.basis()).vector;
        let (u, _) = rank2_update_vectors(&s, &v, &a, &a).unwrap();
        assert!(u.amax() < 1e-14);
    }

    #[test]
    fn harmonic_values_for_invariant_subspace_equal_ritz_values() {
        let a = SymmetricOperator::diagonal(DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        let mut s = SearchState::new(4);
        s.expand(&DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]), &a).unwrap();
        s.expand(&DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]), &a).unwrap();
        let h = harmonic_ritz(&s).unwrap();
        assert!((h.values[0] - 3.0).abs() < 1e-14 && (h.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn harmonic_k1_closed_form() {
        let mut rng = rng(10);
        let n = 11;
        let a = SymmetricOperator::dense(random_spd(&mut rng, n, 1.0, 6.0)).unwrap();
        let mut s = SearchState::new(n);
        let v = random_unit_vector(&mut rng, n);
        s.expand(&v, &a).unwrap();
        let mu = s.projected()[(0, 0)];
        let r = s.residual_matrix().column(0).norm();
        let av = s.images().column(0).norm();
        let h = harmonic_ritz(&s).unwrap();
        assert!((h.values[0] - (mu * mu + r * r) / mu).abs() < 1e-12);
        assert!((h.values[0] - av * av / mu).abs() < 1e-12);
    }

    #[test]
    fn singular_projection_is_reported() {
        let a = SymmetricOperator::diagonal(DVector::from_vec(vec![0.0, 1.0])).unwrap();
        let mut s = SearchState::new(2);
        s.expand(&DVector::from_vec(vec![1.0, 0.0]), &a).unwrap();
        assert!(matches!(harmonic_ritz(&s), Err(Error::Singular(_))));
    }
}
