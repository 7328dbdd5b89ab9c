//! Constructors for the approximating matrix `A0`.
//!
//! The algebraic construction removes from `A` the block `H = E_I E_I^T A E_I E_I^T`
//! for an index set `I`. For SPD `A` the removed block is positive semi-definite,
//! so `A - A0 = H` makes `A0` an approximation from below, and `A0` is zero on
//! the `I x I` block. Selecting `I` as the smallest diagonal entries keeps the
//! largest ones in `A0`, which favours the top of the spectrum.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linop::{sym_eig, LinearMap, SymmetricOperator};

#[derive(Clone, Debug, PartialEq)]
pub enum IndexSelection {
    /// Put everything except the `retained` largest diagonal entries into `I`.
    SmallestDiagonal { retained: usize },
    /// The index set `I` itself (0-based).
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ApproxSpec {
    Zero,
    ScaledIdentity(f64),
    DiagonalPart,
    /// Keep entries with `|i - j| <= q0`.
    BandCutoff(usize),
    AlgebraicFromBelow(IndexSelection),
}

/// The index set `I` for the algebraic construction, ascending.
///
/// Diagonal ties are broken towards the lower index.
pub fn from_below_index_set(a: &SymmetricOperator, selection: &IndexSelection) -> Result<Vec<usize>> {
    let n = a.dim();
    match selection {
        IndexSelection::SmallestDiagonal { retained } => {
            if *retained >= n {
                return Err(Error::invalid(format!(
                    "retained diagonal count {retained} must be smaller than n = {n}"
                )));
            }
            let diag = a.diagonal_entries();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
            let mut set: Vec<usize> = order[..n - retained].to_vec();
            set.sort_unstable();
            Ok(set)
        }
        IndexSelection::Explicit(list) => {
            let mut set = list.clone();
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(Error::invalid(format!("index {bad} out of range for n = {n}")));
            }
            set.sort_unstable();
            set.dedup();
            Ok(set)
        }
    }
}

pub fn build_approx(a: &SymmetricOperator, spec: &ApproxSpec) -> Result<SymmetricOperator> {
    let n = a.dim();
    match spec {
        ApproxSpec::Zero => SymmetricOperator::zero(n),
        ApproxSpec::ScaledIdentity(alpha) => SymmetricOperator::scaled_identity(n, *alpha),
        ApproxSpec::DiagonalPart => SymmetricOperator::diagonal(a.diagonal_entries()),
        ApproxSpec::BandCutoff(q0) => {
            let kept: Vec<_> = a
                .lower_triplets()?
                .into_iter()
                .filter(|&(i, j, _)| i - j <= *q0)
                .collect();
            SymmetricOperator::sparse(n, &kept)
        }
        ApproxSpec::AlgebraicFromBelow(selection) => {
            let set = from_below_index_set(a, selection)?;
            let mut in_set = vec![false; n];
            for &i in &set {
                in_set[i] = true;
            }
            let kept: Vec<_> = a
                .lower_triplets()?
                .into_iter()
                .filter(|&(i, j, _)| !(in_set[i] && in_set[j]))
                .collect();
            SymmetricOperator::sparse(n, &kept)
        }
    }
}

/// `alpha I - A` with explicit sparse storage.
pub fn negated_shift(alpha: f64, a: &SymmetricOperator) -> Result<SymmetricOperator> {
    let n = a.dim();
    let mut trip = a.lower_triplets()?;
    for t in &mut trip {
        t.2 = -t.2;
    }
    trip.extend((0..n).map(|i| (i, i, alpha)));
    SymmetricOperator::sparse(n, &trip)
}

/// `lambda_min(A - A0) >= -tol`, by a dense eigensolve.
pub fn certify_from_below(a: &SymmetricOperator, a0: &SymmetricOperator, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue_of_difference(a, a0)? >= -tol)
}

pub fn min_eigenvalue_of_difference(a: &SymmetricOperator, a0: &SymmetricOperator) -> Result<f64> {
    if a.dim() != a0.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: a0.dim(),
        });
    }
    let diff = a.to_dense()? - a0.to_dense()?;
    Ok(sym_eig(&diff)?.values[0])
}

/// Eigenvalues of `A - A0`, ascending.
pub fn difference_spectrum(a: &SymmetricOperator, a0: &SymmetricOperator) -> Result<DVector<f64>> {
    let diff = a.to_dense()? - a0.to_dense()?;
    Ok(sym_eig(&diff)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_banded, BandedSpec};
    use crate::random::{random_spd, rng};
    use nalgebra::DMatrix;
    use rand::Rng;

    #[test]
    fn algebraic_on_a_diagonal_matrix() {
        let a = SymmetricOperator::diagonal(DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        let a0 = build_approx(&a, &ApproxSpec::AlgebraicFromBelow(IndexSelection::SmallestDiagonal { retained: 2 }))
            .unwrap();
        assert_eq!(a0.to_dense().unwrap(), DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0, 3.0])));
        let a0 = build_approx(&a, &ApproxSpec::AlgebraicFromBelow(IndexSelection::Explicit(vec![0]))).unwrap();
        assert_eq!(a0.diagonal_entries().as_slice(), &[0.0, 2.0, 3.0]);
    }

    #[test]
    fn band_cutoff_zero_is_diagonal() {
        let a = SymmetricOperator::dense(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let a0 = build_approx(&a, &ApproxSpec::BandCutoff(0)).unwrap();
        assert_eq!(a0.to_dense().unwrap(), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn band_cutoff_at_full_bandwidth_is_identity_map() {
        let a = gen_banded(&BandedSpec::new(20, 4, 0.4)).unwrap();
        let a0 = build_approx(&a, &ApproxSpec::BandCutoff(4)).unwrap();
        assert_eq!(a0.to_dense().unwrap(), a.to_dense().unwrap());
    }

    #[test]
    fn simple_kinds() {
        let a = gen_banded(&BandedSpec::new(6, 2, 0.5)).unwrap();
        assert_eq!(build_approx(&a, &ApproxSpec::Zero).unwrap().nnz().unwrap(), 0);
        let s = build_approx(&a, &ApproxSpec::ScaledIdentity(2.5)).unwrap();
        assert_eq!(s.to_dense().unwrap(), DMatrix::identity(6, 6) * 2.5);
        let d = build_approx(&a, &ApproxSpec::DiagonalPart).unwrap();
        assert_eq!(d.diagonal_entries(), a.diagonal_entries());
    }

    #[test]
    fn selection_errors_and_ties() {
        let a = SymmetricOperator::diagonal(DVector::from_vec(vec![1.0, 1.0, 5.0, 1.0])).unwrap();
        let sel = IndexSelection::SmallestDiagonal { retained: 2 };
        // ties among the 1.0 entries resolve to the lowest indices
        assert_eq!(from_below_index_set(&a, &sel).unwrap(), vec![0, 1]);
        assert!(from_below_index_set(&a, &IndexSelection::SmallestDiagonal { retained: 4 }).is_err());
        assert!(from_below_index_set(&a, &IndexSelection::Explicit(vec![4])).is_err());
    }

    #[test]
    fn negated_shift_of_a_banded_matrix() {
        let a = gen_banded(&BandedSpec::new(5, 2, 0.5)).unwrap();
        let s = negated_shift(6.0, &a).unwrap();
        let expected = DMatrix::identity(5, 5) * 6.0 - a.to_dense().unwrap();
        assert_eq!(s.to_dense().unwrap(), expected);
    }

    #[test]
    fn certify_examples() {
        let a = gen_banded(&BandedSpec::new(10, 3, 0.5)).unwrap();
        assert!(certify_from_below(&a, &a.clone(), 0.0).unwrap());
        let a = SymmetricOperator::diagonal(DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let a0 = SymmetricOperator::diagonal(DVector::from_vec(vec![2.0, 1.0])).unwrap();
        assert!(!certify_from_below(&a, &a0, 1e-12).unwrap());
    }

    #[test]
    fn diagonal_part_of_banded_matrix_is_not_from_below() {
        let a = gen_banded(&BandedSpec::new(32, 5, 0.5)).unwrap();
        let a0 = build_approx(&a, &ApproxSpec::DiagonalPart).unwrap();
        assert!(!certify_from_below(&a, &a0, 1e-10).unwrap());
        let spectrum = difference_spectrum(&a, &a0).unwrap();
        assert_eq!(spectrum.iter().filter(|&&v| v >= 0.0).count(), 11);
    }

    #[test]
    fn algebraic_construction_properties_on_random_spd() {
        let mut rng = rng(77);
        for _ in 0..100 {
            let n = rng.random_range(2..=64);
            let retained = rng.random_range(0..n);
            let dense = random_spd(&mut rng, n, 0.5, 10.0);
            let a = SymmetricOperator::dense(dense).unwrap();
            let sel = IndexSelection::SmallestDiagonal { retained };
            let set = from_below_index_set(&a, &sel).unwrap();
            assert_eq!(set.len(), n - retained);
            let a0 = build_approx(&a, &ApproxSpec::AlgebraicFromBelow(sel)).unwrap();

            assert!(certify_from_below(&a, &a0, 1e-10 * a.norm1_estimate()).unwrap());

            let m0 = a0.to_dense().unwrap();
            for &i in &set {
                for &j in &set {
                    assert_eq!(m0[(i, j)], 0.0);
                }
            }

            let sv = m0.clone().singular_values();
            let smax = sv.max();
            let rank = sv.iter().filter(|&&s| s > 1e-10 * smax).count();
            assert!(rank <= 2 * retained, "rank {rank} > 2 * {retained}");
        }
    }
}
