use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower triangle of a symmetric matrix in compressed-row form.
///
/// Row `i` holds the entries `(i, j)` with `j <= i`, columns ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLower {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseLower {
    /// Duplicates are summed; an entry `(i, j)` with `i < j` is stored as `(j, i)`.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(Error::invalid(format!(
                    "entry ({i}, {j}) out of bounds for dimension {dim}"
                )));
            }
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            entries.push((r, c, v));
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
            } else {
                cols.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            dim,
            row_ptr,
            cols,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored lower-triangle entries.
    pub fn stored(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p], self.values[p]))
        })
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for i in 0..self.dim {
            let xi = x[i];
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                let v = self.values[p];
                acc += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
    }

    pub fn diagonal(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.dim);
        for (i, j, v) in self.triplets() {
            if i == j {
                d[i] = v;
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.dim];
        for (i, j, v) in self.triplets() {
            sums[j] += v.abs();
            if i != j {
                sums[i] += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}
