use nalgebra::DMatrix;

use super::ExplicitMatrix;
use crate::error::{Error, Result};

/// Compressed sparse row matrix with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triplets. Duplicate positions are summed;
    /// explicit zeros are kept.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    rows: n_rows,
                    cols: n_cols,
                });
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Assemble from per-row `(column, value)` lists; columns need not be sorted.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n_rows = rows.len();
        Self::from_triplets(
            n_rows,
            n_cols,
            rows.into_iter()
                .enumerate()
                .flat_map(|(i, r)| r.into_iter().map(move |(c, v)| (i, c, v))),
        )
    }

    /// Keep every entry of `m` whose magnitude exceeds `drop_tol`.
    pub fn from_dense(m: &DMatrix<f64>, drop_tol: f64) -> Self {
        let mut trip = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.abs() > drop_tol {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), trip).expect("indices in range")
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Iterate over stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.n_cols, self.n_rows, self.iter().map(|(i, j, v)| (j, i, v)))
            .expect("indices in range")
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `self + alpha * I`.
    pub fn shifted(&self, alpha: f64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                found: self.n_cols,
            });
        }
        Self::from_triplets(
            self.n_rows,
            self.n_cols,
            self.iter().chain((0..self.n_rows).map(|i| (i, i, alpha))),
        )
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && self.iter().all(|(i, j, v)| self.get(j, i) == v)
    }

    /// `(upper, lower)` bandwidths over the stored nonzero entries.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut upper = 0;
        let mut lower = 0;
        for (i, j, v) in self.iter() {
            if v == 0.0 {
                continue;
            }
            if j > i {
                upper = upper.max(j - i);
            } else {
                lower = lower.max(i - j);
            }
        }
        (upper, lower)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y = A^T x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols];
        for (i, xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }
}

impl ExplicitMatrix for SparseMatrix {
    fn nrows(&self) -> usize {
        self.n_rows
    }

    fn ncols(&self) -> usize {
        self.n_cols
    }

    fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        SparseMatrix::matvec_into(self, x, y)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        SparseMatrix::to_dense(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = SparseMatrix::from_triplets(2, 3, [(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5), (1, 0, 4.0)])
            .unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row(1).0, &[0, 2]);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let err = SparseMatrix::from_triplets(2, 2, [(2, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { row: 2, .. }));
    }

    #[test]
    fn bandwidths_and_symmetry() {
        let m = SparseMatrix::from_triplets(4, 4, [(0, 2, 1.0), (3, 2, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(m.bandwidths(), (2, 1));
        assert!(!m.is_symmetric());
        let s = SparseMatrix::from_triplets(3, 3, [(0, 1, 2.0), (1, 0, 2.0)]).unwrap();
        assert!(s.is_symmetric());
    }

    #[test]
    fn transpose_matvec_matches_dense() {
        let m = SparseMatrix::from_triplets(3, 2, [(0, 0, 1.0), (2, 1, -3.0), (1, 0, 0.5)]).unwrap();
        let x = [1.0, 2.0, 3.0];
        let dense = m.to_dense().transpose() * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(m.matvec_transpose(&x), dense.as_slice());
        assert_eq!(m.transpose().matvec(&x), dense.as_slice());
    }
}
