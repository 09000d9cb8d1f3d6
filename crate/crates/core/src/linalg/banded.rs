use nalgebra::DMatrix;

use super::{ExplicitMatrix, SparseMatrix};
use crate::error::{Error, Result};

/// Square matrix stored by diagonals: entry `(i, j)` exists iff
/// `-lower <= j - i <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    upper: usize,
    lower: usize,
    // row-major, `width()` slots per row; slot `j - i + lower`
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, upper: usize, lower: usize) -> Self {
        Self {
            n,
            upper,
            lower,
            data: vec![0.0; n * (upper + lower + 1)],
        }
    }

    /// Copy the in-band part of a sparse matrix. Errors if a nonzero falls outside the band.
    pub fn from_sparse(m: &SparseMatrix, upper: usize, lower: usize) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.n_rows(),
                found: m.n_cols(),
            });
        }
        let mut b = Self::zeros(m.n_rows(), upper, lower);
        for (i, j, v) in m.iter() {
            if v != 0.0 && !b.in_band(i, j) {
                return Err(Error::InvalidParameter(format!(
                    "entry ({i}, {j}) lies outside bandwidths ({upper}, {lower})"
                )));
            }
            if b.in_band(i, j) {
                b.set(i, j, v);
            }
        }
        Ok(b)
    }

    /// Copy the in-band part of a dense matrix, discarding the rest.
    pub fn from_dense_truncated(m: &DMatrix<f64>, upper: usize, lower: usize) -> Self {
        let n = m.nrows();
        let mut b = Self::zeros(n, upper, lower);
        for i in 0..n {
            for j in b.row_range(i) {
                b.set(i, j, m[(i, j)]);
            }
        }
        b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    fn width(&self) -> usize {
        self.upper + self.lower + 1
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.lower >= i && j <= i + self.upper
    }

    /// Columns of row `i` inside the band.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.n)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.lower - i]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` is outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let w = self.width();
        self.data[i * w + j + self.lower - i] = v;
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_range(i).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.lower, self.upper);
        for i in 0..self.n {
            for j in self.row_range(i) {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Sparse copy holding every nonzero in-band entry.
    pub fn to_sparse(&self) -> SparseMatrix {
        let trip = (0..self.n).flat_map(|i| {
            self.row_range(i)
                .map(move |j| (i, j, self.get(i, j)))
                .filter(|t| t.2 != 0.0)
        });
        SparseMatrix::from_triplets(self.n, self.n, trip).expect("indices in range")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in self.row_range(i) {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }
}

impl ExplicitMatrix for BandedMatrix {
    fn nrows(&self) -> usize {
        self.n
    }

    fn ncols(&self) -> usize {
        self.n
    }

    fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        BandedMatrix::matvec_into(self, x, y)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        BandedMatrix::to_dense(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_membership() {
        let b = BandedMatrix::zeros(5, 2, 1);
        assert!(b.in_band(0, 2));
        assert!(!b.in_band(0, 3));
        assert!(b.in_band(3, 2));
        assert!(!b.in_band(3, 1));
        assert_eq!(b.row_range(0), 0..3);
        assert_eq!(b.row_range(4), 3..5);
    }

    #[test]
    fn conversions_preserve_entries() {
        let mut b = BandedMatrix::zeros(4, 1, 2);
        let mut v = 1.0;
        for i in 0..4 {
            for j in b.row_range(i) {
                b.set(i, j, v);
                v += 1.0;
            }
        }
        let s = b.to_sparse();
        let d = b.to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s.get(i, j), b.get(i, j));
                assert_eq!(d[(i, j)], b.get(i, j));
            }
        }
        assert_eq!(BandedMatrix::from_sparse(&s, 1, 2).unwrap(), b);
        assert!(BandedMatrix::from_sparse(&s, 0, 2).is_err());
        assert_eq!(b.transpose().to_dense(), d.transpose());
    }
}
