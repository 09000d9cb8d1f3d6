//! Storage, black-box operators, norms and MatrixMarket I/O.

mod banded;
mod decay;
mod eig;
mod mm;
mod norm;
mod operator;
mod sparse;

pub use banded::BandedMatrix;
pub use decay::{sparse_decay_bound, DecayProfile};
pub use eig::symmetric_eigen;
pub use mm::{parse_matrix_market, read_matrix_market, write_matrix_market, MmSymmetry};
pub use norm::{norm_2_estimate, operator_norm_2, scale_to_norm, MatrixRef, NormEstimate, NormMode, DENSE_LIMIT};
pub use operator::LinearOperator;
pub use sparse::SparseMatrix;

use nalgebra::DMatrix;

/// A matrix held explicitly in memory.
pub trait ExplicitMatrix: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn matvec_into(&self, x: &[f64], y: &mut [f64]);
    fn to_dense(&self) -> DMatrix<f64>;

    /// `self * x` for a dense block of column vectors.
    fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols());
        let (m, k) = (self.nrows(), x.ncols());
        let cols = crate::par::map_indexed(k, |j| {
            let mut y = vec![0.0; m];
            self.matvec_into(x.column(j).as_slice(), &mut y);
            y
        });
        DMatrix::from_iterator(m, k, cols.into_iter().flatten())
    }
}

impl ExplicitMatrix for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let x = nalgebra::DVectorView::from_slice(x, x.len());
        let mut out = nalgebra::DVectorViewMut::from_slice(y, self.nrows());
        out.gemv(1.0, self, &x, 0.0);
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }

    fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }
}

/// Euclidean norm of a slice.
pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

// Four independent accumulators so the loop vectorizes.
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let (x, y) = (&x[..n], &y[..n]);
    let mut acc = [0.0; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(a, b)| a * b).sum();
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            acc[l] += a[l] * b[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
