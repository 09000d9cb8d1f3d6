use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{ExplicitMatrix, SparseMatrix};
use crate::error::{Error, Result};

type Kernel = dyn Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync;

/// Black-box square operator `x -> Bx`, the only access the recovery
/// algorithms have to `B`.
///
/// Every vector application increments the matvec counter by one, including
/// applications made concurrently from worker threads.
pub struct LinearOperator {
    n: usize,
    kernel: Box<Kernel>,
    matvecs: AtomicUsize,
    symmetric: bool,
    explicit: Option<Arc<SparseMatrix>>,
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOperator")
            .field("n", &self.n)
            .field("symmetric", &self.symmetric)
            .field("matvecs", &self.matvec_count())
            .field("explicit", &self.explicit.is_some())
            .finish()
    }
}

impl LinearOperator {
    /// Wrap an infallible closure writing `B x` into its second argument.
    pub fn new<F>(n: usize, symmetric: bool, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::try_new(n, symmetric, move |x, y| {
            f(x, y);
            Ok(())
        })
    }

    /// Wrap a fallible closure.
    pub fn try_new<F>(n: usize, symmetric: bool, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        assert!(n > 0, "operator dimension must be positive");
        Self {
            n,
            kernel: Box::new(f),
            matvecs: AtomicUsize::new(0),
            symmetric,
            explicit: None,
        }
    }

    /// Operator backed by an explicit square sparse matrix. The matrix stays
    /// reachable through [`LinearOperator::explicit`] so solvers may factor it.
    pub fn from_sparse(m: impl Into<Arc<SparseMatrix>>) -> Self {
        let m: Arc<SparseMatrix> = m.into();
        assert!(m.is_square(), "operator must be square");
        let symmetric = m.is_symmetric();
        let inner = Arc::clone(&m);
        let mut op = Self::new(m.n_rows(), symmetric, move |x, y| inner.matvec_into(x, y));
        op.explicit = Some(m);
        op
    }

    pub fn from_dense(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        let symmetric = m == m.transpose();
        Self::new(m.nrows(), symmetric, move |x, y| m.matvec_into(x, y))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn explicit(&self) -> Option<&Arc<SparseMatrix>> {
        self.explicit.as_ref()
    }

    pub fn matvec_count(&self) -> usize {
        self.matvecs.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.matvecs.store(0, Ordering::Relaxed);
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for len in [x.len(), y.len()] {
            if len != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: len,
                });
            }
        }
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        (self.kernel)(x, y)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    /// Apply to every column of `x`; costs `x.ncols()` matvecs. Columns are
    /// processed in parallel when enabled.
    pub fn apply_block(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.nrows(),
            });
        }
        let cols = crate::par::try_map_indexed(x.ncols(), |j| self.apply(x.column(j).as_slice()))?;
        Ok(DMatrix::from_iterator(self.n, x.ncols(), cols.into_iter().flatten()))
    }

    /// Transpose operator, available when the matrix is explicit.
    pub fn transpose(&self) -> Option<LinearOperator> {
        self.explicit
            .as_ref()
            .map(|m| LinearOperator::from_sparse(m.transpose()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_every_apply() {
        let op = LinearOperator::new(3, true, |x, y| y.copy_from_slice(x));
        op.apply(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(op.matvec_count(), 1);
        op.apply_block(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(op.matvec_count(), 4);
        op.reset_count();
        assert_eq!(op.matvec_count(), 0);
    }

    #[test]
    fn dimension_checked() {
        let op = LinearOperator::new(3, true, |x, y| y.copy_from_slice(x));
        assert!(matches!(
            op.apply(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
        assert_eq!(op.matvec_count(), 0);
    }

    #[test]
    fn sparse_backed_transpose() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 1, 2.0)]).unwrap();
        let op = LinearOperator::from_sparse(m);
        assert!(!op.is_symmetric());
        let t = op.transpose().unwrap();
        assert_eq!(t.apply(&[1.0, 0.0]).unwrap(), vec![0.0, 2.0]);
    }
}
