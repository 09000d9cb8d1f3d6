use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, norm2, BandedMatrix, ExplicitMatrix, SparseMatrix};
use crate::error::{Error, Result};

/// Largest dimension for which dense SVD is used.
pub const DENSE_LIMIT: usize = 4096;

const POWER_TOL: f64 = 1e-6;
const POWER_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Dense SVD. Falls back to power iteration above [`DENSE_LIMIT`].
    Exact,
    PowerIteration,
}

/// Borrowed view of any explicit matrix type.
#[derive(Debug, Clone, Copy)]
pub enum MatrixRef<'a> {
    Dense(&'a DMatrix<f64>),
    Sparse(&'a SparseMatrix),
    Banded(&'a BandedMatrix),
}

impl<'a> From<&'a DMatrix<f64>> for MatrixRef<'a> {
    fn from(m: &'a DMatrix<f64>) -> Self {
        MatrixRef::Dense(m)
    }
}

impl<'a> From<&'a SparseMatrix> for MatrixRef<'a> {
    fn from(m: &'a SparseMatrix) -> Self {
        MatrixRef::Sparse(m)
    }
}

impl<'a> From<&'a BandedMatrix> for MatrixRef<'a> {
    fn from(m: &'a BandedMatrix) -> Self {
        MatrixRef::Banded(m)
    }
}

impl MatrixRef<'_> {
    fn inner(&self) -> &dyn ExplicitMatrix {
        match *self {
            MatrixRef::Dense(m) => m,
            MatrixRef::Sparse(m) => m,
            MatrixRef::Banded(m) => m,
        }
    }

    fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            MatrixRef::Dense(m) => (m.transpose() * nalgebra::DVector::from_column_slice(x))
                .as_slice()
                .to_vec(),
            MatrixRef::Sparse(m) => m.matvec_transpose(x),
            MatrixRef::Banded(m) => m.transpose().matvec(x),
        }
    }
}

/// Result of a norm computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Spectral norm `‖M‖₂`.
pub fn operator_norm_2<'a>(m: impl Into<MatrixRef<'a>>, mode: NormMode) -> f64 {
    norm_2_estimate(m, mode).value
}

/// Spectral norm with convergence information. Exact mode always reports
/// convergence.
pub fn norm_2_estimate<'a>(m: impl Into<MatrixRef<'a>>, mode: NormMode) -> NormEstimate {
    let m = m.into();
    let inner = m.inner();
    let dim = inner.nrows().max(inner.ncols());
    if mode == NormMode::Exact && dim <= DENSE_LIMIT {
        let value = match m {
            MatrixRef::Dense(d) => dense_norm_2(d),
            _ => dense_norm_2(&inner.to_dense()),
        };
        return NormEstimate {
            value,
            converged: true,
            iterations: 0,
        };
    }
    power_norm_2(m)
}

fn dense_norm_2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.is_square() && m == &m.transpose() {
        return m
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
    }
    m.singular_values().max()
}

/// Power iteration on `MᵀM`, stopping once the eigen-residual
/// `‖MᵀMx − θx‖ ≤ tol·θ`.
fn power_norm_2(m: MatrixRef<'_>) -> NormEstimate {
    let inner = m.inner();
    let (rows, cols) = (inner.nrows(), inner.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
    let mut x: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() - 0.5).collect();
    let nx = norm2(&x);
    if nx == 0.0 {
        return NormEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        };
    }
    x.iter_mut().for_each(|v| *v /= nx);

    let mut mx = vec![0.0; rows];
    let mut best = 0.0f64;
    for it in 1..=POWER_MAX_ITERS {
        inner.matvec_into(&x, &mut mx);
        let y = m.transpose_matvec(&mx);
        let theta = dot(&x, &y);
        best = best.max(theta);
        let resid = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - theta * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let ny = norm2(&y);
        if ny == 0.0 || resid <= POWER_TOL * theta.abs() {
            return NormEstimate {
                value: theta.max(0.0).sqrt(),
                converged: true,
                iterations: it,
            };
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    NormEstimate {
        value: best.max(0.0).sqrt(),
        converged: false,
        iterations: POWER_MAX_ITERS,
    }
}

/// Rescale `m` so that `‖m‖₂ = target`.
pub fn scale_to_norm(m: &SparseMatrix, target: f64) -> Result<SparseMatrix> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidParameter(format!("target norm {target} must be positive")));
    }
    let current = operator_norm_2(m, NormMode::Exact);
    if current == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(m.scaled(target / current))
}
