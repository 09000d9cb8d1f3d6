//! Recover sparse or banded approximations of a matrix, or of a matrix
//! function `f(A)`, when the matrix is only available through products with
//! vectors.
//!
//! - [`spamram`] recovers sparse matrices by compressed sensing on each row
//!   ([`sensing`] operators, [`greedy`] solvers).
//! - [`bamram`] recovers banded matrices, or matrices with decaying entries,
//!   from structured probing vectors.
//! - [`matfun`] applies `f(A)` to vectors with Krylov or contour methods.
//! - [`kron`] recovers the factors of Kronecker sums and products of banded
//!   matrices.
//! - [`harness`] runs measurement-count sweeps and writes error curves.
//!
//! ```
//! use matvec_recovery::bamram::{bamram_recover, BandSpec};
//! use matvec_recovery::linalg::{LinearOperator, SparseMatrix};
//!
//! let a = SparseMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0]);
//! let op = LinearOperator::from_sparse(a.clone());
//! let rep = bamram_recover(&op, &BandSpec::ExactBanded { k1: 0, k2: 0 }).unwrap();
//! assert_eq!(rep.matvecs_used, 1);
//! assert_eq!(rep.b_hat.get(2, 2), 3.0);
//! ```

pub mod bamram;
pub mod error;
pub mod estimate;
pub mod greedy;
pub mod harness;
pub mod kron;
pub mod linalg;
pub mod matfun;
pub mod par;
pub mod sensing;
pub mod spamram;

pub use error::{Error, Result};
