use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::linalg::{operator_norm_2, ExplicitMatrix, LinearOperator, NormMode};

/// A-posteriori relative error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub delta: f64,
    /// False when `BX = 0` but `B̂X ≠ 0`; `delta` is then `+∞`.
    pub finite: bool,
}

/// `‖B̂X − BX‖₂ / ‖BX‖₂` for an `n×probes` Gaussian `X` drawn from `seed`.
/// Costs `probes` matvecs.
pub fn probe_error_estimate(
    b_hat: &dyn ExplicitMatrix,
    mvp: &LinearOperator,
    probes: usize,
    seed: u64,
) -> Result<ErrorEstimate> {
    if probes == 0 {
        return Err(invalid("at least one probe is required"));
    }
    let n = mvp.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, probes, |_, _| StandardNormal.sample(&mut rng));
    let bx = mvp.apply_block(&x)?;
    let diff = b_hat.mul_dense(&x) - &bx;
    let denom = operator_norm_2(&bx, NormMode::Exact);
    let num = operator_norm_2(&diff, NormMode::Exact);
    Ok(if denom > 0.0 {
        ErrorEstimate {
            delta: num / denom,
            finite: true,
        }
    } else if num == 0.0 {
        ErrorEstimate {
            delta: 0.0,
            finite: true,
        }
    } else {
        ErrorEstimate {
            delta: f64::INFINITY,
            finite: false,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;

    #[test]
    fn edge_cases() {
        let b = SparseMatrix::diagonal(&[1.0, 2.0, 3.0]);
        let op = LinearOperator::from_sparse(b.clone());
        let e = probe_error_estimate(&b, &op, 5, 1).unwrap();
        assert!(e.delta < 1e-15 && e.finite);
        assert_eq!(op.matvec_count(), 5);
        let e = probe_error_estimate(&SparseMatrix::zeros(3, 3), &op, 5, 1).unwrap();
        assert!((e.delta - 1.0).abs() < 1e-14);

        let zero = LinearOperator::from_sparse(SparseMatrix::zeros(3, 3));
        let e = probe_error_estimate(&SparseMatrix::zeros(3, 3), &zero, 2, 1).unwrap();
        assert_eq!(e, ErrorEstimate { delta: 0.0, finite: true });
        let e = probe_error_estimate(&b, &zero, 2, 1).unwrap();
        assert!(!e.finite && e.delta.is_infinite());
        assert!(probe_error_estimate(&b, &op, 0, 1).is_err());
    }
}
