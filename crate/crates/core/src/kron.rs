//! Kronecker sums `𝒜 = A1 ⊗ I + I ⊗ A2` of banded factors.
//!
//! Vectors of length `n²` are indexed `(a, b) ↦ a·n + b`, so `A1` acts on the
//! block index `a` and `A2` within blocks. The top-left `n×n` block of `𝒜` is
//! `A2 + (A1)₀₀ I`; conjugating by the perfect shuffle swaps the roles of the
//! factors, so probing that block before and after the shuffle recovers both
//! factors up to a diagonal shift.

use nalgebra::DMatrix;

use crate::bamram::{reconstruct, BandSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::{BandedMatrix, LinearOperator, SparseMatrix};

/// The perfect shuffle on vectors of length `n²`: `(Px)[a·n + b] = x[b·n + a]`,
/// so `P vec(M) = vec(Mᵀ)`. It is an involution, hence `Pᵀ = P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShufflePermutation {
    n: usize,
}

impl ShufflePermutation {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    /// Shuffle for an operator of dimension `n²`.
    pub fn for_dim(dim: usize) -> Result<Self> {
        let n = dim.isqrt();
        if n * n != dim || n == 0 {
            return Err(invalid(format!("dimension {dim} is not a perfect square")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Image of index `i` under `P`.
    pub fn index(&self, i: usize) -> usize {
        (i % self.n) * self.n + i / self.n
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n * self.n);
        (0..x.len()).map(|i| x[self.index(i)]).collect()
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x)
    }
}

/// Band shape of one factor: `upper` superdiagonals, `lower` subdiagonals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bandwidth {
    pub upper: usize,
    pub lower: usize,
}

impl Bandwidth {
    pub fn symmetric(k: usize) -> Self {
        Self { upper: k, lower: k }
    }

    fn spec(self) -> BandSpec {
        BandSpec::ExactBanded { k1: self.upper, k2: self.lower }
    }
}

/// Probe the top-left block of `𝒜` (`shuffled = false`) or of `P𝒜Pᵀ` with
/// `I_n^{(s)}` padded by zeros. Costs `s` matvecs.
fn probe_top_block(mvp: &LinearOperator, p: ShufflePermutation, s: usize, shuffled: bool) -> Result<DMatrix<f64>> {
    let n = p.n();
    if s == 0 {
        return Err(invalid("block size must be positive"));
    }
    // s > n is allowed; the surplus probes are zero but still counted
    let cols = crate::par::try_map_indexed(s, |j| {
        let mut x = vec![0.0; n * n];
        for r in (j..n).step_by(s) {
            x[r] = 1.0;
        }
        if shuffled {
            x = p.apply_transpose(&x);
        }
        let mut y = mvp.apply(&x)?;
        if shuffled {
            y = p.apply(&y);
        }
        y.truncate(n);
        Ok(y)
    })?;
    Ok(DMatrix::from_iterator(n, s, cols.into_iter().flatten()))
}

/// Factors of a recovered Kronecker sum.
#[derive(Debug, Clone)]
pub struct KronSumRecovery {
    /// `A1 + (A2)₀₀ I`.
    pub a1: BandedMatrix,
    /// `A2 + (A1)₀₀ I`.
    pub a2: BandedMatrix,
    /// Diagonal of `𝒜`, indexed like the operator.
    pub diagonal: Vec<f64>,
    pub matvecs_used: usize,
}

impl KronSumRecovery {
    /// The shift `(A1)₀₀ + (A2)₀₀` carried by both recovered factors.
    pub fn shift(&self) -> f64 {
        self.a1.get(0, 0)
    }

    /// `𝒜 = (A1' − cI) ⊗ I + I ⊗ A2'` with `c` = [`Self::shift`].
    pub fn to_sparse(&self) -> SparseMatrix {
        let n = self.a1.n();
        let c = self.shift();
        let mut t = Vec::new();
        for a in 0..n {
            for a2 in self.a1.row_range(a) {
                let v = self.a1.get(a, a2) - if a == a2 { c } else { 0.0 };
                for b in 0..n {
                    t.push((a * n + b, a2 * n + b, v));
                }
            }
            for b in 0..n {
                for b2 in self.a2.row_range(b) {
                    t.push((a * n + b, a * n + b2, self.a2.get(b, b2)));
                }
            }
        }
        SparseMatrix::from_triplets(n * n, n * n, t).expect("indices are in range")
    }
}

/// Exact recovery of `A1 ⊕ A2` with `(1 + 2k1) + (1 + 2k2)` matvecs, where
/// `k1`, `k2` are the bandwidths of the factors.
pub fn kron_sum_recover(mvp: &LinearOperator, k1: usize, k2: usize) -> Result<KronSumRecovery> {
    kron_sum_recover_banded(mvp, Bandwidth::symmetric(k1), Bandwidth::symmetric(k2))
}

/// [`kron_sum_recover`] with separate upper and lower bandwidths.
pub fn kron_sum_recover_banded(mvp: &LinearOperator, band1: Bandwidth, band2: Bandwidth) -> Result<KronSumRecovery> {
    let p = ShufflePermutation::for_dim(mvp.dim())?;
    let n = p.n();
    let before = mvp.matvec_count();
    let (spec1, spec2) = (band1.spec(), band2.spec());
    let top = probe_top_block(mvp, p, spec2.block_size(), false)?;
    let a2 = reconstruct(&top, &spec2)?;
    let top = probe_top_block(mvp, p, spec1.block_size(), true)?;
    let a1 = reconstruct(&top, &spec1)?;
    let c = a1.get(0, 0);
    let diagonal = (0..n * n).map(|i| a1.get(i / n, i / n) + a2.get(i % n, i % n) - c).collect();
    Ok(KronSumRecovery {
        a1,
        a2,
        diagonal,
        matvecs_used: mvp.matvec_count() - before,
    })
}

/// Banded factors with `F1 ⊗ F2 ≈ exp(A1 ⊕ A2)`.
#[derive(Debug, Clone)]
pub struct KronExpRecovery {
    pub factor1: BandedMatrix,
    /// Normalized to a unit `(0, 0)` entry.
    pub factor2: BandedMatrix,
    pub matvecs_used: usize,
}

impl KronExpRecovery {
    /// `(F1 ⊗ F2) x`, computed as `F1 X F2ᵀ` on the `n×n` reshaping of `x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.factor1.n();
        if x.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: x.len() });
        }
        // rows of the reshaping are the blocks of x
        let mut tmp = vec![0.0; n * n];
        for a in 0..n {
            self.factor2.matvec_into(&x[a * n..(a + 1) * n], &mut tmp[a * n..(a + 1) * n]);
        }
        let mut y = vec![0.0; n * n];
        for a in 0..n {
            for a2 in self.factor1.row_range(a) {
                let f = self.factor1.get(a, a2);
                for b in 0..n {
                    y[a * n + b] += f * tmp[a2 * n + b];
                }
            }
        }
        Ok(y)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.factor1.to_dense().kronecker(&self.factor2.to_dense())
    }
}

/// Recover `exp(A1 ⊕ A2) = exp(A1) ⊗ exp(A2)` from `s1 + s2` matvecs with
/// symmetric-decay probing of odd block sizes `s1` (for `exp(A1)`) and `s2`.
///
/// The top-left blocks give `exp(A1)₀₀ exp(A2)` and `exp(A2)₀₀ exp(A1)`;
/// dividing the second factor by its `(0, 0)` entry makes the product equal
/// to `exp(A1) ⊗ exp(A2)` up to the banding error.
pub fn kron_exp_recover(mvp: &LinearOperator, s1: usize, s2: usize) -> Result<KronExpRecovery> {
    let p = ShufflePermutation::for_dim(mvp.dim())?;
    for s in [s1, s2] {
        if s % 2 == 0 {
            return Err(invalid(format!("block size {s} must be odd")));
        }
    }
    let before = mvp.matvec_count();
    let spec1 = BandSpec::SymmetricDecay { s0: s1 / 2 };
    let spec2 = BandSpec::SymmetricDecay { s0: s2 / 2 };
    let top = probe_top_block(mvp, p, s2, false)?;
    let mut factor2 = reconstruct(&top, &spec2)?;
    let top = probe_top_block(mvp, p, s1, true)?;
    let factor1 = reconstruct(&top, &spec1)?;
    let pivot = factor2.get(0, 0);
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::Numerical(format!("cannot normalize by the (0, 0) entry {pivot}")));
    }
    let n = p.n();
    for i in 0..n {
        for j in factor2.row_range(i) {
            let v = factor2.get(i, j) / pivot;
            factor2.set(i, j, v);
        }
    }
    Ok(KronExpRecovery {
        factor1,
        factor2,
        matvecs_used: mvp.matvec_count() - before,
    })
}

/// Matrix-free `A1 ⊕ A2`, symmetric when both factors are.
pub fn kron_sum_operator(a1: &SparseMatrix, a2: &SparseMatrix) -> Result<LinearOperator> {
    let n = a1.n_rows();
    if !a1.is_square() || !a2.is_square() || a2.n_rows() != n {
        return Err(invalid("Kronecker sum factors must be square and of equal size"));
    }
    let symmetric = a1.is_symmetric() && a2.is_symmetric();
    let (a1, a2) = (a1.clone(), a2.clone());
    Ok(LinearOperator::new(n * n, symmetric, move |x, y| {
        for a in 0..n {
            a2.matvec_into(&x[a * n..(a + 1) * n], &mut y[a * n..(a + 1) * n]);
        }
        for a in 0..n {
            let (cols, vals) = a1.row(a);
            for (&c, &v) in cols.iter().zip(vals) {
                for b in 0..n {
                    y[a * n + b] += v * x[c * n + b];
                }
            }
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::{dense_matfun, matfun_operator, MatFun, MatFunSpec};
    use crate::linalg::{operator_norm_2, scale_to_norm, NormMode};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Arc;

    fn random_banded(n: usize, upper: usize, lower: usize, rng: &mut ChaCha8Rng) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(lower)..(i + upper + 1).min(n) {
                t.push((i, j, StandardNormal.sample(rng)));
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    fn random_symmetric_banded(n: usize, k: usize, rng: &mut ChaCha8Rng) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..(i + k + 1).min(n) {
                let v: f64 = StandardNormal.sample(rng);
                t.push((i, j, v));
                if i != j {
                    t.push((j, i, v));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    fn dense_kron_sum(a1: &SparseMatrix, a2: &SparseMatrix) -> DMatrix<f64> {
        let n = a1.n_rows();
        let id = DMatrix::identity(n, n);
        a1.to_dense().kronecker(&id) + id.kronecker(&a2.to_dense())
    }

    #[test]
    fn shuffle_transposes() {
        let p = ShufflePermutation::new(3);
        let m: Vec<f64> = (0..9).map(|v| v as f64).collect();
        assert_eq!(p.apply(&m), vec![0.0, 3.0, 6.0, 1.0, 4.0, 7.0, 2.0, 5.0, 8.0]);
        assert_eq!(p.apply(&p.apply(&m)), m);
        assert!(ShufflePermutation::for_dim(10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn shuffle_conjugates_kron_factors(n in 1usize..=8, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
            let id = DMatrix::identity(n, n);
            let p = ShufflePermutation::new(n);
            let pm = DMatrix::from_fn(n * n, n * n, |i, j| if p.index(i) == j { 1.0 } else { 0.0 });
            prop_assert_eq!(&pm * pm.transpose(), DMatrix::identity(n * n, n * n));
            prop_assert_eq!(&pm * a.kronecker(&id) * pm.transpose(), id.kronecker(&a));
            let mm: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
            let vec_rm = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
            prop_assert_eq!(p.apply(&vec_rm(&mm)), vec_rm(&mm.transpose()));
        }

        #[test]
        fn kron_sum_exact(n in 3usize..=20, k1 in 0usize..=2, k2 in 0usize..=2, seed in 0u64..1000) {
            prop_assume!(2 * k1 < n && 2 * k2 < n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a1 = random_symmetric_banded(n, k1, &mut rng);
            let a2 = random_symmetric_banded(n, k2, &mut rng);
            let op = kron_sum_operator(&a1, &a2).unwrap();
            let rec = kron_sum_recover(&op, k1, k2).unwrap();
            prop_assert_eq!(rec.matvecs_used, 2 + 2 * k1 + 2 * k2);
            let want = dense_kron_sum(&a1, &a2);
            let err = (rec.to_sparse().to_dense() - &want).norm() / want.norm();
            prop_assert!(err <= 1e-13);
            for i in 0..n * n {
                prop_assert!((rec.diagonal[i] - want[(i, i)]).abs() <= 1e-13 * want.amax());
            }
        }
    }

    #[test]
    fn zero_sum() {
        let z = SparseMatrix::zeros(4, 4);
        let op = kron_sum_operator(&z, &z).unwrap();
        let rec = kron_sum_recover(&op, 0, 0).unwrap();
        assert_eq!(rec.matvecs_used, 2);
        assert!(rec.diagonal.iter().all(|&d| d == 0.0));
        assert_eq!(rec.to_sparse().to_dense(), DMatrix::zeros(16, 16));
    }

    #[test]
    fn off_diagonals_are_unshifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a1 = random_symmetric_banded(12, 1, &mut rng);
        let a2 = random_symmetric_banded(12, 1, &mut rng);
        let rec = kron_sum_recover(&kron_sum_operator(&a1, &a2).unwrap(), 1, 1).unwrap();
        assert_eq!(rec.matvecs_used, 6);
        for i in 0..12 {
            for j in 0..12 {
                if i != j {
                    assert!((rec.a1.get(i, j) - a1.get(i, j)).abs() < 1e-14);
                    assert!((rec.a2.get(i, j) - a2.get(i, j)).abs() < 1e-14);
                } else {
                    assert!((rec.a1.get(i, i) - a1.get(i, i) - a2.get(0, 0)).abs() < 1e-14);
                    assert!((rec.a2.get(i, i) - a2.get(i, i) - a1.get(0, 0)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn asymmetric_bands_pass_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a1 = random_banded(9, 2, 0, &mut rng);
        let a2 = random_banded(9, 1, 3, &mut rng);
        let op = kron_sum_operator(&a1, &a2).unwrap();
        let rec = kron_sum_recover_banded(&op, Bandwidth { upper: 2, lower: 0 }, Bandwidth { upper: 1, lower: 3 }).unwrap();
        assert_eq!(rec.matvecs_used, 3 + 5);
        let want = dense_kron_sum(&a1, &a2);
        assert!((rec.to_sparse().to_dense() - &want).norm() <= 1e-13 * want.norm());
    }

    #[test]
    fn rejects_non_square_dimension() {
        let op = LinearOperator::new(10, true, |x, y| y.copy_from_slice(x));
        assert!(kron_sum_recover(&op, 0, 0).is_err());
        assert!(kron_exp_recover(&op, 1, 1).is_err());
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = SparseMatrix::zeros(5, 5);
        let op = kron_sum_operator(&z, &z).unwrap();
        let mf = matfun_operator(Arc::new(op), MatFunSpec::krylov(MatFun::Exp, 5)).unwrap();
        let rec = kron_exp_recover(&mf.outer, 3, 3).unwrap();
        assert_eq!(rec.to_dense(), DMatrix::identity(25, 25));
        assert!(kron_exp_recover(&mf.outer, 2, 3).is_err());
    }

    #[test]
    fn exp_factors_match_dense_oracle() {
        let n = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a1 = scale_to_norm(&random_symmetric_banded(n, 1, &mut rng), 0.5).unwrap();
        let a2 = scale_to_norm(&random_symmetric_banded(n, 1, &mut rng), 0.5).unwrap();
        let op = Arc::new(kron_sum_operator(&a1, &a2).unwrap());
        let mf = matfun_operator(op, MatFunSpec::krylov(MatFun::Exp, 20)).unwrap();
        let rec = kron_exp_recover(&mf.outer, 11, 11).unwrap();
        assert_eq!(rec.matvecs_used, 22);
        let want = dense_matfun(&dense_kron_sum(&a1, &a2), MatFun::Exp).unwrap();
        let dense = rec.to_dense();
        let err = operator_norm_2(&(&dense - &want), NormMode::Exact) / operator_norm_2(&want, NormMode::Exact);
        assert!(err <= 1e-6, "{err:e}");
        let x: Vec<f64> = (0..n * n).map(|i| (i as f64).sin()).collect();
        let y = rec.apply(&x).unwrap();
        let yd = &dense * nalgebra::DVector::from_column_slice(&x);
        assert!((nalgebra::DVector::from_column_slice(&y) - yd).amax() < 1e-13);
    }

    #[test]
    fn exp_error_decays_with_block_size() {
        let n = 20;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a1 = scale_to_norm(&random_symmetric_banded(n, 1, &mut rng), 2.0).unwrap();
        let a2 = scale_to_norm(&random_symmetric_banded(n, 1, &mut rng), 2.0).unwrap();
        let want = dense_matfun(&dense_kron_sum(&a1, &a2), MatFun::Exp).unwrap();
        let op = Arc::new(LinearOperator::from_dense(want.clone()));
        let errs: Vec<f64> = [3, 5, 7, 9]
            .iter()
            .map(|&s| {
                let rec = kron_exp_recover(&op, s, s).unwrap();
                (rec.to_dense() - &want).norm() / want.norm()
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < 0.5 * w[0], "{errs:?}");
        }
    }
}
