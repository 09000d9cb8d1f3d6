//! Random sensing operators `Y ∈ R^{n×s}`.
//!
//! All three ensembles are normalized so that `E‖Yᵀv‖² = ‖v‖²`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensingKind {
    /// I.i.d. `N(0, 1/s)` entries.
    Gaussian,
    /// `s` rows of the orthonormal DCT-II sampled without replacement, scaled
    /// by `√(n/s)`.
    SubsampledDct,
    /// `xi` nonzeros per row of `Y`, each `±xi^{-1/2}`.
    SparseRademacher { xi: usize },
}

impl SensingKind {
    /// Sparse ensemble with the customary `xi = min(8, s)`.
    pub fn sparse_default(s: usize) -> Self {
        SensingKind::SparseRademacher { xi: s.clamp(1, 8) }
    }

    fn stream(&self) -> u64 {
        match *self {
            SensingKind::Gaussian => 1,
            SensingKind::SubsampledDct => 2,
            SensingKind::SparseRademacher { xi } => 3 + ((xi as u64) << 8),
        }
    }
}

impl fmt::Display for SensingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SensingKind::Gaussian => write!(f, "gaussian"),
            SensingKind::SubsampledDct => write!(f, "dct"),
            SensingKind::SparseRademacher { xi } => write!(f, "sparse({xi})"),
        }
    }
}

#[derive(Clone)]
enum Data {
    // row-major `y` for sparse adjoints, column-major copy `cols` for `Yw`
    Dense { y: Vec<f64>, cols: Vec<f64> },
    Dct {
        rows: Vec<usize>,
        scale: f64,
        plan: Arc<dyn TransformType2And3<f64>>,
    },
    // row i of Y holds `xi` entries at cols[i*xi..(i+1)*xi]
    Sparse {
        xi: usize,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
}

/// A sensing operator, fully determined by `(n, s, kind, seed)`.
#[derive(Clone)]
pub struct SensingOperator {
    n: usize,
    s: usize,
    kind: SensingKind,
    seed: u64,
    data: Data,
}

impl fmt::Debug for SensingOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensingOperator")
            .field("n", &self.n)
            .field("s", &self.s)
            .field("kind", &self.kind)
            .field("seed", &self.seed)
            .finish()
    }
}

impl SensingOperator {
    pub fn build(n: usize, s: usize, kind: SensingKind, seed: u64) -> Result<Self> {
        if s == 0 || s > n {
            return Err(invalid(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(kind.stream());
        let data = match kind {
            SensingKind::Gaussian => {
                let normal = Normal::new(0.0, 1.0 / (s as f64).sqrt()).expect("finite std dev");
                let y: Vec<f64> = (0..n * s).map(|_| normal.sample(&mut rng)).collect();
                let mut cols = vec![0.0; n * s];
                for (i, row) in y.chunks_exact(s).enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        cols[j * n + i] = v;
                    }
                }
                Data::Dense { y, cols }
            }
            SensingKind::SubsampledDct => {
                let mut rows = index::sample(&mut rng, n, s).into_vec();
                rows.sort_unstable();
                Data::Dct {
                    rows,
                    scale: (n as f64 / s as f64).sqrt(),
                    plan: DctPlanner::new().plan_dct2(n),
                }
            }
            SensingKind::SparseRademacher { xi } => {
                if xi == 0 || xi > s {
                    return Err(invalid(format!("need 1 <= xi <= s, got xi = {xi}, s = {s}")));
                }
                let amp = 1.0 / (xi as f64).sqrt();
                let mut cols = Vec::with_capacity(n * xi);
                let mut vals = Vec::with_capacity(n * xi);
                for _ in 0..n {
                    let mut c = index::sample(&mut rng, s, xi).into_vec();
                    c.sort_unstable();
                    for col in c {
                        cols.push(col);
                        vals.push(if rng.random::<bool>() { amp } else { -amp });
                    }
                }
                Data::Sparse { xi, cols, vals }
            }
        };
        Ok(Self {
            n,
            s,
            kind,
            seed,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn kind(&self) -> SensingKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Measurements `Yᵀv` (length `s`).
    pub fn adjoint_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check(self.n, v.len())?;
        let mut out = vec![0.0; self.s];
        self.adjoint_into(v, &mut out);
        Ok(out)
    }

    /// `Yw` (length `n`).
    pub fn forward_apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        check(self.s, w.len())?;
        let mut out = vec![0.0; self.n];
        self.forward_into(w, &mut out);
        Ok(out)
    }

    pub(crate) fn adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        match &self.data {
            Data::Dct { rows, scale, plan } => {
                let mut buf = v.to_vec();
                dct2_orthonormal(plan.as_ref(), &mut buf);
                for (o, &r) in out.iter_mut().zip(rows) {
                    *o = scale * buf[r];
                }
            }
            _ => {
                let (idx, vals): (Vec<usize>, Vec<f64>) =
                    v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, &x)| (i, x)).unzip();
                self.adjoint_sparse_into(&idx, &vals, out);
            }
        }
    }

    /// `Yᵀv` for `v` given by its nonzero positions and values.
    pub(crate) fn adjoint_sparse_into(&self, idx: &[usize], vals: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match &self.data {
            Data::Dense { y, .. } => {
                for (&i, &x) in idx.iter().zip(vals) {
                    let row = &y[i * self.s..(i + 1) * self.s];
                    for (o, r) in out.iter_mut().zip(row) {
                        *o += x * r;
                    }
                }
            }
            Data::Sparse { xi, cols, vals: yv } => {
                for (&i, &x) in idx.iter().zip(vals) {
                    for t in i * xi..(i + 1) * xi {
                        out[cols[t]] += x * yv[t];
                    }
                }
            }
            Data::Dct { .. } => {
                let mut dense = vec![0.0; self.n];
                for (&i, &x) in idx.iter().zip(vals) {
                    dense[i] = x;
                }
                self.adjoint_into(&dense, out);
            }
        }
    }

    pub(crate) fn forward_into(&self, w: &[f64], out: &mut [f64]) {
        match &self.data {
            Data::Dense { cols, .. } => dense_forward(cols, self.n, w, out),
            Data::Sparse { xi, cols, vals } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (i * xi..(i + 1) * xi).map(|t| vals[t] * w[cols[t]]).sum();
                }
            }
            Data::Dct { rows, scale, plan } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (&r, &x) in rows.iter().zip(w) {
                    out[r] = scale * x;
                }
                dct3_orthonormal(plan.as_ref(), out);
            }
        }
    }

    /// Dense `n×s` copy of `Y`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.data {
            Data::Dense { y, .. } => DMatrix::from_row_slice(self.n, self.s, y),
            _ => {
                let mut m = DMatrix::zeros(self.n, self.s);
                let mut e = vec![0.0; self.s];
                let mut col = vec![0.0; self.n];
                for j in 0..self.s {
                    e[j] = 1.0;
                    self.forward_into(&e, &mut col);
                    m.column_mut(j).copy_from_slice(&col);
                    e[j] = 0.0;
                }
                m
            }
        }
    }
}

// `out = Σ_j w_j · col_j` over the column-major `n×s` block, four columns
// per sweep over `out`.
fn dense_forward(cols: &[f64], n: usize, w: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let quads = cols.chunks_exact(4 * n);
    let rest = quads.remainder();
    for (block, ws) in quads.zip(w.chunks_exact(4)) {
        let (c0, c1, c2, c3) = (&block[..n], &block[n..2 * n], &block[2 * n..3 * n], &block[3 * n..]);
        let (w0, w1, w2, w3) = (ws[0], ws[1], ws[2], ws[3]);
        for ((((o, a), b), c), d) in out.iter_mut().zip(c0).zip(c1).zip(c2).zip(c3) {
            *o += w0 * a + w1 * b + w2 * c + w3 * d;
        }
    }
    let done = w.len() - rest.len() / n;
    for (col, &wj) in rest.chunks_exact(n).zip(&w[done..]) {
        for (o, c) in out.iter_mut().zip(col) {
            *o += wj * c;
        }
    }
}

fn check(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Orthonormal DCT-II, `D` with `D Dᵀ = I`.
fn dct2_orthonormal(plan: &dyn TransformType2And3<f64>, buf: &mut [f64]) {
    let n = buf.len() as f64;
    plan.process_dct2(buf);
    buf[0] *= (1.0 / n).sqrt();
    let c = (2.0 / n).sqrt();
    buf[1..].iter_mut().for_each(|x| *x *= c);
}

/// `Dᵀ`, the inverse of [`dct2_orthonormal`].
fn dct3_orthonormal(plan: &dyn TransformType2And3<f64>, buf: &mut [f64]) {
    let n = buf.len() as f64;
    // the unnormalized DCT-III halves the first coefficient
    buf[0] *= 2.0 * (1.0 / n).sqrt();
    let c = (2.0 / n).sqrt();
    buf[1..].iter_mut().for_each(|x| *x *= c);
    plan.process_dct3(buf);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    const KINDS: [SensingKind; 3] = [
        SensingKind::Gaussian,
        SensingKind::SubsampledDct,
        SensingKind::SparseRademacher { xi: 8 },
    ];

    fn dct_matrix(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |k, j| {
            let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            c * (PI * (j as f64 + 0.5) * k as f64 / n as f64).cos()
        })
    }

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    #[test]
    fn full_dct_is_orthogonal() {
        let y = SensingOperator::build(4, 4, SensingKind::SubsampledDct, 1).unwrap().to_dense();
        let g = y.transpose() * &y;
        assert!((g - DMatrix::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn dct_matches_quadratic_oracle() {
        let (n, s) = (37, 11);
        let op = SensingOperator::build(n, s, SensingKind::SubsampledDct, 5).unwrap();
        let Data::Dct { rows, .. } = &op.data else { unreachable!() };
        let d = dct_matrix(n);
        let v = random_vec(n, 9);
        let full = &d * nalgebra::DVector::from_column_slice(&v);
        let got = op.adjoint_apply(&v).unwrap();
        let scale = (n as f64 / s as f64).sqrt();
        for (g, &r) in got.iter().zip(rows) {
            assert!((g - scale * full[r]).abs() < 1e-12);
        }
        let dense = op.to_dense();
        for (j, &r) in rows.iter().enumerate() {
            for i in 0..n {
                assert!((dense[(i, j)] - scale * d[(r, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn explicit_products_match_dense() {
        for kind in KINDS {
            let op = SensingOperator::build(60, 20, kind, 3).unwrap();
            let y = op.to_dense();
            let v = random_vec(60, 1);
            let w = random_vec(20, 2);
            let yt_v = y.transpose() * nalgebra::DVector::from_column_slice(&v);
            let y_w = &y * nalgebra::DVector::from_column_slice(&w);
            let a = op.adjoint_apply(&v).unwrap();
            let f = op.forward_apply(&w).unwrap();
            for (x, e) in a.iter().zip(yt_v.iter()) {
                assert!((x - e).abs() < 1e-13, "{kind}");
            }
            for (x, e) in f.iter().zip(y_w.iter()) {
                assert!((x - e).abs() < 1e-13, "{kind}");
            }
        }
    }

    #[test]
    fn zero_inputs_and_dimension_errors() {
        for kind in KINDS {
            let op = SensingOperator::build(30, 10, kind, 0).unwrap();
            assert!(op.adjoint_apply(&[0.0; 30]).unwrap().iter().all(|&x| x == 0.0));
            assert!(op.forward_apply(&[0.0; 10]).unwrap().iter().all(|&x| x == 0.0));
            assert!(matches!(
                op.adjoint_apply(&[0.0; 29]),
                Err(Error::DimensionMismatch { expected: 30, found: 29 })
            ));
        }
    }

    #[test]
    fn deterministic_construction() {
        for kind in KINDS {
            let a = SensingOperator::build(1000, 100, kind, 7).unwrap().to_dense();
            let b = SensingOperator::build(1000, 100, kind, 7).unwrap().to_dense();
            assert_eq!(a, b);
        }
        let a = SensingOperator::build(100, 10, SensingKind::Gaussian, 1).unwrap().to_dense();
        let b = SensingOperator::build(100, 10, SensingKind::Gaussian, 2).unwrap().to_dense();
        assert_ne!(a, b);
    }

    #[test]
    fn sparse_rows_have_exactly_xi_entries() {
        let op = SensingOperator::build(1000, 64, SensingKind::SparseRademacher { xi: 8 }, 4).unwrap();
        let y = op.to_dense();
        let amp = 8f64.powf(-0.5);
        for i in 0..1000 {
            let row: Vec<f64> = y.row(i).iter().copied().filter(|&x| x != 0.0).collect();
            assert_eq!(row.len(), 8);
            assert!(row.iter().all(|x| (x.abs() - amp).abs() < 1e-15));
        }
    }

    #[test]
    fn parameter_ranges() {
        assert!(SensingOperator::build(10, 0, SensingKind::Gaussian, 0).is_err());
        assert!(SensingOperator::build(10, 11, SensingKind::Gaussian, 0).is_err());
        assert!(SensingOperator::build(10, 4, SensingKind::SparseRademacher { xi: 5 }, 0).is_err());
        assert!(SensingOperator::build(10, 4, SensingKind::SparseRademacher { xi: 0 }, 0).is_err());
    }

    #[test]
    fn gaussian_row_norms_concentrate() {
        let y = SensingOperator::build(200, 200, SensingKind::Gaussian, 11).unwrap().to_dense();
        let mean = (0..200).map(|i| y.row(i).norm_squared()).sum::<f64>() / 200.0;
        assert!((0.8..=1.2).contains(&mean), "{mean}");
    }

    #[test]
    fn restricted_isometry_band() {
        let (n, s, k) = (1024, 128, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for kind in [SensingKind::Gaussian, SensingKind::SubsampledDct, SensingKind::sparse_default(s)] {
            let op = SensingOperator::build(n, s, kind, 13).unwrap();
            for _ in 0..100 {
                let mut v = vec![0.0; n];
                for i in index::sample(&mut rng, n, k) {
                    v[i] = rng.random::<f64>() - 0.5;
                }
                let nv = crate::linalg::norm2(&v);
                v.iter_mut().for_each(|x| *x /= nv);
                let m = crate::linalg::norm2(&op.adjoint_apply(&v).unwrap());
                assert!((0.5..=1.5).contains(&m), "{kind}: {m}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn adjoint_identity(seed in any::<u64>(), kind_ix in 0usize..3, n in 8usize..80) {
            let s = (n / 3).max(8).min(n);
            let kind = KINDS[kind_ix];
            let op = SensingOperator::build(n, s, kind, seed).unwrap();
            let v = random_vec(n, seed ^ 1);
            let w = random_vec(s, seed ^ 2);
            let lhs = crate::linalg::dot(&op.adjoint_apply(&v).unwrap(), &w);
            let rhs = crate::linalg::dot(&v, &op.forward_apply(&w).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
