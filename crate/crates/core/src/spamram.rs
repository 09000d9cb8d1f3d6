//! Sparse matrix recovery from `s` matvecs with a shared sensing operator.
//!
//! Each row `b_i` of `B` is seen through its measurements `(BY)_{i,:} = Yᵀb_i`
//! and recovered independently by a compressed-sensing solve.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::estimate::probe_error_estimate;
use crate::greedy::{CsSolver, NihtConfig};
use crate::linalg::{operator_norm_2, LinearOperator, NormMode, SparseMatrix};
use crate::par;
use crate::sensing::{SensingKind, SensingOperator};

/// `⌈2k ln(n/k)⌉`, clamped to `[k, n]`.
pub fn recommended_s(n: usize, k: usize) -> usize {
    let k = k.max(1);
    let s = (2.0 * k as f64 * (n as f64 / k as f64).ln()).ceil();
    (s.max(0.0) as usize).clamp(k, n.max(k))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpamramConfig {
    pub k: usize,
    pub s: usize,
    pub sensing: SensingKind,
    pub seed: u64,
    pub niht: NihtConfig,
    /// Independent Gaussian probes spent on the error estimate; 0 reuses the
    /// recovery measurements.
    pub fresh_probes: usize,
}

impl SpamramConfig {
    /// Gaussian sensing with the recommended `s` for an `n×n` matrix.
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            k,
            s: recommended_s(n, k),
            sensing: SensingKind::Gaussian,
            seed: 0,
            niht: NihtConfig::new(k),
            fresh_probes: 0,
        }
    }

    pub fn with_s(mut self, s: usize) -> Self {
        self.s = s;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sensing(mut self, kind: SensingKind) -> Self {
        self.sensing = kind;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.s < self.k || self.s > n {
            return Err(invalid(format!(
                "need 1 <= k <= s <= n, got k = {}, s = {}, n = {n}",
                self.k, self.s
            )));
        }
        if self.niht.k != self.k {
            return Err(invalid(format!("solver sparsity {} differs from k = {}", self.niht.k, self.k)));
        }
        Ok(())
    }
}

/// Sensing operator together with the measurements `F_s = BY`.
#[derive(Debug, Clone)]
pub struct Measurements {
    pub sensing: SensingOperator,
    /// `n×s`.
    pub f: DMatrix<f64>,
}

const CACHE_MAGIC: &[u8; 8] = b"SPAMRAM1";

impl Measurements {
    /// Re-solve row `i` from the stored measurements.
    pub fn solve_row(&self, i: usize, solver: &dyn CsSolver) -> Result<crate::greedy::CsSolution> {
        if i >= self.f.nrows() {
            return Err(Error::IndexOutOfRange {
                row: i,
                col: 0,
                rows: self.f.nrows(),
                cols: self.f.ncols(),
            });
        }
        let y: Vec<f64> = self.f.row(i).iter().copied().collect();
        solver.solve(&self.sensing, &y)
    }

    /// Binary layout, little endian: magic, then `n, s, seed, kind, xi` as
    /// `u64`, then `F_s` row-major as `f64`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        let (kind, xi) = match self.sensing.kind() {
            SensingKind::Gaussian => (0u64, 0u64),
            SensingKind::SubsampledDct => (1, 0),
            SensingKind::SparseRademacher { xi } => (2, xi as u64),
        };
        for v in [self.f.nrows() as u64, self.f.ncols() as u64, self.sensing.seed(), kind, xi] {
            w.write_all(&v.to_le_bytes())?;
        }
        for i in 0..self.f.nrows() {
            for j in 0..self.f.ncols() {
                w.write_all(&self.f[(i, j)].to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Read a cache written by [`Measurements::save`], rebuilding the sensing
    /// operator from its seed.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(invalid("not a measurement cache"));
        }
        let mut word = [0u8; 8];
        let mut header = [0u64; 5];
        for h in header.iter_mut() {
            r.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        let [n, s, seed, kind, xi] = header;
        let kind = match kind {
            0 => SensingKind::Gaussian,
            1 => SensingKind::SubsampledDct,
            2 => SensingKind::SparseRademacher { xi: xi as usize },
            other => return Err(invalid(format!("unknown sensing kind tag {other}"))),
        };
        let (n, s) = (n as usize, s as usize);
        let sensing = SensingOperator::build(n, s, kind, seed)?;
        let mut data = Vec::with_capacity(n * s);
        for _ in 0..n * s {
            r.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        Ok(Self {
            sensing,
            f: DMatrix::from_row_slice(n, s, &data),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub b_hat: SparseMatrix,
    /// Matvecs with `B`, including fresh estimator probes.
    pub matvecs_used: usize,
    pub delta_re: f64,
    /// `‖F_s(i,:) − Yᵀ b̂_i‖₂` per row.
    pub per_row_residuals: Vec<f64>,
    /// Rows whose solve stopped without meeting its tolerance.
    pub unconverged_rows: usize,
    pub measurements: Measurements,
}

pub fn spamram_recover(mvp: &LinearOperator, cfg: &SpamramConfig) -> Result<RecoveryReport> {
    spamram_recover_with(mvp, cfg, &cfg.niht)
}

/// [`spamram_recover`] with a caller-supplied row solver.
pub fn spamram_recover_with(
    mvp: &LinearOperator,
    cfg: &SpamramConfig,
    solver: &dyn CsSolver,
) -> Result<RecoveryReport> {
    let n = mvp.dim();
    cfg.validate(n)?;
    if solver.sparsity() != cfg.k {
        return Err(invalid(format!("solver sparsity {} differs from k = {}", solver.sparsity(), cfg.k)));
    }
    let sensing = SensingOperator::build(n, cfg.s, cfg.sensing, cfg.seed)?;
    let f = mvp.apply_block(&sensing.to_dense())?;
    let mut matvecs_used = cfg.s;
    let measurements = Measurements { sensing, f };

    let (b_hat, per_row_residuals, unconverged_rows) = solve_rows(&measurements, solver)?;

    let delta_re = if cfg.fresh_probes > 0 {
        matvecs_used += cfg.fresh_probes;
        probe_error_estimate(&b_hat, mvp, cfg.fresh_probes, cfg.seed ^ 0x9e37_79b9_7f4a_7c15)?.delta
    } else {
        spamram_error_estimate(&b_hat, &measurements.sensing, &measurements.f)
    };
    Ok(RecoveryReport {
        b_hat,
        matvecs_used,
        delta_re,
        per_row_residuals,
        unconverged_rows,
        measurements,
    })
}

/// Solve every row of the stored measurements. Rows are independent, so the
/// result does not depend on the order or parallelism of the solves.
pub fn solve_rows(m: &Measurements, solver: &dyn CsSolver) -> Result<(SparseMatrix, Vec<f64>, usize)> {
    let n = m.f.nrows();
    // rows of F_s as contiguous slices
    let ft = m.f.transpose();
    let sols = par::try_map_indexed(n, |i| solver.solve(&m.sensing, ft.column(i).as_slice()))?;
    let mut rows = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut unconverged = 0;
    for sol in sols {
        residuals.push(sol.residual_norm);
        unconverged += usize::from(!sol.converged);
        rows.push(sol.nonzeros());
    }
    Ok((SparseMatrix::from_rows(m.sensing.n(), rows)?, residuals, unconverged))
}

/// Recover `B` column by column from matvecs with `Bᵀ`.
pub fn spamram_recover_columns(mvp_transpose: &LinearOperator, cfg: &SpamramConfig) -> Result<RecoveryReport> {
    let mut report = spamram_recover(mvp_transpose, cfg)?;
    report.b_hat = report.b_hat.transpose();
    Ok(report)
}

/// `δ = ‖B̂Y − F_s‖₂ / ‖F_s‖₂`, or 0 when `F_s = 0`.
pub fn spamram_error_estimate(b_hat: &SparseMatrix, sensing: &SensingOperator, f: &DMatrix<f64>) -> f64 {
    let (n, s) = (f.nrows(), f.ncols());
    let f_norm = operator_norm_2(f, NormMode::Exact);
    if f_norm == 0.0 {
        return 0.0;
    }
    let rows = par::map_indexed(n, |i| {
        let (idx, vals) = b_hat.row(i);
        let mut out = vec![0.0; s];
        sensing.adjoint_sparse_into(idx, vals, &mut out);
        out
    });
    let mut diff = DMatrix::zeros(n, s);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..s {
            diff[(i, j)] = row[j] - f[(i, j)];
        }
    }
    operator_norm_2(&diff, NormMode::Exact) / f_norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recommended_budget() {
        // 2·8·ln(128) = 77.6
        assert_eq!(recommended_s(1024, 8), 78);
        assert_eq!(recommended_s(10, 10), 10);
    }

    #[test]
    fn zero_matrix() {
        let op = LinearOperator::from_sparse(SparseMatrix::zeros(64, 64));
        let cfg = SpamramConfig::new(64, 2);
        let rep = spamram_recover(&op, &cfg).unwrap();
        assert_eq!(rep.b_hat.nnz(), 0);
        assert_eq!(rep.delta_re, 0.0);
        assert_eq!(rep.matvecs_used, cfg.s);
        assert_eq!(op.matvec_count(), cfg.s);
    }

    #[test]
    fn estimate_edge_cases() {
        let sensing = SensingOperator::build(10, 4, SensingKind::Gaussian, 0).unwrap();
        let b = SparseMatrix::diagonal(&[1.0; 10]);
        let f = sensing.to_dense();
        assert!(spamram_error_estimate(&b, &sensing, &f) < 1e-15);
        let zero = SparseMatrix::zeros(10, 10);
        assert!((spamram_error_estimate(&zero, &sensing, &f) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_recovery_and_cache_round_trip() {
        let n = 50;
        let d: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let op = LinearOperator::from_sparse(SparseMatrix::diagonal(&d));
        let cfg = SpamramConfig::new(n, 1).with_s(30).with_seed(3);
        let rep = spamram_recover(&op, &cfg).unwrap();
        for i in 0..n {
            assert!((rep.b_hat.get(i, i) - d[i]).abs() < 1e-8 * d[i]);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        rep.measurements.save(&path).unwrap();
        let back = Measurements::load(&path).unwrap();
        assert_eq!(back.f, rep.measurements.f);
        assert_eq!(back.sensing.to_dense(), rep.measurements.sensing.to_dense());
        let row = back.solve_row(7, &cfg.niht).unwrap().nonzeros();
        let (cols, vals) = rep.b_hat.row(7);
        assert_eq!(row, cols.iter().copied().zip(vals.iter().copied()).collect::<Vec<_>>());
    }

    #[test]
    fn row_order_does_not_matter() {
        let n = 80;
        let m = SparseMatrix::from_triplets(n, n, (0..n).flat_map(|i| [(i, i, 1.0), (i, (i * 7 + 3) % n, 0.5)])).unwrap();
        let op = LinearOperator::from_sparse(m);
        let cfg = SpamramConfig::new(n, 2).with_seed(1);
        par::set_parallel(false);
        let seq = spamram_recover(&op, &cfg).unwrap();
        par::set_parallel(true);
        let par_ = spamram_recover(&op, &cfg).unwrap();
        assert_eq!(seq.b_hat, par_.b_hat);
        let ms = &seq.measurements;
        let mut rows = vec![Vec::new(); n];
        for i in (0..n).rev() {
            rows[i] = ms.solve_row(i, &cfg.niht).unwrap().nonzeros();
        }
        let rev_rows = SparseMatrix::from_rows(n, rows).unwrap();
        assert_eq!(rev_rows, seq.b_hat);
    }
}
