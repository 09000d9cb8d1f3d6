//! Sweep experiments: recover `f(A)` for a range of measurement counts and
//! report the error curves as CSV.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bamram::{bamram_error_estimate, bamram_recover, BandSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    operator_norm_2, read_matrix_market, scale_to_norm, ExplicitMatrix, LinearOperator, NormMode, SparseMatrix,
    DENSE_LIMIT,
};
use crate::matfun::{dense_matfun, matfun_operator, MatFun, MatFunSpec};
use crate::sensing::SensingKind;
use crate::spamram::{spamram_recover, SpamramConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    /// Symmetric `k`-banded with `N(0,1)` entries, scaled to `‖A‖₂ = norm`.
    SyntheticBanded { n: usize, k: usize, norm: f64 },
    /// Symmetric with randomly placed `N(0,1)` entries at the given expected
    /// density, scaled to `‖A‖₂ = norm`.
    SyntheticSparse { n: usize, density: f64, norm: f64 },
    MatrixMarket(PathBuf),
}

fn parse_number<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| invalid(format!("bad {what}: {s:?}")))
}

// accepts "0.001" or "1/1024"
fn parse_fraction(s: &str) -> Result<f64> {
    match s.split_once('/') {
        Some((a, b)) => Ok(parse_number::<f64>(a, "density")? / parse_number::<f64>(b, "density")?),
        None => parse_number(s, "density"),
    }
}

impl FromStr for MatrixSource {
    type Err = Error;

    /// `banded:n,k,norm`, `sparse:n,density,norm` or `mm:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| invalid(format!("bad matrix source {s:?}")))?;
        if kind == "mm" {
            return Ok(MatrixSource::MatrixMarket(rest.into()));
        }
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(invalid(format!("{kind} needs three parameters, got {rest:?}")));
        }
        match kind {
            "banded" => Ok(MatrixSource::SyntheticBanded {
                n: parse_number(parts[0], "n")?,
                k: parse_number(parts[1], "bandwidth")?,
                norm: parse_number(parts[2], "norm")?,
            }),
            "sparse" => Ok(MatrixSource::SyntheticSparse {
                n: parse_number(parts[0], "n")?,
                density: parse_fraction(parts[1])?,
                norm: parse_number(parts[2], "norm")?,
            }),
            _ => Err(invalid(format!("unknown matrix source {kind:?}"))),
        }
    }
}

/// Build the test matrix for `source`. Synthetic matrices depend only on
/// `seed`.
pub fn synthesize_matrix(source: &MatrixSource, seed: u64) -> Result<SparseMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *source {
        MatrixSource::SyntheticBanded { n, k, norm } => {
            if n == 0 || k >= n {
                return Err(invalid(format!("need 0 <= k < n, got k = {k}, n = {n}")));
            }
            let mut t = Vec::with_capacity(n * (2 * k + 1));
            for i in 0..n {
                for j in i..(i + k + 1).min(n) {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    t.push((i, j, v));
                    if j != i {
                        t.push((j, i, v));
                    }
                }
            }
            scale_to_norm(&SparseMatrix::from_triplets(n, n, t)?, norm)
        }
        MatrixSource::SyntheticSparse { n, density, norm } => {
            if n == 0 || !(density > 0.0 && density <= 1.0) {
                return Err(invalid(format!("need n > 0 and density in (0, 1], got {density}")));
            }
            // each draw fills a mirrored pair, so half the target count
            let draws = (density * (n * n) as f64 / 2.0).round().max(1.0) as usize;
            let mut t = Vec::with_capacity(2 * draws);
            for _ in 0..draws {
                let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
                let v: f64 = StandardNormal.sample(&mut rng);
                t.push((i, j, v));
                if i != j {
                    t.push((j, i, v));
                }
            }
            scale_to_norm(&SparseMatrix::from_triplets(n, n, t)?, norm)
        }
        MatrixSource::MatrixMarket(ref path) => read_matrix_market(path),
    }
}

/// `f` applied to the matrix; `Identity` recovers `A` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    Identity,
    Apply(MatFun),
}

impl FromStr for FunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "id" | "identity" => Ok(FunctionKind::Identity),
            other => other.parse().map(FunctionKind::Apply),
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionKind::Identity => write!(f, "id"),
            FunctionKind::Apply(g) => write!(f, "{}", g.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Spamram,
    Bamram,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spamram" => Ok(Algorithm::Spamram),
            "bamram" => Ok(Algorithm::Bamram),
            _ => Err(invalid(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensingChoice {
    Gaussian,
    Dct,
    Sparse,
}

impl SensingChoice {
    fn kind(self, s: usize) -> SensingKind {
        match self {
            SensingChoice::Gaussian => SensingKind::Gaussian,
            SensingChoice::Dct => SensingKind::SubsampledDct,
            SensingChoice::Sparse => SensingKind::sparse_default(s),
        }
    }
}

impl FromStr for SensingChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SensingChoice::Gaussian),
            "dct" => Ok(SensingChoice::Dct),
            "sparse" => Ok(SensingChoice::Sparse),
            _ => Err(invalid(format!("unknown sensing ensemble {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: MatrixSource,
    pub function: FunctionKind,
    pub algorithm: Algorithm,
    /// Strictly increasing measurement counts, each at most `n`.
    pub sweep: Vec<usize>,
    pub seed: u64,
    pub krylov_steps: usize,
    pub contour_points: usize,
    /// SpaMRAM sparsity; `⌊s/8⌋` (at least 1) when absent.
    pub k: Option<usize>,
    pub sensing: SensingChoice,
    /// Compute the true relative error against a dense oracle.
    pub oracle: bool,
    /// Gaussian probes spent on the BaMRAM error estimate.
    pub estimate_probes: usize,
}

impl ExperimentSpec {
    pub fn new(source: MatrixSource, function: FunctionKind, algorithm: Algorithm, sweep: Vec<usize>) -> Self {
        Self {
            source,
            function,
            algorithm,
            sweep,
            seed: 0,
            krylov_steps: 20,
            contour_points: 50,
            k: None,
            sensing: SensingChoice::Gaussian,
            oracle: true,
            estimate_probes: 5,
        }
    }

    /// How `f(A)` is applied: Krylov for `exp`, contour for the rest.
    pub fn matfun_spec(&self) -> Option<MatFunSpec> {
        match self.function {
            FunctionKind::Identity => None,
            FunctionKind::Apply(MatFun::Exp) => Some(MatFunSpec::krylov(MatFun::Exp, self.krylov_steps)),
            FunctionKind::Apply(f) => Some(MatFunSpec::contour(f, self.contour_points)),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(invalid("empty sweep"));
        }
        if self.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sweep must be strictly increasing"));
        }
        if self.sweep[0] == 0 || *self.sweep.last().unwrap() > n {
            return Err(invalid(format!("sweep values must lie in [1, {n}]")));
        }
        if self.k == Some(0) {
            return Err(invalid("k must be positive"));
        }
        if let Some(spec) = self.matfun_spec() {
            spec.validate()?;
        }
        if self.oracle && n > DENSE_LIMIT && self.function != FunctionKind::Identity {
            return Err(invalid(format!("dense oracle infeasible for n = {n} > {DENSE_LIMIT}")));
        }
        Ok(())
    }

    /// Seed for the sweep point `s`.
    pub fn seed_for(&self, s: usize) -> u64 {
        self.seed ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub s: usize,
    pub relative_error: Option<f64>,
    pub delta_re: f64,
    /// Matvecs with `f(A)` spent on recovery.
    pub matvecs: usize,
    /// Matvecs with `A` made inside the `f(A)` applications.
    pub inner_matvecs: usize,
    pub seconds: f64,
}

enum Truth {
    Dense(DMatrix<f64>),
    Sparse(SparseMatrix),
}

fn relative_error(b_hat: &dyn ExplicitMatrix, truth: &Truth) -> f64 {
    match truth {
        Truth::Dense(f) => {
            let diff = b_hat.to_dense() - f;
            operator_norm_2(&diff, NormMode::Exact) / operator_norm_2(f, NormMode::Exact)
        }
        Truth::Sparse(a) => {
            let hat = SparseMatrix::from_dense(&b_hat.to_dense(), 0.0);
            let diff = SparseMatrix::from_triplets(
                a.n_rows(),
                a.n_cols(),
                hat.iter().chain(a.iter().map(|(i, j, v)| (i, j, -v))),
            )
            .expect("same shape");
            operator_norm_2(&diff, NormMode::Exact) / operator_norm_2(a, NormMode::Exact)
        }
    }
}

/// Run the sweep. Points run sequentially with per-point seeds, so the output
/// apart from `seconds` depends only on the spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RunRow>> {
    let a = synthesize_matrix(&spec.source, spec.seed)?;
    if !a.is_square() {
        return Err(invalid("matrix must be square"));
    }
    let n = a.n_rows();
    spec.validate(n)?;
    let mf_spec = spec.matfun_spec();
    let truth = if !spec.oracle {
        None
    } else {
        Some(match (spec.function, n <= DENSE_LIMIT) {
            (FunctionKind::Identity, false) => Truth::Sparse(a.clone()),
            (FunctionKind::Identity, true) => Truth::Dense(a.to_dense()),
            (FunctionKind::Apply(f), _) => Truth::Dense(dense_matfun(&a.to_dense(), f)?),
        })
    };
    let a = Arc::new(a);

    let mut rows = Vec::with_capacity(spec.sweep.len());
    for &s in &spec.sweep {
        let seed = spec.seed_for(s);
        let start = Instant::now();
        let inner = Arc::new(LinearOperator::from_sparse(Arc::clone(&a)));
        let (mvp, inner) = match mf_spec {
            None => (LinearOperator::from_sparse(Arc::clone(&a)), None),
            Some(ms) => {
                let mf = matfun_operator(inner, ms)?;
                (mf.outer, Some(mf.inner))
            }
        };
        let (b_hat, delta_re, matvecs): (Box<dyn ExplicitMatrix>, f64, usize) = match spec.algorithm {
            Algorithm::Bamram => {
                let (band, _) = BandSpec::symmetric_for_block(s);
                let rep = bamram_recover(&mvp, &band)?;
                let delta = bamram_error_estimate(&rep.b_hat, &mvp, spec.estimate_probes, seed)?.delta;
                (Box::new(rep.b_hat), delta, rep.matvecs_used)
            }
            Algorithm::Spamram => {
                let k = spec.k.unwrap_or(s / 8).max(1).min(s);
                let cfg = SpamramConfig::new(n, k).with_s(s).with_seed(seed).with_sensing(spec.sensing.kind(s));
                let rep = spamram_recover(&mvp, &cfg)?;
                (Box::new(rep.b_hat), rep.delta_re, rep.matvecs_used)
            }
        };
        let seconds = start.elapsed().as_secs_f64();
        rows.push(RunRow {
            s,
            relative_error: truth.as_ref().map(|t| relative_error(b_hat.as_ref(), t)),
            delta_re,
            matvecs,
            inner_matvecs: inner.map_or(0, |op| op.matvec_count()),
            seconds,
        });
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 6] = ["s", "relative_error", "delta_RE", "matvecs", "inner_matvecs", "seconds"];

/// Write rows as CSV. Floats use the shortest representation that round-trips.
pub fn write_csv<W: Write>(rows: &[RunRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.s.to_string(),
            r.relative_error.map_or(String::new(), |e| format!("{e:e}")),
            format!("{:e}", r.delta_re),
            r.matvecs.to_string(),
            r.inner_matvecs.to_string(),
            format!("{:.6}", r.seconds),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::write_matrix_market;
    use crate::linalg::MmSymmetry;

    #[test]
    fn parses_sources() {
        assert_eq!(
            "banded:1024,2,0.5".parse::<MatrixSource>().unwrap(),
            MatrixSource::SyntheticBanded { n: 1024, k: 2, norm: 0.5 }
        );
        assert_eq!(
            "sparse:1024,1/1024,0.5".parse::<MatrixSource>().unwrap(),
            MatrixSource::SyntheticSparse { n: 1024, density: 1.0 / 1024.0, norm: 0.5 }
        );
        assert_eq!("mm:a/b.mtx".parse::<MatrixSource>().unwrap(), MatrixSource::MatrixMarket("a/b.mtx".into()));
        for bad in ["banded:10,2", "dense:1,2,3", "sparse:x,0.1,1", "nocolon"] {
            assert!(bad.parse::<MatrixSource>().is_err(), "{bad}");
        }
        assert_eq!("id".parse::<FunctionKind>().unwrap(), FunctionKind::Identity);
        assert_eq!("sqrt1p".parse::<FunctionKind>().unwrap(), FunctionKind::Apply(MatFun::Sqrt1p));
    }

    #[test]
    fn small_banded_is_exact_norm() {
        let a = synthesize_matrix(&MatrixSource::SyntheticBanded { n: 8, k: 1, norm: 1.0 }, 3).unwrap();
        assert!(a.is_symmetric());
        assert_eq!(a.bandwidths(), (1, 1));
        let nrm = operator_norm_2(&a, NormMode::Exact);
        assert!((nrm - 1.0).abs() < 1e-6);
        assert!(synthesize_matrix(&MatrixSource::SyntheticBanded { n: 8, k: 8, norm: 1.0 }, 3).is_err());
        assert!(synthesize_matrix(&MatrixSource::SyntheticSparse { n: 8, density: 1.5, norm: 1.0 }, 3).is_err());
    }

    #[test]
    fn sparse_density_and_determinism() {
        let src = MatrixSource::SyntheticSparse { n: 1024, density: 1.0 / 1024.0, norm: 0.5 };
        for seed in 0..5 {
            let a = synthesize_matrix(&src, seed).unwrap();
            assert!(a.is_symmetric());
            assert!((820..=1230).contains(&a.nnz()), "nnz = {}", a.nnz());
            assert!((operator_norm_2(&a, NormMode::Exact) - 0.5).abs() < 1e-6);
            let b = synthesize_matrix(&src, seed).unwrap();
            assert_eq!(a.to_dense(), b.to_dense());
        }
    }

    #[test]
    fn sweep_validation() {
        let src = MatrixSource::SyntheticBanded { n: 20, k: 1, norm: 0.5 };
        let mut spec = ExperimentSpec::new(src, FunctionKind::Identity, Algorithm::Bamram, vec![3, 3]);
        assert!(run_experiment(&spec).is_err());
        spec.sweep = vec![3, 21];
        assert!(run_experiment(&spec).is_err());
        spec.sweep = vec![3, 5];
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows[0].matvecs, 3);
        assert!(rows[0].relative_error.unwrap() < 1e-15);
    }

    #[test]
    fn csv_is_deterministic_apart_from_time() {
        let src = MatrixSource::SyntheticSparse { n: 128, density: 4.0 / 128.0, norm: 0.5 };
        let mut spec = ExperimentSpec::new(src, FunctionKind::Apply(MatFun::Exp), Algorithm::Spamram, vec![16, 32, 64]);
        spec.seed = 9;
        let strip = |rows: Vec<RunRow>| {
            let mut buf = Vec::new();
            let rows: Vec<RunRow> = rows.into_iter().map(|r| RunRow { seconds: 0.0, ..r }).collect();
            write_csv(&rows, &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = strip(run_experiment(&spec).unwrap());
        let b = strip(run_experiment(&spec).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("s,relative_error,delta_RE,matvecs,inner_matvecs,seconds\n"));
        let rows = run_experiment(&spec).unwrap();
        assert!(rows.iter().all(|r| r.inner_matvecs > 0 && r.matvecs == r.s));
    }

    #[test]
    fn matrix_market_identity_banded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("band.mtx");
        let a = synthesize_matrix(&MatrixSource::SyntheticBanded { n: 40, k: 3, norm: 2.0 }, 1).unwrap();
        write_matrix_market(&path, &a, MmSymmetry::Symmetric).unwrap();
        let mut spec = ExperimentSpec::new(MatrixSource::MatrixMarket(path), FunctionKind::Identity, Algorithm::Bamram, vec![5, 7]);
        spec.oracle = true;
        let rows = run_experiment(&spec).unwrap();
        assert!(rows[1].relative_error.unwrap() < 1e-14);
        assert!(rows[0].relative_error.unwrap() > 1e-3);
        spec.oracle = false;
        assert!(run_experiment(&spec).unwrap()[0].relative_error.is_none());
    }
}
