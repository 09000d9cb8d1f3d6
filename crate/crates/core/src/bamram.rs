//! Banded recovery by periodic probing.
//!
//! Probing `B` with `I_n^{(s)}` (column `j` is the indicator of the rows
//! `r ≡ j mod s`) yields `P_ij = Σ_t B_{i, j+st}`. If every row of `B` has its
//! mass in a window of `s` consecutive offsets from the diagonal, each `P_ij`
//! holds exactly one in-window entry, which is written back to its column.
//!
//! All indices are 0-based.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::estimate::{probe_error_estimate, ErrorEstimate};
use crate::linalg::{BandedMatrix, LinearOperator};
use crate::par;

/// The periodic identity `I_n^{(s)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbingMatrix {
    n: usize,
    s: usize,
}

impl ProbingMatrix {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if s == 0 || s > n {
            return Err(invalid(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
        }
        Ok(Self { n, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Column `j`: ones at rows `r ≡ j (mod s)`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|r| if r % self.s == j { 1.0 } else { 0.0 }).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.s, |r, j| if r % self.s == j { 1.0 } else { 0.0 })
    }
}

/// `B · I_n^{(s)}` (`n×s`); costs exactly `s` matvecs.
pub fn probe_apply(mvp: &LinearOperator, s: usize) -> Result<DMatrix<f64>> {
    let probes = ProbingMatrix::new(mvp.dim(), s)?;
    mvp.apply_block(&probes.to_dense())
}

/// Which diagonals of `B` are recovered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSpec {
    /// `B` has upper bandwidth `k1` and lower bandwidth `k2`; recovery is exact.
    ExactBanded { k1: usize, k2: usize },
    /// Equal decay on both sides; keeps offsets `|j − i| ≤ s0`.
    SymmetricDecay { s0: usize },
    /// Unequal decay; keeps offsets `−b2 ≤ j − i ≤ b1`.
    AsymmetricDecay { b1: usize, b2: usize },
}

impl BandSpec {
    /// Symmetric-decay spec for a requested block size. Even `s` is rounded up
    /// to the next odd value; the flag reports whether that happened.
    pub fn symmetric_for_block(s: usize) -> (Self, bool) {
        (BandSpec::SymmetricDecay { s0: s / 2 }, s.is_multiple_of(2))
    }

    /// Half-widths `b = ⌊c/ln(1/λ)⌋` from the upper (`lambda1`) and lower
    /// (`lambda2`) decay rates.
    pub fn asymmetric_from_rates(c: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        let p = crate::linalg::DecayProfile::new(1.0, lambda1, lambda2)?;
        if !(c > 0.0) {
            return Err(invalid(format!("c = {c} must be positive")));
        }
        let (b1, b2) = p.half_widths(c);
        Ok(BandSpec::AsymmetricDecay { b1, b2 })
    }

    /// `(upper, lower)` extent of the recovery window.
    pub fn window(&self) -> (usize, usize) {
        match *self {
            BandSpec::ExactBanded { k1, k2 } => (k1, k2),
            BandSpec::SymmetricDecay { s0 } => (s0, s0),
            BandSpec::AsymmetricDecay { b1, b2 } => (b1, b2),
        }
    }

    /// Number of probes `s = 1 + upper + lower`.
    pub fn block_size(&self) -> usize {
        let (u, l) = self.window();
        1 + u + l
    }
}

fn in_range(c: isize, n: usize) -> bool {
    c >= 0 && (c as usize) < n
}

/// The `t` for which `B_{i, j+st}` is the entry of `P_ij` inside the band
/// `−k2 ≤ j + st − i ≤ k1`, or `None` if that column lies outside the matrix.
/// Requires `s = 1 + k1 + k2` and `j < s`.
pub fn alias_shift_banded(i: usize, j: usize, s: usize, k1: usize, k2: usize, n: usize) -> Option<isize> {
    debug_assert_eq!(s, 1 + k1 + k2);
    let (i, j, s, k2) = (i as isize, j as isize, s as isize, k2 as isize);
    // smallest offset j + st − i that is ≥ −k2
    let t = (i - k2 - j).div_euclid(s) + if (i - k2 - j).rem_euclid(s) == 0 { 0 } else { 1 };
    in_range(j + s * t, n).then_some(t)
}

/// Valid `t` (with `0 ≤ j + st < n`) minimizing `|j + st − i − center|`;
/// ties go to the smaller `|t|`, then the smaller `t`.
fn nearest_alias(i: usize, j: usize, s: usize, n: usize, center: f64) -> isize {
    let (ii, jj, ss) = (i as isize, j as isize, s as isize);
    let t_lo = (-jj).div_euclid(ss) + if (-jj).rem_euclid(ss) == 0 { 0 } else { 1 };
    let t_hi = (n as isize - 1 - jj).div_euclid(ss);
    let ideal = (ii as f64 + center - jj as f64) / ss as f64;
    let mut best: Option<(f64, isize)> = None;
    let base = ideal.floor() as isize;
    for t in [base - 1, base, base + 1, base + 2, t_lo, t_hi] {
        if t < t_lo || t > t_hi {
            continue;
        }
        let d = ((jj + ss * t - ii) as f64 - center).abs();
        best = match best {
            None => Some((d, t)),
            Some((bd, bt)) => {
                let better = d < bd - 1e-12
                    || ((d - bd).abs() <= 1e-12 && (t.abs(), t) < (bt.abs(), bt));
                Some(if better { (d, t) } else { (bd, bt) })
            }
        };
    }
    best.expect("t = 0 is always valid because j < s <= n").1
}

/// Alias nearest the diagonal, `argmin_t |j + st − i|` over valid `t`.
pub fn alias_shift_symmetric(i: usize, j: usize, s: usize, n: usize) -> isize {
    nearest_alias(i, j, s, n, 0.0)
}

/// Alias nearest the centre of the window for unequal decay rates `lambda1`
/// (above the diagonal) and `lambda2` (below). With `L = ln(1/λ)` the centre
/// sits at offset `((s−1)/2)·(L2 − L1)/(L1 + L2)`, towards the slower-decaying
/// side.
pub fn alias_shift_asymmetric(i: usize, j: usize, s: usize, lambda1: f64, lambda2: f64, n: usize) -> isize {
    let (l1, l2) = ((1.0 / lambda1).ln(), (1.0 / lambda2).ln());
    let center = (s as f64 - 1.0) / 2.0 * (l2 - l1) / (l1 + l2);
    nearest_alias(i, j, s, n, center)
}

/// Scatter probe sums back into the band of `spec`: `B̂_{i,c} = P_{i, c mod s}`
/// for every in-range column `c` of the window around `i`.
pub fn reconstruct(probes: &DMatrix<f64>, spec: &BandSpec) -> Result<BandedMatrix> {
    let (n, s) = (probes.nrows(), probes.ncols());
    if s != spec.block_size() {
        return Err(invalid(format!("{s} probe columns, spec needs {}", spec.block_size())));
    }
    let (upper, lower) = spec.window();
    let rows = par::map_indexed(n, |i| {
        let lo = i.saturating_sub(lower);
        let hi = (i + upper + 1).min(n);
        (lo..hi).map(|c| probes[(i, c % s)]).collect::<Vec<f64>>()
    });
    let mut b = BandedMatrix::zeros(n, upper, lower);
    for (i, row) in rows.into_iter().enumerate() {
        for (c, v) in (i.saturating_sub(lower)..).zip(row) {
            b.set(i, c, v);
        }
    }
    Ok(b)
}

#[derive(Debug, Clone)]
pub struct BamramReport {
    pub b_hat: BandedMatrix,
    pub s: usize,
    pub matvecs_used: usize,
    /// `B · I_n^{(s)}`.
    pub probes: DMatrix<f64>,
}

/// Probe with `s = spec.block_size()` vectors and reconstruct.
pub fn bamram_recover(mvp: &LinearOperator, spec: &BandSpec) -> Result<BamramReport> {
    let s = spec.block_size();
    let before = mvp.matvec_count();
    let probes = probe_apply(mvp, s)?;
    let b_hat = reconstruct(&probes, spec)?;
    Ok(BamramReport {
        b_hat,
        s,
        matvecs_used: mvp.matvec_count() - before,
        probes,
    })
}

/// Recover `B` from matvecs with `Bᵀ` only: rows of `Bᵀ I_n^{(s)}` give the
/// columns of `B`. `spec` describes `B`.
pub fn bamram_recover_transpose(mvp_transpose: &LinearOperator, spec: &BandSpec) -> Result<BamramReport> {
    let flipped = match *spec {
        BandSpec::ExactBanded { k1, k2 } => BandSpec::ExactBanded { k1: k2, k2: k1 },
        BandSpec::SymmetricDecay { s0 } => BandSpec::SymmetricDecay { s0 },
        BandSpec::AsymmetricDecay { b1, b2 } => BandSpec::AsymmetricDecay { b1: b2, b2: b1 },
    };
    let mut rep = bamram_recover(mvp_transpose, &flipped)?;
    rep.b_hat = rep.b_hat.transpose();
    Ok(rep)
}

/// `‖B̂X − BX‖₂ / ‖BX‖₂` on `n_probes` fresh Gaussian probes.
pub fn bamram_error_estimate(
    b_hat: &BandedMatrix,
    mvp: &LinearOperator,
    n_probes: usize,
    seed: u64,
) -> Result<ErrorEstimate> {
    probe_error_estimate(b_hat, mvp, n_probes, seed)
}

/// Outcome of [`bamram_adaptive`].
#[derive(Debug, Clone)]
pub struct AdaptiveReport {
    pub report: BamramReport,
    pub s0: usize,
    pub estimate: ErrorEstimate,
    /// All matvecs spent, including discarded rounds and estimator probes.
    pub total_matvecs: usize,
}

/// Double `s0` from `s0_start` until the error estimate falls below `tol` or
/// `2 s0 + 1` would exceed `n`. A heuristic for when the decay constants are
/// unknown.
pub fn bamram_adaptive(mvp: &LinearOperator, s0_start: usize, tol: f64, seed: u64) -> Result<AdaptiveReport> {
    let n = mvp.dim();
    let before = mvp.matvec_count();
    let mut s0 = s0_start.max(1).min((n - 1) / 2);
    loop {
        let spec = BandSpec::SymmetricDecay { s0 };
        let report = bamram_recover(mvp, &spec)?;
        let estimate = bamram_error_estimate(&report.b_hat, mvp, 5, seed.wrapping_add(s0 as u64))?;
        let next = 2 * s0;
        if estimate.delta <= tol || 2 * next + 1 > n {
            return Ok(AdaptiveReport {
                report,
                s0,
                estimate,
                total_matvecs: mvp.matvec_count() - before,
            });
        }
        s0 = next;
    }
}
