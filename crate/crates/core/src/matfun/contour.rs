use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::elliptic::{ellip_k, sncndn, sncndn_complex};
use super::shifted::{cocg, BandedLu, COCG_MAX_ITERS, COCG_TOL};
use super::MatFun;
use crate::error::{invalid, Error, Result};
use crate::linalg::LinearOperator;

/// Above this `n·kl·(kl+ku)` the explicit path switches from banded LU to
/// COCG.
const LU_WORK_LIMIT: f64 = 5e7;

// Intervals narrower than this ratio are widened so the elliptic modulus
// stays away from zero.
const MIN_RATIO: f64 = 1.1;

/// Quadrature nodes and weights for `f(A) b ≈ Im Σ cⱼ (zⱼI − A)⁻¹ b`, plus
/// the resolvent solvers for each node.
///
/// With `z = w²` the branch cut of `sqrt`/`log` maps to the imaginary axis
/// of the `w`-plane, and `[√m, √M]` is enclosed by the image of a line under
/// `w = √(ab)(1/k + sn)/(1/k − sn)`. The trapezoid rule in the parameter
/// converges geometrically at a rate set by `M/m`.
pub struct ContourPlan {
    op: Arc<LinearOperator>,
    shifts: Vec<Complex64>,
    weights: Vec<Complex64>,
    factors: Option<Vec<BandedLu>>,
}

impl std::fmt::Debug for ContourPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContourPlan")
            .field("points", &self.shifts.len())
            .field("direct", &self.factors.is_some())
            .finish()
    }
}

impl ContourPlan {
    /// `f` must be `Sqrt` or `Log`, and `[low, high]` must contain the
    /// spectrum of the symmetric positive definite operator `op`.
    pub fn new(op: Arc<LinearOperator>, f: MatFun, n_points: usize, interval: (f64, f64)) -> Result<Self> {
        if !matches!(f, MatFun::Sqrt | MatFun::Log) {
            return Err(invalid(format!("contour integration supports sqrt and log, not {}", f.name())));
        }
        if n_points == 0 {
            return Err(invalid("contour needs at least one point"));
        }
        if !op.is_symmetric() {
            return Err(invalid("contour integration needs a symmetric operator"));
        }
        let (mut lo, mut hi) = interval;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(invalid(format!("invalid spectrum interval [{lo}, {hi}]")));
        }
        if hi / lo < MIN_RATIO {
            let mid = (lo * hi).sqrt();
            let r = MIN_RATIO.sqrt();
            lo = mid / r;
            hi = mid * r;
        }

        let q = (hi / lo).powf(0.25);
        let k = (q - 1.0) / (q + 1.0);
        let big_k = ellip_k(k);
        let big_kp = ellip_k((1.0 - k * k).sqrt());
        let c = (lo * hi).powf(0.25);
        let h = 2.0 * big_k / n_points as f64;
        let inv_k = 1.0 / k;

        let mut shifts = Vec::with_capacity(n_points);
        let mut weights = Vec::with_capacity(n_points);
        for j in 0..n_points {
            let t = Complex64::new(-big_k + (j as f64 + 0.5) * h, 0.5 * big_kp);
            let (u, cn, dn) = if t.im == 0.0 {
                let (s, c, d) = sncndn(t.re, k);
                (Complex64::from(s), Complex64::from(c), Complex64::from(d))
            } else {
                sncndn_complex(t, k)
            };
            let w = c * (inv_k + u) / (inv_k - u);
            let dw = c * 2.0 * inv_k * cn * dn / ((inv_k - u) * (inv_k - u));
            let g = match f {
                MatFun::Sqrt => 2.0 * w * w,
                _ => 4.0 * w * w.ln(),
            };
            shifts.push(w * w);
            weights.push(-h / PI * g * dw);
        }

        let factors = match op.explicit() {
            Some(m) => {
                let (ku, kl) = m.bandwidths();
                let work = m.n_rows() as f64 * kl as f64 * (kl + ku) as f64;
                if work <= LU_WORK_LIMIT {
                    Some(crate::par::try_map_indexed(n_points, |j| BandedLu::factor(m, shifts[j]))?)
                } else {
                    None
                }
            }
            None => None,
        };
        Ok(Self { op, shifts, weights, factors })
    }

    pub fn shifts(&self) -> &[Complex64] {
        &self.shifts
    }

    /// `f(A) b`; each node costs one shifted solve.
    pub fn apply(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.op.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let parts = crate::par::map_indexed(self.shifts.len(), |j| -> std::result::Result<Vec<f64>, (Complex64, f64, Error)> {
            let x = match &self.factors {
                Some(f) => f[j].solve(b),
                None => match cocg(&self.op, self.shifts[j], b, COCG_TOL, COCG_MAX_ITERS) {
                    Ok((x, _)) => x,
                    Err(Error::SolveFailed { shift, residual }) => {
                        return Err((shift, residual, Error::SolveFailed { shift, residual }))
                    }
                    Err(e) => return Err((self.shifts[j], f64::NAN, e)),
                },
            };
            let wj = self.weights[j];
            Ok(x.iter().map(|xi| (wj * xi).im).collect())
        });

        let mut out = vec![0.0; n];
        let mut worst: Option<(Complex64, f64)> = None;
        for part in parts {
            match part {
                Ok(v) => out.iter_mut().zip(&v).for_each(|(o, p)| *o += p),
                Err((shift, residual, Error::SolveFailed { .. })) => {
                    if worst.is_none_or(|(_, r)| residual > r) {
                        worst = Some((shift, residual));
                    }
                }
                Err((_, _, e)) => return Err(e),
            }
        }
        match worst {
            Some((shift, residual)) => Err(Error::SolveFailed { shift, residual }),
            None => Ok(out),
        }
    }
}

/// One-shot contour evaluation of `f(A) b` for `f ∈ {sqrt, log}`.
pub fn contour_apply(op: Arc<LinearOperator>, b: &[f64], f: MatFun, n_points: usize, interval: (f64, f64)) -> Result<Vec<f64>> {
    ContourPlan::new(op, f, n_points, interval)?.apply(b)
}
