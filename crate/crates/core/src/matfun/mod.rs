//! Actions `b ↦ f(A) b` of matrix functions.
//!
//! Entire functions go through a polynomial Krylov method. `sqrt` and `log`
//! (and their shifted variants) can also use a contour integral whose
//! quadrature nodes come from a conformal map of an annulus, which needs an
//! interval containing the spectrum.

mod contour;
mod dense;
mod elliptic;
mod krylov;
mod shifted;
mod spectrum;

use std::sync::Arc;

pub use contour::{contour_apply, ContourPlan};
pub use dense::dense_matfun;
pub use elliptic::{ellip_k, sncndn, sncndn_complex};
pub use krylov::{arnoldi, krylov_apply, krylov_apply_with, lanczos, KrylovBasis, KrylovMode};
pub use shifted::{cocg, BandedLu, COCG_MAX_ITERS, COCG_TOL};
pub use spectrum::{estimate_spectrum_interval, SpectrumEstimate};

use crate::error::{invalid, Error, Result};
use crate::linalg::LinearOperator;

/// Scalar functions with a matrix counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatFun {
    Exp,
    Sqrt,
    Log,
    /// `√(1+x)`
    Sqrt1p,
    /// `log(1+x)`
    Log1p,
}

impl MatFun {
    pub fn name(self) -> &'static str {
        match self {
            MatFun::Exp => "exp",
            MatFun::Sqrt => "sqrt",
            MatFun::Log => "log",
            MatFun::Sqrt1p => "sqrt1p",
            MatFun::Log1p => "log1p",
        }
    }

    /// Evaluate at a real point, rejecting points outside the real domain.
    pub fn eval(self, x: f64) -> Result<f64> {
        let bad = match self {
            MatFun::Exp => false,
            MatFun::Sqrt => x < 0.0,
            MatFun::Log => x <= 0.0,
            MatFun::Sqrt1p => x < -1.0,
            MatFun::Log1p => x <= -1.0,
        };
        if bad || x.is_nan() {
            return Err(Error::Domain { func: self.name(), value: x });
        }
        Ok(match self {
            MatFun::Exp => x.exp(),
            MatFun::Sqrt => x.sqrt(),
            MatFun::Log => x.ln(),
            MatFun::Sqrt1p => (1.0 + x).sqrt(),
            MatFun::Log1p => x.ln_1p(),
        })
    }

    /// For the shifted variants, the unshifted function applied to `I + A`.
    pub fn unshifted(self) -> (MatFun, f64) {
        match self {
            MatFun::Sqrt1p => (MatFun::Sqrt, 1.0),
            MatFun::Log1p => (MatFun::Log, 1.0),
            f => (f, 0.0),
        }
    }
}

impl std::str::FromStr for MatFun {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exp" => MatFun::Exp,
            "sqrt" => MatFun::Sqrt,
            "log" => MatFun::Log,
            "sqrt1p" => MatFun::Sqrt1p,
            "log1p" => MatFun::Log1p,
            _ => return Err(invalid(format!("unknown function {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    PolyKrylov { m: usize },
    Contour { n_points: usize },
}

/// Which function to apply and how.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatFunSpec {
    pub f: MatFun,
    pub method: Method,
    /// Interval `[low, high]` containing the spectrum of the operator the
    /// contour integral is taken over (`I + A` for the shifted variants).
    /// Estimated by Lanczos when absent.
    pub interval: Option<(f64, f64)>,
}

/// Lanczos steps used when the contour interval has to be estimated.
pub const SPECTRUM_PROBE_STEPS: usize = 150;

impl MatFunSpec {
    pub fn krylov(f: MatFun, m: usize) -> Self {
        Self { f, method: Method::PolyKrylov { m }, interval: None }
    }

    pub fn contour(f: MatFun, n_points: usize) -> Self {
        Self { f, method: Method::Contour { n_points }, interval: None }
    }

    pub fn with_interval(mut self, low: f64, high: f64) -> Self {
        self.interval = Some((low, high));
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::PolyKrylov { m: 0 } => Err(invalid("Krylov steps must be at least 1")),
            Method::Contour { .. } if self.f == MatFun::Exp => Err(invalid("contour integration does not support exp")),
            Method::Contour { n_points: 0 } => Err(invalid("contour needs at least one point")),
            _ => match self.interval {
                Some((lo, hi)) if !(lo > 0.0 && lo <= hi && hi.is_finite()) => {
                    Err(invalid(format!("invalid spectrum interval [{lo}, {hi}]")))
                }
                _ => Ok(()),
            },
        }
    }
}

/// `f(A)` as a black-box operator.
///
/// `outer` counts applications of `f(A)`; `inner` is the operator the method
/// actually queries (`A`, or `I + A` for contour on shifted functions) and
/// carries the inner matvec count.
#[derive(Debug)]
pub struct MatFunOperator {
    pub outer: LinearOperator,
    pub inner: Arc<LinearOperator>,
}

impl MatFunOperator {
    pub fn outer_matvecs(&self) -> usize {
        self.outer.matvec_count()
    }

    pub fn inner_matvecs(&self) -> usize {
        self.inner.matvec_count()
    }
}

/// Wrap `f(A)` so the recovery algorithms can query it like any matrix.
pub fn matfun_operator(a: Arc<LinearOperator>, spec: MatFunSpec) -> Result<MatFunOperator> {
    spec.validate()?;
    let n = a.dim();
    let symmetric = a.is_symmetric();
    match spec.method {
        Method::PolyKrylov { m } => {
            let f = spec.f;
            let inner = Arc::clone(&a);
            let outer = LinearOperator::try_new(n, symmetric, move |x, y| {
                if x.iter().all(|&v| v == 0.0) {
                    y.fill(0.0);
                    return Ok(());
                }
                y.copy_from_slice(&krylov_apply(&inner, x, f, m)?);
                Ok(())
            });
            Ok(MatFunOperator { outer, inner: a })
        }
        Method::Contour { n_points } => {
            let (g, shift) = spec.f.unshifted();
            let inner = if shift == 0.0 {
                a
            } else {
                Arc::new(shift_operator(a, shift)?)
            };
            let interval = match spec.interval {
                Some(iv) => iv,
                None => {
                    let est = estimate_spectrum_interval(&inner, SPECTRUM_PROBE_STEPS.min(n), 0)?;
                    if est.low <= 0.0 {
                        return Err(Error::Domain { func: g.name(), value: est.ritz_min });
                    }
                    (est.low, est.high)
                }
            };
            let plan = Arc::new(ContourPlan::new(Arc::clone(&inner), g, n_points, interval)?);
            let outer = LinearOperator::try_new(n, symmetric, move |x, y| {
                y.copy_from_slice(&plan.apply(x)?);
                Ok(())
            });
            Ok(MatFunOperator { outer, inner })
        }
    }
}

/// `x ↦ x·shift + A x`, kept explicit when `A` is.
fn shift_operator(a: Arc<LinearOperator>, shift: f64) -> Result<LinearOperator> {
    if let Some(m) = a.explicit() {
        return Ok(LinearOperator::from_sparse(m.shifted(shift)?));
    }
    let symmetric = a.is_symmetric();
    Ok(LinearOperator::try_new(a.dim(), symmetric, move |x, y| {
        a.apply_into(x, y)?;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += shift * xi;
        }
        Ok(())
    }))
}
