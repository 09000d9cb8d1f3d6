use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::krylov::lanczos;
use crate::error::{invalid, Result};
use crate::linalg::LinearOperator;

/// Interval `[low, high]` expected to contain the spectrum of a symmetric
/// operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEstimate {
    pub low: f64,
    pub high: f64,
    pub ritz_min: f64,
    pub ritz_max: f64,
    /// Both extremal Ritz pairs have residual at most a tenth of the value.
    pub confident: bool,
    pub steps: usize,
}

const SAFETY: f64 = 0.1;

/// Lanczos from a seeded Gaussian start vector. The extremal Ritz values
/// are pushed outward by a tenth of their magnitude, so a positive spectrum
/// gives `[0.9 θ_min, 1.1 θ_max]`.
pub fn estimate_spectrum_interval(op: &LinearOperator, probe_steps: usize, seed: u64) -> Result<SpectrumEstimate> {
    if !op.is_symmetric() {
        return Err(invalid("spectrum estimation needs a symmetric operator"));
    }
    if probe_steps == 0 {
        return Err(invalid("spectrum estimation needs at least one step"));
    }
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let basis = lanczos(op, &b, probe_steps)?;
    let m = basis.dim();
    let eig = SymmetricEigen::new(basis.h.clone());
    let (mut imin, mut imax) = (0, 0);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l < eig.eigenvalues[imin] {
            imin = i;
        }
        if l > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    let resid = |i: usize| if basis.breakdown { 0.0 } else { basis.next_beta * eig.eigenvectors[(m - 1, i)].abs() };
    let (tmin, tmax) = (eig.eigenvalues[imin], eig.eigenvalues[imax]);
    let confident = resid(imin) <= SAFETY * tmin.abs() && resid(imax) <= SAFETY * tmax.abs();
    Ok(SpectrumEstimate {
        low: tmin - SAFETY * tmin.abs(),
        high: tmax + SAFETY * tmax.abs(),
        ritz_min: tmin,
        ritz_max: tmax,
        confident,
        steps: m,
    })
}
