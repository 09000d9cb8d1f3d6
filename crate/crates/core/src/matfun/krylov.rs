use nalgebra::{DMatrix, DVector};

use super::MatFun;
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm2, symmetric_eigen, LinearOperator};

/// Orthonormal Krylov basis `V` (n×m) with projection `H = VᵀAV` (m×m).
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    pub v: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub beta: f64,
    /// Norm of the residual direction after the last step, `h_{m+1,m}`.
    pub next_beta: f64,
    /// True when the space became invariant before the requested steps.
    pub breakdown: bool,
}

impl KrylovBasis {
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrylovMode {
    Lanczos,
    Arnoldi,
    /// Lanczos when the operator reports symmetry, Arnoldi otherwise.
    Auto,
}

const BREAKDOWN_TOL: f64 = 1e-12;

// Two passes of classical Gram-Schmidt against the first `j` columns; the
// coefficients are accumulated into `coef`.
fn cgs2(v: &DMatrix<f64>, j: usize, w: &mut [f64], coef: &mut [f64]) {
    for _ in 0..2 {
        for (i, c) in coef.iter_mut().enumerate().take(j) {
            let h = dot(v.column(i).as_slice(), w);
            *c += h;
            for (wk, vk) in w.iter_mut().zip(v.column(i).iter()) {
                *wk -= h * vk;
            }
        }
    }
}

fn build(op: &LinearOperator, b: &[f64], m: usize, symmetric: bool) -> Result<KrylovBasis> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    if m == 0 {
        return Err(invalid("Krylov steps must be at least 1"));
    }
    let beta = norm2(b);
    if beta == 0.0 {
        return Err(Error::ZeroVector);
    }
    let m = m.min(n);
    let mut v = DMatrix::zeros(n, m);
    let mut h = DMatrix::zeros(m, m);
    v.column_mut(0).copy_from_slice(&b.iter().map(|x| x / beta).collect::<Vec<_>>());
    let mut w = vec![0.0; n];
    let mut coef = vec![0.0; m];
    let mut scale = 0.0f64;
    let mut next_beta = 0.0;
    let mut steps = m;
    for j in 0..m {
        op.apply_into(v.column(j).as_slice(), &mut w)?;
        coef.fill(0.0);
        cgs2(&v, j + 1, &mut w, &mut coef);
        if symmetric {
            h[(j, j)] = coef[j];
            if j > 0 {
                h[(j, j - 1)] = h[(j - 1, j)];
            }
        } else {
            for i in 0..=j {
                h[(i, j)] = coef[i];
            }
        }
        let nb = norm2(&w);
        scale = scale.max(coef.iter().take(j + 1).fold(0.0f64, |a, c| a.max(c.abs()))).max(nb);
        next_beta = nb;
        if nb <= BREAKDOWN_TOL * scale || nb == 0.0 {
            steps = j + 1;
            break;
        }
        if j + 1 < m {
            h[(j + 1, j)] = nb;
            if symmetric {
                h[(j, j + 1)] = nb;
            }
            for (dst, wk) in v.column_mut(j + 1).iter_mut().zip(&w) {
                *dst = wk / nb;
            }
        }
    }
    let breakdown = steps < m || (next_beta <= BREAKDOWN_TOL * scale);
    Ok(KrylovBasis {
        v: v.columns(0, steps).into_owned(),
        h: h.view((0, 0), (steps, steps)).into_owned(),
        beta,
        next_beta,
        breakdown,
    })
}

/// Lanczos with full reorthogonalization; `H` is symmetric tridiagonal.
/// `m` is clamped to `n`.
pub fn lanczos(op: &LinearOperator, b: &[f64], m: usize) -> Result<KrylovBasis> {
    build(op, b, m, true)
}

/// Arnoldi with full reorthogonalization; `H` is upper Hessenberg.
pub fn arnoldi(op: &LinearOperator, b: &[f64], m: usize) -> Result<KrylovBasis> {
    build(op, b, m, false)
}

/// `β V f(H) e₁` after `m` steps, choosing Lanczos or Arnoldi from the
/// operator's symmetry flag.
pub fn krylov_apply(op: &LinearOperator, b: &[f64], f: MatFun, m: usize) -> Result<Vec<f64>> {
    krylov_apply_with(op, b, f, m, KrylovMode::Auto)
}

pub fn krylov_apply_with(op: &LinearOperator, b: &[f64], f: MatFun, m: usize, mode: KrylovMode) -> Result<Vec<f64>> {
    let symmetric = match mode {
        KrylovMode::Lanczos => true,
        KrylovMode::Arnoldi => false,
        KrylovMode::Auto => op.is_symmetric(),
    };
    let basis = build(op, b, m, symmetric)?;
    let k = basis.dim();
    let fe1: DVector<f64> = if symmetric {
        let eig = symmetric_eigen(&basis.h);
        let q = &eig.eigenvectors;
        let mut coeffs = DVector::zeros(k);
        for (j, &l) in eig.eigenvalues.iter().enumerate() {
            coeffs[j] = f.eval(l)? * q[(0, j)];
        }
        q * coeffs
    } else if f == MatFun::Exp {
        basis.h.exp().column(0).into_owned()
    } else {
        return Err(invalid(format!("{} needs a symmetric operator", f.name())));
    };
    let y = &basis.v * fe1 * basis.beta;
    Ok(y.as_slice().to_vec())
}
