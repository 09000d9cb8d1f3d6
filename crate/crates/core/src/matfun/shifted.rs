//! Solvers for shifted systems `(zI − A) x = b` with complex `z` and real `A`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, SparseMatrix};

/// LU factorization of `zI − A` for banded `A`, with partial pivoting.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    // row-major; row r holds columns r−kl ..= r+kl+ku
    ab: Vec<Complex64>,
    piv: Vec<usize>,
}

impl BandedLu {
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn at(&self, r: usize, c: usize) -> usize {
        r * self.width() + c + self.kl - r
    }

    /// Factor `zI − A`; `A` must be square with bandwidths `(ku, kl)`.
    pub fn factor(a: &SparseMatrix, z: Complex64) -> Result<Self> {
        let n = a.n_rows();
        let (ku, kl) = a.bandwidths();
        let mut lu = Self {
            n,
            kl,
            ku,
            ab: vec![Complex64::new(0.0, 0.0); n * (2 * kl + ku + 1)],
            piv: vec![0; n],
        };
        for (r, c, v) in a.iter() {
            let p = lu.at(r, c);
            lu.ab[p] -= v;
        }
        for r in 0..n {
            let p = lu.at(r, r);
            lu.ab[p] += z;
        }

        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.ab[lu.at(k, k)].norm();
            for r in k + 1..=last {
                let m = lu.ab[lu.at(r, k)].norm();
                if m > best {
                    best = m;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(Error::SolveFailed { shift: z, residual: f64::INFINITY });
            }
            lu.piv[k] = p;
            let c_end = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=c_end {
                    let (x, y) = (lu.at(k, c), lu.at(p, c));
                    lu.ab.swap(x, y);
                }
            }
            let pivot = lu.ab[lu.at(k, k)];
            for r in k + 1..=last {
                let rk = lu.at(r, k);
                let l = lu.ab[rk] / pivot;
                lu.ab[rk] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in k + 1..=c_end {
                    let (dst, src) = (lu.at(r, c), lu.at(k, c));
                    let u = lu.ab[src];
                    lu.ab[dst] -= l * u;
                }
            }
        }
        Ok(lu)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            for r in k + 1..=(k + self.kl).min(n - 1) {
                x[r] -= self.ab[self.at(r, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                acc -= self.ab[self.at(k, c)] * x[c];
            }
            x[k] = acc / self.ab[self.at(k, k)];
        }
        x
    }
}

pub const COCG_TOL: f64 = 1e-12;
pub const COCG_MAX_ITERS: usize = 1000;

/// Conjugate orthogonal CG for the complex symmetric `(zI − A) x = b`, with
/// `A` real symmetric and known only through matvecs. Each iteration costs
/// two real matvecs with `A`. Returns the solution and its relative residual.
pub fn cocg(a: &LinearOperator, z: Complex64, b: &[f64], tol: f64, max_iters: usize) -> Result<(Vec<Complex64>, f64)> {
    let n = a.dim();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    if b_norm == 0.0 {
        return Ok((x, 0.0));
    }
    let mut r: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut p = r.clone();
    let mut q = vec![zero; n];
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    let (mut are, mut aim) = (vec![0.0; n], vec![0.0; n]);
    let udot = |u: &[Complex64], v: &[Complex64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<Complex64>();
    let mut rho = udot(&r, &r);
    let mut rel = 1.0;
    for _ in 0..max_iters {
        for i in 0..n {
            re[i] = p[i].re;
            im[i] = p[i].im;
        }
        a.apply_into(&re, &mut are)?;
        a.apply_into(&im, &mut aim)?;
        for i in 0..n {
            q[i] = z * p[i] - Complex64::new(are[i], aim[i]);
        }
        let pq = udot(&p, &q);
        if pq == zero {
            break;
        }
        let alpha = rho / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rel = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / b_norm;
        if rel <= tol {
            return Ok((x, rel));
        }
        let rho_new = udot(&r, &r);
        if rho == zero {
            break;
        }
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::SolveFailed { shift: z, residual: rel })
}
