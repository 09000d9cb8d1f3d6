use nalgebra::DMatrix;

use super::MatFun;
use crate::error::{invalid, Result};
use crate::linalg::symmetric_eigen;

/// Dense `f(A)`: eigendecomposition for symmetric `A`, scaling and squaring
/// Padé for `exp` of a nonsymmetric `A`.
pub fn dense_matfun(a: &DMatrix<f64>, f: MatFun) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(invalid("matrix function of a non-square matrix"));
    }
    if a.relative_eq(&a.transpose(), 0.0, 0.0) {
        let eig = symmetric_eigen(a);
        let fl = eig.eigenvalues.iter().map(|&l| f.eval(l)).collect::<Result<Vec<_>>>()?;
        let q = &eig.eigenvectors;
        let mut qf = q.clone();
        for (j, fj) in fl.iter().enumerate() {
            qf.column_mut(j).scale_mut(*fj);
        }
        Ok(qf * q.transpose())
    } else if f == MatFun::Exp {
        Ok(a.exp())
    } else {
        Err(invalid(format!("{} is only supported for symmetric matrices", f.name())))
    }
}
