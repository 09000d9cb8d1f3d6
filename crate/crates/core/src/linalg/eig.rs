use nalgebra::{DMatrix, SymmetricEigen};

/// Symmetric eigendecomposition with refined eigenvectors.
///
/// nalgebra's QR iteration returns accurate eigenvalues but eigenvectors
/// that can be off by ~1e-11. Each refinement pass forms `B = QᵀAQ` and
/// rotates `Q` by the first-order correction `E_ij = B_ij / (λ_j − λ_i)`,
/// skipping pairs too close to separate.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let mut eig = SymmetricEigen::new(a.clone());
    let n = a.nrows();
    let scale = a.amax();
    if n < 2 || scale == 0.0 {
        return eig;
    }
    for _ in 0..3 {
        let b = eig.eigenvectors.transpose() * a * &eig.eigenvectors;
        let mut off = 0.0f64;
        let mut e_max = 0.0f64;
        let mut e = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    continue;
                }
                let bij = 0.5 * (b[(i, j)] + b[(j, i)]);
                off = off.max(bij.abs());
                let gap = b[(j, j)] - b[(i, i)];
                if gap.abs() > 1e3 * bij.abs() && gap.abs() > 1e-14 * scale {
                    e[(i, j)] = bij / gap;
                    e_max = e_max.max((bij / gap).abs());
                }
            }
        }
        for i in 0..n {
            eig.eigenvalues[i] = b[(i, i)];
        }
        if off <= 4.0 * f64::EPSILON * scale {
            break;
        }
        let corr = &eig.eigenvectors * e;
        eig.eigenvectors += corr;
        if e_max < 1e-6 {
            // E is skew, so the loss of orthogonality is O(|E|²)
            continue;
        }
        let qr = eig.eigenvectors.clone().qr();
        let (q, r) = qr.unpack();
        eig.eigenvectors = q;
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                eig.eigenvectors.column_mut(j).neg_mut();
            }
        }
    }
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn reconstruction_is_accurate() {
        for (n, seed) in [(60, 4), (150, 1), (7, 2)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
            let a = (&g + g.transpose()) * 0.5;
            let eig = symmetric_eigen(&a);
            let q = &eig.eigenvectors;
            let recon = q * DMatrix::from_diagonal(&eig.eigenvalues) * q.transpose();
            assert!((recon - &a).amax() < 1e-13 * a.amax() * n as f64, "n={n}");
            assert!((q.transpose() * q - DMatrix::identity(n, n)).amax() < 1e-14 * n as f64);
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        let a = DMatrix::from_diagonal_element(5, 5, 2.0);
        let eig = symmetric_eigen(&a);
        assert!(eig.eigenvalues.iter().all(|&l| l == 2.0));
    }
}
