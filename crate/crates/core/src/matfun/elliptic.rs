//! Complete elliptic integral and Jacobi elliptic functions via the AGM.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// `K(k) = π / (2 AGM(1, √(1−k²)))` for modulus `0 ≤ k < 1`.
pub fn ellip_k(k: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
    for _ in 0..64 {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    FRAC_PI_2 / a
}

/// `(sn, cn, dn)(u | k)` for real `u` and modulus `0 ≤ k ≤ 1`, by descending
/// Landen transformation.
pub fn sncndn(u: f64, k: f64) -> (f64, f64, f64) {
    let m = k * k;
    if m < 1e-300 {
        return (u.sin(), u.cos(), 1.0);
    }
    if 1.0 - m < 1e-300 {
        let sech = 1.0 / u.cosh();
        return (u.tanh(), sech, sech);
    }
    const MAX: usize = 32;
    let mut a = [0.0f64; MAX + 1];
    let mut c = [0.0f64; MAX + 1];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = k;
    let mut n = 0;
    while n < MAX && c[n].abs() > f64::EPSILON * a[n] {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // dn ≥ k' > 0, so the square root loses nothing
    let dn = (1.0 - m * sn * sn).sqrt();
    (sn, cn, dn)
}

/// `(sn, cn, dn)(x + iy | k)` from the real functions at modulus `k` and the
/// complementary modulus `k' = √(1−k²)`.
pub fn sncndn_complex(z: Complex64, k: f64) -> (Complex64, Complex64, Complex64) {
    let kp = (1.0 - k * k).sqrt();
    let (s, c, d) = sncndn(z.re, k);
    let (s1, c1, d1) = sncndn(z.im, kp);
    let delta = c1 * c1 + k * k * s * s * s1 * s1;
    let sn = Complex64::new(s * d1, c * d * s1 * c1) / delta;
    let cn = Complex64::new(c * c1, -s * d * s1 * d1) / delta;
    let dn = Complex64::new(d * c1 * d1, -k * k * s * c * s1) / delta;
    (sn, cn, dn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((ellip_k(0.0) - FRAC_PI_2).abs() < 1e-15);
        // K(1/√2) = Γ(1/4)² / (4√π)
        assert!((ellip_k(0.5f64.sqrt()) - 1.854_074_677_301_372).abs() < 1e-14);
        let k = 0.8;
        let (s, c, d) = sncndn(ellip_k(k), k);
        assert!((s - 1.0).abs() < 1e-14 && c.abs() < 1e-7 && (d - 0.6).abs() < 1e-12, "{s} {c} {d}");
    }

    #[test]
    fn real_identities() {
        for &k in &[0.1, 0.5, 0.9, 0.999] {
            for &u in &[-2.0, -0.3, 0.0, 0.7, 1.9, 5.0] {
                let (s, c, d) = sncndn(u, k);
                assert!((s * s + c * c - 1.0).abs() < 1e-14);
                assert!((d * d + k * k * s * s - 1.0).abs() < 1e-14);
            }
        }
        let (s, _, _) = sncndn(0.3, 1e-320);
        assert_eq!(s, 0.3f64.sin());
    }

    #[test]
    fn complex_identities() {
        for &k in &[0.05, 0.4, 0.93] {
            for &(x, y) in &[(0.3, 0.2), (-1.1, 0.9), (1.5, 1.3)] {
                let z = Complex64::new(x, y);
                let (s, c, d) = sncndn_complex(z, k);
                assert!((s * s + c * c - 1.0).norm() < 1e-13);
                assert!((d * d + k * k * s * s - 1.0).norm() < 1e-13);
            }
        }
        // real axis reduces to the real functions
        let (s, c, d) = sncndn_complex(Complex64::new(0.7, 0.0), 0.6);
        let (rs, rc, rd) = sncndn(0.7, 0.6);
        assert!((s.re - rs).abs() < 1e-15 && (c.re - rc).abs() < 1e-15 && (d.re - rd).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_cn_dn() {
        // d/dz sn = cn dn, checked by central differences off the real axis
        let (k, z, h) = (0.7, Complex64::new(0.4, 0.6), 1e-6);
        let (sp, _, _) = sncndn_complex(z + h, k);
        let (sm, _, _) = sncndn_complex(z - h, k);
        let (_, c, d) = sncndn_complex(z, k);
        assert!(((sp - sm) / (2.0 * h) - c * d).norm() < 1e-8);
    }
}
