use crate::error::{invalid, Result};

/// Exponential off-diagonal decay `|B_ij| < C λ^{|i−j|}`, with separate
/// rates above (`lambda_upper`) and below (`lambda_lower`) the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayProfile {
    pub c: f64,
    pub lambda_upper: f64,
    pub lambda_lower: f64,
}

impl DecayProfile {
    pub fn new(c: f64, lambda_upper: f64, lambda_lower: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("decay constant C = {c} must be positive")));
        }
        for l in [lambda_upper, lambda_lower] {
            if !(l > 0.0 && l < 1.0) {
                return Err(invalid(format!("decay rate {l} must lie in (0, 1)")));
            }
        }
        Ok(Self {
            c,
            lambda_upper,
            lambda_lower,
        })
    }

    pub fn symmetric(c: f64, lambda: f64) -> Result<Self> {
        Self::new(c, lambda, lambda)
    }

    /// The slower of the two rates.
    pub fn lambda(&self) -> f64 {
        self.lambda_upper.max(self.lambda_lower)
    }

    /// Bound on `|B_ij|`.
    pub fn entry_bound(&self, i: usize, j: usize) -> f64 {
        if j >= i {
            self.c * self.lambda_upper.powi((j - i) as i32)
        } else {
            self.c * self.lambda_lower.powi((i - j) as i32)
        }
    }

    /// Spectral-norm error bound `4Cλ^{s0+1}/(1−λ)` for probing with
    /// `s = 2 s0 + 1`.
    pub fn two_norm_bound(&self, s0: usize) -> f64 {
        let l = self.lambda();
        4.0 * self.c * l.powi(s0 as i32 + 1) / (1.0 - l)
    }

    /// Entrywise error bound `2Cλ^{s0+1}/(1−λ^s)` with `s = 2 s0 + 1`.
    pub fn max_norm_bound(&self, s0: usize) -> f64 {
        let l = self.lambda();
        let s = 2 * s0 + 1;
        2.0 * self.c * l.powi(s0 as i32 + 1) / (1.0 - l.powi(s as i32))
    }

    /// Smallest half-width `s0 ≥ (ln 36C − ln ε)/ln(1/λ)` guaranteeing
    /// `‖B̂ − B‖₂ ≤ ε` (valid for `λ ≤ 0.9`).
    pub fn s0_for_accuracy(&self, eps: f64) -> usize {
        let l = self.lambda();
        let v = ((36.0 * self.c).ln() - eps.ln()) / (1.0 / l).ln();
        v.ceil().max(0.0) as usize
    }

    /// `(⌊c/ln(1/λ_upper)⌋, ⌊c/ln(1/λ_lower)⌋)`: the upper and lower
    /// bandwidths used for unequal decay rates.
    pub fn half_widths(&self, c: f64) -> (usize, usize) {
        let w = |l: f64| (c / (1.0 / l).ln()).floor().max(0.0) as usize;
        (w(self.lambda_upper), w(self.lambda_lower))
    }
}

/// Row-recovery error bound `9 C_B (n + n^{3/2}/√k) λ_B^{d+1}` for a matrix whose
/// entries decay as `C_B λ_B^{d(i,j)}` in a graph distance `d`, where `k` is the
/// largest number of entries within distance `d` of any row.
pub fn sparse_decay_bound(c_b: f64, lambda_b: f64, n: usize, k: usize, d: usize) -> f64 {
    let n = n as f64;
    9.0 * c_b * (n + n.powf(1.5) / (k as f64).sqrt()) * lambda_b.powi(d as i32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DecayProfile::new(1.0, 0.5, 0.5).is_ok());
        assert!(DecayProfile::new(0.0, 0.5, 0.5).is_err());
        assert!(DecayProfile::new(1.0, 1.0, 0.5).is_err());
        assert!(DecayProfile::new(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn bounds() {
        let d = DecayProfile::symmetric(1.0, 0.5).unwrap();
        assert_eq!(d.two_norm_bound(10), 2f64.powi(-8));
        assert_eq!(d.entry_bound(3, 1), 0.25);
        // (ln 36 + 8 ln 10) / ln 2 = 31.74
        assert_eq!(d.s0_for_accuracy(1e-8), 32);
        let a = DecayProfile::new(1.0, 0.1, 0.9).unwrap();
        assert_eq!(a.half_widths(2.0), (0, 18));
    }
}
