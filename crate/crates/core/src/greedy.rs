//! Normalized iterative hard thresholding for `min ‖z‖₀ s.t. y = Yᵀz`.

use std::cmp::Ordering;

use crate::error::{invalid, Error, Result};
use crate::linalg::norm2;
use crate::sensing::SensingOperator;

/// Indices of the `k` largest-magnitude entries, ascending. Ties keep the
/// lower index.
pub(crate) fn top_k(v: &[f64], k: usize) -> Vec<usize> {
    top_k_of(0..v.len(), v, k)
}

const SMALL_K: usize = 32;

/// [`top_k`] restricted to `indices`, which must be ascending.
fn top_k_of(indices: impl Iterator<Item = usize>, v: &[f64], k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    let mut best: Vec<(f64, usize)>;
    if k <= SMALL_K {
        // Single pass keeping the best `k` so far by decreasing magnitude. In
        // index order a tie never displaces an earlier index.
        best = Vec::with_capacity(k + 1);
        for i in indices {
            let a = v[i].abs();
            if best.len() == k {
                let worst = best[k - 1].0;
                // `<=` rejects cheaply; NaN falls through to the total order
                if a <= worst || a.total_cmp(&worst) != Ordering::Greater {
                    continue;
                }
            }
            let pos = best.partition_point(|(b, _)| b.total_cmp(&a) != Ordering::Less);
            best.insert(pos, (a, i));
            best.truncate(k);
        }
    } else {
        best = indices.map(|i| (v[i].abs(), i)).collect();
        if k < best.len() {
            best.select_nth_unstable_by(k - 1, |x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            best.truncate(k);
        }
    }
    let mut idx: Vec<usize> = best.into_iter().map(|(_, i)| i).collect();
    idx.sort_unstable();
    idx
}

/// Indices that can enter `top_k(v + μg, k)` for any `μ > 0` when `v`
/// vanishes off the ascending `support`: the support itself plus every
/// off-support index whose `|g_i|` is within rounding of the `k`-th largest
/// off-support magnitude. Off the support `|v_i + μg_i| = μ|g_i|`, so the
/// ranking there does not depend on `μ` beyond rounding.
fn thresholding_candidates(g: &[f64], support: &[usize], k: usize) -> Vec<usize> {
    let off = || {
        let mut next = support.iter().peekable();
        (0..g.len()).filter(move |&i| {
            if next.peek() == Some(&&i) {
                next.next();
                false
            } else {
                true
            }
        })
    };
    let leaders = top_k_of(off(), g, k);
    let t = leaders.iter().map(|&i| g[i].abs()).fold(f64::INFINITY, f64::min);
    let cut = t * (1.0 - 4.0 * f64::EPSILON);
    let mut out = Vec::with_capacity(support.len() + leaders.len());
    let mut sup = support.iter().peekable();
    for i in off().filter(|&i| !(g[i].abs() < cut)) {
        while let Some(&&j) = sup.peek() {
            if j < i {
                out.push(j);
                sup.next();
            } else {
                break;
            }
        }
        out.push(i);
    }
    out.extend(sup);
    out
}

/// `H_k`: zero all but the `k` largest-magnitude entries.
pub fn hard_threshold(v: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > v.len() {
        return Err(invalid(format!("k = {k} must lie in 1..={}", v.len())));
    }
    let mut out = vec![0.0; v.len()];
    for i in top_k(v, k) {
        out[i] = v[i];
    }
    Ok(out)
}

/// Best `k`-term approximation `v^k`; the same operator as [`hard_threshold`].
pub fn best_k_term(v: &[f64], k: usize) -> Result<Vec<f64>> {
    hard_threshold(v, k)
}

/// `ε_k = ‖v − v^k‖₂ + k^{-1/2} ‖v − v^k‖₁`.
pub fn epsilon_k(v: &[f64], k: usize) -> Result<f64> {
    let vk = best_k_term(v, k)?;
    let (mut l2, mut l1) = (0.0, 0.0);
    for (a, b) in v.iter().zip(&vk) {
        let d = a - b;
        l2 += d * d;
        l1 += d.abs();
    }
    Ok(l2.sqrt() + l1 / (k as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NihtConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once `‖y − Yᵀv‖ ≤ residual_tol·‖y‖`.
    pub residual_tol: f64,
    /// Stop once `‖v⁺ − v‖ ≤ stagnation_tol·‖v‖`.
    pub stagnation_tol: f64,
    pub backtrack_shrink: f64,
    pub backtrack_c: f64,
}

impl NihtConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iters: 100,
            residual_tol: 1e-10,
            stagnation_tol: 1e-14,
            backtrack_shrink: 2.0,
            backtrack_c: 0.01,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    fn validate(&self, op: &SensingOperator) -> Result<()> {
        if self.k == 0 || self.k > op.s() {
            return Err(invalid(format!("need 1 <= k <= s, got k = {}, s = {}", self.k, op.s())));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be positive"));
        }
        if !(self.backtrack_shrink > 1.0) || !(self.backtrack_c > 0.0 && self.backtrack_c < 1.0) {
            return Err(invalid("backtracking needs shrink > 1 and 0 < c < 1"));
        }
        if !(self.residual_tol >= 0.0 && self.stagnation_tol >= 0.0) {
            return Err(invalid("tolerances must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsSolution {
    pub v_hat: Vec<f64>,
    pub iterations: usize,
    /// `‖y − Yᵀ v_hat‖₂`.
    pub residual_norm: f64,
    pub converged: bool,
}

impl CsSolution {
    /// Nonzero entries of `v_hat` as `(index, value)`.
    pub fn nonzeros(&self) -> Vec<(usize, f64)> {
        self.v_hat
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect()
    }
}

/// A compressed-sensing solver recovering a `k`-sparse `v` from `y = Yᵀv`.
pub trait CsSolver: Sync {
    fn sparsity(&self) -> usize;
    fn solve(&self, op: &SensingOperator, y: &[f64]) -> Result<CsSolution>;
}

impl CsSolver for NihtConfig {
    fn sparsity(&self) -> usize {
        self.k
    }

    fn solve(&self, op: &SensingOperator, y: &[f64]) -> Result<CsSolution> {
        niht_solve(op, y, self)
    }
}

// Cap on step-size halvings within one iteration.
const MAX_BACKTRACKS: usize = 64;

/// One NIHT solve, advanced an iteration at a time given the gradient
/// `g = Y r` of the current residual.
struct Niht<'a> {
    cfg: &'a NihtConfig,
    y: &'a [f64],
    target: f64,
    v: Vec<f64>,
    support: Vec<usize>,
    r: Vec<f64>,
    // best iterate as (support, values, residual)
    best: (Vec<usize>, Vec<f64>, f64),
    w: Vec<f64>,
    ms: Vec<f64>,
    iterations: usize,
    converged: bool,
    done: bool,
}

impl<'a> Niht<'a> {
    fn start(op: &SensingOperator, y: &'a [f64], cfg: &'a NihtConfig) -> Result<Self> {
        if y.len() != op.s() {
            return Err(Error::DimensionMismatch {
                expected: op.s(),
                found: y.len(),
            });
        }
        let y_norm = norm2(y);
        Ok(Self {
            cfg,
            y,
            target: cfg.residual_tol * y_norm,
            v: vec![0.0; op.n()],
            support: Vec::new(),
            r: y.to_vec(),
            best: (Vec::new(), Vec::new(), y_norm),
            w: vec![0.0; op.n()],
            ms: vec![0.0; op.s()],
            iterations: 0,
            converged: y_norm == 0.0,
            done: y_norm == 0.0 || cfg.max_iters == 0,
        })
    }

    fn step(&mut self, op: &SensingOperator, g: &[f64]) {
        let (k, cfg) = (self.cfg.k, self.cfg);
        self.iterations += 1;
        let gamma = if self.support.is_empty() { top_k(g, k) } else { self.support.clone() };

        let vals: Vec<f64> = gamma.iter().map(|&i| g[i]).collect();
        let num: f64 = vals.iter().map(|x| x * x).sum();
        op.adjoint_sparse_into(&gamma, &vals, &mut self.ms);
        let den: f64 = self.ms.iter().map(|x| x * x).sum();
        if den == 0.0 || num == 0.0 {
            // The gradient vanishes on the support or Yᵀ annihilates it.
            self.done = true;
            return;
        }
        let mut mu = num / den;

        // Only these entries of `w` can be selected, whatever the step.
        let cands = thresholding_candidates(g, &self.support, k);
        let mut new_support;
        let mut backtracks = 0;
        loop {
            for &i in &cands {
                self.w[i] = self.v[i] + mu * g[i];
            }
            new_support = top_k_of(cands.iter().copied(), &self.w, k);
            if new_support == gamma || backtracks == MAX_BACKTRACKS {
                break;
            }
            let (diff_idx, diff_vals) = difference(&self.v, &self.support, &self.w, &new_support);
            let dd: f64 = diff_vals.iter().map(|x| x * x).sum();
            op.adjoint_sparse_into(&diff_idx, &diff_vals, &mut self.ms);
            let yd: f64 = self.ms.iter().map(|x| x * x).sum();
            let omega = (1.0 - cfg.backtrack_c) * dd / yd;
            if yd == 0.0 || mu <= omega {
                break;
            }
            mu /= cfg.backtrack_shrink;
            backtracks += 1;
        }

        let (_, diff_vals) = difference(&self.v, &self.support, &self.w, &new_support);
        let step = norm2(&diff_vals);
        for &i in &self.support {
            self.v[i] = 0.0;
        }
        for &i in &new_support {
            self.v[i] = self.w[i];
        }
        self.support = new_support;
        assert!(self.v.iter().filter(|x| **x != 0.0).count() <= k);

        let sv: Vec<f64> = self.support.iter().map(|&i| self.v[i]).collect();
        op.adjoint_sparse_into(&self.support, &sv, &mut self.ms);
        for ((ri, yi), mi) in self.r.iter_mut().zip(self.y).zip(&self.ms) {
            *ri = yi - mi;
        }
        let r_norm = norm2(&self.r);
        if r_norm < self.best.2 {
            self.best = (self.support.clone(), sv, r_norm);
        }
        if r_norm <= self.target || step <= cfg.stagnation_tol * norm2(&self.v) {
            self.converged = true;
            self.done = true;
        } else if self.iterations >= cfg.max_iters {
            self.done = true;
        }
    }

    fn finish(mut self, op: &SensingOperator) -> CsSolution {
        // Report the exact residual of the returned iterate.
        let (support, sv, _) = std::mem::take(&mut self.best);
        let mut v_hat = vec![0.0; self.v.len()];
        for (&i, &x) in support.iter().zip(&sv) {
            v_hat[i] = x;
        }
        op.adjoint_sparse_into(&support, &sv, &mut self.ms);
        let residual_norm = self.ms.iter().zip(self.y).map(|(m, yi)| (yi - m).powi(2)).sum::<f64>().sqrt();
        CsSolution {
            v_hat,
            iterations: self.iterations,
            residual_norm,
            converged: self.converged || residual_norm <= self.target,
        }
    }
}

pub fn niht_solve(op: &SensingOperator, y: &[f64], cfg: &NihtConfig) -> Result<CsSolution> {
    cfg.validate(op)?;
    let mut st = Niht::start(op, y, cfg)?;
    let mut g = vec![0.0; op.n()];
    while !st.done {
        op.forward_into(&st.r, &mut g);
        st.step(op, &g);
    }
    Ok(st.finish(op))
}

/// `H(w) − v` over the union of both supports, as sparse `(index, value)` lists.
fn difference(v: &[f64], old: &[usize], w: &[f64], new: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let mut idx = Vec::with_capacity(old.len() + new.len());
    let mut vals = Vec::with_capacity(old.len() + new.len());
    let (mut a, mut b) = (0, 0);
    while a < old.len() || b < new.len() {
        let take_old = b == new.len() || (a < old.len() && old[a] <= new[b]);
        let take_new = a == old.len() || (b < new.len() && new[b] <= old[a]);
        let i = if take_old { old[a] } else { new[b] };
        let nv = if take_new { w[i] } else { 0.0 };
        let ov = if take_old { v[i] } else { 0.0 };
        idx.push(i);
        vals.push(nv - ov);
        if take_old {
            a += 1;
        }
        if take_new {
            b += 1;
        }
    }
    (idx, vals)
}
