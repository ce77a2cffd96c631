use serde::Serialize;

use crate::error::{Result, SvieError};
use crate::modulus::Modulus;

/// `ψ₁(t) = c₃t`, `ψ_{k+1}(t) = ∫_0^t κ(ψ_k(s)) ds` on a uniform grid over `[0, v]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiSequence {
    c3: f64,
    horizon: f64,
    times: Vec<f64>,
    /// `curves[k − 1][i] = ψ_k(t_i)`.
    curves: Vec<Vec<f64>>,
    /// First `(k, i)` where `0 ≤ ψ_{k+1}(t_i) ≤ ψ_k(t_i)` fails.
    first_violation: Option<(usize, usize)>,
}

impl PsiSequence {
    pub fn c3(&self) -> f64 {
        self.c3
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// `ψ_k` on the grid, `k ≥ 1`.
    pub fn curve(&self, k: usize) -> &[f64] {
        &self.curves[k - 1]
    }

    pub fn monotone(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn first_violation(&self) -> Option<(usize, usize)> {
        self.first_violation
    }

    /// `ψ_K(v)` for the last computed `K`.
    pub fn terminal(&self) -> f64 {
        *self
            .curves
            .last()
            .and_then(|c| c.last())
            .expect("nonempty sequence")
    }

    /// Linear interpolation of `ψ_k` at `t ∈ [0, v]`.
    pub fn value_at(&self, k: usize, t: f64) -> Result<f64> {
        if k == 0 || k > self.curves.len() {
            return Err(SvieError::Config(format!(
                "ψ_{k} was not computed (K = {})",
                self.curves.len()
            )));
        }
        if !(0.0..=self.horizon).contains(&t) {
            return Err(SvieError::Domain(format!(
                "t = {t} lies outside [0, {}]",
                self.horizon
            )));
        }
        let curve = &self.curves[k - 1];
        let dt = self.times[1] - self.times[0];
        let j = ((t / dt) as usize).min(self.times.len() - 2);
        let w = ((t - self.times[j]) / dt).clamp(0.0, 1.0);
        Ok(curve[j] + w * (curve[j + 1] - curve[j]))
    }
}

/// Largest `v ≤ horizon` with `κ(c₃v) ≤ c₃`. `κ` is non-decreasing, so the
/// condition then holds on all of `[0, v]`.
pub fn smallness_horizon(c3: f64, modulus: &Modulus, horizon: f64) -> f64 {
    if c3 == 0.0 || modulus.kappa(c3 * horizon) <= c3 {
        return horizon;
    }
    let (mut lo, mut hi) = (0.0, horizon);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if modulus.kappa(c3 * mid) <= c3 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Cumulative trapezoidal recursion for `ψ_1…ψ_K` on `steps` intervals over `[0, v]`.
///
/// Uses the unscaled `κ`. Requires `κ(c₃t) ≤ c₃` at every grid point.
pub fn psi_recursion(
    c3: f64,
    modulus: &Modulus,
    v: f64,
    steps: usize,
    iterations: usize,
) -> Result<PsiSequence> {
    if !(c3 >= 0.0 && c3.is_finite()) {
        return Err(SvieError::Config(format!(
            "c3 must be finite and nonnegative, got {c3}"
        )));
    }
    if !(v > 0.0 && v.is_finite()) || steps == 0 || iterations == 0 {
        return Err(SvieError::Config(format!(
            "ψ recursion needs v > 0, steps ≥ 1, K ≥ 1; got v = {v}, steps = {steps}, K = {iterations}"
        )));
    }
    let dt = v / steps as f64;
    let times: Vec<f64> = (0..=steps)
        .map(|i| if i == steps { v } else { i as f64 * dt })
        .collect();
    if let Some(t) = times
        .iter()
        .find(|&&t| modulus.kappa(c3 * t) > c3 * (1.0 + 1e-12))
    {
        return Err(SvieError::Precondition(format!(
            "κ(c3·t) ≤ c3 fails at t = {t}: κ({}) = {} > {c3}",
            c3 * t,
            modulus.kappa(c3 * t)
        )));
    }
    let mut curves = vec![times.iter().map(|t| c3 * t).collect::<Vec<f64>>()];
    let mut first_violation = None;
    for k in 1..iterations {
        let prev = &curves[k - 1];
        let mut next = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        next.push(0.0);
        for i in 1..times.len() {
            let h = times[i] - times[i - 1];
            acc += 0.5 * h * (modulus.kappa(prev[i - 1]) + modulus.kappa(prev[i]));
            next.push(acc);
        }
        if first_violation.is_none() {
            first_violation = next
                .iter()
                .zip(prev)
                .position(|(n, p)| *n < 0.0 || *n > p * (1.0 + 1e-12))
                .map(|i| (k, i));
        }
        curves.push(next);
    }
    Ok(PsiSequence {
        c3,
        horizon: v,
        times,
        curves,
        first_violation,
    })
}
