use serde::Serialize;

use super::{Estimate, STDERR_SLACK};
use crate::coefficients::CoefficientSet;
use crate::error::{Result, SvieError};
use crate::noise::NoisePath;
use crate::solver::DiscretePath;

/// Relative slack on the maximal inequality.
pub const DEFAULT_DOOB_SLACK: f64 = 0.05;

/// Running maximum and terminal value of `|X|` along one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleSample {
    pub running_max_abs: f64,
    pub terminal_abs: f64,
}

/// Reduces a sampled path `X(t_0), …, X(t_n)` to its [`MartingaleSample`].
pub fn running_sample(values: &[f64]) -> MartingaleSample {
    MartingaleSample {
        running_max_abs: values.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
        terminal_abs: values.last().map_or(0.0, |v| v.abs()),
    }
}

/// Fixed-`t` stochastic integrals of a solved path, with `t = T`:
///
/// ```text
/// M(t_i) = Σ_{j<i} g(T, t_j, x_j) ΔW_j
/// J(t_i) = Σ_{τ ≤ t_i} h(T, τ, x_{j(τ)}, ξ) − Σ_{j<i} ∫h(T, t_j, x_j, ·)dν Δt
/// ```
///
/// Both are discrete martingales in `i` when `h` does not depend on `s`.
pub fn martingale_components(
    coeffs: &CoefficientSet,
    noise: &NoisePath,
    path: &DiscretePath,
) -> Result<(MartingaleSample, MartingaleSample)> {
    let grid = noise.grid();
    let horizon = grid.horizon();
    let dt = grid.dt();
    let x = path.values();
    let dw = noise.brownian_increments();
    let mut brownian = vec![0.0; grid.len()];
    let mut jump = vec![0.0; grid.len()];
    let mut jumps = noise.jumps().iter().peekable();
    let mut b_acc = 0.0;
    let mut j_acc = 0.0;
    for i in 1..grid.len() {
        let j = i - 1;
        let tj = grid.time(j);
        if coeffs.has_diffusion() {
            b_acc += coeffs.diffusion(horizon, tj, x[j]) * dw[j];
        }
        if coeffs.has_jumps() {
            j_acc -= coeffs.compensator_integral(horizon, tj, x[j])? * dt;
            let ti = grid.time(i);
            while let Some(jp) = jumps.next_if(|jp| jp.time <= ti) {
                j_acc += coeffs.jump(horizon, jp.time, x[grid.step_before(jp.time)], jp.mark);
            }
        }
        brownian[i] = b_acc;
        jump[i] = j_acc;
    }
    Ok((running_sample(&brownian), running_sample(&jump)))
}

/// Monte Carlo check of `E[sup|X|^p] ≤ (p/(p−1))^p E[|X(T)|^p]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoobReport {
    pub p: f64,
    pub constant: f64,
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// `√(se_lhs² + (constant·(1+slack))²·se_rhs²)`.
    pub combined_stderr: f64,
    pub ratio: f64,
    pub slack: f64,
    pub pass: bool,
}

impl DoobReport {
    /// `constant · rhs · (1 + slack)`.
    pub fn bound(&self) -> f64 {
        self.constant * self.rhs.mean * (1.0 + self.slack)
    }
}

pub fn doob_check(samples: &[MartingaleSample], p: f64, slack: f64) -> Result<DoobReport> {
    if samples.is_empty() {
        return Err(SvieError::Config(
            "maximal inequality check needs a nonempty ensemble".into(),
        ));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(SvieError::Config(format!(
            "maximal inequality needs p > 1, got {p}"
        )));
    }
    let constant = (p / (p - 1.0)).powf(p);
    let sup: Vec<f64> = samples.iter().map(|s| s.running_max_abs.powf(p)).collect();
    let end: Vec<f64> = samples.iter().map(|s| s.terminal_abs.powf(p)).collect();
    let lhs = Estimate::from_samples(&sup);
    let rhs = Estimate::from_samples(&end);
    let scale = constant * (1.0 + slack);
    let combined_stderr = (lhs.stderr.powi(2) + (scale * rhs.stderr).powi(2)).sqrt();
    let ratio = if rhs.mean > 0.0 {
        lhs.mean / rhs.mean
    } else if lhs.mean == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let pass = lhs.mean <= scale * rhs.mean + STDERR_SLACK * combined_stderr;
    Ok(DoobReport {
        p,
        constant,
        lhs,
        rhs,
        combined_stderr,
        ratio,
        slack,
        pass,
    })
}
