use serde::Serialize;

use super::{Estimate, STDERR_SLACK};
use crate::coefficients::CoefficientSet;
use crate::error::{Result, SvieError};
use crate::solver::Ensemble;

/// `4(1 + E|φ(T)|²)·exp(4C·T̃²)` with `T̃ = max(T, 1)`.
///
/// Overflows to `+∞` for large `C·T̃²`; that is logged, not treated as an error.
pub fn lemma32_bound(growth_constant: f64, horizon: f64, phi_terminal_sq: f64) -> Result<f64> {
    if !(growth_constant.is_finite() && horizon.is_finite() && phi_terminal_sq.is_finite())
        || growth_constant < 0.0
        || horizon <= 0.0
        || phi_terminal_sq < 0.0
    {
        return Err(SvieError::Domain(format!(
            "moment bound needs finite C ≥ 0, T > 0, E|φ(T)|² ≥ 0; got {growth_constant}, {horizon}, {phi_terminal_sq}"
        )));
    }
    let t_tilde = horizon.max(1.0);
    let bound = 4.0 * (1.0 + phi_terminal_sq) * (4.0 * growth_constant * t_tilde * t_tilde).exp();
    if bound.is_infinite() {
        log::warn!("moment bound overflows f64 for C = {growth_constant}, T = {horizon}");
    }
    Ok(bound)
}

/// `E|x(t_i)|²` per grid time against the uniform moment bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub times: Vec<f64>,
    pub estimates: Vec<Estimate>,
    pub bound: f64,
    /// `estimate − 4·stderr ≤ bound` per time.
    pub pass: Vec<bool>,
    pub surviving_paths: usize,
    pub exploded_paths: usize,
}

impl MomentReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    /// Index of the time with the largest `estimate − 4·stderr`.
    pub fn worst_index(&self) -> usize {
        self.estimates
            .iter()
            .enumerate()
            .max_by(|a, b| {
                let ka = a.1.mean - STDERR_SLACK * a.1.stderr;
                let kb = b.1.mean - STDERR_SLACK * b.1.stderr;
                ka.total_cmp(&kb)
            })
            .map_or(0, |(i, _)| i)
    }
}

/// Second moments of the surviving paths, compared with
/// [`lemma32_bound`]`(growth_constant, T, φ(T)²)`.
pub fn moment_check(
    ensemble: &Ensemble,
    coeffs: &CoefficientSet,
    growth_constant: f64,
) -> Result<MomentReport> {
    let grid = ensemble.grid();
    let survivors: Vec<&[f64]> = ensemble.survivors().map(|(_, p)| p.values()).collect();
    if survivors.is_empty() {
        return Err(SvieError::Analysis(
            "every path in the ensemble exploded".into(),
        ));
    }
    let phi_t = coeffs.initial(grid.horizon());
    let bound = lemma32_bound(growth_constant, grid.horizon(), phi_t * phi_t)?;
    let mut column = vec![0.0; survivors.len()];
    let estimates: Vec<Estimate> = (0..grid.len())
        .map(|i| {
            for (slot, path) in column.iter_mut().zip(&survivors) {
                *slot = path[i] * path[i];
            }
            Estimate::from_samples(&column)
        })
        .collect();
    let pass = estimates
        .iter()
        .map(|e| e.mean - STDERR_SLACK * e.stderr <= bound)
        .collect();
    Ok(MomentReport {
        times: grid.points(),
        estimates,
        bound,
        pass,
        surviving_paths: survivors.len(),
        exploded_paths: ensemble.exploded_count(),
    })
}
