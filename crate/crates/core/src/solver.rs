//! Explicit left-point discretization of the Volterra equation, solved by
//! direct lower-triangular recursion or by successive approximation.
//!
//! Row `i` of the scheme is
//!
//! ```text
//! x_i = φ(t_i) + Σ_{j<i} [f(t_i,t_j,x_j) − ∫h(t_i,t_j,x_j,·)dν] Δt
//!              + Σ_{j<i} g(t_i,t_j,x_j) ΔW_j
//!              + Σ_{τ ≤ t_i} h(t_i, τ, x_{j(τ)}, ξ)
//! ```
//!
//! where `j(τ)` is the grid point strictly before the jump time. Both solvers
//! evaluate rows through the same routine, so they agree bit for bit once the
//! Picard iterate has filled every index.

use rayon::prelude::*;

use crate::coefficients::CoefficientSet;
use crate::error::{Result, SvieError};
use crate::grid::TimeGrid;
use crate::noise::{NoisePath, SeedLineage};

/// Default Picard stopping tolerance on the discrete sup-norm.
pub const DEFAULT_PICARD_TOLERANCE: f64 = 1e-10;

/// States `x(t_0), …, x(t_n)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl DiscretePath {
    /// The initial process sampled on the grid: the Picard starting point `x⁰ = φ`.
    pub fn initial(coeffs: &CoefficientSet, grid: &TimeGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: (0..grid.len())
                .map(|i| coeffs.initial(grid.time(i)))
                .collect(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("grid has at least two points")
    }

    /// `max_i |self_i − other_i|`.
    pub fn sup_distance(&self, other: &DiscretePath) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
struct JumpSlot {
    step: usize,
    time: f64,
    mark: f64,
}

/// A noise path bound to a coefficient set, with jump times mapped to grid steps.
struct Scheme<'a> {
    coeffs: &'a CoefficientSet,
    noise: &'a NoisePath,
    jumps: Vec<JumpSlot>,
}

impl<'a> Scheme<'a> {
    fn new(coeffs: &'a CoefficientSet, noise: &'a NoisePath) -> Self {
        let grid = noise.grid();
        let jumps = if coeffs.has_jumps() {
            noise
                .jumps()
                .iter()
                .map(|j| JumpSlot {
                    step: grid.step_before(j.time),
                    time: j.time,
                    mark: j.mark,
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            coeffs,
            noise,
            jumps,
        }
    }

    /// Right-hand side of row `i`, reading only `states[..i]`.
    fn row(&self, i: usize, states: &[f64]) -> Result<f64> {
        let grid = self.noise.grid();
        let dt = grid.dt();
        let ti = grid.time(i);
        let c = self.coeffs;
        let mut drift = 0.0;
        let mut compensator = 0.0;
        let mut diffusion = 0.0;
        let dw = self.noise.brownian_increments();
        let with_diffusion = c.has_diffusion();
        let with_jumps = c.has_jumps();
        for (j, &x) in states[..i].iter().enumerate() {
            let tj = grid.time(j);
            drift += c.drift(ti, tj, x);
            if with_diffusion {
                diffusion += c.diffusion(ti, tj, x) * dw[j];
            }
            if with_jumps {
                compensator += c.compensator_integral(ti, tj, x)?;
            }
        }
        let mut jump_sum = 0.0;
        for slot in self.jumps.iter().take_while(|s| s.step < i) {
            jump_sum += c.jump(ti, slot.time, states[slot.step], slot.mark);
        }
        Ok(c.initial(ti) + (drift - compensator) * dt + diffusion + jump_sum)
    }

    fn checked(&self, i: usize, value: f64) -> Result<f64> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(SvieError::Explosion {
                step: i,
                time: self.noise.grid().time(i),
                value,
            })
        }
    }
}

/// Solves the discrete system in one forward pass, `O(n²)` kernel evaluations.
pub fn direct_recursion(coeffs: &CoefficientSet, noise: &NoisePath) -> Result<DiscretePath> {
    let scheme = Scheme::new(coeffs, noise);
    let grid = noise.grid();
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let v = scheme.row(i, &values)?;
        values.push(scheme.checked(i, v)?);
    }
    Ok(DiscretePath {
        grid: grid.clone(),
        values,
    })
}

fn step_with(scheme: &Scheme<'_>, prev: &DiscretePath) -> Result<DiscretePath> {
    let grid = scheme.noise.grid();
    if prev.grid() != grid {
        return Err(SvieError::Config(
            "previous iterate lives on a different grid than the noise path".into(),
        ));
    }
    let values = (0..grid.len())
        .map(|i| {
            scheme
                .row(i, &prev.values)
                .and_then(|v| scheme.checked(i, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscretePath {
        grid: grid.clone(),
        values,
    })
}

/// One successive approximation: every state argument is taken from `prev`.
pub fn picard_step(
    coeffs: &CoefficientSet,
    noise: &NoisePath,
    prev: &DiscretePath,
) -> Result<DiscretePath> {
    step_with(&Scheme::new(coeffs, noise), prev)
}

/// Lazily produces `x¹, x², …` starting from `x⁰ = φ`.
pub struct PicardIterates<'a> {
    scheme: Scheme<'a>,
    current: DiscretePath,
    failed: bool,
}

impl<'a> PicardIterates<'a> {
    pub fn new(coeffs: &'a CoefficientSet, noise: &'a NoisePath) -> Self {
        Self {
            current: DiscretePath::initial(coeffs, noise.grid()),
            scheme: Scheme::new(coeffs, noise),
            failed: false,
        }
    }

    /// The most recently produced iterate (`x⁰` before the first call to `next`).
    pub fn current(&self) -> &DiscretePath {
        &self.current
    }
}

impl Iterator for PicardIterates<'_> {
    type Item = Result<DiscretePath>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match step_with(&self.scheme, &self.current) {
            Ok(next) => {
                self.current = next.clone();
                Some(Ok(next))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Trace of a Picard solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardRun {
    /// `(x^{k−1}, x^k)` for the last iteration performed.
    pub last_iterates: (DiscretePath, DiscretePath),
    /// `max_i |x^k(t_i) − x^{k−1}(t_i)|` for `k = 1, 2, …`.
    pub sup_diffs: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
}

impl PicardRun {
    pub fn solution(&self) -> &DiscretePath {
        &self.last_iterates.1
    }
}

/// Iterates until the sup-norm step is `≤ tolerance` or `k_max` iterations are spent.
/// Non-convergence is reported through `converged`, not as an error.
pub fn picard_solve(
    coeffs: &CoefficientSet,
    noise: &NoisePath,
    tolerance: f64,
    k_max: usize,
) -> Result<PicardRun> {
    if k_max == 0 {
        return Err(SvieError::Config("k_max must be at least 1".into()));
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(SvieError::Config(format!(
            "tolerance must be nonnegative, got {tolerance}"
        )));
    }
    let mut iterates = PicardIterates::new(coeffs, noise);
    let x0 = iterates.current().clone();
    let mut pair = (x0.clone(), x0);
    let mut sup_diffs = Vec::with_capacity(k_max);
    let mut converged = false;
    for _ in 0..k_max {
        let next = iterates.next().expect("Picard iterates are unbounded")?;
        pair.0 = std::mem::replace(&mut pair.1, next);
        let d = pair.1.sup_distance(&pair.0);
        sup_diffs.push(d);
        if d <= tolerance {
            converged = true;
            break;
        }
    }
    Ok(PicardRun {
        last_iterates: pair,
        iterations_used: sup_diffs.len(),
        sup_diffs,
        converged,
    })
}

/// A path that could not be solved.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFailure {
    pub path_index: u64,
    pub error: SvieError,
}

/// Solutions for lineages `(master_seed, 0…n_paths−1)`, in path order.
#[derive(Debug, Clone)]
pub struct Ensemble {
    grid: TimeGrid,
    master_seed: u64,
    outcomes: Vec<std::result::Result<DiscretePath, PathFailure>>,
}

impl Ensemble {
    /// Wraps per-path outcomes listed in path order.
    pub fn from_outcomes(
        grid: TimeGrid,
        master_seed: u64,
        outcomes: Vec<std::result::Result<DiscretePath, PathFailure>>,
    ) -> Self {
        Self {
            grid,
            master_seed,
            outcomes,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[std::result::Result<DiscretePath, PathFailure>] {
        &self.outcomes
    }

    /// Surviving paths with their indices.
    pub fn survivors(&self) -> impl Iterator<Item = (u64, &DiscretePath)> {
        self.outcomes
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.as_ref().ok().map(|p| (i as u64, p)))
    }

    pub fn failures(&self) -> impl Iterator<Item = &PathFailure> {
        self.outcomes.iter().filter_map(|o| o.as_ref().err())
    }

    pub fn exploded_count(&self) -> usize {
        self.failures().count()
    }
}

/// Maps `op` over the noise paths of lineages `(master_seed, 0…n_paths−1)` in
/// parallel. Output order is path order regardless of scheduling.
pub fn map_paths<T, F>(
    coeffs: &CoefficientSet,
    grid: &TimeGrid,
    n_paths: usize,
    master_seed: u64,
    op: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &NoisePath) -> T + Sync,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let noise = NoisePath::sample(grid, coeffs.measure(), SeedLineage::new(master_seed, p));
            op(p, &noise)
        })
        .collect()
}

/// Solves `n_paths` independent paths by direct recursion.
pub fn ensemble_simulate(
    coeffs: &CoefficientSet,
    grid: &TimeGrid,
    n_paths: usize,
    master_seed: u64,
) -> Result<Ensemble> {
    if n_paths == 0 {
        return Err(SvieError::Config("ensemble needs at least one path".into()));
    }
    let outcomes = map_paths(coeffs, grid, n_paths, master_seed, |p, noise| {
        direct_recursion(coeffs, noise).map_err(|error| PathFailure {
            path_index: p,
            error,
        })
    });
    Ok(Ensemble {
        grid: grid.clone(),
        master_seed,
        outcomes,
    })
}
