//! Simulation and diagnostics for stochastic Volterra integral equations
//! driven by Brownian motion and a compensated Poisson random measure:
//!
//! ```text
//! x(t) = φ(t) + ∫_0^t f(t,s,x(s)) ds + ∫_0^t g(t,s,x(s)) dW_s
//!             + ∫_0^t ∫_{R₀} h(t,s,x(s),ξ) Ñ(ds,dξ)
//! ```
//!
//! The crate samples the driving noise ([`noise`]), defines coefficient sets
//! and audits their growth and continuity conditions ([`coefficients`],
//! [`audit`]), solves the explicit discretization directly or by successive
//! approximation ([`solver`]), and checks the moment, maximal and contraction
//! inequalities on simulated ensembles ([`analysis`]).

pub mod analysis;
pub mod audit;
pub mod coefficients;
pub mod error;
pub mod grid;
pub mod levy;
pub mod modulus;
pub mod noise;
pub mod quadrature;
pub mod solver;

pub use coefficients::{example_coefficients, from_catalogue, CoefficientSet, CATALOGUE};
pub use error::{Result, SvieError};
pub use grid::{build_grid, TimeGrid};
pub use levy::{LevyMeasure, MarkDistribution};
pub use modulus::{Modulus, ModulusKind};
pub use noise::{sample_brownian, sample_jumps, Jump, NoisePath, SeedLineage};
pub use solver::{
    direct_recursion, ensemble_simulate, picard_solve, picard_step, DiscretePath, Ensemble,
    PicardRun,
};
