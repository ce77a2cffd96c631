//! Monte Carlo and quadrature diagnostics for the moment, contraction and
//! maximal inequalities behind existence and uniqueness.

mod bihari;
mod cauchy;
mod doob;
mod moments;
mod psi;
mod stats;

pub use bihari::{bihari_bound, bihari_g, BIHARI_RTOL};
pub use cauchy::{cauchy_diff, CauchyConstants, CauchyOrders, CauchyReport};
pub use doob::{
    doob_check, martingale_components, running_sample, DoobReport, MartingaleSample,
    DEFAULT_DOOB_SLACK,
};
pub use moments::{lemma32_bound, moment_check, MomentReport};
pub use psi::{psi_recursion, smallness_horizon, PsiSequence};
pub use stats::Estimate;

/// Number of standard errors allowed on every Monte Carlo comparison.
pub const STDERR_SLACK: f64 = 4.0;
