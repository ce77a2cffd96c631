//! Finite-activity Lévy measures `ν(dξ) = λ̄ · p(ξ) dξ`.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Result, SvieError};
use crate::quadrature::{integrate, QuadOptions};

/// Relative tolerance for mark integrals.
pub const MARK_QUAD_RTOL: f64 = 1e-8;
/// Normalization tolerance for mark densities.
pub const DENSITY_NORM_TOL: f64 = 1e-6;

/// Probability law of a single jump mark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkDistribution {
    /// `ln ξ ~ Normal(mu, sigma²)` on `(0, ∞)`.
    LogNormal { mu: f64, sigma: f64 },
    /// Exponential marks on `(0, ∞)`.
    Exponential { rate: f64 },
    /// Every mark equals `value`.
    Dirac { value: f64 },
}

impl MarkDistribution {
    /// Standard log-normal, `mu = 0`, `sigma = 1`.
    pub fn standard_log_normal() -> Self {
        MarkDistribution::LogNormal {
            mu: 0.0,
            sigma: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            MarkDistribution::LogNormal { mu, sigma } => {
                mu.is_finite() && sigma.is_finite() && sigma > 0.0
            }
            MarkDistribution::Exponential { rate } => rate.is_finite() && rate > 0.0,
            MarkDistribution::Dirac { value } => value.is_finite() && value != 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SvieError::Config(format!(
                "invalid mark distribution {self:?}"
            )))
        }
    }

    /// Lebesgue density of the mark. Point masses have none and return NaN.
    pub fn density(&self, xi: f64) -> f64 {
        match *self {
            MarkDistribution::LogNormal { mu, sigma } => {
                if xi <= 0.0 {
                    return 0.0;
                }
                let z = (xi.ln() - mu) / sigma;
                (-0.5 * z * z).exp() / (xi * sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            MarkDistribution::Exponential { rate } => {
                if xi < 0.0 {
                    0.0
                } else {
                    rate * (-rate * xi).exp()
                }
            }
            MarkDistribution::Dirac { .. } => f64::NAN,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkDistribution::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            MarkDistribution::Exponential { rate } => {
                Exp::new(rate).expect("validated rate").sample(rng)
            }
            MarkDistribution::Dirac { value } => value,
        }
    }

    /// Closed-form `E[ξ^k]`.
    pub fn moment(&self, k: i32) -> f64 {
        match *self {
            MarkDistribution::LogNormal { mu, sigma } => {
                let k = f64::from(k);
                (k * mu + 0.5 * k * k * sigma * sigma).exp()
            }
            MarkDistribution::Exponential { rate } => {
                if k < 0 {
                    return f64::INFINITY;
                }
                (1..=k).map(f64::from).product::<f64>() / rate.powi(k)
            }
            MarkDistribution::Dirac { value } => value.powi(k),
        }
    }

    // Centre and width of the log-mark, used to place quadrature panels.
    fn log_scale(&self) -> (f64, f64) {
        match *self {
            MarkDistribution::LogNormal { mu, sigma } => (mu, sigma),
            MarkDistribution::Exponential { rate } => (-rate.ln(), 1.0),
            MarkDistribution::Dirac { value } => (value.abs().ln(), 1.0),
        }
    }

    /// `E[F(ξ)]` by quadrature against the density, in the coordinate
    /// `u = ln ξ`. Panels are added outward from the bulk until their
    /// contribution is negligible against the running total.
    pub fn expectation<F: FnMut(f64) -> f64>(&self, mut integrand: F, rel_tol: f64) -> Result<f64> {
        if let MarkDistribution::Dirac { value } = *self {
            return Ok(integrand(value));
        }
        let (center, width) = self.log_scale();
        let mut g = |u: f64| {
            let xi = u.exp();
            let d = self.density(xi);
            if d == 0.0 {
                0.0
            } else {
                integrand(xi) * d * xi
            }
        };
        let core_lo = center - 10.0 * width;
        let core_hi = center + 10.0 * width;
        let core = integrate(&mut g, core_lo, core_hi, QuadOptions::relative(rel_tol))?.value;
        let mut total = core;
        let tail_opts = QuadOptions {
            rel_tol,
            abs_tol: (core.abs() * rel_tol * 1e-3).max(1e-300),
            ..QuadOptions::default()
        };
        for direction in [1.0, -1.0] {
            let mut edge = if direction > 0.0 { core_hi } else { core_lo };
            for _ in 0..40 {
                let next = edge + direction * 4.0 * width;
                let piece = integrate(&mut g, edge, next, tail_opts)?.value * direction;
                total += piece;
                edge = next;
                if piece.abs() <= 1e-17 * total.abs().max(1e-300) {
                    break;
                }
            }
        }
        Ok(total)
    }

    /// `∫ p(ξ) dξ` by quadrature; should be 1.
    pub fn normalization(&self) -> Result<f64> {
        self.expectation(|_| 1.0, 1e-10)
    }
}

/// Finite Lévy measure with total mass `total_mass = ν(R₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyMeasure {
    total_mass: f64,
    marks: MarkDistribution,
}

impl LevyMeasure {
    pub fn new(total_mass: f64, marks: MarkDistribution) -> Result<Self> {
        if !total_mass.is_finite() || total_mass < 0.0 {
            return Err(SvieError::Config(format!(
                "Lévy measure total mass must be finite and nonnegative, got {total_mass}"
            )));
        }
        marks.validate()?;
        if !matches!(marks, MarkDistribution::Dirac { .. }) {
            let norm = marks.normalization()?;
            if (norm - 1.0).abs() > DENSITY_NORM_TOL {
                return Err(SvieError::Config(format!(
                    "mark density integrates to {norm}, not 1"
                )));
            }
        }
        Ok(Self { total_mass, marks })
    }

    /// Log-normal marks with jump rate `rate`.
    pub fn log_normal(rate: f64) -> Result<Self> {
        Self::new(rate, MarkDistribution::standard_log_normal())
    }

    pub fn none() -> Self {
        Self {
            total_mass: 0.0,
            marks: MarkDistribution::standard_log_normal(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    /// `∫ F(ξ) ν(dξ)` to relative tolerance [`MARK_QUAD_RTOL`].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, integrand: F) -> Result<f64> {
        if self.total_mass == 0.0 {
            return Ok(0.0);
        }
        Ok(self.total_mass * self.marks.expectation(integrand, MARK_QUAD_RTOL)?)
    }
}
