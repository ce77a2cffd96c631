//! Coefficient sets `(f, g, h, φ)` and the built-in catalogue.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SvieError};
use crate::levy::LevyMeasure;
use crate::modulus::Modulus;

/// `(t, s, x) → value`.
pub type StateKernel = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// `(t, s, x, ξ) → value`.
pub type JumpKernel = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;
/// `t → φ(t)`.
pub type InitialProcess = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Kernels of the equation
/// `x(t) = φ(t) + ∫ f(t,s,x) ds + ∫ g(t,s,x) dW + ∫∫ h(t,s,x,ξ) Ñ(ds,dξ)`
/// together with the Lévy measure that `Ñ` compensates against.
#[derive(Clone)]
pub struct CoefficientSet {
    name: String,
    drift: StateKernel,
    diffusion: StateKernel,
    jump: JumpKernel,
    initial: InitialProcess,
    compensator: Option<StateKernel>,
    measure: LevyMeasure,
    growth_constant: Option<f64>,
    modulus: Option<Modulus>,
    has_diffusion: bool,
    has_jumps: bool,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("name", &self.name)
            .field("measure", &self.measure)
            .field("closed_form_compensator", &self.compensator.is_some())
            .field("growth_constant", &self.growth_constant)
            .field("modulus", &self.modulus)
            .finish_non_exhaustive()
    }
}

impl CoefficientSet {
    /// Starts a set whose kernels are all zero and whose initial process is `φ ≡ 0`.
    pub fn builder(name: impl Into<String>, measure: LevyMeasure) -> CoefficientSetBuilder {
        CoefficientSetBuilder {
            set: CoefficientSet {
                name: name.into(),
                drift: Arc::new(|_, _, _| 0.0),
                diffusion: Arc::new(|_, _, _| 0.0),
                jump: Arc::new(|_, _, _, _| 0.0),
                initial: Arc::new(|_| 0.0),
                compensator: None,
                measure,
                growth_constant: None,
                modulus: None,
                has_diffusion: false,
                has_jumps: false,
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn drift(&self, t: f64, s: f64, x: f64) -> f64 {
        (self.drift)(t, s, x)
    }

    #[inline]
    pub fn diffusion(&self, t: f64, s: f64, x: f64) -> f64 {
        (self.diffusion)(t, s, x)
    }

    #[inline]
    pub fn jump(&self, t: f64, s: f64, x: f64, xi: f64) -> f64 {
        (self.jump)(t, s, x, xi)
    }

    #[inline]
    pub fn initial(&self, t: f64) -> f64 {
        (self.initial)(t)
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    pub fn growth_constant(&self) -> Option<f64> {
        self.growth_constant
    }

    pub fn modulus(&self) -> Option<Modulus> {
        self.modulus
    }

    pub fn has_closed_form_compensator(&self) -> bool {
        self.compensator.is_some()
    }

    /// False when `g ≡ 0` was declared by leaving the diffusion unset.
    pub fn has_diffusion(&self) -> bool {
        self.has_diffusion
    }

    /// False when `h ≡ 0` or the measure has no mass.
    pub fn has_jumps(&self) -> bool {
        self.has_jumps && self.measure.total_mass() > 0.0
    }

    /// `∫ h(t,s,x,ξ) ν(dξ)`: closed form when supplied, quadrature otherwise.
    pub fn compensator_integral(&self, t: f64, s: f64, x: f64) -> Result<f64> {
        if !self.has_jumps() {
            return Ok(0.0);
        }
        match &self.compensator {
            Some(c) => Ok(c(t, s, x)),
            None => self.quadrature_compensator(t, s, x),
        }
    }

    /// Quadrature route for the compensator, ignoring any closed form.
    pub fn quadrature_compensator(&self, t: f64, s: f64, x: f64) -> Result<f64> {
        self.measure.integrate(|xi| self.jump(t, s, x, xi))
    }

    /// Replaces the Lévy measure. Any closed-form compensator is dropped
    /// because it was derived for the old measure.
    pub fn with_measure(mut self, measure: LevyMeasure) -> Self {
        self.measure = measure;
        self.compensator = None;
        self
    }

    pub fn with_modulus(mut self, modulus: Modulus) -> Self {
        self.modulus = Some(modulus);
        self
    }

    pub fn with_growth_constant(mut self, c: Option<f64>) -> Self {
        self.growth_constant = c;
        self
    }
}

pub struct CoefficientSetBuilder {
    set: CoefficientSet,
}

impl CoefficientSetBuilder {
    pub fn drift(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.set.drift = Arc::new(f);
        self
    }

    pub fn diffusion(mut self, g: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.set.diffusion = Arc::new(g);
        self.set.has_diffusion = true;
        self
    }

    pub fn jump(mut self, h: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.set.jump = Arc::new(h);
        self.set.has_jumps = true;
        self
    }

    pub fn initial(mut self, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.set.initial = Arc::new(phi);
        self
    }

    /// Closed form of `∫ h(t,s,x,ξ) ν(dξ)` for the builder's measure.
    pub fn compensator(mut self, c: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.set.compensator = Some(Arc::new(c));
        self
    }

    pub fn growth_constant(mut self, c: f64) -> Self {
        self.set.growth_constant = Some(c);
        self
    }

    pub fn modulus(mut self, m: Modulus) -> Self {
        self.set.modulus = Some(m);
        self
    }

    pub fn build(self) -> CoefficientSet {
        self.set
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(SvieError::Config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// The worked example:
/// `f = x/2`, `g = 4cos²(t−s)x`, `h = cξ²x`, `φ ≡ 1`, log-normal marks at rate `jump_rate`.
///
/// Constants: `∫ξ²ν = λ̄e²` gives the compensator `c·x·λ̄e²`; `∫ξ⁴ν = λ̄e⁸`
/// gives `C = λ = max(1/4, 16, c²λ̄e⁸)` by direct bounding of each term.
pub fn example_coefficients(c: f64, jump_rate: f64) -> Result<CoefficientSet> {
    let c = positive("jump coefficient c", c)?;
    let measure = LevyMeasure::log_normal(jump_rate)?;
    let m2 = measure.marks().moment(2);
    let m4 = measure.marks().moment(4);
    let constant = 0.25f64.max(16.0).max(c * c * jump_rate * m4);
    let comp = c * jump_rate * m2;
    Ok(CoefficientSet::builder("example", measure)
        .drift(|_, _, x| 0.5 * x)
        .diffusion(|t, s, x| {
            let k = (t - s).cos();
            4.0 * k * k * x
        })
        .jump(move |_, _, x, xi| c * xi * xi * x)
        .initial(|_| 1.0)
        .compensator(move |_, _, x| comp * x)
        .growth_constant(constant)
        .modulus(Modulus::linear(constant)?)
        .build())
}

/// `f = x/2`, no noise, `φ ≡ 1`; solution `e^{t/2}`.
pub fn deterministic_ode() -> CoefficientSet {
    CoefficientSet::builder("deterministic_ode", LevyMeasure::none())
        .drift(|_, _, x| 0.5 * x)
        .initial(|_| 1.0)
        .growth_constant(0.25)
        .modulus(Modulus::linear(0.25).expect("valid scale"))
        .build()
}

/// Every kernel zero, `φ ≡ 1`.
pub fn zero_coefficients() -> CoefficientSet {
    CoefficientSet::builder("zero", LevyMeasure::none())
        .initial(|_| 1.0)
        .growth_constant(0.0)
        .modulus(Modulus::linear(0.0).expect("valid scale"))
        .build()
}

/// Globally Lipschitz, non-linear in `x`:
/// `f = −½x·e^{−(t−s)}`, `g = 0.3 sin x + 0.2`, `h = 0.1ξ·x/(1+|x|)`, `φ ≡ 1`.
///
/// Squared Lipschitz constants are `1/4`, `0.09` and `0.01·λ̄e²`; the same
/// numbers bound the growth terms.
pub fn linear_test(jump_rate: f64) -> Result<CoefficientSet> {
    let measure = LevyMeasure::log_normal(jump_rate)?;
    let m1 = measure.marks().moment(1);
    let m2 = measure.marks().moment(2);
    let constant = 0.25f64.max(0.09).max(0.01 * jump_rate * m2);
    let comp = 0.1 * jump_rate * m1;
    Ok(CoefficientSet::builder("linear_test", measure)
        .drift(|t, s, x| -0.5 * x * (-(t - s)).exp())
        .diffusion(|_, _, x| 0.3 * x.sin() + 0.2)
        .jump(|_, _, x, xi| 0.1 * xi * x / (1.0 + x.abs()))
        .initial(|_| 1.0)
        .compensator(move |_, _, x| comp * x / (1.0 + x.abs()))
        .growth_constant(constant)
        .modulus(Modulus::linear(constant)?)
        .build())
}

/// `X(t) = ∫_0^t (1 + s) dW_s`: a Brownian martingale with `φ ≡ 0`.
pub fn brownian_martingale() -> CoefficientSet {
    CoefficientSet::builder("brownian_martingale", LevyMeasure::none())
        .diffusion(|_, s, _| 1.0 + s)
        .build()
}

/// `X(t) = ∫_0^t∫ ξ Ñ(ds,dξ)`: compensated compound Poisson sum with log-normal marks.
pub fn jump_martingale(jump_rate: f64) -> Result<CoefficientSet> {
    let measure = LevyMeasure::log_normal(jump_rate)?;
    let comp = jump_rate * measure.marks().moment(1);
    Ok(CoefficientSet::builder("jump_martingale", measure)
        .jump(|_, _, _, xi| xi)
        .compensator(move |_, _, _| comp)
        .build())
}

/// Multiplicative kernels with exponential Volterra decay:
/// `f = a·e^{−δ(t−s)}x`, `g = b·e^{−δ(t−s)}x`, `h = c·e^{−δ(t−s)}ξx`, `φ ≡ x0`,
/// log-normal marks at rate `jump_rate`.
///
/// Growth and squared Lipschitz constants are both `max(a², b², c²λ̄e²)`.
pub fn multiplicative(
    a: f64,
    b: f64,
    c: f64,
    x0: f64,
    decay: f64,
    jump_rate: f64,
) -> Result<CoefficientSet> {
    if ![a, b, c, x0].iter().all(|v| v.is_finite()) || !(decay.is_finite() && decay >= 0.0) {
        return Err(SvieError::Config(format!(
            "multiplicative kernels need finite constants and decay ≥ 0, got a={a}, b={b}, c={c}, x0={x0}, decay={decay}"
        )));
    }
    let measure = LevyMeasure::log_normal(jump_rate)?;
    let m1 = measure.marks().moment(1);
    let m2 = measure.marks().moment(2);
    let constant = (a * a).max(b * b).max(c * c * jump_rate * m2);
    let comp = c * jump_rate * m1;
    let mut builder = CoefficientSet::builder("inline", measure)
        .drift(move |t, s, x| a * (-decay * (t - s)).exp() * x)
        .initial(move |_| x0)
        .growth_constant(constant)
        .modulus(Modulus::linear(constant)?);
    if b != 0.0 {
        builder = builder.diffusion(move |t, s, x| b * (-decay * (t - s)).exp() * x);
    }
    if c != 0.0 {
        builder = builder
            .jump(move |t, s, x, xi| c * (-decay * (t - s)).exp() * xi * x)
            .compensator(move |t, s, x| comp * (-decay * (t - s)).exp() * x);
    }
    Ok(builder.build())
}

/// Catalogue names accepted by [`from_catalogue`].
pub const CATALOGUE: [&str; 6] = [
    "example",
    "deterministic_ode",
    "linear_test",
    "zero",
    "brownian_martingale",
    "jump_martingale",
];

/// Looks up a named set. `c` and `jump_rate` are ignored by sets that do not use them.
pub fn from_catalogue(name: &str, c: f64, jump_rate: f64) -> Result<CoefficientSet> {
    match name {
        "example" => example_coefficients(c, jump_rate),
        "deterministic_ode" => Ok(deterministic_ode()),
        "linear_test" => linear_test(jump_rate),
        "zero" => Ok(zero_coefficients()),
        "brownian_martingale" => Ok(brownian_martingale()),
        "jump_martingale" => jump_martingale(jump_rate),
        other => Err(SvieError::Config(format!(
            "unknown coefficient set '{other}'; expected one of {CATALOGUE:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn example_kernel_values() {
        let ex = example_coefficients(0.5, 2.0).unwrap();
        assert_eq!(ex.drift(0.3, 0.1, 2.0), 1.0);
        assert_eq!(ex.diffusion(0.4, 0.4, 1.0), 4.0);
        assert_eq!(ex.jump(0.4, 0.1, 1.0, 2.0), 2.0);
        assert_eq!(ex.initial(0.7), 1.0);
    }

    #[test]
    fn example_rejects_nonpositive_c() {
        assert!(matches!(
            example_coefficients(0.0, 2.0),
            Err(SvieError::Config(_))
        ));
        assert!(matches!(
            example_coefficients(-1.0, 2.0),
            Err(SvieError::Config(_))
        ));
    }

    #[test]
    fn example_compensator_closed_form() {
        let ex = example_coefficients(1.0, 2.0).unwrap();
        let v = ex.compensator_integral(0.5, 0.2, 1.0).unwrap();
        assert!((v - 2.0 * E * E).abs() < 1e-12);
        assert!((v - 14.778).abs() < 1e-3);
    }

    #[test]
    fn compensator_quadrature_agrees_with_closed_form() {
        for c in [0.1, 1.0, 3.0] {
            let ex = example_coefficients(c, 2.0).unwrap();
            for x in [-3.0, 0.5, 2.0] {
                let closed = ex.compensator_integral(0.3, 0.1, x).unwrap();
                let quad = ex.quadrature_compensator(0.3, 0.1, x).unwrap();
                assert!(
                    (closed - quad).abs() <= 1e-6 * closed.abs(),
                    "{closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn zero_jump_kernel_has_zero_compensator() {
        let z = zero_coefficients().with_measure(LevyMeasure::log_normal(2.0).unwrap());
        assert_eq!(z.compensator_integral(1.0, 0.0, 5.0).unwrap(), 0.0);
        let quad = z.quadrature_compensator(1.0, 0.0, 5.0).unwrap();
        assert_eq!(quad, 0.0);
    }

    #[test]
    fn multiplicative_compensator_matches_quadrature() {
        let set = multiplicative(0.5, -0.3, 0.2, 2.0, 1.5, 2.0).unwrap();
        let closed = set.compensator_integral(0.8, 0.1, 1.7).unwrap();
        let quad = set.quadrature_compensator(0.8, 0.1, 1.7).unwrap();
        assert!((closed - quad).abs() <= 1e-6 * closed.abs());
        assert!(multiplicative(1.0, 1.0, 1.0, 1.0, -1.0, 2.0).is_err());
        assert!(!multiplicative(1.0, 0.0, 0.0, 1.0, 0.0, 2.0)
            .unwrap()
            .has_jumps());
    }

    #[test]
    fn catalogue_lookup() {
        for name in CATALOGUE {
            let set = from_catalogue(name, 0.1, 2.0).unwrap();
            assert_eq!(set.name(), name);
        }
        assert!(from_catalogue("nope", 0.1, 2.0).is_err());
    }
}
