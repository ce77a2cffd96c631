//! Sampling audits of the linear-growth and continuity-modulus conditions.
//!
//! These are certificates over finitely many points, never proofs. Sample
//! sequences are prefix-stable: asking for more samples only appends points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coefficients::CoefficientSet;
use crate::error::{Result, SvieError};
use crate::levy::MARK_QUAD_RTOL;
use crate::modulus::Modulus;

/// Absolute slack on audited inequalities.
pub const AUDIT_ABS_TOL: f64 = 1e-12;
/// Decade ladder for the Osgood probe: `ε = 10⁻²…10⁻¹²`.
pub const OSGOOD_DECADES: std::ops::RangeInclusive<i32> = 2..=12;
/// A probe reads as divergent when the last decade adds at least this
/// fraction of what the decade before it added.
pub const OSGOOD_RATIO_THRESHOLD: f64 = 0.9;

const CORNERS: [(f64, f64, f64); 6] = [
    (1.0, 1.0, 1.0),
    (1.0, 0.0, -1.0),
    (1.0, 1.0, 0.0),
    (0.5, 0.0, 1.0),
    (1.0, 0.5, -0.5),
    (0.0, 0.0, 1.0),
];

/// Draws `(t, s, x)` with `0 ≤ s ≤ t ≤ T` and `|x| ≤ state_bound`.
#[derive(Debug, Clone, Copy)]
pub struct DomainSampler {
    pub horizon: f64,
    pub state_bound: f64,
    pub seed: u64,
}

impl DomainSampler {
    pub fn new(horizon: f64, state_bound: f64, seed: u64) -> Self {
        Self {
            horizon,
            state_bound,
            seed,
        }
    }

    /// First `n` points: fixed corners of the domain, then uniform draws.
    pub fn points(&self, n: usize) -> Vec<(f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n)
            .map(|i| match CORNERS.get(i) {
                Some(&(t, s, x)) => (t * self.horizon, s * t * self.horizon, x * self.state_bound),
                None => {
                    let t = self.horizon * rng.random::<f64>();
                    let s = t * rng.random::<f64>();
                    let x = self.state_bound * (2.0 * rng.random::<f64>() - 1.0);
                    (t, s, x)
                }
            })
            .collect()
    }

    /// `(t, s, x, y)` quadruples: the first six pair points reuse `x` as `y`
    /// or pair it with zero, the rest are uniform.
    pub fn pairs(&self, n: usize) -> Vec<(f64, f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x7061_6972);
        (0..n)
            .map(|i| {
                let t = self.horizon * rng.random::<f64>();
                let s = t * rng.random::<f64>();
                let x = self.state_bound * (2.0 * rng.random::<f64>() - 1.0);
                let y = self.state_bound * (2.0 * rng.random::<f64>() - 1.0);
                match i {
                    0 => (t, t, 1.0f64.min(self.state_bound), 0.0),
                    1 | 2 => (t, s, x, x),
                    3 => (t, s, x, 0.0),
                    _ => (t, s, x, y),
                }
            })
            .collect()
    }

    /// Largest `|x − y|²` reachable in the state box.
    pub fn max_square_gap(&self) -> f64 {
        4.0 * self.state_bound * self.state_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplePoint {
    pub t: f64,
    pub s: f64,
    pub x: f64,
}

/// Outcome of [`audit_linear_growth`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthAudit {
    /// `max max(|f|², |g|², ∫|h|²ν) / (1 + |x|²)` over the samples.
    pub estimated_constant: f64,
    pub worst: Option<SamplePoint>,
    pub supplied_constant: Option<f64>,
    pub samples: usize,
    pub pass: bool,
}

fn squared_jump_integral<F: Fn(f64) -> f64>(coeffs: &CoefficientSet, term: F) -> Result<f64> {
    if !coeffs.has_jumps() {
        return Ok(0.0);
    }
    coeffs.measure().integrate(|xi| term(xi).powi(2))
}

fn finite_or_fail(value: f64, what: &str, at: String) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SvieError::Audit(format!("{what} is {value} at {at}")))
    }
}

/// Estimates the smallest `C` with
/// `|f|² ∨ |g|² ∨ ∫|h|²ν ≤ C(1 + |x|²)` on the sampled domain.
///
/// Passes iff every sample satisfies the inequality with the supplied
/// constant. Without one, the estimate is returned as a candidate and the
/// audit passes.
pub fn audit_linear_growth(
    coeffs: &CoefficientSet,
    sampler: &DomainSampler,
    samples: usize,
) -> Result<GrowthAudit> {
    let supplied = coeffs.growth_constant();
    let mut estimate = 0.0f64;
    let mut worst = None;
    let mut pass = true;
    for (t, s, x) in sampler.points(samples) {
        let at = || format!("(t={t}, s={s}, x={x})");
        let f2 = finite_or_fail(coeffs.drift(t, s, x), "drift", at())?.powi(2);
        let g2 = finite_or_fail(coeffs.diffusion(t, s, x), "diffusion", at())?.powi(2);
        let h2 = finite_or_fail(
            squared_jump_integral(coeffs, |xi| coeffs.jump(t, s, x, xi))?,
            "jump second moment",
            at(),
        )?;
        let weight = 1.0 + x * x;
        let ratio = f2.max(g2).max(h2) / weight;
        if ratio > estimate || worst.is_none() {
            estimate = estimate.max(ratio);
            worst = Some(SamplePoint { t, s, x });
        }
        if let Some(c) = supplied {
            let rhs = c * weight + AUDIT_ABS_TOL;
            if f2 > rhs || g2 > rhs || h2 > rhs + MARK_QUAD_RTOL * h2 {
                pass = false;
            }
        }
    }
    Ok(GrowthAudit {
        estimated_constant: estimate,
        worst,
        supplied_constant: supplied,
        samples,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairPoint {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
}

/// Result of the shape checks on `κ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeCheck {
    pub zero_at_origin: bool,
    pub positive: bool,
    pub monotone: bool,
    pub concave: bool,
    /// First failing point or pair, if any.
    pub violation: Option<String>,
}

impl ShapeCheck {
    pub fn pass(&self) -> bool {
        self.zero_at_origin && self.positive && self.monotone && self.concave
    }
}

/// `∫_ε^1 du/κ(u)` along the decade ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsgoodProbe {
    pub epsilons: Vec<f64>,
    pub integrals: Vec<f64>,
    /// Increment over the last decade divided by the increment over the one before.
    pub tail_ratio: f64,
    pub divergent: bool,
}

/// Outcome of [`audit_modulus`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusAudit {
    /// `max (lhs − λκ(|x−y|²))` over the samples; `≤ 0` means no violation.
    pub worst_excess: f64,
    pub worst: Option<PairPoint>,
    pub continuity_pass: bool,
    pub shape: ShapeCheck,
    pub osgood: OsgoodProbe,
    pub samples: usize,
    pub pass: bool,
}

/// Shape checks on `(0, u_max]`: `κ(0) = 0`, positivity, monotonicity and
/// midpoint concavity, each with slack [`AUDIT_ABS_TOL`].
pub fn check_shape(modulus: &Modulus, u_max: f64, samples: usize, seed: u64) -> ShapeCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid: Vec<f64> = (0..=24)
        .map(|k| 10f64.powf(-12.0 + 0.5 * f64::from(k)))
        .filter(|&u| u <= u_max)
        .collect();
    grid.extend((0..samples).map(|_| u_max * (1.0 - rng.random::<f64>())));
    grid.extend(
        (0..samples)
            .map(|_| 1.0 - rng.random::<f64>())
            .filter(|&u| u <= u_max),
    );
    grid.push(u_max);
    grid.sort_by(f64::total_cmp);

    let mut check = ShapeCheck {
        zero_at_origin: modulus.kappa(0.0) == 0.0,
        positive: true,
        monotone: true,
        concave: true,
        violation: None,
    };
    if !check.zero_at_origin {
        check.violation = Some(format!("κ(0) = {}", modulus.kappa(0.0)));
    }
    let note = |c: &mut ShapeCheck, msg: String| {
        if c.violation.is_none() {
            c.violation = Some(msg);
        }
    };
    for &u in &grid {
        let k = modulus.kappa(u);
        if k.is_nan() || k <= 0.0 {
            check.positive = false;
            note(&mut check, format!("κ({u}) = {k} is not positive"));
            break;
        }
    }
    for w in grid.windows(2) {
        if modulus.kappa(w[1]) < modulus.kappa(w[0]) - AUDIT_ABS_TOL {
            check.monotone = false;
            note(
                &mut check,
                format!("κ decreases between {} and {}", w[0], w[1]),
            );
            break;
        }
    }
    for _ in 0..samples {
        let a = grid[rng.random_range(0..grid.len())];
        let b = grid[rng.random_range(0..grid.len())];
        let mid = modulus.kappa(0.5 * (a + b));
        let chord = 0.5 * (modulus.kappa(a) + modulus.kappa(b));
        if mid < chord - AUDIT_ABS_TOL {
            check.concave = false;
            note(
                &mut check,
                format!("midpoint concavity fails for u = {a}, v = {b}: {mid} < {chord}"),
            );
            break;
        }
    }
    check
}

/// Numerical Osgood probe over [`OSGOOD_DECADES`].
pub fn osgood_probe(modulus: &Modulus) -> Result<OsgoodProbe> {
    let epsilons: Vec<f64> = OSGOOD_DECADES.map(|k| 10f64.powi(-k)).collect();
    let integrals = epsilons
        .iter()
        .map(|&eps| modulus.reciprocal_integral(eps, 1.0, 1e-10))
        .collect::<Result<Vec<_>>>()?;
    let n = integrals.len();
    let last = integrals[n - 1] - integrals[n - 2];
    let prev = integrals[n - 2] - integrals[n - 3];
    let tail_ratio = last / prev;
    let divergent =
        integrals.windows(2).all(|w| w[1] > w[0]) && tail_ratio >= OSGOOD_RATIO_THRESHOLD;
    Ok(OsgoodProbe {
        epsilons,
        integrals,
        tail_ratio,
        divergent,
    })
}

/// Checks `|Δf|² ∨ |Δg|² ∨ ∫|Δh|²ν ≤ λκ(|x−y|²)` on sampled quadruples,
/// plus the shape checks and the Osgood probe on `κ`.
///
/// The quadrature-backed jump term is judged with the quadrature's own
/// relative tolerance added to the absolute slack.
pub fn audit_modulus(
    coeffs: &CoefficientSet,
    modulus: &Modulus,
    sampler: &DomainSampler,
    samples: usize,
) -> Result<ModulusAudit> {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst = None;
    let mut continuity_pass = true;
    for (t, s, x, y) in sampler.pairs(samples) {
        let at = || format!("(t={t}, s={s}, x={x}, y={y})");
        let df = finite_or_fail(
            coeffs.drift(t, s, x) - coeffs.drift(t, s, y),
            "drift difference",
            at(),
        )?
        .powi(2);
        let dg = finite_or_fail(
            coeffs.diffusion(t, s, x) - coeffs.diffusion(t, s, y),
            "diffusion difference",
            at(),
        )?
        .powi(2);
        let dh = finite_or_fail(
            squared_jump_integral(coeffs, |xi| {
                coeffs.jump(t, s, x, xi) - coeffs.jump(t, s, y, xi)
            })?,
            "jump difference second moment",
            at(),
        )?;
        let rhs = modulus.bound((x - y).powi(2));
        let lhs = df.max(dg).max(dh);
        let excess = lhs - rhs;
        if excess > worst_excess {
            worst_excess = excess;
            worst = Some(PairPoint { t, s, x, y });
        }
        if df.max(dg) > rhs + AUDIT_ABS_TOL || dh > rhs + AUDIT_ABS_TOL + MARK_QUAD_RTOL * dh {
            continuity_pass = false;
        }
    }
    let shape = check_shape(
        modulus,
        sampler.max_square_gap().max(1.0),
        samples.max(64),
        sampler.seed,
    );
    let osgood = osgood_probe(modulus)?;
    let pass = continuity_pass && shape.pass() && osgood.divergent && modulus.osgood_divergent();
    Ok(ModulusAudit {
        worst_excess,
        worst,
        continuity_pass,
        shape,
        osgood,
        samples,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{example_coefficients, zero_coefficients, CoefficientSet};
    use crate::levy::LevyMeasure;

    fn sampler() -> DomainSampler {
        DomainSampler::new(1.0, 10.0, 17)
    }

    #[test]
    fn example_diffusion_ratio_bounded_by_sixteen() {
        // dense-grid oracle: |4cos²(t−s)x|² / (1+x²) ≤ 16
        let ex = example_coefficients(1.0, 2.0).unwrap();
        let mut worst = 0.0f64;
        for i in 0..=40 {
            for j in 0..=i {
                for k in -20..=20 {
                    let (t, s, x) = (i as f64 / 40.0, j as f64 / 40.0, k as f64 / 2.0);
                    worst = worst.max(ex.diffusion(t, s, x).powi(2) / (1.0 + x * x));
                }
            }
        }
        assert!(worst <= 16.0);
        let only_g = CoefficientSet::builder("g", LevyMeasure::none())
            .diffusion(|t, s, x| 4.0 * (t - s).cos().powi(2) * x)
            .growth_constant(16.0)
            .build();
        let report = audit_linear_growth(&only_g, &sampler(), 2000).unwrap();
        assert!(report.pass);
        assert!(report.estimated_constant <= 16.0);
        assert!(report.estimated_constant > 15.0);
    }

    #[test]
    fn example_passes_growth_audit_with_declared_constant() {
        let ex = example_coefficients(1.0, 2.0).unwrap();
        let report = audit_linear_growth(&ex, &sampler(), 500).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.estimated_constant <= ex.growth_constant().unwrap() * (1.0 + 1e-8));
    }

    #[test]
    fn zero_coefficients_give_zero_constant() {
        let report = audit_linear_growth(&zero_coefficients(), &sampler(), 100).unwrap();
        assert_eq!(report.estimated_constant, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn nan_coefficient_is_reported_with_its_point() {
        let bad = CoefficientSet::builder("bad", LevyMeasure::none())
            .drift(|t, _, x| if x > 0.0 && t > 0.5 { f64::NAN } else { x })
            .build();
        let err = audit_linear_growth(&bad, &sampler(), 100).unwrap_err();
        match err {
            SvieError::Audit(msg) => assert!(msg.contains("drift") && msg.contains("t="), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undersized_constant_fails() {
        let ex = example_coefficients(1.0, 2.0)
            .unwrap()
            .with_growth_constant(Some(1.0));
        assert!(!audit_linear_growth(&ex, &sampler(), 200).unwrap().pass);
    }

    #[test]
    fn example_modulus_unit_pair() {
        // t = s, x = 1, y = 0: g-difference² = 16cos⁴(0) = 16
        let ex = example_coefficients(0.1, 2.0).unwrap();
        let dg = (ex.diffusion(0.3, 0.3, 1.0) - ex.diffusion(0.3, 0.3, 0.0)).powi(2);
        assert_eq!(dg, 16.0);
        let m = ex.modulus().unwrap();
        assert!(m.scale() >= 16.0);
        assert!(dg <= m.bound(1.0));
        let report = audit_modulus(&ex, &m, &sampler(), 400).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn equal_states_have_zero_difference() {
        let ex = example_coefficients(0.1, 2.0).unwrap();
        let m = ex.modulus().unwrap();
        for (t, s, x, y) in sampler().pairs(3).into_iter().skip(1) {
            assert_eq!(x, y);
            assert_eq!(m.bound(0.0), 0.0);
            assert_eq!(ex.drift(t, s, x) - ex.drift(t, s, y), 0.0);
        }
    }

    #[test]
    fn linear_osgood_probe_grows_like_log() {
        let probe = osgood_probe(&Modulus::linear(1.0).unwrap()).unwrap();
        for (eps, v) in probe.epsilons.iter().zip(&probe.integrals) {
            assert!((v - (1.0 / eps).ln()).abs() < 1e-8);
        }
        assert!(probe.divergent);
        assert!((probe.tail_ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sqrt_modulus_is_not_osgood() {
        let probe = osgood_probe(&Modulus::power(0.5, 1.0).unwrap()).unwrap();
        assert!(!probe.divergent);
        assert!(probe.integrals.last().unwrap() < &2.0);
    }

    #[test]
    fn log_linear_probe_diverges() {
        assert!(
            osgood_probe(&Modulus::log_linear(1.0).unwrap())
                .unwrap()
                .divergent
        );
    }

    #[test]
    fn catalogue_moduli_have_valid_shape_on_unit_interval() {
        for m in [
            Modulus::linear(1.0).unwrap(),
            Modulus::log_linear(1.0).unwrap(),
            Modulus::power(0.5, 1.0).unwrap(),
        ] {
            let c = check_shape(&m, 1.0, 2000, 3);
            assert!(c.pass(), "{m}: {c:?}");
        }
    }

    #[test]
    fn squared_modulus_fails_concavity() {
        let c = check_shape(&Modulus::power(2.0, 1.0).unwrap(), 1.0, 2000, 3);
        assert!(!c.concave);
        assert!(c.monotone);
        let ex = example_coefficients(0.1, 2.0).unwrap();
        let sq = Modulus::power(2.0, ex.modulus().unwrap().scale()).unwrap();
        let report = audit_modulus(&ex, &sq, &sampler(), 200).unwrap();
        assert!(!report.pass);
        assert!(!report.shape.concave);
    }
}
