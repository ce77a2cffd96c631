//! Concave continuity moduli `κ` with a scale `λ`, used in the
//! non-Lipschitz continuity condition `|Δcoef|² ≤ λ·κ(|x − y|²)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SvieError};
use crate::quadrature::{integrate, QuadOptions};

/// Shape of `κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulusKind {
    /// `κ(u) = u`: the Lipschitz case.
    Linear,
    /// `κ(u) = u ln(1/u)` for `u ≤ threshold`, continued along its tangent above.
    LogLinear { threshold: f64 },
    /// `κ(u) = u^exponent`. Concave only for `exponent ≤ 1`.
    Power { exponent: f64 },
}

/// `κ` together with the scale `λ` (a constant upper bound over `[0, T]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    kind: ModulusKind,
    scale: f64,
    osgood_divergent: bool,
}

const INV_E: f64 = 0.367_879_441_171_442_33;

impl Modulus {
    pub fn new(kind: ModulusKind, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(SvieError::Config(format!(
                "modulus scale must be finite and nonnegative, got {scale}"
            )));
        }
        let osgood_divergent = match kind {
            ModulusKind::Linear => true,
            ModulusKind::LogLinear { threshold } => {
                if !(threshold > 0.0 && threshold <= INV_E) {
                    return Err(SvieError::Config(format!(
                        "log-linear threshold must lie in (0, 1/e], got {threshold}"
                    )));
                }
                true
            }
            ModulusKind::Power { exponent } => {
                if !(exponent.is_finite() && exponent > 0.0) {
                    return Err(SvieError::Config(format!(
                        "power exponent must be positive, got {exponent}"
                    )));
                }
                exponent >= 1.0
            }
        };
        Ok(Self {
            kind,
            scale,
            osgood_divergent,
        })
    }

    pub fn linear(scale: f64) -> Result<Self> {
        Self::new(ModulusKind::Linear, scale)
    }

    /// `u ln(1/u)` continued linearly above `1/e`.
    pub fn log_linear(scale: f64) -> Result<Self> {
        Self::new(ModulusKind::LogLinear { threshold: INV_E }, scale)
    }

    pub fn power(exponent: f64, scale: f64) -> Result<Self> {
        Self::new(ModulusKind::Power { exponent }, scale)
    }

    pub fn kind(&self) -> ModulusKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(self, scale: f64) -> Result<Self> {
        Self::new(self.kind, scale)
    }

    /// Whether `∫_{0+} du/κ(u) = ∞` is claimed for this shape.
    pub fn osgood_divergent(&self) -> bool {
        self.osgood_divergent
    }

    /// `κ(u)` for `u ≥ 0`.
    pub fn kappa(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ModulusKind::Linear => u,
            ModulusKind::LogLinear { threshold } => {
                if u <= threshold {
                    -u * u.ln()
                } else {
                    let log_inv = -threshold.ln();
                    threshold * log_inv + (log_inv - 1.0) * (u - threshold)
                }
            }
            ModulusKind::Power { exponent } => u.powf(exponent),
        }
    }

    /// `λ·κ(u)`.
    pub fn bound(&self, u: f64) -> f64 {
        self.scale * self.kappa(u)
    }

    /// `∫_a^b du/κ(u)` for `a, b > 0`, integrated in `w = ln u`.
    ///
    /// Fails with a domain error if `κ ≤ 0` is met inside the range.
    pub fn reciprocal_integral(&self, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(SvieError::Domain(format!(
                "reciprocal integral needs positive finite limits, got [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        let mut bad: Option<f64> = None;
        let value = integrate(
            |w| {
                let u = w.exp();
                let k = self.kappa(u);
                if k > 0.0 {
                    u / k
                } else {
                    bad.get_or_insert(u);
                    0.0
                }
            },
            a.ln(),
            b.ln(),
            QuadOptions::relative(rel_tol),
        )?
        .value;
        if let Some(u) = bad {
            return Err(SvieError::Domain(format!(
                "κ({u}) ≤ 0 inside the integration range"
            )));
        }
        Ok(value)
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModulusKind::Linear => write!(f, "linear"),
            ModulusKind::LogLinear { threshold } if threshold == INV_E => write!(f, "loglinear"),
            ModulusKind::LogLinear { threshold } => write!(f, "loglinear:{threshold}"),
            ModulusKind::Power { exponent } => write!(f, "power:{exponent}"),
        }
    }
}

/// Parses `linear`, `loglinear`, `loglinear:<threshold>` or `power:<exponent>`
/// into a shape with unit scale.
impl FromStr for Modulus {
    type Err = SvieError;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let parse_arg = |a: &str| {
            a.parse::<f64>()
                .map_err(|_| SvieError::Config(format!("bad modulus parameter '{a}'")))
        };
        match (head, arg) {
            ("linear", None) => Modulus::linear(1.0),
            ("loglinear", None) => Modulus::log_linear(1.0),
            ("loglinear", Some(a)) => Modulus::new(
                ModulusKind::LogLinear {
                    threshold: parse_arg(a)?,
                },
                1.0,
            ),
            ("power", Some(a)) => Modulus::power(parse_arg(a)?, 1.0),
            _ => Err(SvieError::Config(format!("unknown modulus '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_values() {
        let lin = Modulus::linear(2.0).unwrap();
        assert_eq!(lin.kappa(0.3), 0.3);
        assert_eq!(lin.bound(0.3), 0.6);
        let ll = Modulus::log_linear(1.0).unwrap();
        assert_eq!(ll.kappa(0.0), 0.0);
        assert!((ll.kappa(0.1) - 0.1 * 10f64.ln()).abs() < 1e-15);
        // tangent at 1/e is flat
        assert!((ll.kappa(5.0) - INV_E).abs() < 1e-15);
    }

    #[test]
    fn continuity_at_threshold() {
        let m = Modulus::new(ModulusKind::LogLinear { threshold: 0.05 }, 1.0).unwrap();
        let below = m.kappa(0.05 - 1e-12);
        let above = m.kappa(0.05 + 1e-12);
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn osgood_claims() {
        assert!(Modulus::linear(1.0).unwrap().osgood_divergent());
        assert!(Modulus::log_linear(1.0).unwrap().osgood_divergent());
        assert!(!Modulus::power(0.5, 1.0).unwrap().osgood_divergent());
        assert!(Modulus::power(2.0, 1.0).unwrap().osgood_divergent());
    }

    #[test]
    fn reciprocal_integral_of_linear_is_log() {
        let m = Modulus::linear(1.0).unwrap();
        let v = m.reciprocal_integral(1e-12, 1.0, 1e-10).unwrap();
        assert!((v - 12.0 * 10f64.ln()).abs() < 1e-9);
        let back = m.reciprocal_integral(1.0, 1e-12, 1e-10).unwrap();
        assert_eq!(v, -back);
    }

    #[test]
    fn parse_and_display() {
        for s in [
            "linear",
            "loglinear",
            "power:2",
            "power:0.5",
            "loglinear:0.1",
        ] {
            let m: Modulus = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("cubic".parse::<Modulus>().is_err());
        assert!("power:x".parse::<Modulus>().is_err());
        assert!("loglinear:0.9".parse::<Modulus>().is_err());
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(Modulus::linear(-1.0).is_err());
        assert!(Modulus::linear(f64::NAN).is_err());
    }
}
