//! Run configuration: a versioned TOML key/value file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use svie_core::coefficients::{from_catalogue, multiplicative};
use svie_core::{CoefficientSet, Modulus, TimeGrid};

pub const SCHEMA: &str = "svie-run/1";

/// Multiplicative kernels given inline in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineCoefficients {
    /// `f = drift·e^{−decay(t−s)}·x`
    pub drift: f64,
    /// `g = diffusion·e^{−decay(t−s)}·x`
    pub diffusion: f64,
    /// `h = jump·e^{−decay(t−s)}·ξ·x`
    pub jump: f64,
    /// `φ ≡ initial`
    pub initial: f64,
    #[serde(default)]
    pub decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientChoice {
    Catalogue(String),
    Inline(InlineCoefficients),
}

/// 64-bit seeds beyond `i64::MAX` are stored as decimal strings, since TOML
/// integers are signed.
mod seed_format {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(v) => u64::try_from(v).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub coefficient_set: CoefficientChoice,
    /// Horizon `T`, time units.
    pub horizon: f64,
    /// Uniform grid steps `n`.
    pub steps: usize,
    /// Monte Carlo paths.
    pub paths: usize,
    #[serde(with = "seed_format")]
    pub master_seed: u64,
    /// Jump coefficient `c` of the example set.
    pub jump_coefficient: f64,
    /// Jump rate `ν(R₀)`, jumps per unit time.
    pub jump_rate: f64,
    pub picard_tolerance: f64,
    /// Defaults to `steps + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_k_max: Option<usize>,
    pub output_dir: PathBuf,
    /// Overrides the set's declared modulus shape, e.g. `"loglinear"` or `"power:2"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<String>,
    /// Overrides the set's declared modulus scale `λ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus_scale: Option<f64>,
    pub audit_samples: usize,
    /// Audited states satisfy `|x| ≤ audit_state_bound`.
    pub audit_state_bound: f64,
    pub psi_iterations: usize,
    /// Paths for the Cauchy-difference check; defaults to `paths`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy_paths: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA.into(),
            coefficient_set: CoefficientChoice::Catalogue("example".into()),
            horizon: 0.5,
            steps: 256,
            paths: 10_000,
            master_seed: 20_240_601,
            jump_coefficient: 0.1,
            jump_rate: 2.0,
            picard_tolerance: svie_core::solver::DEFAULT_PICARD_TOLERANCE,
            picard_k_max: None,
            output_dir: PathBuf::from("out"),
            modulus: None,
            modulus_scale: None,
            audit_samples: 4096,
            audit_state_bound: 10.0,
            psi_iterations: 30,
            cauchy_paths: None,
        }
    }
}

fn require(ok: bool, field: &str, why: &str) -> anyhow::Result<()> {
    if ok {
        Ok(())
    } else {
        bail!("invalid config: field `{field}` {why}")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("config parse error")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        require(
            self.schema == SCHEMA,
            "schema",
            &format!("must be \"{SCHEMA}\""),
        )?;
        require(
            self.horizon.is_finite() && self.horizon > 0.0,
            "horizon",
            "must be positive and finite",
        )?;
        require(self.steps >= 1, "steps", "must be at least 1")?;
        require(self.paths >= 1, "paths", "must be at least 1")?;
        require(
            self.jump_coefficient.is_finite() && self.jump_coefficient > 0.0,
            "jump_coefficient",
            "must be positive and finite",
        )?;
        require(
            self.jump_rate.is_finite() && self.jump_rate >= 0.0,
            "jump_rate",
            "must be finite and nonnegative",
        )?;
        require(
            self.picard_tolerance.is_finite() && self.picard_tolerance >= 0.0,
            "picard_tolerance",
            "must be finite and nonnegative",
        )?;
        require(
            self.picard_k_max != Some(0),
            "picard_k_max",
            "must be at least 1",
        )?;
        require(
            self.audit_samples >= 1,
            "audit_samples",
            "must be at least 1",
        )?;
        require(
            self.audit_state_bound.is_finite() && self.audit_state_bound > 0.0,
            "audit_state_bound",
            "must be positive and finite",
        )?;
        require(
            self.psi_iterations >= 1,
            "psi_iterations",
            "must be at least 1",
        )?;
        require(
            self.cauchy_paths != Some(0),
            "cauchy_paths",
            "must be at least 1",
        )?;
        if let Some(s) = self.modulus_scale {
            require(
                s.is_finite() && s >= 0.0,
                "modulus_scale",
                "must be finite and nonnegative",
            )?;
        }
        if let Some(m) = &self.modulus {
            m.parse::<Modulus>()
                .map_err(|e| anyhow::anyhow!("invalid config: field `modulus`: {e}"))?;
        }
        if let CoefficientChoice::Inline(c) = &self.coefficient_set {
            require(
                [c.drift, c.diffusion, c.jump, c.initial]
                    .iter()
                    .all(|v| v.is_finite())
                    && c.decay.is_finite()
                    && c.decay >= 0.0,
                "coefficient_set",
                "inline constants must be finite with decay ≥ 0",
            )?;
        }
        Ok(())
    }

    pub fn grid(&self) -> anyhow::Result<TimeGrid> {
        Ok(TimeGrid::new(self.horizon, self.steps)?)
    }

    pub fn k_max(&self) -> usize {
        self.picard_k_max.unwrap_or(self.steps + 1)
    }

    pub fn coefficients(&self) -> anyhow::Result<CoefficientSet> {
        let set = match &self.coefficient_set {
            CoefficientChoice::Catalogue(name) => {
                from_catalogue(name, self.jump_coefficient, self.jump_rate)
                    .context("invalid config: field `coefficient_set`")?
            }
            CoefficientChoice::Inline(c) => multiplicative(
                c.drift,
                c.diffusion,
                c.jump,
                c.initial,
                c.decay,
                self.jump_rate,
            )
            .context("invalid config: field `coefficient_set`")?,
        };
        Ok(set)
    }

    /// The set's declared modulus with the config overrides applied.
    pub fn modulus(&self, coeffs: &CoefficientSet) -> anyhow::Result<Modulus> {
        let declared = coeffs.modulus().unwrap_or(Modulus::linear(0.0)?);
        let shape = match &self.modulus {
            Some(m) => m.parse::<Modulus>()?,
            None => declared,
        };
        Ok(shape.with_scale(self.modulus_scale.unwrap_or(declared.scale()))?)
    }

    pub fn cauchy_paths(&self) -> usize {
        self.cauchy_paths.unwrap_or(self.paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.emit()).unwrap(), cfg);
    }

    #[test]
    fn large_seed_and_inline_round_trip() {
        let cfg = RunConfig {
            master_seed: u64::MAX,
            coefficient_set: CoefficientChoice::Inline(InlineCoefficients {
                drift: 0.5,
                diffusion: 0.2,
                jump: 0.1,
                initial: 1.0,
                decay: 0.0,
            }),
            picard_k_max: Some(12),
            modulus: Some("loglinear".into()),
            horizon: 0.1 + 0.2,
            ..RunConfig::default()
        };
        let text = cfg.emit();
        assert!(text.contains("\"18446744073709551615\""));
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let mut cfg = RunConfig {
            steps: 0,
            ..RunConfig::default()
        };
        let err = RunConfig::parse(&cfg.emit()).unwrap_err().to_string();
        assert!(err.contains("`steps`"), "{err}");
        cfg = RunConfig {
            schema: "other".into(),
            ..RunConfig::default()
        };
        assert!(RunConfig::parse(&cfg.emit())
            .unwrap_err()
            .to_string()
            .contains("`schema`"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = RunConfig::default().emit() + "\nspeed = 3\n";
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn modulus_overrides() {
        let cfg = RunConfig {
            modulus: Some("power:2".into()),
            ..RunConfig::default()
        };
        let set = cfg.coefficients().unwrap();
        let m = cfg.modulus(&set).unwrap();
        assert_eq!(m.to_string(), "power:2");
        assert_eq!(m.scale(), set.modulus().unwrap().scale());
    }
}
