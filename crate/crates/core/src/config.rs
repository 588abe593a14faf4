//! JSON descriptions of potentials, pulling schedules, models and integrator settings.

use serde::{Deserialize, Serialize};

use crate::dynamics::{default_dt, Crossing, IntegratorConfig, Scheme};
use crate::error::Result;
use crate::model::{Frame, ModelParams, PullSchedule};
use crate::poly::Polynomial;
use crate::potential::{ExtendedPotential, PotentialSpec};

/// `{"form": "quadratic", "coeffs": [c2, c1, c0], "a": .., "b": ..}` or
/// `{"form": "piecewise_poly", "knots": [..], "pieces": [[..], ..], "a": .., "b": ..}`.
/// Polynomial coefficients are listed highest power first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Quadratic {
        coeffs: [f64; 3],
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u0: Option<f64>,
    },
    PiecewisePoly {
        knots: Vec<f64>,
        pieces: Vec<Vec<f64>>,
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u0: Option<f64>,
    },
}

impl PotentialConfig {
    /// `U(y) = y² - 4y + 3` with `a = 2`, `b = 3`.
    pub fn reference_example() -> Self {
        PotentialConfig::Quadratic {
            coeffs: [1.0, -4.0, 3.0],
            a: 2.0,
            b: 3.0,
            a0: None,
            u0: None,
        }
    }

    pub fn build(&self) -> Result<PotentialSpec<f64>> {
        let (spec, a0, u0) = match self {
            PotentialConfig::Quadratic { coeffs, a, b, a0, u0 } => {
                (PotentialSpec::quadratic(*coeffs, *a, *b)?, a0, u0)
            }
            PotentialConfig::PiecewisePoly {
                knots,
                pieces,
                a,
                b,
                a0,
                u0,
            } => (PotentialSpec::piecewise(knots.clone(), pieces.clone(), *a, *b)?, a0, u0),
        };
        Ok(match (a0, u0) {
            (Some(a0), Some(u0)) => spec.with_convexity(*a0, *u0),
            (Some(a0), None) => spec.with_convexity_onset(*a0),
            (None, Some(u0)) => {
                let a0 = spec.a0();
                spec.with_convexity(a0, *u0)
            }
            (None, None) => spec,
        })
    }

    /// Fills in the defaulted convexity data from a built spec.
    pub fn resolved(&self, spec: &PotentialSpec<f64>) -> Self {
        let mut out = self.clone();
        match &mut out {
            PotentialConfig::Quadratic { a0, u0, .. } | PotentialConfig::PiecewisePoly { a0, u0, .. } => {
                *a0 = Some(spec.a0());
                *u0 = Some(spec.u0());
            }
        }
        out
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, PotentialConfig::Quadratic { .. })
    }
}

/// `{"kind": "linear"}` or `{"kind": "polynomial", "coeffs": [0, c1, c2, ..]}` (lowest power first).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PullConfig {
    #[default]
    Linear,
    Polynomial { coeffs: Vec<f64> },
}

impl PullConfig {
    pub fn build(&self) -> PullSchedule<f64> {
        match self {
            PullConfig::Linear => PullSchedule::Linear,
            PullConfig::Polynomial { coeffs } => {
                PullSchedule::Polynomial(Polynomial::from_ascending(coeffs.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub potential: PotentialConfig,
    pub sigma: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub pull: PullConfig,
    /// Width of the smooth continuation beyond `b`; defaults to `(b - a)/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blend_width: Option<f64>,
}

impl ModelConfig {
    pub fn extended_potential(&self) -> Result<ExtendedPotential<f64>> {
        let spec = self.potential.build()?;
        match self.blend_width {
            Some(w) => spec.extend(w),
            None => spec.extend_default(),
        }
    }

    pub fn build(&self) -> Result<ModelParams<f64>> {
        ModelParams::with_pull(self.extended_potential()?, self.sigma, self.epsilon, self.pull.build())
    }

    /// Copy with every default written out.
    pub fn resolved(&self, params: &ModelParams<f64>) -> Self {
        let mut out = self.clone();
        out.potential = self.potential.resolved(params.potential().base());
        out.blend_width = Some(params.potential().blend_width());
        out
    }
}

/// Named parameter sets on the reference example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `σ = 0.01`, `ε = 0.25`.
    Fast,
    /// `σ = 0.02`, `ε = 5e-4`.
    Slow,
}

impl Preset {
    pub fn sigma_epsilon(self) -> (f64, f64) {
        match self {
            Preset::Fast => (0.01, 0.25),
            Preset::Slow => (0.02, 5e-4),
        }
    }

    pub fn model(self) -> ModelConfig {
        let (sigma, epsilon) = self.sigma_epsilon();
        ModelConfig {
            potential: PotentialConfig::reference_example(),
            sigma,
            epsilon,
            pull: PullConfig::Linear,
            blend_width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameName {
    Physical,
    Rescaled,
}

impl From<FrameName> for Frame {
    fn from(f: FrameName) -> Self {
        match f {
            FrameName::Physical => Frame::Physical,
            FrameName::Rescaled => Frame::Rescaled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    ExplicitEm,
    SemiImplicitEm,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::ExplicitEm => Scheme::ExplicitEm,
            SchemeName::SemiImplicitEm => Scheme::SemiImplicitEm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingName {
    Grid,
    LinearInterp,
    BridgeCorrected,
}

impl From<CrossingName> for Crossing {
    fn from(c: CrossingName) -> Self {
        match c {
            CrossingName::Grid => Crossing::Grid,
            CrossingName::LinearInterp => Crossing::LinearInterp,
            CrossingName::BridgeCorrected => Crossing::BridgeCorrected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    #[serde(default = "default_frame")]
    pub frame: FrameName,
    /// Step in the frame's own time unit; defaults to the model's default step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    #[serde(default = "default_crossing")]
    pub crossing: CrossingName,
    #[serde(default)]
    pub seed: u64,
}

fn default_frame() -> FrameName {
    FrameName::Physical
}
fn default_scheme() -> SchemeName {
    SchemeName::ExplicitEm
}
fn default_crossing() -> CrossingName {
    CrossingName::BridgeCorrected
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            frame: default_frame(),
            dt: None,
            scheme: default_scheme(),
            crossing: default_crossing(),
            seed: 0,
        }
    }
}

impl IntegratorSettings {
    pub fn build(&self, params: &ModelParams<f64>) -> IntegratorConfig<f64> {
        let frame = self.frame.into();
        IntegratorConfig {
            frame,
            dt: self.dt.unwrap_or_else(|| default_dt(params, frame)),
            scheme: self.scheme.into(),
            crossing: self.crossing.into(),
            seed: self.seed,
            trial_index: 0,
        }
    }

    pub fn resolved(&self, params: &ModelParams<f64>) -> Self {
        let mut out = self.clone();
        out.dt = Some(self.build(params).dt);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_round_trip() {
        let json = r#"{"form": "quadratic", "coeffs": [1, -4, 3], "a": 2, "b": 3}"#;
        let cfg: PotentialConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg, PotentialConfig::reference_example());
        let spec = cfg.build().unwrap();
        assert_eq!(spec.a0(), 1.0);
        let resolved = cfg.resolved(&spec);
        let again: PotentialConfig = serde_json::from_str(&serde_json::to_string(&resolved).unwrap()).unwrap();
        assert_eq!(again.build().unwrap(), spec);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"form": "quadratic", "coeffs": [1, -4, 3], "a": 2, "b": 3, "c": 1}"#;
        assert!(serde_json::from_str::<PotentialConfig>(bad).is_err());
        let bad = r#"{"potential": {"form": "quadratic", "coeffs": [1, -4, 3], "a": 2, "b": 3},
                      "sigma": 0.01, "epsilon": 0.25, "speed": 1}"#;
        assert!(serde_json::from_str::<ModelConfig>(bad).is_err());
        assert!(serde_json::from_str::<IntegratorSettings>(r#"{"step": 0.1}"#).is_err());
    }

    #[test]
    fn model_defaults() {
        let json = r#"{"potential": {"form": "quadratic", "coeffs": [1, -4, 3], "a": 2, "b": 3},
                       "sigma": 0.01, "epsilon": 0.25}"#;
        let cfg: ModelConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.pull, PullConfig::Linear);
        let m = cfg.build().unwrap();
        assert_eq!(m.t_close(), 0.5);
        assert_eq!(cfg.resolved(&m).blend_width, Some(0.5));
        let integ: IntegratorSettings = serde_json::from_str("{}").unwrap();
        let ic = integ.build(&m);
        assert_eq!(ic.dt, 0.01);
        assert_eq!(ic.crossing, Crossing::BridgeCorrected);
        let poly = r#"{"kind": "polynomial", "coeffs": [0, 1, 1]}"#;
        let p: PullConfig = serde_json::from_str(poly).unwrap();
        assert!((p.build().value(0.5) - 0.75).abs() < 1e-15);
    }
}
