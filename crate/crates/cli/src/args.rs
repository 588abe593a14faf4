use std::path::PathBuf;

use breakchain::config::{CrossingName, FrameName, Preset, SchemeName};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check a potential against the model's structural conditions.
    Validate,
    /// Deterministic path, linearisation and corridor curves.
    Deterministic,
    /// Monte Carlo estimate of the break side.
    Simulate,
    /// Break-side estimates over a grid of noise levels and pulling speeds.
    Sweep,
    /// Corridor exceedance of the linearised process against its exponential bound.
    Corridor,
    /// Distribution of the first approach to the closing corridor.
    TauL,
    /// Behaviour after the first approach, and the reflection identity.
    Conditional,
    /// Break location in an N-particle chain.
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Fast,
    Slow,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Fast => Preset::Fast,
            PresetArg::Slow => Preset::Slow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameArg {
    Physical,
    Rescaled,
}

impl From<FrameArg> for FrameName {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::Physical => FrameName::Physical,
            FrameArg::Rescaled => FrameName::Rescaled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    ExplicitEm,
    SemiImplicitEm,
}

impl From<SchemeArg> for SchemeName {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::ExplicitEm => SchemeName::ExplicitEm,
            SchemeArg::SemiImplicitEm => SchemeName::SemiImplicitEm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CrossingArg {
    Grid,
    LinearInterp,
    BridgeCorrected,
}

impl From<CrossingArg> for CrossingName {
    fn from(c: CrossingArg) -> Self {
        match c {
            CrossingArg::Grid => CrossingName::Grid,
            CrossingArg::LinearInterp => CrossingName::LinearInterp,
            CrossingArg::BridgeCorrected => CrossingName::BridgeCorrected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SideArg {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ForceModeArg {
    AllPairs,
    NeighborList,
}

/// Simulation and verification experiments for a stretched three-particle chain.
///
/// Settings are resolved in order: preset (default `fast`), then the JSON file given with
/// `--config`, then individual flags.
#[derive(Debug, Parser)]
#[command(name = "breakchain", version)]
pub struct Cli {
    pub command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Canonical parameter set on the reference example.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<PresetArg>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for results.json, config.json and CSV tables; results go to stdout otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record wall-clock runtime in the results (breaks byte-identical reruns).
    #[arg(long, global = true)]
    pub timing: bool,

    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub frame: Option<FrameArg>,
    /// Integration step in the chosen frame's time unit.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long, global = true, value_enum)]
    pub crossing: Option<CrossingArg>,

    /// Number of trials.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub side: Option<SideArg>,
    /// Regime classification margin.
    #[arg(long, global = true)]
    pub margin: Option<f64>,
    /// Corridor half-width D.
    #[arg(long, global = true)]
    pub d: Option<f64>,
    /// Corridor levels as multiples of σ.
    #[arg(long, global = true, value_delimiter = ',')]
    pub h_over_sigma: Option<Vec<f64>>,
    /// Corridor horizons.
    #[arg(long, global = true, value_delimiter = ',')]
    pub t_end: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub f_plus: Option<f64>,
    #[arg(long, global = true)]
    pub t_star: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigmas: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub particles: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub force_mode: Option<ForceModeArg>,
    /// With `simulate`, write every k-th step of trial 0 to trajectory.csv.
    #[arg(long, global = true)]
    pub trace_thin: Option<usize>,
}
