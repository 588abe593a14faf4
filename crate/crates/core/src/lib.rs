//! Simulation and verification toolkit for a Brownian particle held between a fixed neighbour
//! and a receding one by a cutoff convex pair potential.
//!
//! The numerical core is generic over the scalar type through [`Real`]; the `*64` aliases at the
//! crate root fix it to `f64`, which is what the experiments and the command line use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod config;
pub mod deviation;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod poly;
pub mod potential;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use chain::{ChainBreakRecord, ChainConfig, ForceMode};
pub use deviation::{BoundaryCurves, LinearizationData, VarianceData};
pub use dynamics::{BreakRecord, Crossing, IntegratorConfig, Scheme, Side};
pub use error::{Error, Result};
pub use model::{Frame, ModelParams, PullSchedule};
pub use potential::{ExtendedPotential, Order, PotentialSpec};
pub use scalar::Real;
pub use experiments::{Regime, RegimeSpec};
pub use stats::EstimateResult;

pub type PotentialSpec64 = PotentialSpec<f64>;
pub type ExtendedPotential64 = ExtendedPotential<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;
pub type BreakRecord64 = BreakRecord<f64>;
pub type ChainConfig64 = ChainConfig<f64>;
pub type LinearizationData64 = LinearizationData<f64>;
pub type BoundaryCurves64 = BoundaryCurves<f64>;
pub type VarianceData64 = VarianceData<f64>;
