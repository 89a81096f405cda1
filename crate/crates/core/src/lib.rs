//! Coupled overdamped brownian particles: exact Gaussian statistics, Langevin
//! Monte Carlo, operational estimates of coarse-grained and osmotic velocities,
//! and the entanglement-witness inequality `<(Δu1 + ζΔu2)²> + <(Δx1 + εΔx2)²> < 4T`.
//!
//! Units: friction and mass are 1 in the overdamped modules, so stiffness and
//! coupling are rates and coordinates carry the dimension of `√T`. The
//! underdamped [`kramers`] module keeps `m` and `γ` explicit.
//!
//! Numerical code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is also the precision of all file formats.

// `!(x > 0)` style guards are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytics;
pub mod error;
pub mod estimators;
pub mod io;
pub mod kramers;
pub mod model;
pub mod quad;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use model::{Sign, SignPair};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type PairParams = model::PairParams<f64>;
pub type ValidatedPairParams = model::ValidatedPairParams<f64>;
pub type Covariance2 = model::Covariance2<f64>;
pub type KramersParams = model::KramersParams<f64>;
pub type OsmoticPair = analytics::OsmoticPair<f64>;
pub type WitnessReport = analytics::WitnessReport<f64>;
pub type Window = analytics::Window<f64>;
pub type ModeRates = kramers::ModeRates<f64>;
pub type ResponsePair = kramers::ResponsePair<f64>;
pub type CrossoverTable = kramers::CrossoverTable<f64>;
pub type OverdampedModel = sim::OverdampedModel<f64>;
pub type EnsembleSlices = sim::EnsembleSlices<f64>;
pub type TrajectoryStore = sim::TrajectoryStore<f64>;
pub type RunConfig = sim::RunConfig<f64>;
pub type Initial = sim::Initial<f64>;
pub type VelocityField = estimators::VelocityField<f64>;
pub type SampleWitness = estimators::SampleWitness<f64>;
pub type CovEstimate = estimators::CovEstimate<f64>;
pub type UncertaintyReport = estimators::UncertaintyReport<f64>;
