//! Monte Carlo trajectory engine.

mod engine;
pub mod linear;
pub mod model;
pub mod rng;
pub mod slices;

pub use engine::{
    probe_slices, simulate_ensemble, simulate_kramers, simulate_pair_moments, Initial, Integrator, PhaseEnsemble,
    RunConfig, TrajectoryStore, CHUNK,
};
pub use model::{euler_maruyama_step, exact_pair_step, kramers_em_step, OverdampedModel};
pub use slices::EnsembleSlices;
