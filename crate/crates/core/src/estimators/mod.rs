//! Sample-based estimators.

pub mod binning;
pub mod field;
pub mod moments;
pub mod stats;
pub mod witness;

pub use binning::{Axis, Binning};
pub use field::{estimate_cg_velocities, estimate_local_velocities, marginalize, Grid, MarginalCell, VelocityCell, VelocityField};
pub use moments::{estimate_cov, CovEstimate, PairMoments};
pub use stats::MeanAcc;
pub use witness::{
    common_temperature, estimate_witness, guarded_verdict, plugin_witness, uncertainty_suite, Estimate, SampleWitness,
    SignEstimate, UncertaintyCheck, UncertaintyReport, WitnessMode, WitnessMoments,
};
