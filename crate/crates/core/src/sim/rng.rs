//! Per-trajectory random streams.
//!
//! Trajectory `k` of a run seeded with `seed` draws from ChaCha8 keyed by
//! `seed` on stream `k`. ChaCha is counter based, so the `i`-th draw of a
//! trajectory depends only on `(seed, k, i)` and never on which thread or in
//! which order trajectories are generated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

pub type TrajectoryRng = ChaCha8Rng;

pub fn trajectory_rng(seed: u64, traj: u64) -> TrajectoryRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(traj);
    rng
}

#[inline]
pub fn normal<R: Real>(rng: &mut TrajectoryRng) -> R {
    R::lit(rng.sample::<f64, _>(StandardNormal))
}

pub fn fill_normals<R: Real>(rng: &mut TrajectoryRng, out: &mut [R]) {
    for z in out {
        *z = normal(rng);
    }
}
