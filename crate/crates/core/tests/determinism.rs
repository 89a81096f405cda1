//! Results depend on the seed only, never on the worker count.

use brownent::sim::{probe_slices, simulate_kramers, simulate_pair_moments, Integrator};
use brownent::{Initial, KramersParams, OverdampedModel, PairParams, RunConfig};
use proptest::prelude::*;

fn pair() -> OverdampedModel {
    OverdampedModel::pair(&PairParams::new(1.0, 0.4, 1.0)).unwrap()
}

#[test]
fn slices_identical_across_thread_counts() {
    let init = Initial::Gaussian { mean: vec![0.2, -0.1], cov: vec![0.5, 0.1, 0.1, 0.5], moment_matched: true };
    let run = |threads| {
        let cfg = RunConfig::new(1e-3, 5_000, 21).threads(Some(threads));
        probe_slices(&pair(), &init, 0.2, 0.01, &[0, 1], &cfg).unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn kramers_identical_across_thread_counts() {
    let kp = KramersParams::new(0.05, 1.0, 1.0, 1.0).unwrap();
    let run = |threads, integrator| {
        let cfg = RunConfig::new(1e-3, 3_000, 2).threads(Some(threads)).integrator(integrator);
        simulate_kramers(&kp, &Initial::Point { x: vec![0.0, 0.0] }, &[0.1, 0.3], &cfg).unwrap()
    };
    for integrator in [Integrator::Exact, Integrator::EulerMaruyama] {
        assert_eq!(run(1, integrator), run(5, integrator));
    }
}

#[test]
fn different_seeds_differ() {
    let cfg = |seed| RunConfig::new(1e-2, 500, seed);
    let a = simulate_pair_moments(&pair(), &Initial::Stationary, &[1.0], &cfg(1), [0.0, 0.0]).unwrap();
    let b = simulate_pair_moments(&pair(), &Initial::Stationary, &[1.0], &cfg(2), [0.0, 0.0]).unwrap();
    assert_ne!(a[0].finish().unwrap().cov, b[0].finish().unwrap().cov);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn any_thread_count_any_seed(seed in any::<u64>(), threads in 1usize..6, n in 1usize..2_500) {
        let cfg = RunConfig::new(0.05, n, seed);
        let base = simulate_pair_moments(&pair(), &Initial::Stationary, &[0.5], &cfg, [0.0, 0.0]).unwrap();
        let other = simulate_pair_moments(&pair(), &Initial::Stationary, &[0.5], &cfg.threads(Some(threads)), [0.0, 0.0]).unwrap();
        prop_assert_eq!(base, other);
    }
}
