//! End-to-end use of the public API: simulate, write, read back, estimate.

use brownent::analytics::{equilibrium_covariance, propagate_covariance, witness_report, Verdict};
use brownent::estimators::{estimate_cov, estimate_witness, Binning, WitnessMode};
use brownent::io::{self, SliceMeta};
use brownent::model::validate_pair;
use brownent::sim::{probe_slices, simulate_ensemble, simulate_pair_moments};
use brownent::{Covariance2, Initial, OverdampedModel, PairParams, RunConfig};

fn within(value: f64, truth: f64, se: f64) -> bool {
    (value - truth).abs() <= 4.0 * se
}

#[test]
fn slices_survive_a_csv_round_trip() {
    let model = OverdampedModel::pair(&PairParams::new(1.0, 0.5, 1.0)).unwrap();
    let cfg = RunConfig::new(1e-3, 3_000, 11);
    let slices = probe_slices(&model, &Initial::Stationary, 0.5, 0.01, &[0, 1], &cfg).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("slices.csv");
    io::write_csv_file(&csv, |w| io::write_slices(w, &slices)).unwrap();
    io::write_json(&io::sidecar_path(&csv), &SliceMeta::of(&slices)).unwrap();

    let (back, report) = io::ingest_external_csv(&csv, None).unwrap();
    assert_eq!(report.dropped, 0);
    assert_eq!(back, slices);

    let binning = Binning::default();
    let a = estimate_witness(&slices, [1.0, 1.0], WitnessMode::GaussianPlugin, &binning).unwrap();
    let b = estimate_witness(&back, [1.0, 1.0], WitnessMode::GaussianPlugin, &binning).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ingest_drops_damaged_rows_and_reports_lines() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ext.csv");
    let body = "traj,x1_minus,x1,x1_plus\n0,0.1,0.2,0.3\n1,nan,0.2,0.3\n2,0.1,0.2\n3,0.0,0.1,0.2\n4,a,b,c\n";
    std::fs::write(&csv, body).unwrap();
    let meta = SliceMeta { n: 1, t: 1.0, eps: 0.1, dt: None, probed: vec![1], seed: None, temps: None, model: None };
    io::write_json(&io::sidecar_path(&csv), &meta).unwrap();
    let (slices, report) = io::ingest_external_csv(&csv, None).unwrap();
    assert_eq!(slices.len(), 2);
    assert_eq!((report.rows, report.kept, report.dropped), (5, 2, 3));
    assert_eq!(report.dropped_lines, vec![3, 4, 6]);
    assert_eq!(slices.x(1), &[0.1]);
}

#[test]
fn ingest_rejects_wrong_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ext.csv");
    std::fs::write(&csv, "traj,x1,x2\n0,1,2\n").unwrap();
    let meta = SliceMeta { n: 1, t: 1.0, eps: 0.1, dt: None, probed: vec![1], seed: None, temps: None, model: None };
    io::write_json(&io::sidecar_path(&csv), &meta).unwrap();
    assert!(matches!(io::ingest_external_csv(&csv, None), Err(brownent::Error::Schema(_))));
}

#[test]
fn simulated_covariance_tracks_propagation() {
    let params = PairParams::new(1.5, -0.7, 0.8);
    let model = OverdampedModel::pair(&params).unwrap();
    let start = Covariance2::new(0.3, 0.1, 0.6);
    let initial = Initial::Gaussian { mean: vec![0.0, 0.0], cov: vec![0.3, 0.1, 0.1, 0.6], moment_matched: false };
    let times = [0.0, 0.25, 0.7, 2.0];
    let moments = simulate_pair_moments(&model, &initial, &times, &RunConfig::new(0.05, 40_000, 5), [0.0, 0.0]).unwrap();
    for (&t, m) in times.iter().zip(&moments) {
        let est = m.finish().unwrap();
        let exact = propagate_covariance(&params, &start, t).unwrap();
        assert!(within(est.cov.s11, exact.s11, est.se.s11), "t={t} {:?} {exact:?}", est.cov);
        assert!(within(est.cov.s12, exact.s12, est.se.s12), "t={t} {:?} {exact:?}", est.cov);
        assert!(within(est.cov.s22, exact.s22, est.se.s22), "t={t} {:?} {exact:?}", est.cov);
    }
}

#[test]
fn stored_paths_agree_with_streamed_moments() {
    let model = OverdampedModel::pair(&PairParams::new(1.0, 0.3, 1.0)).unwrap();
    let times = [0.5, 1.0];
    let cfg = RunConfig::new(0.01, 2_000, 9);
    let init = Initial::Point { x: vec![1.0, -1.0] };
    let store = simulate_ensemble(&model, &init, &times, &cfg, false).unwrap();
    let streamed = simulate_pair_moments(&model, &init, &times, &cfg, [0.0, 0.0]).unwrap();
    for (k, m) in streamed.iter().enumerate() {
        let direct = estimate_cov(&store.points(k, 0, 1)).unwrap();
        let via = m.finish().unwrap();
        assert!((direct.cov.s11 - via.cov.s11).abs() < 1e-9);
        assert!((direct.cov.s12 - via.cov.s12).abs() < 1e-9);
        assert_eq!(direct.n, via.n);
    }
}

#[test]
fn gibbs_witness_is_recovered_from_the_stationary_ensemble() {
    let params = PairParams::new(1.0, 0.8, 1.0);
    let gibbs = equilibrium_covariance(&validate_pair(params).unwrap()).unwrap();
    let exact = witness_report(&gibbs, 1.0).unwrap();
    assert_eq!(exact.verdict, Verdict::Entangled);
    let model = OverdampedModel::pair(&params).unwrap();
    let slices = probe_slices(&model, &Initial::Stationary, 1.0, 0.01, &[0, 1], &RunConfig::new(1e-3, 20_000, 3)).unwrap();
    let w = estimate_witness(&slices, [1.0, 1.0], WitnessMode::GaussianPlugin, &Binning::default()).unwrap();
    assert!(within(w.min_value, exact.min_value, w.min_se), "{} vs {}", w.min_value, exact.min_value);
    assert_eq!(w.verdict, Verdict::Entangled);
}

#[test]
fn single_precision_pipeline() {
    use brownent::estimators::estimate_local_velocities;
    let model = brownent::sim::OverdampedModel::<f32>::single(1.0, 1.0).unwrap();
    let cfg = brownent::sim::RunConfig::<f32>::new(1e-3, 20_000, 4);
    let slices =
        probe_slices(&model, &brownent::sim::Initial::<f32>::Stationary, 1.0, 0.01, &[0], &cfg).unwrap();
    let field = estimate_local_velocities(&slices, 0, &Binning::default()).unwrap();
    for c in field.reliable().filter(|c| c.x_mean[0].abs() < 1.5) {
        assert!((c.u - c.x_mean[0]).abs() <= 4.0 * c.se_u, "{c:?}");
    }
}
