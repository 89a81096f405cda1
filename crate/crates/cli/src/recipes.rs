//! Named scenario pipelines. Each runs end to end, writes its artifacts and a
//! `summary.json`, and reports one line per check.

use brownent::analytics::{
    equilibrium_covariance, equilibrium_threshold, equilibrium_witness, free_window, propagate_covariance,
    witness_report, Verdict,
};
use brownent::estimators::{
    estimate_cg_velocities, estimate_local_velocities, marginalize, plugin_witness, uncertainty_suite, Binning,
    SampleWitness, WitnessMode,
};
use brownent::io;
use brownent::kramers::{
    conditional_momentum_check, coordinate_correlator_with, crossover_report, in_fast_relaxed_regime, mode_rates,
    overdamped_correlator, CorrelatorMethod,
};
use brownent::model::{validate_pair, Covariance2, KramersParams};
use brownent::sim::{probe_slices, simulate_kramers, simulate_pair_moments, Initial, OverdampedModel, RunConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commands::{verdict_name, Run};
use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const RECIPES: [&str; 9] = [
    "equilibrium-witness",
    "threshold-scan",
    "decoupled-decay",
    "free-window",
    "uncertainty",
    "velocity-field",
    "local-velocities",
    "kramers-closed-forms",
    "crossover",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass, detail: detail.into() }
    }

    pub fn line(&self, recipe: &str) -> String {
        format!("{} {recipe}/{}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub recipe: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

/// Starting config of a recipe, before user overrides.
pub fn base_config(name: &str) -> Result<ExperimentConfig, CliError> {
    let mut c = ExperimentConfig { scenario: name.to_string(), ..ExperimentConfig::default() };
    c.model.a = 1.0;
    c.model.g = 0.5;
    c.model.temperature = 1.0;
    match name {
        "equilibrium-witness" => {
            c.initial = Initial::Point { x: vec![0.0, 0.0] };
            c.t = 10.0;
            c.dt = 0.01;
            c.n_traj = 200_000;
        }
        "threshold-scan" => {
            c.model.a = 2.0;
            c.model.g = 0.0;
            c.t = 1.0;
            c.dt = 0.01;
            c.n_traj = 20_000;
        }
        "decoupled-decay" => {
            c.model.g = 0.0;
            let s = 4.0 / 3.0;
            let cross = -2.0 / 3.0;
            c.initial = Initial::Gaussian { mean: vec![0.0, 0.0], cov: vec![s, cross, cross, s], moment_matched: true };
            c.times = vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];
            c.dt = 0.01;
            c.n_traj = 100_000;
        }
        "free-window" => {
            c.model.a = 0.0;
            c.model.g = 0.0;
            c.initial = Initial::Gaussian { mean: vec![0.0, 0.0], cov: vec![0.5, 0.1, 0.1, 0.5], moment_matched: true };
            c.times = (0..=300).map(|k| k as f64 * 0.002).collect();
            c.dt = 0.0005;
            c.n_traj = 200_000;
        }
        "uncertainty" => {
            c.n_traj = 200_000;
        }
        "velocity-field" => {
            c.model.particles = 1;
            c.probed = vec![1];
            c.n_traj = 200_000;
        }
        "local-velocities" => {
            c.seed = 2;
            c.n_traj = 200_000;
        }
        "kramers-closed-forms" => {}
        "crossover" => {
            c.t = 0.02;
            c.dt = 1e-5;
            c.eps = 3e-5;
            c.n_traj = 200_000;
            c.binning = Binning { bins: 20, span_sd: 3.0, min_count: 1000 };
        }
        other => return Err(CliError::config(format!("unknown recipe `{other}`; known: {}", RECIPES.join(", ")))),
    }
    c.out = format!("out/{name}").into();
    Ok(c)
}

pub fn run_recipe(run: &mut Run, name: &str) -> Result<Summary, CliError> {
    let checks = match name {
        "equilibrium-witness" => equilibrium_witness_recipe(run)?,
        "threshold-scan" => threshold_scan(run)?,
        "decoupled-decay" => decoupled_decay(run)?,
        "free-window" => free_window_recipe(run)?,
        "uncertainty" => uncertainty(run)?,
        "velocity-field" => velocity_field(run)?,
        "local-velocities" => local_velocities(run)?,
        "kramers-closed-forms" => kramers_closed_forms(run)?,
        "crossover" => crossover(run)?,
        other => return Err(CliError::config(format!("unknown recipe `{other}`"))),
    };
    let summary = Summary {
        recipe: name.to_string(),
        seed: run.cfg.seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    run.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn pair_model(run: &Run) -> Result<OverdampedModel<f64>, CliError> {
    Ok(run.cfg.model.build()?)
}

/// Plug-in witness of the simulated pair at each of `times`.
fn sampled_witness(run: &Run, model: &OverdampedModel<f64>, times: &[f64]) -> Result<Vec<SampleWitness<f64>>, CliError> {
    let temperature = run.cfg.model.temperature;
    let moments = simulate_pair_moments(model, &run.cfg.initial, times, &run.run_config(), [0.0, 0.0])?;
    moments
        .iter()
        .map(|m| Ok(plugin_witness(&m.finish()?, temperature)?))
        .collect()
}

fn equilibrium_witness_recipe(run: &mut Run) -> Result<Vec<Check>, CliError> {
    let cfg = run.cfg.clone();
    let params = validate_pair(cfg.model.pair())?;
    let analytic = equilibrium_witness(&params)?;
    let model = pair_model(run)?;
    let sample = sampled_witness(run, &model, &[cfg.t])?.remove(0);
    run.write_json("witness.json", &json!({ "analytic": analytic, "sample": sample }))?;
    let rel = (sample.min_value - analytic.min_value).abs() / analytic.min_value;
    Ok(vec![
        Check::new(
            "analytic-min",
            analytic.verdict == Verdict::Entangled,
            format!("{:.6} < {:.6} ({})", analytic.min_value, analytic.threshold, analytic.min_signs.label()),
        ),
        Check::new(
            "sample-min",
            rel <= 0.02,
            format!("{:.6} ± {:.6}, relative deviation {:.4} <= 0.02", sample.min_value, sample.min_se, rel),
        ),
        Check::new("sample-verdict", sample.verdict == analytic.verdict, verdict_name(sample.verdict).to_string()),
    ])
}

fn threshold_scan(run: &mut Run) -> Result<Vec<Check>, CliError> {
    let cfg = run.cfg.clone();
    let a = cfg.model.a;
    let temperature = cfg.model.temperature;
    let g_star = equilibrium_threshold(a)?;
    let mut rows = Vec::new();
    let mut flip = None;
    let mut k = 0;
    loop {
        let g = k as f64 * 0.01;
        if g >= a {
            break;
        }
        let mut p = cfg.model.pair();
        p.g = g;
        let report = equilibrium_witness(&validate_pair(p)?)?;
        if flip.is_none() && report.verdict == Verdict::Entangled {
            flip = Some(g);
        }
        rows.push(vec![format!("{g:.2}"), report.min_value.to_string(), verdict_name(report.verdict).into()]);
        k += 1;
    }
    let path = run.artifact("threshold_scan.csv");
    io::write_table(&path, &["g", "min_value", "verdict"], rows)?;

    let mut checks = Vec::new();
    match flip {
        Some(g) => checks.push(Check::new(
            "scan-flip",
            g > g_star && g - g_star <= 0.01 + 1e-12,
            format!("first entangled g = {g:.2}, threshold {g_star:.6}"),
        )),
        None => checks.push(Check::new("scan-flip", false, "no entangled coupling on the grid")),
    }
    let unit = equilibrium_threshold(1.0)?;
    checks.push(Check::new("unit-stiffness-threshold", unit == 0.0, format!("{unit}")));

    let mut rows = Vec::new();
    let mut disagreements = Vec::new();
    let mut decided = 0;
    for g in [0.1, 0.2, 0.3, 0.6, 1.0, 1.5] {
        if g >= a {
            continue;
        }
        let mut model_cfg = cfg.model.clone();
        model_cfg.g = g;
        let model = model_cfg.build()?;
        let w = sampled_witness(run, &model, &[cfg.t])?.remove(0);
        let mut p = cfg.model.pair();
        p.g = g;
        let analytic = equilibrium_witness(&validate_pair(p)?)?;
        if w.verdict != Verdict::Inconclusive {
            decided += 1;
            if w.verdict != analytic.verdict {
                disagreements.push(g);
            }
        }
        rows.push(vec![
            g.to_string(),
            analytic.min_value.to_string(),
            verdict_name(analytic.verdict).into(),
            w.min_value.to_string(),
            w.min_se.to_string(),
            verdict_name(w.verdict).into(),
        ]);
    }
    let path = run.artifact("sample_verdicts.csv");
    io::write_table(&path, &["g", "analytic_min", "analytic_verdict", "sample_min", "se_min", "sample_verdict"], rows)?;
    checks.push(Check::new(
        "sample-verdicts",
        disagreements.is_empty(),
        format!("{decided} decided outside the guard band, disagreements at {disagreements:?} (T = {temperature})"),
    ));
    Ok(checks)
}

fn decoupled_decay(run: &mut Run) -> Result<Vec<Check>, CliError> {
    let cfg = run.cfg.clone();
    let Initial::Gaussian { cov, .. } = &cfg.initial else {
        return Err(CliError::config("decoupled-decay needs a Gaussian initial state"));
    };
    let start = Covariance2::new(cov[0], cov[1], cov[3]);
    let params = cfg.model.pair();
    let (a, temperature) = (cfg.model.a, cfg.model.temperature);
    let model = pair_model(run)?;
    let samples = sampled_witness(run, &model, &cfg.times)?;
    let (mut worst_w, mut worst_c, mut worst_decay) = (0.0f64, 0.0f64, 0.0f64);
    let mut rows = Vec::new();
    let mut margins = Vec::new();
    let mut initial_verdict = Verdict::Undecided;
    for (k, (&t, w)) in cfg.times.iter().zip(&samples).enumerate() {
        let exact = propagate_covariance(&params, &start, t)?;
        let report = witness_report(&exact, temperature)?;
        if k == 0 {
            initial_verdict = report.verdict;
        }
        margins.push(report.threshold - report.min_value);
        let decay = start.s12 * (-2.0 * a * t).exp();
        worst_decay = worst_decay.max((exact.s12 - decay).abs() / decay.abs());
        let x12 = w.moments.x12;
        worst_w = worst_w.max((w.min_value - report.min_value).abs() / w.min_se);
        worst_c = worst_c.max((x12.value - exact.s12).abs() / x12.se);
        rows.push(vec![
            t.to_string(),
            report.min_value.to_string(),
            w.min_value.to_string(),
            w.min_se.to_string(),
            verdict_name(w.verdict).into(),
            exact.s12.to_string(),
            x12.value.to_string(),
            x12.se.to_string(),
        ]);
    }
    let path = run.artifact("witness_trace.csv");
    let header = ["t", "analytic_min", "sample_min", "se_min", "sample_verdict", "s12", "sample_s12", "se_s12"];
    io::write_table(&path, &header, rows)?;
    // the margin 4T - W shrinks toward zero but stays positive at every finite time
    let shrinking = margins.windows(2).all(|m| m[1] < m[0]);
    let last = *margins.last().unwrap_or(&f64::NAN);
    let last_verdict = samples.last().map(|w| verdict_name(w.verdict)).unwrap_or("none");
    Ok(vec![
        Check::new("entangled-at-start", initial_verdict == Verdict::Entangled, verdict_name(initial_verdict).to_string()),
        Check::new("exponential-decorrelation", worst_decay <= 1e-12, format!("max relative deviation {worst_decay:.3e}")),
        Check::new(
            "margin-vanishes",
            shrinking && last > 0.0 && last < 0.01 * 4.0 * temperature,
            format!("4T - W = {last:.3e} at t = {}, sample verdict {last_verdict}", cfg.times.last().unwrap_or(&0.0)),
        ),
        Check::new("sample-witness", worst_w <= 3.0, format!("max |z| = {worst_w:.3} over {} times", cfg.times.len())),
        Check::new("sample-s12", worst_c <= 3.0, format!("max |z| = {worst_c:.3}")),
    ])
}

/// Linear-interpolated times where `values` crosses `level` downward (first) and upward (last).
pub fn crossings(times: &[f64], values: &[f64], level: f64) -> (Option<f64>, Option<f64>) {
    let cross = |k: usize| {
        let (t0, t1, v0, v1) = (times[k - 1], times[k], values[k - 1], values[k]);
        t0 + (level - v0) * (t1 - t0) / (v1 - v0)
    };
    let down = (1..values.len()).find(|&k| values[k - 1] >= level && values[k] < level).map(cross);
    let up = (1..values.len()).rev().find(|&k| values[k - 1] < level && values[k] >= level).map(cross);
    (down, up)
}

fn free_window_recipe(run: &mut Run) -> Result<Vec<Check>, CliError> {
    let cfg = run.cfg.clone();
    let Initial::Gaussian { cov, .. } = &cfg.initial else {
        return Err(CliError::config("free-window needs a Gaussian initial state"));
    };
    let start = Covariance2::new(cov[0], cov[1], cov[3]);
    let temperature = cfg.model.temperature;
    let window = free_window(start.s11, start.s12, temperature)?
        .ok_or_else(|| CliError::config("the initial covariance has no positive-time window"))?;
    let model = pair_model(run)?;
    let samples = sampled_witness(run, &model, &cfg.times)?;
    let params = cfg.model.pair();
    let mut rows = Vec::new();
    for (&t, w) in cfg.times.iter().zip(&samples) {
        let exact = witness_report(&propagate_covariance(&params, &start, t)?, temperature)?;
        rows.push(vec![
            t.to_string(),
            exact.min_value.to_string(),
            w.min_value.to_string(),
            w.min_se.to_string(),
            verdict_name(w.verdict).into(),
        ]);
    }
    let path = run.artifact("witness_trace.csv");
    io::write_table(&path, &["t", "analytic_min", "sample_min", "se_min", "verdict"], rows)?;
    run.write_json("window.json", &window)?;

    let mins: Vec<f64> = samples.iter().map(|w| w.min_value).collect();
    let (down, up) = crossings(&cfg.times, &mins, 4.0 * temperature);
    let edge = |name: &str, found: Option<f64>, exact: f64| match found {
        Some(t) => {
            let rel = (t - exact).abs() / exact;
            Check::new(name, rel <= 0.05, format!("crossing {t:.6} vs {exact:.6}, relative {rel:.4} <= 0.05"))
        }
        None => Check::new(name, false, format!("no crossing near {exact:.6}")),
    };
    Ok(vec![
        Check::new(
            "analytic-window",
            window.t_minus > 0.0,
            format!("({:.6}, {:.6})", window.t_minus, window.t_plus),
        ),
        edge("opening-edge", down, window.t_minus),
        edge("closing-edge", up, window.t_plus),
    ])
}

fn uncertainty(run: &mut Run) -> Result<Vec<Check>, CliError> {
    let cfg = run.cfg.clone();
    let model = pair_model(run)?;
    let slices = probe_slices(&model, &cfg.initial, cfg.t, cfg.eps, &cfg.probed_zero_based(), &run.run_config())?;
    let mut checks = Vec::new();
    for (mode, label) in [(WitnessMode::GaussianPlugin, "gaussian-plugin"), (WitnessMode::Binned, "binned")] {
        let report = uncertainty_suite(&slices, &model.temps, mode, &cfg.binning)?;
        run.write_json(&format!("uncertainty_{label}.json"), &report)?;
        for c in &report.checks {
            let coords = match c.k {
                Some(k) => format!("x{}-u{}", k + 1, c.j + 1),
                None => format!("u{}", c.j + 1),
            };
            checks.push(Check::new(
                &format!("{label}/{}/{coords}", c.quantity),
                !c.violated,
                format!("{:.5} ± {:.5} vs {:.5}", c.value, c.se, c.expected),
            ));
        }
    }
    Ok(checks)
}

fn velocity_field(run: &mut Run) -> Result<Vec<Check>, CliError> {
    let cfg = run.cfg.clone();
    let model = pair_model(run)?;
    let slices = probe_slices(&model, &cfg.initial, cfg.t, cfg.eps, &[0], &run.run_config())?;
    let field = estimate_local_velocities(&slices, 0, &cfg.binning)?;
    let path = run.artifact("velocities_x1.csv");
    io::write_csv_file(&path, |w| io::write_velocity_field(w, &field))?;
    // stationary harmonic well: v+ = -a x, v- = a x, u = T x / (T/a)
    let a = cfg.model.a;
    let (mut zp, mut zm, mut zu, mut bins) = (0.0f64, 0.0f64, 0.0f64, 0);
    for c in field.reliable().filter(|c| c.x_mean[0].abs() <= 2.0) {
        let x = c.x_mean[0];
        zp = zp.max((c.v_plus + a * x).abs() / c.se_vplus);
        zm = zm.max((c.v_minus - a * x).abs() / c.se_vminus);
        zu = zu.max((c.u - a * x).abs() / c.se_u);
        bins += 1;
    }
    Ok(vec![
        Check::new("bins", bins > 0, format!("{bins} bins with at least {} records in |x| <= 2", cfg.binning.min_count)),
        Check::new("forward", bins > 0 && zp <= 3.0, format!("max |z| = {zp:.3}")),
        Check::new("backward", bins > 0 && zm <= 3.0, format!("max |z| = {zm:.3}")),
        Check::new("osmotic", bins > 0 && zu <= 3.0, format!("max |z| = {zu:.3}")),
    ])
}

fn local_velocities(run: &mut Run) -> Result<Vec<Check>, CliError> {
    let cfg = run.cfg.clone();
    let model = pair_model(run)?;
    let params = validate_pair(cfg.model.pair())?;
    let gibbs = equilibrium_covariance(&params)?;
    let temperature = cfg.model.temperature;
    let slices = probe_slices(&model, &cfg.initial, cfg.t, cfg.eps, &[0, 1], &run.run_config())?;
    let mut checks = Vec::new();
    for j in 0..2 {
        let s_jj = if j == 0 { gibbs.s11 } else { gibbs.s22 };
        let local = estimate_local_velocities(&slices, j, &cfg.binning)?;
        let global = estimate_cg_velocities(&slices, j, &cfg.binning)?;
        let marginal = marginalize(&global, j)?;
        let path = run.artifact(&format!("local_velocities_x{}.csv", j + 1));
        io::write_csv_file(&path, |w| io::write_velocity_field(w, &local))?;
        let rows = marginal.iter().map(|c| vec![c.center.to_string(), c.count.to_string(), c.u.to_string(), c.se_u.to_string()]);
        let path = run.artifact(&format!("marginal_velocities_x{}.csv", j + 1));
        io::write_table(&path, &["bin_center", "count", "u", "se_u"], rows)?;

        let (mut z_closed, mut z_marg, mut bins) = (0.0f64, 0.0f64, 0);
        for c in local.reliable() {
            let x = c.x_mean[0];
            z_closed = z_closed.max((c.u - temperature * x / s_jj).abs() / c.se_u);
            if let Some(m) = marginal.iter().find(|m| m.index == c.index[0]) {
                z_marg = z_marg.max((m.u - c.u).abs() / (m.se_u.powi(2) + c.se_u.powi(2)).sqrt());
            }
            bins += 1;
        }
        let tag = format!("x{}", j + 1);
        checks.push(Check::new(
            &format!("{tag}/closed-form"),
            bins > 0 && z_closed <= 3.0,
            format!("max |z| = {z_closed:.3} over {bins} bins"),
        ));
        checks.push(Check::new(&format!("{tag}/marginalized"), bins > 0 && z_marg <= 3.0, format!("max |z| = {z_marg:.3}")));
    }
    Ok(checks)
}

fn kramers_closed_forms(run: &mut Run) -> Result<Vec<Check>, CliError> {
    let kp = run.cfg.kramers.build()?;
    let rates = mode_rates(&kp)?;
    let sum_err = ((rates.omega1 + rates.omega2) - kp.gamma / kp.m).abs() / (kp.gamma / kp.m);
    let prod_err = (rates.omega1 * rates.omega2 - kp.a / kp.m).abs() / (kp.a / kp.m).max(f64::MIN_POSITIVE);
    let mut worst_quad = 0.0f64;
    let mut worst_over = 0.0f64;
    let mut rows = Vec::new();
    let tau = kp.tau_x();
    let grid = [0.05, 0.2, 0.5, 1.0, 2.0, 5.0];
    for &s in &grid {
        for &t in &grid {
            let (s, t) = (s * tau, t * tau);
            let closed = coordinate_correlator_with(&kp, s, t, CorrelatorMethod::ClosedForm)?;
            let quad = coordinate_correlator_with(&kp, s, t, CorrelatorMethod::Quadrature)?;
            let over = overdamped_correlator(&kp, s, t)?;
            let fast = in_fast_relaxed_regime(&kp, s, t, 20.0)?;
            worst_quad = worst_quad.max((closed - quad).abs() / quad.abs());
            if fast {
                worst_over = worst_over.max((closed - over).abs() / closed.abs());
            }
            rows.push(vec![s.to_string(), t.to_string(), closed.to_string(), quad.to_string(), over.to_string(), fast.to_string()]);
        }
    }
    let path = run.artifact("correlator.csv");
    io::write_table(&path, &["s", "t", "closed_form", "quadrature", "overdamped", "fast_relaxed"], rows)?;
    Ok(vec![
        Check::new("rate-sum", sum_err <= 1e-12, format!("relative error {sum_err:.3e}")),
        Check::new("rate-product", prod_err <= 1e-12, format!("relative error {prod_err:.3e}")),
        Check::new("quadrature", worst_quad <= 1e-8, format!("max relative difference {worst_quad:.3e}")),
        Check::new(
            "overdamped-limit",
            worst_over <= 0.05,
            format!("max relative difference {worst_over:.4} at 4am/gamma^2 = {}", kp.damping_ratio()),
        ),
    ])
}

fn crossover(run: &mut Run) -> Result<Vec<Check>, CliError> {
    let cfg = run.cfg.clone();
    let kp: KramersParams<f64> = cfg.kramers.build()?;
    let c = &cfg.crossover;
    let table = crossover_report(&kp, c.x, c.t, &c.eps_grid)?;
    let path = run.artifact("crossover.csv");
    io::write_csv_file(&path, |w| io::write_crossover(w, &table))?;

    let mut checks = Vec::new();
    let band: Vec<_> = table.rows.iter().filter(|r| (0.1..=0.2).contains(&r.eps)).collect();
    let worst = band.iter().map(|r| (r.half_diff - r.u_over).abs() / r.u_over.abs()).fold(0.0, f64::max);
    checks.push(Check::new(
        "plateau-half-difference",
        !band.is_empty() && worst <= 0.10,
        format!(
            "half difference {:?} vs u_over {:.4}, max relative deviation {worst:.4} <= 0.10",
            band.iter().map(|r| format!("{:.4}", r.half_diff)).collect::<Vec<_>>(),
            table.rows[0].u_over
        ),
    ));
    let small: Vec<_> = table.rows.iter().filter(|r| r.eps <= 1e-3).collect();
    let worst = small.iter().map(|r| (r.nu_minus - r.nu_plus).abs() / (2.0 * r.u_over.abs())).fold(0.0, f64::max);
    checks.push(Check::new(
        "smooth-limit",
        !small.is_empty() && worst < 0.10,
        format!("max |nu_- - nu_+| / 2u_over = {worst:.4} < 0.10 over {} increments", small.len()),
    ));

    let rc = RunConfig::new(cfg.dt, cfg.n_traj, cfg.seed).threads(run.threads);
    let cases = [
        ("transient", Initial::Point { x: vec![0.0, 0.0] }, cfg.t, cfg.t),
        ("stationary", Initial::Stationary, 100.0 * cfg.dt, c.t),
    ];
    let mut warnings = Vec::new();
    for (label, initial, record, reference_t) in cases {
        let ens = simulate_kramers(&kp, &initial, &[record], &rc)?;
        warnings.extend(ens.warnings.iter().cloned());
        let xs = ens.store.column(0, 0);
        let ps = ens.store.column(0, 1);
        let check = conditional_momentum_check(&kp, &xs, &ps, reference_t, cfg.eps, &cfg.binning)?;
        let reliable = check.bins.iter().filter(|b| b.reliable).count();
        run.write_json(&format!("momentum_{label}.json"), &check)?;
        checks.push(Check::new(
            &format!("conditional-momentum/{label}"),
            check.all_pass,
            format!("max |z| = {:.3} over {reliable} bins at eps = {}", check.max_abs_z, cfg.eps),
        ));
    }
    run.write_json("crossover.json", &json!({ "table": table, "warnings": warnings }))?;
    Ok(checks)
}
