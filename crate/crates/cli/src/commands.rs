//! Subcommand implementations. Each writes its artifacts under the output
//! directory and finishes with a manifest.

use std::path::{Path, PathBuf};

use brownent::analytics::{
    equilibrium_covariance, equilibrium_threshold, free_window, propagate_covariance, witness_report, Verdict,
};
use brownent::estimators::{
    estimate_cg_velocities, estimate_cov, estimate_local_velocities, estimate_witness, marginalize, plugin_witness,
    uncertainty_suite,
};
use brownent::io::{self, SliceMeta};
use brownent::kramers::crossover_report;
use brownent::model::{validate_pair, Covariance2};
use brownent::sim::{probe_slices, simulate_ensemble, simulate_kramers, EnsembleSlices, RunConfig};
use serde_json::json;

use crate::config::{Dynamics, ExperimentConfig, Needs};
use crate::error::CliError;
use crate::manifest::Manifest;

/// One command invocation: resolved config, output directory and the files written so far.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub threads: Option<usize>,
    pub command: String,
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl Run {
    pub fn new(cfg: ExperimentConfig, threads: Option<usize>, command: impl Into<String>) -> Result<Self, CliError> {
        if threads == Some(0) {
            return Err(CliError::config("threads must be at least 1"));
        }
        let out = cfg.out.clone();
        std::fs::create_dir_all(&out)
            .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", out.display())))?;
        Ok(Self { cfg, threads, command: command.into(), out, files: Vec::new() })
    }

    pub fn out(&self) -> &Path {
        &self.out
    }

    /// Registers `name` as an artifact and returns its full path.
    pub fn artifact(&mut self, name: &str) -> PathBuf {
        let rel = PathBuf::from(name);
        if !self.files.contains(&rel) {
            self.files.push(rel);
        }
        self.out.join(name)
    }

    pub fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.artifact(name);
        io::write_json(&path, value)?;
        Ok(())
    }

    pub fn run_config(&self) -> RunConfig<f64> {
        RunConfig::new(self.cfg.dt, self.cfg.n_traj, self.cfg.seed)
            .integrator(self.cfg.integrator)
            .threads(self.threads)
    }

    pub fn finish(self) -> Result<Manifest, CliError> {
        // where the files went is not part of the experiment
        let mut config = serde_json::to_value(&self.cfg).expect("config serialises");
        if let Some(map) = config.as_object_mut() {
            map.remove("out");
        }
        let manifest = Manifest::build(&self.out, &self.command, self.cfg.seed, config, &self.files)?;
        manifest.write(&self.out)?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticKind {
    Cov,
    Witness,
    Threshold,
    Window,
}

fn start_covariance(cfg: &ExperimentConfig) -> Result<Option<Covariance2<f64>>, CliError> {
    let a = &cfg.analytic;
    match (a.s11, a.s12, a.s22) {
        (None, None, None) => Ok(None),
        (Some(s11), s12, s22) => Ok(Some(Covariance2::new(s11, s12.unwrap_or(0.0), s22.unwrap_or(s11)))),
        _ => Err(CliError::config("analytic.s11 is required when s12 or s22 is given")),
    }
}

/// Covariance at `analytic.t` from the given start (or the Gibbs state when none is given).
fn analytic_covariance(cfg: &ExperimentConfig) -> Result<Covariance2<f64>, CliError> {
    let params = cfg.model.pair();
    let cov = match start_covariance(cfg)? {
        Some(c) => c,
        None => equilibrium_covariance(&validate_pair(params)?)?,
    };
    Ok(match cfg.analytic.t {
        Some(t) => propagate_covariance(&params, &cov, t)?,
        None => cov,
    })
}

pub fn analytic(run: &mut Run, kind: AnalyticKind) -> Result<Vec<String>, CliError> {
    let cfg = run.cfg.clone();
    let mut lines = Vec::new();
    match kind {
        AnalyticKind::Cov => {
            let cov = analytic_covariance(&cfg)?;
            run.write_json("covariance.json", &json!({ "t": cfg.analytic.t, "covariance": cov }))?;
            lines.push(format!("{} {} {}", cov.s11, cov.s12, cov.s22));
        }
        AnalyticKind::Witness => {
            let params = validate_pair(cfg.model.pair())?;
            let temperature = params.require_equal_temperatures()?;
            let cov = analytic_covariance(&cfg)?;
            let report = witness_report(&cov, temperature)?;
            for v in &report.values {
                lines.push(format!("{} {:.6}", v.signs.label(), v.value));
            }
            lines.push(format!("min {:.6} threshold {:.6} {}", report.min_value, report.threshold, verdict_name(report.verdict)));
            run.write_json("witness.json", &json!({ "t": cfg.analytic.t, "covariance": cov, "report": report }))?;
            if start_covariance(&cfg)?.is_some() && !cfg.times.is_empty() {
                analytic_trace(run, &cov_start(&cfg)?, temperature)?;
            }
        }
        AnalyticKind::Threshold => {
            let g = equilibrium_threshold(cfg.model.a)?;
            run.write_json("threshold.json", &json!({ "a": cfg.model.a, "g_threshold": g }))?;
            lines.push(format!("{g:.6}"));
        }
        AnalyticKind::Window => {
            let (Some(s11), Some(s12)) = (cfg.analytic.s11, cfg.analytic.s12) else {
                return Err(CliError::config("analytic window needs --s11 and --s12"));
            };
            let window = free_window(s11, s12, cfg.model.temperature)?;
            run.write_json("window.json", &json!({ "s11": s11, "s12": s12, "T": cfg.model.temperature, "window": window }))?;
            lines.push(match window {
                Some(w) => format!("{:.6} {:.6}", w.t_minus, w.t_plus),
                None => "empty".into(),
            });
        }
    }
    Ok(lines)
}

fn cov_start(cfg: &ExperimentConfig) -> Result<Covariance2<f64>, CliError> {
    Ok(start_covariance(cfg)?.expect("checked by caller"))
}

/// Witness of the propagated covariance at every configured time.
fn analytic_trace(run: &mut Run, start: &Covariance2<f64>, temperature: f64) -> Result<(), CliError> {
    let params = run.cfg.model.pair();
    let mut rows = Vec::new();
    for &t in &run.cfg.times {
        let cov = propagate_covariance(&params, start, t)?;
        let r = witness_report(&cov, temperature)?;
        let mut row = vec![t.to_string()];
        row.extend(r.values.iter().map(|v| v.value.to_string()));
        row.extend([r.min_value.to_string(), r.threshold.to_string(), verdict_name(r.verdict).to_string()]);
        rows.push(row);
    }
    let path = run.artifact("witness_trace.csv");
    io::write_table(&path, &["t", "w_pp", "w_pm", "w_mp", "w_mm", "min", "threshold", "verdict"], rows)?;
    Ok(())
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Entangled => "entangled",
        Verdict::Undecided => "undecided",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn model_json(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(&cfg.model).expect("model serialises")
}

pub fn write_slices_with_sidecar(
    run: &mut Run,
    name: &str,
    slices: &EnsembleSlices<f64>,
    temps: &[f64],
) -> Result<(), CliError> {
    let path = run.artifact(name);
    io::write_csv_file(&path, |w| io::write_slices(w, slices))?;
    let mut meta = SliceMeta::of(slices);
    meta.seed = Some(run.cfg.seed);
    meta.temps = Some(temps.to_vec());
    meta.model = Some(model_json(&run.cfg));
    run.write_json(&format!("{name}.json"), &meta)
}

pub fn simulate(run: &mut Run) -> Result<Vec<String>, CliError> {
    let cfg = run.cfg.clone();
    let rc = run.run_config();
    let mut lines = Vec::new();
    match cfg.dynamics {
        Dynamics::Overdamped => {
            let model = cfg.model.build()?;
            let store = simulate_ensemble(&model, &cfg.initial, &cfg.times, &rc, cfg.full_paths)?;
            let path = run.artifact("trajectories.csv");
            io::write_csv_file(&path, |w| io::write_trajectories(w, &store))?;
            lines.push(format!("trajectories: {} x {} records", store.n_traj, store.times.len()));
            if model.n == 2 && model.temps[0] == model.temps[1] {
                sample_trace(run, &store, model.temps[0])?;
            }
            if cfg.t - cfg.eps >= 0.0 && !cfg.probed.is_empty() {
                let slices = probe_slices(&model, &cfg.initial, cfg.t, cfg.eps, &cfg.probed_zero_based(), &rc)?;
                write_slices_with_sidecar(run, "slices.csv", &slices, &model.temps)?;
                lines.push(format!("slices: {} records at t = {}, eps = {}", slices.len(), cfg.t, cfg.eps));
            }
        }
        Dynamics::Kramers => {
            let kp = cfg.kramers.build()?;
            let ens = simulate_kramers(&kp, &cfg.initial, &cfg.times, &rc)?;
            let path = run.artifact("phase.csv");
            io::write_csv_file(&path, |w| io::write_phase(w, &ens.store))?;
            run.write_json("simulate.json", &json!({ "warnings": ens.warnings }))?;
            lines.extend(ens.warnings.iter().map(|w| format!("warning: {w}")));
            lines.push(format!("phase: {} x {} records", ens.store.n_traj, ens.store.times.len()));
        }
    }
    Ok(lines)
}

/// Plug-in witness of the simulated pair at each record time with a nonsingular sample covariance.
fn sample_trace(run: &mut Run, store: &brownent::sim::TrajectoryStore<f64>, temperature: f64) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for (k, &t) in store.times.iter().enumerate() {
        let Ok(est) = estimate_cov(&store.points(k, 0, 1)) else { continue };
        let Ok(w) = plugin_witness(&est, temperature) else { continue };
        let mut row = vec![t.to_string(), w.n.to_string()];
        row.extend(w.values.iter().map(|v| v.value.to_string()));
        row.extend([w.min_value.to_string(), w.min_se.to_string(), w.threshold.to_string()]);
        row.push(verdict_name(w.verdict).to_string());
        rows.push(row);
    }
    let path = run.artifact("witness_trace.csv");
    io::write_table(&path, &["t", "n", "w_pp", "w_pm", "w_mp", "w_mm", "min", "se_min", "threshold", "verdict"], rows)?;
    Ok(())
}

/// Slices from `input` (with the sidecar's temperatures when recorded) or from a fresh simulation.
pub fn obtain_slices(run: &mut Run) -> Result<(EnsembleSlices<f64>, Vec<f64>), CliError> {
    let cfg = run.cfg.clone();
    if let Some(input) = &cfg.input {
        let (slices, report) = io::ingest_external_csv(input, None)?;
        let meta: SliceMeta = io::read_json(&io::sidecar_path(input))?;
        let temps = match meta.temps {
            Some(t) => t,
            None => vec![cfg.model.temperature; slices.n],
        };
        run.write_json("ingest.json", &report)?;
        return Ok((slices, temps));
    }
    let model = cfg.model.build()?;
    let slices = probe_slices(&model, &cfg.initial, cfg.t, cfg.eps, &cfg.probed_zero_based(), &run.run_config())?;
    Ok((slices, model.temps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    Velocities,
    Witness,
    Uncertainty,
}

pub fn estimate(run: &mut Run, kind: EstimateKind) -> Result<Vec<String>, CliError> {
    let (slices, temps) = obtain_slices(run)?;
    let cfg = run.cfg.clone();
    let mut lines = Vec::new();
    match kind {
        EstimateKind::Velocities => {
            for &j in &slices.probed {
                let field = estimate_cg_velocities(&slices, j, &cfg.binning)?;
                let path = run.artifact(&format!("velocities_x{}.csv", j + 1));
                io::write_csv_file(&path, |w| io::write_velocity_field(w, &field))?;
                let local = estimate_local_velocities(&slices, j, &cfg.binning)?;
                let path = run.artifact(&format!("local_velocities_x{}.csv", j + 1));
                io::write_csv_file(&path, |w| io::write_velocity_field(w, &local))?;
                if slices.n > 1 {
                    let cells = marginalize(&field, j)?;
                    let rows = cells.iter().map(|c| {
                        vec![c.center.to_string(), c.count.to_string(), c.u.to_string(), c.se_u.to_string()]
                    });
                    let path = run.artifact(&format!("marginal_velocities_x{}.csv", j + 1));
                    io::write_table(&path, &["bin_center", "count", "u", "se_u"], rows)?;
                }
                lines.push(format!(
                    "x{}: {} reliable cells, {} reliable local bins",
                    j + 1,
                    field.reliable().count(),
                    local.reliable().count()
                ));
            }
        }
        EstimateKind::Witness => {
            let [t1, t2] = temps[..] else {
                return Err(CliError::runtime(format!("the witness needs two coordinates, got {}", temps.len())));
            };
            let w = estimate_witness(&slices, [t1, t2], cfg.witness_mode, &cfg.binning)?;
            lines.push(format!("min {:.6} se {:.6} threshold {:.6} {}", w.min_value, w.min_se, w.threshold, verdict_name(w.verdict)));
            run.write_json("witness.json", &json!({ "seed": cfg.seed, "witness": w }))?;
        }
        EstimateKind::Uncertainty => {
            let report = uncertainty_suite(&slices, &temps, cfg.witness_mode, &cfg.binning)?;
            let rows = report.checks.iter().map(|c| {
                vec![
                    c.quantity.clone(),
                    (c.j + 1).to_string(),
                    c.k.map(|k| (k + 1).to_string()).unwrap_or_default(),
                    c.value.to_string(),
                    c.se.to_string(),
                    c.expected.to_string(),
                    format!("{:?}", c.relation).to_lowercase(),
                    c.violated.to_string(),
                ]
            });
            let path = run.artifact("uncertainty.csv");
            io::write_table(&path, &["quantity", "j", "k", "value", "se", "expected", "relation", "violated"], rows)?;
            run.write_json("uncertainty.json", &report)?;
            let violated = report.checks.iter().filter(|c| c.violated).count();
            lines.push(format!("{} checks, {} violated", report.checks.len(), violated));
        }
    }
    Ok(lines)
}

pub fn crossover(run: &mut Run) -> Result<Vec<String>, CliError> {
    let cfg = run.cfg.clone();
    let kp = cfg.kramers.build()?;
    let c = &cfg.crossover;
    let table = crossover_report(&kp, c.x, c.t, &c.eps_grid)?;
    let path = run.artifact("crossover.csv");
    io::write_csv_file(&path, |w| io::write_crossover(w, &table))?;
    run.write_json("crossover.json", &table)?;
    Ok(vec![format!(
        "{} rows, plateau [{}, {}], u_over {}",
        table.rows.len(),
        table.plateau.lo,
        table.plateau.hi,
        table.rows.first().map(|r| r.u_over).unwrap_or(f64::NAN)
    )])
}

/// Validates an external slice file and re-emits the kept rows with a fresh sidecar.
pub fn ingest(run: &mut Run) -> Result<Vec<String>, CliError> {
    let input = run.cfg.input.clone().ok_or_else(|| CliError::config("ingest needs an input path"))?;
    let (slices, report) = io::ingest_external_csv(&input, None)?;
    let meta: SliceMeta = io::read_json(&io::sidecar_path(&input))?;
    let temps = meta.temps.unwrap_or_else(|| vec![run.cfg.model.temperature; slices.n]);
    write_slices_with_sidecar(run, "slices.csv", &slices, &temps)?;
    run.write_json("ingest.json", &report)?;
    let mut lines = vec![format!("{} rows, {} kept, {} dropped", report.rows, report.kept, report.dropped)];
    if !report.dropped_lines.is_empty() {
        lines.push(format!("dropped lines: {:?}", report.dropped_lines));
    }
    Ok(lines)
}

/// Config sections each command reads.
pub fn needs(command: &str, cfg: &ExperimentConfig) -> Needs {
    let from_file = cfg.input.is_some();
    match command {
        "analytic" => Needs::default(),
        "simulate" => match cfg.dynamics {
            Dynamics::Overdamped => Needs { model: true, sim: true, probe: !cfg.probed.is_empty(), ..Needs::default() },
            Dynamics::Kramers => Needs { kramers: true, sim: true, ..Needs::default() },
        },
        "estimate" if from_file => Needs::default(),
        "estimate" => Needs { model: true, sim: true, probe: true, ..Needs::default() },
        "crossover" => Needs { kramers: true, crossover: true, ..Needs::default() },
        "ingest" => Needs { input: true, ..Needs::default() },
        _ => Needs::default(),
    }
}
