//! Command-line front end: configs, subcommands, recipes and run manifests.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod recipes;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use cli::{AnalyticWhat, Cli, Command, EstimateWhat};
use commands::{AnalyticKind, EstimateKind, Run};
use config::{apply_override, ExperimentConfig};
use error::CliError;
use manifest::Manifest;

/// What a successful invocation printed and produced.
#[derive(Debug)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub manifest: Option<Manifest>,
}

fn resolve(cli: &Cli, base: serde_json::Value, extra: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut doc = base;
    for o in extra.iter().chain(&cli.overrides) {
        apply_override(&mut doc, o)?;
    }
    if let Some(seed) = cli.seed {
        apply_override(&mut doc, &format!("seed={seed}"))?;
    }
    if let Some(out) = &cli.out {
        doc["out"] = serde_json::Value::String(out.to_string_lossy().into_owned());
    }
    ExperimentConfig::from_value(doc)
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Verify { dir } => {
            let manifest = Manifest::read(dir)?;
            let bad = manifest.verify(dir);
            if !bad.is_empty() {
                return Err(CliError::Runtime(format!("manifest mismatch: {}", bad.join("; "))));
            }
            let lines = vec![format!("{} artifacts verified", manifest.artifacts.len())];
            Ok(Outcome { lines, manifest: Some(manifest) })
        }
        Command::Recipe { list: true, .. } | Command::Recipe { name: None, .. } => {
            Ok(Outcome { lines: recipes::RECIPES.iter().map(|s| s.to_string()).collect(), manifest: None })
        }
        Command::Recipe { name: Some(name), .. } => {
            let mut base = serde_json::to_value(recipes::base_config(name)?).expect("config serialises");
            if let Some(path) = &cli.config {
                merge(&mut base, ExperimentConfig::load(Some(path))?);
            }
            let cfg = resolve(cli, base, &[])?;
            let mut run = Run::new(cfg, cli.threads, format!("recipe {name}"))?;
            let summary = recipes::run_recipe(&mut run, name)?;
            let lines: Vec<String> = summary.checks.iter().map(|c| c.line(name)).collect();
            let manifest = run.finish()?;
            if summary.pass {
                Ok(Outcome { lines, manifest: Some(manifest) })
            } else {
                Err(CliError::Acceptance(lines))
            }
        }
        command => {
            let (name, extra) = match command {
                Command::Analytic { args, .. } => ("analytic", args.overrides()),
                Command::Simulate => ("simulate", Vec::new()),
                Command::Estimate { input, .. } | Command::Ingest { input } => {
                    let name = if matches!(command, Command::Ingest { .. }) { "ingest" } else { "estimate" };
                    let extra = input
                        .iter()
                        .map(|p| format!("input={}", serde_json::Value::String(p.to_string_lossy().into_owned())))
                        .collect();
                    (name, extra)
                }
                Command::Crossover => ("crossover", Vec::new()),
                Command::Recipe { .. } | Command::Verify { .. } => unreachable!("handled above"),
            };
            let cfg = resolve(cli, ExperimentConfig::load(cli.config.as_deref())?, &extra)?;
            cfg.validate(commands::needs(name, &cfg))?;
            let label = match command {
                Command::Analytic { what, .. } => format!("analytic {}", format!("{what:?}").to_lowercase()),
                Command::Estimate { what, .. } => format!("estimate {}", format!("{what:?}").to_lowercase()),
                _ => name.to_string(),
            };
            let mut run = Run::new(cfg, cli.threads, label)?;
            let lines = match command {
                Command::Analytic { what, .. } => commands::analytic(&mut run, analytic_kind(*what))?,
                Command::Simulate => commands::simulate(&mut run)?,
                Command::Estimate { what, .. } => commands::estimate(&mut run, estimate_kind(*what))?,
                Command::Crossover => commands::crossover(&mut run)?,
                Command::Ingest { .. } => commands::ingest(&mut run)?,
                Command::Recipe { .. } | Command::Verify { .. } => unreachable!("handled above"),
            };
            Ok(Outcome { lines, manifest: Some(run.finish()?) })
        }
    }
}

/// Overlays the fields present in `top` onto `base`, recursing into objects.
fn merge(base: &mut serde_json::Value, top: serde_json::Value) {
    match (base, top) {
        (serde_json::Value::Object(b), serde_json::Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, t) => *b = t,
    }
}

fn analytic_kind(w: AnalyticWhat) -> AnalyticKind {
    match w {
        AnalyticWhat::Cov => AnalyticKind::Cov,
        AnalyticWhat::Witness => AnalyticKind::Witness,
        AnalyticWhat::Threshold => AnalyticKind::Threshold,
        AnalyticWhat::Window => AnalyticKind::Window,
    }
}

fn estimate_kind(w: EstimateWhat) -> EstimateKind {
    match w {
        EstimateWhat::Velocities => EstimateKind::Velocities,
        EstimateWhat::Witness => EstimateKind::Witness,
        EstimateWhat::Uncertainty => EstimateKind::Uncertainty,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Output lines go to `stdout`; failures are a JSON object on `stderr`.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = CliError::config(e.to_string().trim().to_string());
            let _ = writeln!(stderr, "{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for line in &outcome.lines {
                let _ = writeln!(stdout, "{line}");
            }
            0
        }
        Err(err) => {
            if let CliError::Acceptance(lines) = &err {
                for line in lines {
                    let _ = writeln!(stdout, "{line}");
                }
            }
            let _ = writeln!(stderr, "{}", err.to_json());
            err.exit_code()
        }
    }
}
