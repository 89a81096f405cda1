use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "brownent", version, about = "Entanglement witness and velocity statistics of coupled brownian particles")]
pub struct Cli {
    /// Experiment config (JSON). Defaults apply to every missing field.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "BE_THREADS")]
    pub threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Set a config field by dotted path; the value is read as JSON, else as a string.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form covariance, witness, coupling threshold or free-particle window.
    Analytic {
        #[arg(value_enum)]
        what: AnalyticWhat,
        #[command(flatten)]
        args: AnalyticArgs,
    },
    /// Simulate an ensemble and write trajectories, slices or phase-space records.
    Simulate,
    /// Estimate velocity fields, the sample witness or the uncertainty suite.
    Estimate {
        #[arg(value_enum)]
        what: EstimateWhat,
        /// Slice CSV (with its JSON sidecar) to read instead of simulating.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Finite-increment velocities of the underdamped particle across the crossover.
    Crossover,
    /// Validate an external slice CSV and re-emit its clean rows.
    Ingest {
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Run a named scenario and report its checks.
    Recipe {
        name: Option<String>,
        #[arg(long)]
        list: bool,
    },
    /// Recompute the artifact hashes of an output directory against its manifest.
    Verify { dir: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyticWhat {
    Cov,
    Witness,
    Threshold,
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateWhat {
    Velocities,
    Witness,
    Uncertainty,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long = "T", value_name = "T")]
    pub temperature: Option<f64>,
    /// Propagation time.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub s11: Option<f64>,
    #[arg(long)]
    pub s12: Option<f64>,
    #[arg(long)]
    pub s22: Option<f64>,
}

impl AnalyticArgs {
    /// The flags as config overrides.
    pub fn overrides(&self) -> Vec<String> {
        [
            ("model.a", self.a),
            ("model.g", self.g),
            ("model.T", self.temperature),
            ("analytic.t", self.t),
            ("analytic.s11", self.s11),
            ("analytic.s12", self.s12),
            ("analytic.s22", self.s22),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| format!("{k}={}", serde_json::Value::from(v))))
        .collect()
    }
}
