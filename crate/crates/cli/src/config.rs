//! Experiment configuration: JSON file, dotted-path overrides, validation.

use std::path::{Path, PathBuf};

use brownent::estimators::{Binning, WitnessMode};
use brownent::model::{KramersParams, PairParams};
use brownent::sim::{Initial, Integrator, OverdampedModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    #[default]
    Overdamped,
    Kramers,
}

/// Overdamped model. `particles = 2` is the harmonic pair
/// `U = a x1²/2 + a x2²/2 + g x1 x2`; `particles = 1` a single particle in `a x²/2`.
/// A full `stiffness` matrix (with `temps`) replaces both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub particles: usize,
    pub a: f64,
    pub g: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub stiffness: Option<Vec<Vec<f64>>>,
    pub temps: Option<Vec<f64>>,
    pub quartic: Option<Vec<f64>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { particles: 2, a: 1.0, g: 0.5, temperature: 1.0, t1: None, t2: None, stiffness: None, temps: None, quartic: None }
    }
}

impl ModelConfig {
    pub fn pair(&self) -> PairParams<f64> {
        let p = PairParams::new(self.a, self.g, self.temperature);
        match (self.t1, self.t2) {
            (None, None) => p,
            (t1, t2) => p.with_bath_temperatures(t1.unwrap_or(self.temperature), t2.unwrap_or(self.temperature)),
        }
    }

    pub fn build(&self) -> brownent::Result<OverdampedModel<f64>> {
        let model = if let Some(k) = &self.stiffness {
            let n = k.len();
            let temps = self.temps.clone().unwrap_or_else(|| vec![self.temperature; n]);
            OverdampedModel::new(k.iter().flatten().copied().collect(), temps)?
        } else if self.particles == 1 {
            OverdampedModel::single(self.a, self.t1.unwrap_or(self.temperature))?
        } else {
            OverdampedModel::pair(&self.pair())?
        };
        match &self.quartic {
            Some(c) => model.with_quartic(c.clone()),
            None => Ok(model),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KramersConfig {
    pub m: f64,
    pub gamma: f64,
    pub a: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
}

impl Default for KramersConfig {
    fn default() -> Self {
        Self { m: 0.01, gamma: 1.0, a: 1.0, temperature: 1.0 }
    }
}

impl KramersConfig {
    pub fn build(&self) -> brownent::Result<KramersParams<f64>> {
        KramersParams::new(self.m, self.gamma, self.a, self.temperature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossoverConfig {
    pub x: f64,
    pub t: f64,
    pub eps_grid: Vec<f64>,
}

impl Default for CrossoverConfig {
    fn default() -> Self {
        Self {
            x: 1.0,
            t: 30.0,
            eps_grid: vec![1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3, 0.01, 0.03, 0.1, 0.15, 0.2, 0.3, 0.5, 1.0, 2.0],
        }
    }
}

/// Analytic inputs. Unset covariance entries fall back to the model's equilibrium state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticConfig {
    pub s11: Option<f64>,
    pub s12: Option<f64>,
    pub s22: Option<f64>,
    /// Propagation time for `analytic cov` / `analytic witness`.
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub dynamics: Dynamics,
    pub model: ModelConfig,
    pub kramers: KramersConfig,
    pub analytic: AnalyticConfig,
    pub initial: Initial<f64>,
    /// Record times for `simulate`.
    pub times: Vec<f64>,
    /// Probe time.
    pub t: f64,
    pub dt: f64,
    pub eps: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub integrator: Integrator,
    pub full_paths: bool,
    /// One-based probed coordinates.
    pub probed: Vec<usize>,
    pub binning: Binning,
    pub witness_mode: WitnessMode,
    pub crossover: CrossoverConfig,
    /// Slice CSV consumed by `estimate` and `ingest` instead of simulating.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: "custom".into(),
            dynamics: Dynamics::Overdamped,
            model: ModelConfig::default(),
            kramers: KramersConfig::default(),
            analytic: AnalyticConfig::default(),
            initial: Initial::Stationary,
            times: vec![0.0, 0.5, 1.0, 2.0],
            t: 1.0,
            dt: 1e-3,
            eps: 1e-2,
            n_traj: 100_000,
            seed: 1,
            integrator: Integrator::Exact,
            full_paths: false,
            probed: vec![1, 2],
            binning: Binning::default(),
            witness_mode: WitnessMode::GaussianPlugin,
            crossover: CrossoverConfig::default(),
            input: None,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Value, CliError> {
        match path {
            None => Ok(serde_json::to_value(Self::default()).expect("default config serialises")),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", p.display())))
            }
        }
    }

    pub fn from_value(v: Value) -> Result<Self, CliError> {
        serde_json::from_value(v).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn probed_zero_based(&self) -> Vec<usize> {
        self.probed.iter().map(|j| j - 1).collect()
    }

    /// Every violated precondition, for the parts of the config `needs` touches.
    pub fn validate(&self, needs: Needs) -> Result<(), CliError> {
        let mut errs = Vec::new();
        let mut push = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        if needs.model {
            let m = &self.model;
            push(m.temperature > 0.0, format!("model.T must be positive, got {}", m.temperature));
            for (name, v) in [("model.t1", m.t1), ("model.t2", m.t2)] {
                if let Some(v) = v {
                    push(v > 0.0, format!("{name} must be positive, got {v}"));
                }
            }
            push(
                m.stiffness.is_some() || matches!(m.particles, 1 | 2),
                format!("model.particles must be 1 or 2 without an explicit stiffness, got {}", m.particles),
            );
            if let Err(e) = m.build() {
                push(false, format!("model: {e}"));
            }
        }
        if needs.kramers {
            if let Err(e) = self.kramers.build() {
                push(false, format!("kramers: {e}"));
            }
        }
        if needs.sim {
            push(self.dt > 0.0 && self.dt.is_finite(), format!("dt must be positive, got {}", self.dt));
            push(self.n_traj >= 1, "n_traj must be at least 1".into());
            push(
                self.times.iter().all(|t| t.is_finite() && *t >= 0.0) && self.times.windows(2).all(|w| w[0] <= w[1]),
                "times must be non-negative and non-decreasing".into(),
            );
        }
        if needs.probe {
            let n = self.model.build().map(|m| m.n).unwrap_or(2);
            push(self.eps > 0.0, format!("eps must be positive, got {}", self.eps));
            push(
                self.eps >= 10.0 * self.dt * (1.0 - 1e-9),
                format!("eps = {} must be at least 10 dt = {}", self.eps, 10.0 * self.dt),
            );
            push(self.t - self.eps >= 0.0, format!("t - eps must be non-negative (t = {}, eps = {})", self.t, self.eps));
            push(
                !self.probed.is_empty() && self.probed.iter().all(|&j| j >= 1 && j <= n),
                format!("probed coordinates {:?} must lie in 1..={n}", self.probed),
            );
            if let Err(e) = self.binning.validate() {
                push(false, format!("binning: {e}"));
            }
        }
        if needs.crossover {
            let c = &self.crossover;
            push(c.t > 0.0, format!("crossover.t must be positive, got {}", c.t));
            push(!c.eps_grid.is_empty(), "crossover.eps_grid is empty".into());
            push(
                c.eps_grid.iter().all(|&e| e > 0.0 && e < c.t),
                format!("crossover.eps_grid must lie in (0, {})", c.t),
            );
        }
        if needs.input {
            push(self.input.is_some(), "input path is required".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs))
        }
    }
}

/// Which config sections a command depends on.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub model: bool,
    pub kramers: bool,
    pub sim: bool,
    pub probe: bool,
    pub crossover: bool,
    pub input: bool,
}

/// Sets `path` (dot separated) in a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{assignment}` is not key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(CliError::config(format!("override `{assignment}` has an empty key")));
        }
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            } else {
                return Err(CliError::config(format!("override `{assignment}`: `{key}` is not inside an object")));
            }
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map.entry(key.to_string()).or_insert(Value::Null);
    }
    Ok(())
}
