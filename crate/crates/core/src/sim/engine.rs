//! Parallel ensemble driver.
//!
//! Trajectories are cut into fixed chunks of [`CHUNK`] ids; chunks run in
//! parallel and their outputs are concatenated or merged in id order. Together
//! with the per-trajectory streams this makes every output a pure function of
//! the inputs, whatever the thread count.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::LinearStep;
use super::model::{euler_maruyama_step, kramers_em_step, kramers_matrices, OverdampedModel};
use super::rng::{fill_normals, trajectory_rng, TrajectoryRng};
use super::slices::EnsembleSlices;
use crate::error::{Error, Result};
use crate::estimators::moments::PairMoments;
use crate::model::KramersParams;
use crate::scalar::Real;

pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Exact,
    EulerMaruyama,
}

/// Initial ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Initial<R> {
    Point { x: Vec<R> },
    /// Gaussian with row-major covariance. With `moment_matched` the drawn
    /// points are affinely corrected so their sample mean and covariance equal
    /// `mean` and `cov` exactly.
    Gaussian {
        mean: Vec<R>,
        cov: Vec<R>,
        #[serde(default)]
        moment_matched: bool,
    },
    /// Stationary law of a stable linear model.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig<R> {
    pub dt: R,
    pub n_traj: usize,
    pub seed: u64,
    #[serde(default)]
    pub integrator: Integrator,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl<R: Real> RunConfig<R> {
    pub fn new(dt: R, n_traj: usize, seed: u64) -> Self {
        Self { dt, n_traj, seed, integrator: Integrator::Exact, threads: None }
    }

    pub fn integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > R::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter { name: "dt", reason: "must be positive".into() });
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter { name: "n_traj", reason: "need at least one trajectory".into() });
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter { name: "threads", reason: "must be at least 1".into() });
        }
        Ok(())
    }
}

/// States of every trajectory at the recorded times, `[traj][time][coord]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStore<R> {
    pub times: Vec<R>,
    pub dim: usize,
    pub n_traj: usize,
    pub data: Vec<R>,
}

impl<R: Real> TrajectoryStore<R> {
    pub fn state(&self, traj: usize, k: usize) -> &[R] {
        let at = (traj * self.times.len() + k) * self.dim;
        &self.data[at..at + self.dim]
    }

    /// Coordinate `i` of every trajectory at time index `k`.
    pub fn column(&self, k: usize, i: usize) -> Vec<R> {
        (0..self.n_traj).map(|traj| self.state(traj, k)[i]).collect()
    }

    pub fn points(&self, k: usize, i: usize, j: usize) -> Vec<[R; 2]> {
        (0..self.n_traj).map(|traj| [self.state(traj, k)[i], self.state(traj, k)[j]]).collect()
    }
}

/// Phase-space `(x, p)` ensemble of the underdamped particle plus any warnings
/// raised for the chosen step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEnsemble<R> {
    pub store: TrajectoryStore<R>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy)]
enum System<'a, R> {
    Overdamped(&'a OverdampedModel<R>),
    Kramers(&'a KramersParams<R>),
}

enum Kernel<R> {
    Linear(LinearStep<R>),
    OverdampedEm(R),
    KramersEm(R),
}

impl<'a, R: Real> System<'a, R> {
    fn dim(&self) -> usize {
        match self {
            System::Overdamped(m) => m.n,
            System::Kramers(_) => 2,
        }
    }

    fn kernel(&self, integrator: Integrator, h: R) -> Result<Kernel<R>> {
        Ok(match (self, integrator) {
            (System::Overdamped(m), Integrator::Exact) => Kernel::Linear(m.exact_step(h)?),
            (System::Overdamped(_), Integrator::EulerMaruyama) => Kernel::OverdampedEm(h),
            (System::Kramers(kp), Integrator::Exact) => {
                let (a, b) = kramers_matrices(kp);
                Kernel::Linear(LinearStep::new(&a, &b, h.as_f64())?)
            }
            (System::Kramers(_), Integrator::EulerMaruyama) => Kernel::KramersEm(h),
        })
    }

    fn noises(&self, kernel: &Kernel<R>) -> usize {
        match kernel {
            Kernel::Linear(s) => s.dim(),
            Kernel::OverdampedEm(_) => self.dim(),
            Kernel::KramersEm(_) => 1,
        }
    }

    fn stationary_cov(&self) -> Result<DMatrix<f64>> {
        match self {
            System::Overdamped(m) => {
                if !m.is_linear() {
                    return Err(Error::InvalidParameter {
                        name: "initial",
                        reason: "stationary start needs a harmonic model".into(),
                    });
                }
                let n = m.n;
                let k = DMatrix::from_fn(n, n, |i, j| m.stiffness[i * n + j].as_f64());
                let min_eig = SymmetricEigen::new(k.clone()).eigenvalues.min();
                if !(min_eig > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "stiffness",
                        reason: "not positive definite: no stationary state".into(),
                    });
                }
                // K S + S K = diag(2T), solved as (I ⊗ K + K ⊗ I) vec S = vec B
                let eye = DMatrix::<f64>::identity(n, n);
                let lhs = eye.kronecker(&k) + k.kronecker(&eye);
                let rhs = DMatrix::from_fn(n * n, 1, |r, _| {
                    let (i, j) = (r % n, r / n);
                    if i == j {
                        2.0 * m.temps[i].as_f64()
                    } else {
                        0.0
                    }
                });
                let vec_s = lhs.lu().solve(&rhs).ok_or(Error::SingularCovariance { det: 0.0 })?;
                Ok(DMatrix::from_fn(n, n, |i, j| vec_s[(j * n + i, 0)]))
            }
            System::Kramers(kp) => {
                if !(kp.a > R::zero()) {
                    return Err(Error::InvalidParameter {
                        name: "a",
                        reason: "free particle has no stationary state".into(),
                    });
                }
                let (t, a, m) = (kp.temperature.as_f64(), kp.a.as_f64(), kp.m.as_f64());
                Ok(DMatrix::from_row_slice(2, 2, &[t / a, 0.0, 0.0, m * t]))
            }
        }
    }
}

fn psd_root(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut root = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        root.column_mut(j).scale_mut(lambda.max(0.0).sqrt());
    }
    root
}

/// `x0 = mean + L z` with `z` standard normal drawn first from the trajectory stream.
struct InitSampler<R> {
    dim: usize,
    mean: Vec<R>,
    root: Vec<R>,
    draws: bool,
}

impl<R: Real> InitSampler<R> {
    fn sample(&self, rng: &mut TrajectoryRng, z: &mut [R], x: &mut [R]) {
        let n = self.dim;
        x[..n].copy_from_slice(&self.mean);
        if !self.draws {
            return;
        }
        fill_normals(rng, &mut z[..n]);
        for i in 0..n {
            for k in 0..n {
                x[i] = x[i] + self.root[i * n + k] * z[k];
            }
        }
    }
}

fn chunk_ranges(n_traj: usize) -> Vec<Range<usize>> {
    (0..n_traj.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(n_traj)).collect()
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidParameter { name: "threads", reason: e.to_string() })?;
            Ok(pool.install(job))
        }
    }
}

fn build_sampler<R: Real>(system: System<'_, R>, initial: &Initial<R>, cfg: &RunConfig<R>) -> Result<InitSampler<R>> {
    let n = system.dim();
    let flat = |m: &DMatrix<f64>| -> Vec<R> { (0..n * n).map(|k| R::lit(m[(k / n, k % n)])).collect() };
    match initial {
        Initial::Point { x } => {
            if x.len() != n {
                return Err(Error::InvalidParameter { name: "initial", reason: format!("expected {n} coordinates") });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("initial point"));
            }
            Ok(InitSampler { dim: n, mean: x.clone(), root: vec![R::zero(); n * n], draws: false })
        }
        Initial::Stationary => {
            let root = psd_root(&system.stationary_cov()?);
            Ok(InitSampler { dim: n, mean: vec![R::zero(); n], root: flat(&root), draws: true })
        }
        Initial::Gaussian { mean, cov, moment_matched } => {
            if mean.len() != n || cov.len() != n * n {
                return Err(Error::InvalidParameter { name: "initial", reason: format!("expected {n}-dimensional Gaussian") });
            }
            let c = DMatrix::from_fn(n, n, |i, j| cov[i * n + j].as_f64());
            if c.iter().any(|v| !v.is_finite()) || (&c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) {
                return Err(Error::InvalidParameter { name: "initial", reason: "covariance must be finite and symmetric".into() });
            }
            if SymmetricEigen::new(c.clone()).eigenvalues.min() < -1e-12 * c.amax() {
                return Err(Error::InvalidParameter { name: "initial", reason: "covariance is not positive semidefinite".into() });
            }
            let root = psd_root(&c);
            if !moment_matched {
                return Ok(InitSampler { dim: n, mean: mean.clone(), root: flat(&root), draws: true });
            }
            let (zbar, zcov) = sample_initial_draws(n, cfg)?;
            let chol = zcov.cholesky().ok_or(Error::SingularCovariance { det: 0.0 })?;
            let whiten = chol.l().try_inverse().ok_or(Error::SingularCovariance { det: 0.0 })?;
            let eff = &root * whiten;
            let shift = &eff * &zbar;
            Ok(InitSampler {
                dim: n,
                mean: (0..n).map(|i| mean[i] - R::lit(shift[(i, 0)])).collect(),
                root: flat(&eff),
                draws: true,
            })
        }
    }
}

/// Sample mean and covariance (population normalisation) of the initial normal draws.
fn sample_initial_draws<R: Real>(n: usize, cfg: &RunConfig<R>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if cfg.n_traj <= n {
        return Err(Error::InsufficientSamples { needed: n + 1, got: cfg.n_traj });
    }
    let ranges = chunk_ranges(cfg.n_traj);
    let parts = in_pool(cfg.threads, || {
        ranges
            .into_par_iter()
            .map(|range| {
                let mut s1 = DMatrix::<f64>::zeros(n, 1);
                let mut s2 = DMatrix::<f64>::zeros(n, n);
                let mut z = vec![0.0f64; n];
                for traj in range {
                    let mut rng = trajectory_rng(cfg.seed, traj as u64);
                    fill_normals(&mut rng, &mut z);
                    let v = DMatrix::from_column_slice(n, 1, &z);
                    s1 += &v;
                    s2 += &v * v.transpose();
                }
                (s1, s2)
            })
            .collect::<Vec<_>>()
    })?;
    let (mut s1, mut s2) = (DMatrix::zeros(n, 1), DMatrix::zeros(n, n));
    for (a, b) in parts {
        s1 += a;
        s2 += b;
    }
    let count = cfg.n_traj as f64;
    let mean = s1 / count;
    let cov = s2 / count - &mean * mean.transpose();
    Ok((mean, cov))
}

/// Step counts per recorded interval; intervals that are not a whole number of
/// steps end with one shorter step.
struct Plan<R> {
    kernels: Vec<Kernel<R>>,
    legs: Vec<Vec<(usize, usize)>>,
}

fn build_plan<R: Real>(system: System<'_, R>, times: &[R], cfg: &RunConfig<R>) -> Result<Plan<R>> {
    if times.is_empty() {
        return Err(Error::InvalidParameter { name: "times", reason: "no record times".into() });
    }
    let mut kernels: Vec<(R, Kernel<R>)> = Vec::new();
    let mut kernel_for = |h: R| -> Result<usize> {
        if let Some(i) = kernels.iter().position(|(len, _)| *len == h) {
            return Ok(i);
        }
        kernels.push((h, system.kernel(cfg.integrator, h)?));
        Ok(kernels.len() - 1)
    };
    let mut legs = Vec::with_capacity(times.len());
    let mut now = R::zero();
    let tol = R::lit(1e-9);
    for &t in times {
        if !t.is_finite() || t < now {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: "record times must be finite, non-negative and non-decreasing".into(),
            });
        }
        let span = t - now;
        let ratio = span / cfg.dt;
        let mut whole = (ratio + tol).floor();
        let rest = span - whole * cfg.dt;
        let mut leg = Vec::new();
        if rest <= tol * cfg.dt {
            whole = (ratio).round();
        }
        let count = whole.to_usize().unwrap_or(0);
        if count > 0 {
            leg.push((kernel_for(cfg.dt)?, count));
        }
        let rest = span - R::from_usize_lossy(count) * cfg.dt;
        if rest > tol * cfg.dt {
            leg.push((kernel_for(rest)?, 1));
        }
        legs.push(leg);
        now = t;
    }
    Ok(Plan { kernels: kernels.into_iter().map(|(_, k)| k).collect(), legs })
}

struct Driver<'a, R> {
    system: System<'a, R>,
    plan: Plan<R>,
    init: InitSampler<R>,
    seed: u64,
}

impl<'a, R: Real> Driver<'a, R> {
    fn new(system: System<'a, R>, initial: &Initial<R>, times: &[R], cfg: &RunConfig<R>) -> Result<Self> {
        cfg.validate()?;
        let plan = build_plan(system, times, cfg)?;
        let init = build_sampler(system, initial, cfg)?;
        Ok(Self { system, plan, init, seed: cfg.seed })
    }

    fn run(&self, traj: usize, x: &mut [R], z: &mut [R], scratch: &mut [R], mut record: impl FnMut(usize, &[R])) {
        let mut rng = trajectory_rng(self.seed, traj as u64);
        self.init.sample(&mut rng, z, x);
        for (k, leg) in self.plan.legs.iter().enumerate() {
            for &(ki, count) in leg {
                let kernel = &self.plan.kernels[ki];
                let draws = self.system.noises(kernel);
                for _ in 0..count {
                    fill_normals(&mut rng, &mut z[..draws]);
                    match (kernel, self.system) {
                        (Kernel::Linear(step), _) => step.apply(x, z, scratch),
                        (Kernel::OverdampedEm(h), System::Overdamped(m)) => euler_maruyama_step(m, x, *h, z, scratch),
                        (Kernel::KramersEm(h), System::Kramers(kp)) => {
                            let mut s = [x[0], x[1]];
                            kramers_em_step(kp, &mut s, *h, z[0]);
                            x[..2].copy_from_slice(&s);
                        }
                        _ => unreachable!("kernel built for another system"),
                    }
                }
            }
            record(k, x);
        }
    }

    fn collect<A: Send>(
        &self,
        cfg: &RunConfig<R>,
        chunk: impl Fn(&Self, Range<usize>) -> A + Sync + Send,
    ) -> Result<Vec<A>> {
        let ranges = chunk_ranges(cfg.n_traj);
        in_pool(cfg.threads, || ranges.into_par_iter().map(|r| chunk(self, r)).collect())
    }

    fn store(&self, times: &[R], cfg: &RunConfig<R>) -> Result<TrajectoryStore<R>> {
        let dim = self.system.dim();
        let per_traj = times.len() * dim;
        let parts = self.collect(cfg, |d, range| {
            let mut out = Vec::with_capacity(range.len() * per_traj);
            let (mut x, mut z, mut scratch) = (vec![R::zero(); dim], vec![R::zero(); dim], vec![R::zero(); dim]);
            for traj in range {
                d.run(traj, &mut x, &mut z, &mut scratch, |_, state| out.extend_from_slice(state));
            }
            out
        })?;
        Ok(TrajectoryStore { times: times.to_vec(), dim, n_traj: cfg.n_traj, data: parts.concat() })
    }
}


fn full_grid<R: Real>(times: &[R], dt: R) -> Vec<R> {
    let end = times.iter().copied().fold(R::zero(), R::max);
    let steps = (end / dt - R::lit(1e-9)).ceil().to_usize().unwrap_or(0);
    (0..=steps).map(|k| (R::from_usize_lossy(k) * dt).min(end)).collect()
}

/// Runs `cfg.n_traj` trajectories of the overdamped model and records them at `times`.
/// With `full_paths` every integration step up to the last time is recorded instead.
pub fn simulate_ensemble<R: Real>(
    model: &OverdampedModel<R>,
    initial: &Initial<R>,
    times: &[R],
    cfg: &RunConfig<R>,
    full_paths: bool,
) -> Result<TrajectoryStore<R>> {
    model.validate()?;
    let grid = if full_paths { full_grid(times, cfg.dt) } else { times.to_vec() };
    Driver::new(System::Overdamped(model), initial, &grid, cfg)?.store(&grid, cfg)
}

/// Streams the pair moments of coordinates `(0, 1)` at every time without storing paths.
pub fn simulate_pair_moments<R: Real>(
    model: &OverdampedModel<R>,
    initial: &Initial<R>,
    times: &[R],
    cfg: &RunConfig<R>,
    shift: [R; 2],
) -> Result<Vec<PairMoments<R>>> {
    model.validate()?;
    if model.n != 2 {
        return Err(Error::InvalidParameter { name: "n", reason: "pair moments need two coordinates".into() });
    }
    let driver = Driver::new(System::Overdamped(model), initial, times, cfg)?;
    let parts = driver.collect(cfg, |d, range| {
        let mut acc = vec![PairMoments::new(shift); times.len()];
        let (mut x, mut z, mut scratch) = ([R::zero(); 2], [R::zero(); 2], [R::zero(); 2]);
        for traj in range {
            d.run(traj, &mut x, &mut z, &mut scratch, |k, s| acc[k].push(s[0], s[1]));
        }
        acc
    })?;
    let mut total = vec![PairMoments::new(shift); times.len()];
    for part in parts {
        for (t, p) in total.iter_mut().zip(&part) {
            t.merge(p);
        }
    }
    Ok(total)
}

/// Records `x_j(t-ε)`, `x(t)` and `x_j(t+ε)` for each probed `j` along one
/// continuous trajectory per ensemble member.
pub fn probe_slices<R: Real>(
    model: &OverdampedModel<R>,
    initial: &Initial<R>,
    t: R,
    eps: R,
    probed: &[usize],
    cfg: &RunConfig<R>,
) -> Result<EnsembleSlices<R>> {
    model.validate()?;
    if !(eps >= cfg.dt) {
        return Err(Error::InvalidProbe { eps: eps.as_f64(), reason: format!("smaller than the step {}", cfg.dt) });
    }
    if !(t - eps >= R::zero()) {
        return Err(Error::InvalidProbe { eps: eps.as_f64(), reason: format!("t - eps < 0 at t = {t}") });
    }
    if probed.is_empty() || probed.iter().any(|&j| j >= model.n) {
        return Err(Error::InvalidParameter { name: "probed", reason: format!("indices must lie in 1..={}", model.n) });
    }
    let times = [t - eps, t, t + eps];
    let store = simulate_ensemble(model, initial, &times, cfg, false)?;
    let mut slices = EnsembleSlices::empty(model.n, t, eps, Some(cfg.dt), probed.to_vec());
    let mut minus = vec![R::zero(); probed.len()];
    let mut plus = vec![R::zero(); probed.len()];
    for traj in 0..store.n_traj {
        for (slot, &j) in probed.iter().enumerate() {
            minus[slot] = store.state(traj, 0)[j];
            plus[slot] = store.state(traj, 2)[j];
        }
        slices.push(traj as u64, &minus, store.state(traj, 1), &plus);
    }
    Ok(slices)
}

/// Underdamped particle `m ẍ = -a x - γ ẋ + η`, `<η η> = 2γT δ`, recorded as `(x, p)`.
pub fn simulate_kramers<R: Real>(
    kp: &KramersParams<R>,
    initial: &Initial<R>,
    times: &[R],
    cfg: &RunConfig<R>,
) -> Result<PhaseEnsemble<R>> {
    kp.validate()?;
    let mut warnings = Vec::new();
    if cfg.dt > kp.tau_p() / R::lit(2.0) {
        let detail = match cfg.integrator {
            Integrator::Exact => "exact update stays unbiased",
            Integrator::EulerMaruyama => "euler-maruyama is inaccurate or unstable here",
        };
        warnings.push(format!("dt = {} exceeds tau_p/2 = {}; {detail}", cfg.dt, kp.tau_p() / R::lit(2.0)));
    }
    let store = Driver::new(System::Kramers(kp), initial, times, cfg)?.store(times, cfg)?;
    Ok(PhaseEnsemble { store, warnings })
}
