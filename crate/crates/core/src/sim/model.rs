//! Overdamped N-particle and underdamped single-particle dynamics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linear::LinearStep;
use crate::error::{Error, Result};
use crate::model::{KramersParams, PairParams};
use crate::scalar::Real;

/// `dx_i = -(K x)_i dt - c_i x_i³ dt + √(2 T_i) dW_i` (γ = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverdampedModel<R> {
    pub n: usize,
    /// Row-major symmetric `n × n` stiffness matrix.
    pub stiffness: Vec<R>,
    pub temps: Vec<R>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quartic: Option<Vec<R>>,
}

impl<R: Real> OverdampedModel<R> {
    pub fn new(stiffness: Vec<R>, temps: Vec<R>) -> Result<Self> {
        let model = Self { n: temps.len(), stiffness, temps, quartic: None };
        model.validate()?;
        Ok(model)
    }

    pub fn single(a: R, temperature: R) -> Result<Self> {
        Self::new(vec![a], vec![temperature])
    }

    /// Harmonic pair `U = a x1²/2 + a x2²/2 + g x1 x2` with the pair's bath temperatures.
    pub fn pair(params: &PairParams<R>) -> Result<Self> {
        let (a, g) = (params.a, params.g);
        Self::new(vec![a, g, g, a], vec![params.t1(), params.t2()])
    }

    pub fn with_quartic(mut self, c: Vec<R>) -> Result<Self> {
        self.quartic = Some(c);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidParameter { name: "n", reason: "need at least one particle".into() });
        }
        if self.stiffness.len() != n * n {
            return Err(Error::InvalidParameter {
                name: "stiffness",
                reason: format!("expected {} entries, got {}", n * n, self.stiffness.len()),
            });
        }
        if self.stiffness.iter().chain(&self.temps).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model coefficients"));
        }
        for i in 0..n {
            for j in 0..i {
                let (kij, kji) = (self.stiffness[i * n + j], self.stiffness[j * n + i]);
                if kij != kji {
                    return Err(Error::InvalidParameter {
                        name: "stiffness",
                        reason: format!("not symmetric at ({i}, {j})"),
                    });
                }
            }
        }
        for &t in &self.temps {
            if !(t > R::zero()) {
                return Err(Error::NonPositiveTemperature { name: "temps", value: t.as_f64() });
            }
        }
        if let Some(c) = &self.quartic {
            if c.len() != n {
                return Err(Error::InvalidParameter { name: "quartic", reason: "one coefficient per particle".into() });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("quartic coefficients"));
            }
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.quartic.as_ref().is_none_or(|c| c.iter().all(|v| *v == R::zero()))
    }

    /// Deterministic force `-K x - c x³`.
    pub fn force(&self, x: &[R], out: &mut [R]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.stiffness[i * n..(i + 1) * n];
            out[i] = -row.iter().zip(x).fold(R::zero(), |acc, (k, xk)| acc + *k * *xk);
            if let Some(c) = &self.quartic {
                out[i] = out[i] - c[i] * x[i] * x[i] * x[i];
            }
        }
    }

    /// Exact transition over `dt`; only for models without the quartic term.
    pub fn exact_step(&self, dt: R) -> Result<LinearStep<R>> {
        if !self.is_linear() {
            return Err(Error::InvalidParameter {
                name: "integrator",
                reason: "exact stepping needs a harmonic model; use euler-maruyama".into(),
            });
        }
        let n = self.n;
        let drift = DMatrix::from_fn(n, n, |i, j| -self.stiffness[i * n + j].as_f64());
        let diffusion = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 * self.temps[i].as_f64() } else { 0.0 });
        LinearStep::new(&drift, &diffusion, dt.as_f64())
    }
}

/// Exact update of the harmonic pair through its normal modes `r± = (x1 ± x2)/2`.
///
/// Each mode relaxes at `λ± = a ± g` and receives noise of intensity `(T1+T2)/2`
/// per unit time; the modes share a cross intensity `(T1-T2)/2`.
pub fn exact_pair_step<R: Real>(params: &PairParams<R>, state: [R; 2], dt: R, noise: [R; 2]) -> [R; 2] {
    let two = R::lit(2.0);
    let (lp, lm) = params.mode_rates();
    let q_same = (params.t1() + params.t2()) / two;
    let q_cross = (params.t1() - params.t2()) / two;
    let vp = q_same * R::exp_integral(two * lp, dt);
    let vm = q_same * R::exp_integral(two * lm, dt);
    let c = q_cross * R::exp_integral(lp + lm, dt);
    let l00 = vp.sqrt();
    let l10 = if l00 > R::zero() { c / l00 } else { R::zero() };
    let l11 = (vm - l10 * l10).max(R::zero()).sqrt();
    let rp = (state[0] + state[1]) / two;
    let rm = (state[0] - state[1]) / two;
    let rp = (-lp * dt).exp() * rp + l00 * noise[0];
    let rm = (-lm * dt).exp() * rm + l10 * noise[0] + l11 * noise[1];
    [rp + rm, rp - rm]
}

/// One Euler–Maruyama step `x ← x + F(x) dt + √(2 T_i dt) ξ_i`.
pub fn euler_maruyama_step<R: Real>(model: &OverdampedModel<R>, state: &mut [R], dt: R, noise: &[R], scratch: &mut [R]) {
    model.force(state, scratch);
    let two = R::lit(2.0);
    for i in 0..model.n {
        state[i] = state[i] + scratch[i] * dt + (two * model.temps[i] * dt).sqrt() * noise[i];
    }
}

/// Drift and diffusion of the phase-space process `(x, p)` of `m ẍ = -a x - γ ẋ + η`.
pub(crate) fn kramers_matrices<R: Real>(kp: &KramersParams<R>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, gamma, a, t) = (kp.m.as_f64(), kp.gamma.as_f64(), kp.a.as_f64(), kp.temperature.as_f64());
    let drift = DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / m, -a, -gamma / m]);
    let diffusion = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0 * gamma * t]);
    (drift, diffusion)
}

/// Euler–Maruyama step for the phase-space process.
pub fn kramers_em_step<R: Real>(kp: &KramersParams<R>, state: &mut [R; 2], dt: R, noise: R) {
    let [x, p] = *state;
    let kick = (R::lit(2.0) * kp.gamma * kp.temperature * dt).sqrt() * noise;
    state[0] = x + p / kp.m * dt;
    state[1] = p + (-kp.a * x - kp.gamma / kp.m * p) * dt + kick;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pair_step_mode_decay() {
        let p = PairParams::new(1.0, 0.5, 1.0);
        let out = exact_pair_step(&p, [1.0, 1.0], 1.0, [0.0, 0.0]);
        // r+ = 1 decays by e^{-1.5}
        assert_relative_eq!(out[0], 0.22313016014842982, max_relative = 1e-14);
        assert_relative_eq!(out[1], out[0]);
    }

    #[test]
    fn pair_step_free_is_brownian() {
        let p = PairParams::new(0.0, 0.0, 1.5);
        let dt = 0.2;
        // mode noise roots are √(T dt); x1 = r+ + r-
        let out = exact_pair_step(&p, [0.3, -0.1], dt, [1.0, 0.0]);
        assert_relative_eq!(out[0], 0.3 + (1.5f64 * dt).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(out[1], -0.1 + (1.5f64 * dt).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn mode_step_agrees_with_linear_step() {
        // The two exact updates differ only in the square root of Q; compare Φ and Q.
        let p = PairParams::new(1.3, -0.4, 0.7).with_bath_temperatures(0.5, 1.1);
        let dt = 0.37;
        let step = OverdampedModel::pair(&p).unwrap().exact_step(dt).unwrap();
        let mean = exact_pair_step(&p, [1.0, 0.0], dt, [0.0, 0.0]);
        assert_relative_eq!(step.phi()[0], mean[0], max_relative = 1e-12);
        assert_relative_eq!(step.phi()[2], mean[1], max_relative = 1e-12);
        let columns = [exact_pair_step(&p, [0.0, 0.0], dt, [1.0, 0.0]), exact_pair_step(&p, [0.0, 0.0], dt, [0.0, 1.0])];
        let q = |i: usize, j: usize| columns[0][i] * columns[0][j] + columns[1][i] * columns[1][j];
        let cov = step.noise_cov();
        assert_relative_eq!(q(0, 0), cov[0], max_relative = 1e-12);
        assert_relative_eq!(q(0, 1), cov[1], max_relative = 1e-12);
        assert_relative_eq!(q(1, 1), cov[3], max_relative = 1e-12);
    }

    #[test]
    fn em_zero_noise_without_force_is_identity() {
        let model = OverdampedModel::new(vec![0.0; 4], vec![1.0, 1.0]).unwrap();
        let mut x = [0.4, -2.0];
        let mut scratch = [0.0; 2];
        euler_maruyama_step(&model, &mut x, 0.01, &[0.0, 0.0], &mut scratch);
        assert_eq!(x, [0.4, -2.0]);
    }

    #[test]
    fn quartic_force() {
        let model = OverdampedModel::single(1.0, 1.0).unwrap().with_quartic(vec![0.5]).unwrap();
        let mut f = [0.0];
        model.force(&[2.0], &mut f);
        assert_eq!(f[0], -2.0 - 4.0);
        assert!(model.exact_step(0.1).is_err());
    }

    #[test]
    fn validation() {
        assert!(OverdampedModel::new(vec![1.0, 0.2, 0.3, 1.0], vec![1.0, 1.0]).is_err());
        assert!(OverdampedModel::new(vec![1.0], vec![0.0]).is_err());
        assert!(OverdampedModel::new(vec![1.0, 0.0], vec![1.0]).is_err());
        assert!(OverdampedModel::<f64>::new(vec![], vec![]).is_err());
    }

    #[test]
    fn kramers_exact_step_stationary() {
        let kp = KramersParams::new(0.5, 1.0, 2.0, 1.5).unwrap();
        let (a, b) = kramers_matrices(&kp);
        let step = LinearStep::<f64>::new(&a, &b, 80.0).unwrap();
        let q = step.noise_cov();
        assert_relative_eq!(q[0], 1.5 / 2.0, max_relative = 1e-9);
        assert!(q[1].abs() < 1e-9);
        assert_relative_eq!(q[3], 0.5 * 1.5, max_relative = 1e-9);
    }
}
