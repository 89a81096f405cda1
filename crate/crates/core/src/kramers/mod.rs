//! Exact solution of the single underdamped particle in a harmonic well.
//!
//! Starting from `x(0) = p(0) = 0`, the coordinate is the response `f(t)/m`
//! convolved with the bath noise. Everything here is closed form; a
//! quadrature route for the two-time correlator is kept as an independent
//! check.

mod crossover;

pub use crossover::{
    conditional_momentum_check, crossover_report, finite_eps_velocities, overdamped_osmotic_reference,
    CrossoverRow, CrossoverTable, MomentumBin, MomentumCheck, Plateau,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::KramersParams;
use crate::quad;
use crate::scalar::Real;

/// Below this relative rate splitting the critical-damping limit forms are used.
pub const CRITICAL_SPLIT: f64 = 1e-8;
/// Below this relative splitting the four-term correlator loses too many digits
/// to cancellation, and the correlator is integrated numerically instead.
pub const CORRELATOR_SPLIT: f64 = 1e-3;

/// Decay rates of the coordinate response, `omega1 >= omega2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRates<R> {
    pub omega1: R,
    pub omega2: R,
}

impl<R: Real> ModeRates<R> {
    pub fn split(&self) -> R {
        self.omega1 - self.omega2
    }

    pub fn is_critical(&self) -> bool {
        self.split() < R::lit(CRITICAL_SPLIT) * (self.omega1 + self.omega2)
    }
}

/// `(gamma/2m)(1 ± sqrt(1 - 4am/gamma²))`. The oscillatory regime is rejected.
pub fn mode_rates<R: Real>(kp: &KramersParams<R>) -> Result<ModeRates<R>> {
    kp.validate()?;
    let ratio = kp.damping_ratio();
    if ratio > R::one() {
        return Err(Error::OscillatoryRegime(ratio.as_f64()));
    }
    let omega1 = kp.gamma / (R::lit(2.0) * kp.m) * (R::one() + (R::one() - ratio).sqrt());
    // product form avoids cancellation in the slow rate
    let omega2 = (kp.a / kp.m) / omega1;
    Ok(ModeRates { omega1, omega2 })
}

/// Coordinate response `f` to a unit momentum kick and response `resp_g` to a unit displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsePair<R> {
    pub f: R,
    pub resp_g: R,
}

fn response_with<R: Real>(rates: &ModeRates<R>, t: R) -> ResponsePair<R> {
    if rates.is_critical() {
        let w = R::lit(0.5) * (rates.omega1 + rates.omega2);
        let e = (-w * t).exp();
        return ResponsePair { f: t * e, resp_g: (R::one() + w * t) * e };
    }
    // (e^{-w2 t} - e^{-w1 t})/(w1 - w2) = e^{-w2 t} (1 - e^{-Δt})/Δ
    let slow = (-rates.omega2 * t).exp();
    let f = slow * R::exp_integral(rates.split(), t);
    ResponsePair { f, resp_g: slow + rates.omega2 * f }
}

pub fn response<R: Real>(kp: &KramersParams<R>, t: R) -> Result<ResponsePair<R>> {
    if t < R::zero() || t.is_nan() {
        return Err(Error::NegativeTime(t.as_f64()));
    }
    Ok(response_with(&mode_rates(kp)?, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelatorMethod {
    /// Analytic integration of the product of responses.
    #[default]
    ClosedForm,
    /// Adaptive Gauss–Kronrod on the defining integral.
    Quadrature,
}

/// `<x(s) x(t)>` for the particle started at rest at the origin.
pub fn coordinate_correlator<R: Real>(kp: &KramersParams<R>, s: R, t: R) -> Result<R> {
    coordinate_correlator_with(kp, s, t, CorrelatorMethod::ClosedForm)
}

pub fn coordinate_correlator_with<R: Real>(
    kp: &KramersParams<R>,
    s: R,
    t: R,
    method: CorrelatorMethod,
) -> Result<R> {
    for v in [s, t] {
        if v < R::zero() || v.is_nan() {
            return Err(Error::NegativeTime(v.as_f64()));
        }
    }
    let rates = mode_rates(kp)?;
    let prefactor = R::lit(2.0) * kp.gamma * kp.temperature / (kp.m * kp.m);
    let lower = s.min(t);
    let lag = (s - t).abs();
    let value = match method {
        CorrelatorMethod::Quadrature => quadrature_integral(&rates, lower, lag),
        CorrelatorMethod::ClosedForm => {
            let rel_split = rates.split() / (rates.omega1 + rates.omega2);
            if rates.is_critical() {
                critical_integral(&rates, lower, lag)
            } else if rel_split < R::lit(CORRELATOR_SPLIT) {
                quadrature_integral(&rates, lower, lag)
            } else {
                four_term_integral(&rates, lower, lag)
            }
        }
    };
    Ok(prefactor * value)
}

/// `∫_0^S f(t') f(t' + τ) dt'` with `f` expanded into exponentials.
fn four_term_integral<R: Real>(rates: &ModeRates<R>, upper: R, lag: R) -> R {
    let (w1, w2) = (rates.omega1, rates.omega2);
    let two = R::lit(2.0);
    let split = w1 - w2;
    let e1 = (-w1 * lag).exp();
    let e2 = (-w2 * lag).exp();
    let slow = R::exp_integral(two * w2, upper);
    let mixed = R::exp_integral(w1 + w2, upper);
    let fast = R::exp_integral(two * w1, upper);
    // group as e2 (slow - mixed) + e1 (fast - mixed) to keep the large terms paired
    (e2 * (slow - mixed) + e1 * (fast - mixed)) / (split * split)
}

/// `∫_0^S t^n e^{-k t} dt` for n = 0, 1, 2.
fn moment_integral<R: Real>(n: u32, k: R, upper: R) -> R {
    let x = k * upper;
    if x.abs() < R::one() {
        // S^{n+1} Σ_j (-x)^j / (j! (n+1+j))
        let mut term = R::one();
        let mut sum = R::zero();
        for j in 0..40u32 {
            let denom = R::lit(f64::from(n + 1 + j));
            sum = sum + term / denom;
            term = term * (-x) / R::lit(f64::from(j + 1));
            if term.abs() < R::epsilon() * R::lit(1e-3) {
                break;
            }
        }
        return upper.powi(n as i32 + 1) * sum;
    }
    let e = (-x).exp();
    match n {
        0 => (R::one() - e) / k,
        1 => (R::one() - e * (R::one() + x)) / (k * k),
        _ => {
            let two = R::lit(2.0);
            (two - e * (two + two * x + x * x)) / (k * k * k)
        }
    }
}

fn critical_integral<R: Real>(rates: &ModeRates<R>, upper: R, lag: R) -> R {
    // f = t e^{-w t}: ∫ t'(t'+τ) e^{-w(2t'+τ)} dt'
    let w = R::lit(0.5) * (rates.omega1 + rates.omega2);
    let k = R::lit(2.0) * w;
    (-w * lag).exp() * (moment_integral(2, k, upper) + lag * moment_integral(1, k, upper))
}

fn quadrature_integral<R: Real>(rates: &ModeRates<R>, upper: R, lag: R) -> R {
    let integrand = |u: R| response_with(rates, u).f * response_with(rates, u + lag).f;
    quad::integrate(integrand, R::zero(), upper, R::lit(1e-13), R::min_positive_value()).value
}

/// Overdamped two-time correlator `(T/a)(e^{-w2|s-t|} - e^{-w2(s+t)})`.
pub fn overdamped_correlator<R: Real>(kp: &KramersParams<R>, s: R, t: R) -> Result<R> {
    let rates = mode_rates(kp)?;
    if kp.a == R::zero() {
        return Err(Error::InvalidParameter { name: "a", reason: "needs a confining potential".into() });
    }
    let w2 = rates.omega2;
    Ok(kp.temperature / kp.a * ((-w2 * (s - t).abs()).exp() - (-w2 * (s + t)).exp()))
}

/// True when `omega1` times each of `s`, `t` and `|s - t|` is at least `factor`.
pub fn in_fast_relaxed_regime<R: Real>(kp: &KramersParams<R>, s: R, t: R, factor: R) -> Result<bool> {
    let w1 = mode_rates(kp)?.omega1;
    Ok(w1 * s >= factor && w1 * t >= factor && w1 * (s - t).abs() >= factor)
}
