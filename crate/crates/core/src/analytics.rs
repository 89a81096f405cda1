//! Closed-form statistics of the harmonic pair: covariance propagation,
//! osmotic velocities, witness values, the equilibrium coupling threshold and
//! the free-particle entanglement window.
//!
//! All means are zero here. The witness only involves centered moments, so
//! nonzero means are handled by the estimators, which center their samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Covariance2, PairParams, SignPair, ValidatedPairParams};
use crate::scalar::Real;

/// Osmotic velocities `u_j = -T ∂_j ln P` of the two particles at one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OsmoticPair<R> {
    pub u1: R,
    pub u2: R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Witness value strictly below `4T`.
    Entangled,
    /// Witness value at or above `4T`: the sufficient condition is silent.
    Undecided,
    /// Sample estimate within the guard band around `4T`.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignValue<R> {
    pub signs: SignPair,
    pub value: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport<R> {
    pub values: [SignValue<R>; 4],
    pub min_value: R,
    pub min_signs: SignPair,
    pub threshold: R,
    pub verdict: Verdict,
}

impl<R: Real> WitnessReport<R> {
    pub fn value(&self, signs: SignPair) -> R {
        self.values.iter().find(|v| v.signs == signs).map(|v| v.value).expect("all sign pairs present")
    }
}

/// Which side of `t = 0` the free-particle window started on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowBranch {
    /// Condition fails at `t = 0` and holds on `(t_minus, t_plus)` with `t_minus > 0`.
    OpensLater,
    /// Condition already holds at `t = 0`; the window is clipped to start there.
    HoldsInitially,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window<R> {
    pub t_minus: R,
    pub t_plus: R,
    pub branch: WindowBranch,
}

impl<R: Real> Window<R> {
    pub fn contains(&self, t: R) -> bool {
        match self.branch {
            WindowBranch::OpensLater => t > self.t_minus && t < self.t_plus,
            WindowBranch::HoldsInitially => t >= self.t_minus && t < self.t_plus,
        }
    }

    pub fn len(&self) -> R {
        self.t_plus - self.t_minus
    }
}

/// Gibbs covariance `s11 = s22 = T a/(a²-g²)`, `s12 = -T g/(a²-g²)`.
pub fn equilibrium_covariance<R: Real>(params: &ValidatedPairParams<R>) -> Result<Covariance2<R>> {
    let p = params.require_stable()?;
    let d = p.a * p.a - p.g * p.g;
    let (t1, t2) = (p.t1(), p.t2());
    if t1 == t2 {
        let s = t1 * p.a / d;
        return Ok(Covariance2::new(s, -t1 * p.g / d, s));
    }
    // Unequal baths still relax to a Gaussian stationary state; take it from the mode solution.
    Ok(stationary_modes(p))
}

fn stationary_modes<R: Real>(p: &PairParams<R>) -> Covariance2<R> {
    let (lp, lm) = p.mode_rates();
    let two = R::lit(2.0);
    let q = (p.t1() + p.t2()) / two;
    let qc = (p.t1() - p.t2()) / two;
    let vp = q / (two * lp);
    let vm = q / (two * lm);
    let c = qc / (two * p.a);
    from_modes(vp, vm, c)
}

fn from_modes<R: Real>(vp: R, vm: R, c: R) -> Covariance2<R> {
    let two = R::lit(2.0);
    Covariance2::new(vp + vm + two * c, vp - vm, vp + vm - two * c)
}

/// Exact second moments at time `t` for the pair started from `cov0` with zero means.
///
/// Works in the modes `r± = (x1 ± x2)/2`, which relax at rates `a ± g` and
/// receive bath noise of intensity `(T1 + T2)/2` each (cross intensity
/// `(T1 - T2)/2`). A mode with zero rate diffuses linearly.
pub fn propagate_covariance<R: Real>(
    params: &PairParams<R>,
    cov0: &Covariance2<R>,
    t: R,
) -> Result<Covariance2<R>> {
    if t < R::zero() || t.is_nan() {
        return Err(Error::NegativeTime(t.as_f64()));
    }
    if t == R::zero() {
        return Ok(*cov0);
    }
    let (two, four) = (R::lit(2.0), R::lit(4.0));
    let (lp, lm) = params.mode_rates();
    let q = (params.t1() + params.t2()) / two;
    let qc = (params.t1() - params.t2()) / two;

    let vp0 = (cov0.s11 + two * cov0.s12 + cov0.s22) / four;
    let vm0 = (cov0.s11 - two * cov0.s12 + cov0.s22) / four;
    let c0 = (cov0.s11 - cov0.s22) / four;

    let decay = |rate: R| (-rate * t).exp();
    let vp = decay(two * lp) * vp0 + q * R::exp_integral(two * lp, t);
    let vm = decay(two * lm) * vm0 + q * R::exp_integral(two * lm, t);
    let c = decay(lp + lm) * c0 + qc * R::exp_integral(lp + lm, t);
    Ok(from_modes(vp, vm, c))
}

/// `u1 = T (s22 x1 - s12 x2)/d`, `u2 = T (s11 x2 - s12 x1)/d`.
pub fn osmotic_velocity<R: Real>(cov: &Covariance2<R>, temperature: R, x1: R, x2: R) -> Result<OsmoticPair<R>> {
    let d = cov.require_positive_definite()?;
    Ok(OsmoticPair {
        u1: temperature * (cov.s22 * x1 - cov.s12 * x2) / d,
        u2: temperature * (cov.s11 * x2 - cov.s12 * x1) / d,
    })
}

/// Osmotic velocity conditioned on one coordinate alone, `T x_j / s_jj`.
pub fn local_osmotic_velocity<R: Real>(s_jj: R, temperature: R, x_j: R) -> Result<R> {
    if !(s_jj > R::zero()) || !s_jj.is_finite() {
        return Err(Error::InvalidParameter {
            name: "s_jj",
            reason: format!("variance must be positive, got {s_jj}"),
        });
    }
    Ok(temperature * x_j / s_jj)
}

/// `<(Δu1 + ζ Δu2)²> + <(Δx1 + ε Δx2)²>` for the Gaussian state with covariance `cov`.
pub fn witness_value<R: Real>(cov: &Covariance2<R>, temperature: R, signs: SignPair) -> Result<R> {
    let d = cov.require_positive_definite()?;
    check_temperature(temperature)?;
    let two = R::lit(2.0);
    let zeta: R = signs.zeta.value();
    let eps: R = signs.eps_sign.value();
    let velocity_part = temperature * temperature * (cov.s22 + cov.s11 - two * zeta * cov.s12) / d;
    let coordinate_part = cov.s11 + cov.s22 + two * eps * cov.s12;
    Ok(velocity_part + coordinate_part)
}

fn check_temperature<R: Real>(t: R) -> Result<()> {
    if t > R::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTemperature { name: "T", value: t.as_f64() })
    }
}

pub(crate) fn report_from_values<R: Real>(values: [SignValue<R>; 4], temperature: R) -> WitnessReport<R> {
    let best = values
        .iter()
        .copied()
        .fold(values[0], |acc, v| if v.value < acc.value { v } else { acc });
    let threshold = R::lit(4.0) * temperature;
    let verdict = if best.value < threshold { Verdict::Entangled } else { Verdict::Undecided };
    WitnessReport { values, min_value: best.value, min_signs: best.signs, threshold, verdict }
}

/// Evaluates all four sign pairs; `Entangled` iff the minimum is strictly below `4T`.
pub fn witness_report<R: Real>(cov: &Covariance2<R>, temperature: R) -> Result<WitnessReport<R>> {
    let mut values = [SignValue { signs: SignPair::ALL[0], value: R::zero() }; 4];
    for (slot, signs) in values.iter_mut().zip(SignPair::ALL) {
        *slot = SignValue { signs, value: witness_value(cov, temperature, signs)? };
    }
    Ok(report_from_values(values, temperature))
}

/// Witness report of the Gibbs state; rejects unequal bath temperatures.
pub fn equilibrium_witness<R: Real>(params: &ValidatedPairParams<R>) -> Result<WitnessReport<R>> {
    let t = params.require_equal_temperatures()?;
    witness_report(&equilibrium_covariance(params)?, t)
}

/// Witness combination evaluated with the local velocities `μ_j = T x_j / s_jj`.
///
/// These are reported for comparison only. No verdict is attached: the local
/// joint law is a product of single-particle laws and is separable by construction.
pub fn local_witness_values<R: Real>(cov: &Covariance2<R>, temperature: R) -> Result<[SignValue<R>; 4]> {
    cov.require_positive_definite()?;
    check_temperature(temperature)?;
    let t2 = temperature * temperature;
    let two = R::lit(2.0);
    let mu11 = t2 / cov.s11;
    let mu22 = t2 / cov.s22;
    let mu12 = t2 * cov.s12 / (cov.s11 * cov.s22);
    let mut out = [SignValue { signs: SignPair::ALL[0], value: R::zero() }; 4];
    for (slot, signs) in out.iter_mut().zip(SignPair::ALL) {
        let zeta: R = signs.zeta.value();
        let eps: R = signs.eps_sign.value();
        let value = mu11 + mu22 + two * zeta * mu12 + cov.s11 + cov.s22 + two * eps * cov.s12;
        *slot = SignValue { signs, value };
    }
    Ok(out)
}

/// Equal-variance form of the witness condition: `(s11 - T)² < s12² + 2T|s12|`.
pub fn konkord_check<R: Real>(s11: R, s12: R, temperature: R) -> bool {
    let lhs = (s11 - temperature) * (s11 - temperature);
    let rhs = s12 * s12 + R::lit(2.0) * temperature * s12.abs();
    lhs < rhs
}

/// Smallest `|g|` above which the Gibbs state of the pair violates the bound:
/// `-1 + sqrt(1 + (a-1)²)`.
pub fn equilibrium_threshold<R: Real>(a: R) -> Result<R> {
    if !(a > R::zero()) || !a.is_finite() {
        return Err(Error::InvalidParameter { name: "a", reason: format!("stiffness must be positive, got {a}") });
    }
    let d = a - R::one();
    // sqrt(1 + d²) - 1 written without cancellation
    Ok(d * d / ((R::one() + d * d).sqrt() + R::one()))
}

/// Times at which two free particles (`a = g = 0`) with equal variances
/// `s11(0)` and cross-covariance `s12(0)` satisfy the witness condition.
///
/// Solves `|s11(0) - T + 2Tt| < sqrt(s12² + 2T|s12|)`, intersected with `t >= 0`.
/// Returns `None` when no nonnegative time satisfies it.
pub fn free_window<R: Real>(s11_0: R, s12_0: R, temperature: R) -> Result<Option<Window<R>>> {
    check_temperature(temperature)?;
    if !(s11_0 >= R::zero()) || !s12_0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "s11_0",
            reason: "initial variance must be finite and non-negative".into(),
        });
    }
    let two_t = R::lit(2.0) * temperature;
    let radius = (s12_0 * s12_0 + two_t * s12_0.abs()).sqrt();
    if radius == R::zero() {
        return Ok(None);
    }
    let t_minus = (temperature - s11_0 - radius) / two_t;
    let t_plus = (temperature - s11_0 + radius) / two_t;
    if t_plus <= R::zero() {
        return Ok(None);
    }
    Ok(Some(if t_minus >= R::zero() {
        Window { t_minus, t_plus, branch: WindowBranch::OpensLater }
    } else {
        Window { t_minus: R::zero(), t_plus, branch: WindowBranch::HoldsInitially }
    }))
}
