//! Finite-resolution coarse-grained velocities of the underdamped particle and
//! their crossover to the overdamped osmotic velocity.

use serde::{Deserialize, Serialize};

use super::coordinate_correlator;
use crate::error::{Error, Result};
use crate::estimators::binning::{Axis, Binning};
use crate::estimators::stats::MeanAcc;
use crate::model::KramersParams;
use crate::scalar::Real;

/// `(nu_plus, nu_minus)` at probe increment `eps` for a particle observed at `x` at time `t`.
///
/// `nu_plus = (x/ε)(σ(t+ε,t)/σ(t,t) - 1)`, `nu_minus = (x/ε)(1 - σ(t-ε,t)/σ(t,t))`.
pub fn finite_eps_velocities<R: Real>(kp: &KramersParams<R>, x: R, t: R, eps: R) -> Result<(R, R)> {
    if !(eps > R::zero()) || eps >= t {
        return Err(Error::InvalidProbe { eps: eps.as_f64(), reason: format!("need 0 < eps < t = {t}") });
    }
    let var = coordinate_correlator(kp, t, t)?;
    if !(var > R::zero()) {
        return Err(Error::InvalidParameter { name: "t", reason: "coordinate variance vanishes".into() });
    }
    let ahead = coordinate_correlator(kp, t + eps, t)?;
    let behind = coordinate_correlator(kp, t - eps, t)?;
    let nu_plus = x / eps * (ahead / var - R::one());
    let nu_minus = x / eps * (R::one() - behind / var);
    Ok((nu_plus, nu_minus))
}

/// Overdamped osmotic velocity `(T/γ) x / σ(t,t)` for the same start at the origin,
/// where the overdamped variance is `(T/a)(1 - e^{-2at/γ})` (or `2Tt/γ` when `a = 0`).
pub fn overdamped_osmotic_reference<R: Real>(kp: &KramersParams<R>, x: R, t: R) -> Result<R> {
    if !(t > R::zero()) {
        return Err(Error::InvalidParameter { name: "t", reason: "needs t > 0".into() });
    }
    let diffusion = kp.temperature / kp.gamma;
    let rate = kp.a / kp.gamma;
    let var = R::lit(2.0) * diffusion * R::exp_integral(R::lit(2.0) * rate, t);
    Ok(diffusion * x / var)
}

/// Probe increments with `10 τ_p <= ε <= 0.1 τ_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau<R> {
    pub lo: R,
    pub hi: R,
}

impl<R: Real> Plateau<R> {
    pub fn of(kp: &KramersParams<R>) -> Self {
        Self { lo: R::lit(10.0) * kp.tau_p(), hi: R::lit(0.1) * kp.tau_x() }
    }

    pub fn contains(&self, eps: R) -> bool {
        eps >= self.lo && eps <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow<R> {
    pub eps: R,
    pub nu_plus: R,
    pub nu_minus: R,
    pub half_diff: R,
    pub u_over: R,
    pub in_plateau: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverTable<R> {
    pub params: KramersParams<R>,
    pub x: R,
    pub t: R,
    pub plateau: Plateau<R>,
    pub rows: Vec<CrossoverRow<R>>,
}

/// Evaluates `nu_±` and their half difference across `eps_grid`, next to the overdamped reference.
pub fn crossover_report<R: Real>(kp: &KramersParams<R>, x: R, t: R, eps_grid: &[R]) -> Result<CrossoverTable<R>> {
    let u_over = overdamped_osmotic_reference(kp, x, t)?;
    let plateau = Plateau::of(kp);
    let rows = eps_grid
        .iter()
        .map(|&eps| {
            let (nu_plus, nu_minus) = finite_eps_velocities(kp, x, t, eps)?;
            Ok(CrossoverRow {
                eps,
                nu_plus,
                nu_minus,
                half_diff: (nu_minus - nu_plus) / R::lit(2.0),
                u_over,
                in_plateau: plateau.contains(eps),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossoverTable { params: *kp, x, t, plateau, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumBin<R> {
    pub x_mean: R,
    pub count: usize,
    pub velocity: R,
    pub se: R,
    pub nu_plus: R,
    pub nu_minus: R,
    pub reliable: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumCheck<R> {
    pub t: R,
    pub eps: R,
    pub bins: Vec<MomentumBin<R>>,
    /// Largest |z| over reliable bins and both directions.
    pub max_abs_z: R,
    pub all_pass: bool,
}

/// Compares the binned conditional mean velocity `E[p/m | x]` of a phase-space
/// ensemble at time `t` with `nu_±(x, t, eps)` at a small probe increment.
/// Agreement within 3 SE in every reliable bin means `nu_+ = nu_- = E[p/m | x]`.
pub fn conditional_momentum_check<R: Real>(
    kp: &KramersParams<R>,
    xs: &[R],
    ps: &[R],
    t: R,
    eps: R,
    binning: &Binning,
) -> Result<MomentumCheck<R>> {
    if xs.len() != ps.len() {
        return Err(Error::Schema(format!("{} coordinates but {} momenta", xs.len(), ps.len())));
    }
    let axis = Axis::fit(xs, binning)?;
    let mut x_acc = vec![MeanAcc::default(); axis.bins];
    let mut v_acc = vec![MeanAcc::default(); axis.bins];
    for (&x, &p) in xs.iter().zip(ps) {
        if let Some(i) = axis.index(x) {
            x_acc[i].push(x);
            v_acc[i].push(p / kp.m);
        }
    }
    let three = R::lit(3.0);
    let mut max_abs_z = R::zero();
    let mut bins = Vec::new();
    for (xa, va) in x_acc.iter().zip(&v_acc) {
        if va.count() < 2 {
            continue;
        }
        let x_mean = xa.mean();
        let (nu_plus, nu_minus) = finite_eps_velocities(kp, x_mean, t, eps)?;
        let (velocity, se) = (va.mean(), va.se());
        let reliable = va.count() >= binning.min_count;
        let z = ((velocity - nu_plus).abs().max((velocity - nu_minus).abs())) / se;
        if reliable {
            max_abs_z = max_abs_z.max(z);
        }
        bins.push(MomentumBin {
            x_mean,
            count: va.count(),
            velocity,
            se,
            nu_plus,
            nu_minus,
            reliable,
            pass: z <= three,
        });
    }
    if !bins.iter().any(|b| b.reliable) {
        return Err(Error::EmptyField { min_count: binning.min_count });
    }
    let all_pass = bins.iter().filter(|b| b.reliable).all(|b| b.pass);
    Ok(MomentumCheck { t, eps, bins, max_abs_z, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kramers::{response, CorrelatorMethod};
    use crate::quad;
    use approx::assert_relative_eq;

    fn overdamped() -> KramersParams<f64> {
        KramersParams::new(0.01, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn odd_in_x() {
        let (p, m) = finite_eps_velocities(&overdamped(), 0.0, 5.0, 0.1).unwrap();
        assert_eq!((p, m), (0.0, 0.0));
        let (p1, m1) = finite_eps_velocities(&overdamped(), 1.3, 5.0, 0.1).unwrap();
        let (p2, m2) = finite_eps_velocities(&overdamped(), -1.3, 5.0, 0.1).unwrap();
        assert_eq!((p1, m1), (-p2, -m2));
    }

    #[test]
    fn stationary_values_at_eps_tenth() {
        // Oracle: stationary autocorrelation from the defining integral by quadrature.
        let kp = overdamped();
        let t = 30.0;
        let eps = 0.1;
        let q = |s: f64| {
            crate::kramers::coordinate_correlator_with(&kp, s, t, CorrelatorMethod::Quadrature).unwrap()
        };
        let var = q(t);
        let expect_plus = (q(t + eps) / var - 1.0) / eps;
        let (p, m) = finite_eps_velocities(&kp, 1.0, t, eps).unwrap();
        assert_relative_eq!(p, expect_plus, max_relative = 1e-7);
        assert_relative_eq!(m, -expect_plus, max_relative = 1e-7);
        // finite tau_p pulls the value well below the naive (e^{-0.1} - 1)/0.1
        assert_relative_eq!(p, -0.8676634186669, max_relative = 1e-8);
    }

    #[test]
    fn invalid_probe() {
        assert!(finite_eps_velocities(&overdamped(), 1.0, 1.0, 1.0).is_err());
        assert!(finite_eps_velocities(&overdamped(), 1.0, 1.0, 0.0).is_err());
        assert!(finite_eps_velocities(&overdamped(), 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn difference_vanishes_linearly_in_eps() {
        // slope = (2γT/m²)(x/σ)[∫_0^t f'² dt' - f f'] by quadrature of the response derivative
        let kp = KramersParams::new(0.5, 1.0, 0.4, 1.0).unwrap();
        let (x, t) = (1.0, 1.5);
        let h = 1e-6;
        let fdot = |u: f64| {
            let lo = (u - h).max(0.0);
            (response(&kp, u + h).unwrap().f - response(&kp, lo).unwrap().f) / (u + h - lo)
        };
        let integral = quad::integrate(|u| fdot(u) * fdot(u), 0.0, t, 1e-10, 0.0).value;
        let var = coordinate_correlator(&kp, t, t).unwrap();
        let slope = 2.0 * kp.gamma * kp.temperature / (kp.m * kp.m) * x / var
            * (integral - response(&kp, t).unwrap().f * fdot(t));
        for eps in [1e-3, 1e-4] {
            let (p, m) = finite_eps_velocities(&kp, x, t, eps).unwrap();
            assert_relative_eq!((m - p) / eps, slope, max_relative = 20.0 * eps);
        }
    }

    #[test]
    fn overdamped_reference_limits() {
        let kp = overdamped();
        assert_relative_eq!(overdamped_osmotic_reference(&kp, 1.0, 50.0).unwrap(), 1.0, max_relative = 1e-12);
        let free = KramersParams::new(0.01, 2.0, 0.0, 1.0).unwrap();
        // σ = 2 (T/γ) t
        assert_relative_eq!(overdamped_osmotic_reference(&free, 1.0, 4.0).unwrap(), 0.5 / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn report_shape_and_plateau_flags() {
        let kp = overdamped();
        let grid = [1e-4, 1e-3, 0.05, 0.1, 0.5];
        let table = crossover_report(&kp, 1.0, 30.0, &grid).unwrap();
        assert_eq!(table.rows.len(), grid.len());
        let flags: Vec<bool> = table.rows.iter().map(|r| r.in_plateau).collect();
        assert_eq!(flags, [false, false, false, true, false]);
        for r in &table.rows {
            assert_relative_eq!(r.half_diff, (r.nu_minus - r.nu_plus) / 2.0);
        }
        // smooth-trajectory regime: velocities merge
        assert!(table.rows[0].half_diff.abs() < 0.01 * table.rows[0].u_over);
        // half difference rises monotonically through tau_p
        assert!(table.rows.windows(2).take(3).all(|w| w[0].half_diff < w[1].half_diff));
    }
}
