//! Sample witness statistics and the brownian uncertainty relations.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::Binning;
use super::field::{check_probe, Grid, RECORD_CHUNK};
use super::moments::{estimate_cov, CovEstimate};
use crate::analytics::{osmotic_velocity, SignValue, Verdict};
use crate::error::{Error, Result};
use crate::model::{Covariance2, SignPair};
use crate::scalar::Real;
use crate::sim::EnsembleSlices;

/// Contiguous record blocks used for jackknife standard errors.
pub const JACKKNIFE_BLOCKS: usize = 20;

/// Guard band, in standard errors, around the `4T` threshold.
pub const GUARD_SE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<R> {
    pub value: R,
    pub se: R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessMode {
    /// Fit a Gaussian to `x(t)` and evaluate `u` from the fitted density.
    #[default]
    GaussianPlugin,
    /// Use the binned conditional means of the probe increments as `u`.
    Binned,
}

/// Centered second moments entering the witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessMoments<R> {
    pub mean_x: [R; 2],
    pub x11: Estimate<R>,
    pub x12: Estimate<R>,
    pub x22: Estimate<R>,
    pub u11: Estimate<R>,
    pub u12: Estimate<R>,
    pub u22: Estimate<R>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignEstimate<R> {
    pub signs: SignPair,
    pub value: R,
    pub se: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWitness<R> {
    pub mode: WitnessMode,
    /// Records that entered the estimate.
    pub n: usize,
    pub temperature: R,
    pub t: Option<R>,
    pub eps: Option<R>,
    pub dt: Option<R>,
    pub moments: WitnessMoments<R>,
    pub values: [SignEstimate<R>; 4],
    pub min_value: R,
    pub min_se: R,
    pub min_signs: SignPair,
    pub threshold: R,
    /// `Entangled` or `Undecided` only when `|min - 4T| > 3 SE`; otherwise `Inconclusive`.
    pub verdict: Verdict,
}

impl<R: Real> SampleWitness<R> {
    pub fn value(&self, signs: SignPair) -> SignEstimate<R> {
        *self.values.iter().find(|v| v.signs == signs).expect("all sign pairs present")
    }

    pub fn point_values(&self) -> [SignValue<R>; 4] {
        self.values.map(|v| SignValue { signs: v.signs, value: v.value })
    }
}

/// Verdict with a guard band of `GUARD_SE` standard errors around `threshold`.
pub fn guarded_verdict<R: Real>(value: R, se: R, threshold: R) -> Verdict {
    let band = R::lit(GUARD_SE) * se;
    if !(band.is_finite()) {
        Verdict::Inconclusive
    } else if value < threshold - band {
        Verdict::Entangled
    } else if value > threshold + band {
        Verdict::Undecided
    } else {
        Verdict::Inconclusive
    }
}

/// The bath temperature shared by all particles.
pub fn common_temperature<R: Real>(temps: &[R]) -> Result<R> {
    let first = *temps.first().ok_or(Error::EmptyInput("temperatures".into()))?;
    for &t in temps {
        if !(t > R::zero()) || !t.is_finite() {
            return Err(Error::NonPositiveTemperature { name: "T", value: t.as_f64() });
        }
        if t != first {
            return Err(Error::UnequalTemperatures { t1: first.as_f64(), t2: t.as_f64() });
        }
    }
    Ok(first)
}

fn witness_combination<R: Real>(m: &[R; 6], signs: SignPair) -> R {
    let two = R::lit(2.0);
    let zeta: R = signs.zeta.value();
    let eps: R = signs.eps_sign.value();
    m[3] + m[5] + two * zeta * m[4] + m[0] + m[2] + two * eps * m[1]
}

fn assemble<R: Real>(
    mode: WitnessMode,
    n: usize,
    temperature: R,
    moments: WitnessMoments<R>,
    values: [SignEstimate<R>; 4],
) -> SampleWitness<R> {
    let best = values.iter().copied().fold(values[0], |acc, v| if v.value < acc.value { v } else { acc });
    let threshold = R::lit(4.0) * temperature;
    SampleWitness {
        mode,
        n,
        temperature,
        t: None,
        eps: None,
        dt: None,
        moments,
        values,
        min_value: best.value,
        min_se: best.se,
        min_signs: best.signs,
        threshold,
        verdict: guarded_verdict(best.value, best.se, threshold),
    }
}

/// Standard error of `f(s11, s12, s22)` by the delta method with a central-difference gradient.
fn delta_se<R: Real>(est: &CovEstimate<R>, f: impl Fn(&Covariance2<R>) -> R) -> R {
    let c = est.cov;
    let scale = c.s11.abs().max(c.s22.abs()).max(R::lit(1e-300));
    let h = R::lit(1e-6) * scale;
    let bump = |p: usize, d: R| {
        let mut v = c;
        match p {
            0 => v.s11 = v.s11 + d,
            1 => v.s12 = v.s12 + d,
            _ => v.s22 = v.s22 + d,
        }
        f(&v)
    };
    let grad: Vec<R> = (0..3).map(|p| (bump(p, h) - bump(p, -h)) / (R::lit(2.0) * h)).collect();
    let mut var = R::zero();
    for p in 0..3 {
        for q in 0..3 {
            var = var + grad[p] * est.vcov[p][q] * grad[q];
        }
    }
    var.max(R::zero()).sqrt()
}

/// Plug-in witness from a fitted pair covariance: `Var(u) = T² S⁻¹` for a Gaussian.
pub fn plugin_witness<R: Real>(est: &CovEstimate<R>, temperature: R) -> Result<SampleWitness<R>> {
    common_temperature(&[temperature])?;
    est.cov.require_positive_definite()?;
    let t2 = temperature * temperature;
    let u_moments = |c: &Covariance2<R>| -> [R; 6] {
        let d = c.det();
        [c.s11, c.s12, c.s22, t2 * c.s22 / d, -t2 * c.s12 / d, t2 * c.s11 / d]
    };
    let point = u_moments(&est.cov);
    let se_of = |i: usize| delta_se(est, |c| u_moments(c)[i]);
    let e = |i: usize| Estimate { value: point[i], se: se_of(i) };
    let moments = WitnessMoments { mean_x: est.mean, x11: e(0), x12: e(1), x22: e(2), u11: e(3), u12: e(4), u22: e(5) };
    let values = SignPair::ALL.map(|signs| SignEstimate {
        signs,
        value: witness_combination(&point, signs),
        se: delta_se(est, |c| witness_combination(&u_moments(c), signs)),
    });
    Ok(assemble(WitnessMode::GaussianPlugin, est.n, temperature, moments, values))
}

/// Witness statistics of the pair `(x1, x2)` at the slice time.
///
/// `temps` are the bath temperatures of the two particles and must agree.
/// The Gaussian plug-in evaluates `u` per record from the fitted covariance and
/// takes centered moments; standard errors follow from fourth moments by the
/// delta method. The binned mode estimates `E[u_j | x]` per occupied cell (at
/// least two records), weights cells by occupancy, removes the sampling noise
/// of each cell mean from its square, and uses a block jackknife for errors.
pub fn estimate_witness<R: Real>(
    slices: &EnsembleSlices<R>,
    temps: [R; 2],
    mode: WitnessMode,
    binning: &Binning,
) -> Result<SampleWitness<R>> {
    let temperature = common_temperature(&temps)?;
    if slices.n != 2 {
        return Err(Error::InvalidParameter { name: "n", reason: "the witness needs exactly two coordinates".into() });
    }
    let mut out = match mode {
        WitnessMode::GaussianPlugin => {
            slices.validate()?;
            let pts = slices.pair_points(0, 1);
            let est = estimate_cov(&pts)?;
            let mut w = plugin_witness(&est, temperature)?;
            // centered moments of the per-record osmotic velocities
            let us: Vec<[R; 2]> = pts
                .iter()
                .map(|p| osmotic_velocity(&est.cov, temperature, p[0] - est.mean[0], p[1] - est.mean[1]).map(|u| [u.u1, u.u2]))
                .collect::<Result<_>>()?;
            let u = estimate_cov(&us)?;
            w.moments.u11.value = u.cov.s11;
            w.moments.u12.value = u.cov.s12;
            w.moments.u22.value = u.cov.s22;
            let m = &w.moments;
            let point = [m.x11.value, m.x12.value, m.x22.value, m.u11.value, m.u12.value, m.u22.value];
            for v in w.values.iter_mut() {
                v.value = witness_combination(&point, v.signs);
            }
            let (values, moments) = (w.values, w.moments);
            assemble(WitnessMode::GaussianPlugin, w.n, temperature, moments, values)
        }
        WitnessMode::Binned => {
            check_probe(slices)?;
            let probes = [slices.probe_slot(0)?, slices.probe_slot(1)?];
            let grid = Grid::fit(slices, &[0, 1], binning)?;
            let jk = binned_jackknife(slices, &grid, &probes)?;
            let flat = |b: &BinnedMoments<R>| -> [R; 6] {
                [b.x_cov[0], b.x_cov[1], b.x_cov[3], b.u_cov[0], b.u_cov[1], b.u_cov[3]]
            };
            let point = flat(&jk.point);
            let reps: Vec<[R; 6]> = jk.replicates.iter().map(flat).collect();
            let e = |i: usize| Estimate { value: point[i], se: jackknife_se(reps.iter().map(|r| r[i])) };
            let moments = WitnessMoments {
                mean_x: [jk.point.x_mean[0], jk.point.x_mean[1]],
                x11: e(0),
                x12: e(1),
                x22: e(2),
                u11: e(3),
                u12: e(4),
                u22: e(5),
            };
            let values = SignPair::ALL.map(|signs| SignEstimate {
                signs,
                value: witness_combination(&point, signs),
                se: jackknife_se(reps.iter().map(|r| witness_combination(r, signs))),
            });
            assemble(WitnessMode::Binned, jk.point.n, temperature, moments, values)
        }
    };
    out.t = Some(slices.t);
    out.eps = Some(slices.eps);
    out.dt = slices.dt;
    Ok(out)
}

/// Jackknife standard error from leave-one-block-out replicates.
pub fn jackknife_se<R: Real>(replicates: impl IntoIterator<Item = R>) -> R {
    let reps: Vec<R> = replicates.into_iter().collect();
    let b = R::from_usize_lossy(reps.len());
    if reps.len() < 2 {
        return R::nan();
    }
    let mean = reps.iter().copied().sum::<R>() / b;
    let ss = reps.iter().map(|&r| (r - mean) * (r - mean)).sum::<R>();
    ((b - R::one()) / b * ss).sqrt()
}

/// Moments from binned conditional means: the covariance of the conditioning
/// coordinates and the debiased covariance of the cell means of `u`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BinnedMoments<R> {
    pub n: usize,
    pub x_mean: Vec<R>,
    /// `dim × dim`, unbiased.
    pub x_cov: Vec<R>,
    /// `probes × probes`.
    pub u_cov: Vec<R>,
}

pub(crate) struct Jackknife<R> {
    pub point: BinnedMoments<R>,
    pub replicates: Vec<BinnedMoments<R>>,
}

/// Per-cell raw sums: count, Σx_a, Σx_a x_b, Σu_p, Σu_p u_q.
struct SumLayout {
    dim: usize,
    probes: usize,
}

impl SumLayout {
    fn stride(&self) -> usize {
        1 + self.dim + self.dim * self.dim + self.probes + self.probes * self.probes
    }
    fn x(&self, a: usize) -> usize {
        1 + a
    }
    fn xx(&self, a: usize, b: usize) -> usize {
        1 + self.dim + a * self.dim + b
    }
    fn u(&self, p: usize) -> usize {
        1 + self.dim + self.dim * self.dim + p
    }
    fn uu(&self, p: usize, q: usize) -> usize {
        1 + self.dim + self.dim * self.dim + self.probes + p * self.probes + q
    }
}

fn block_sums<R: Real>(slices: &EnsembleSlices<R>, grid: &Grid<R>, probes: &[usize], layout: &SumLayout) -> Vec<Vec<R>> {
    let cells = grid.cells();
    let stride = layout.stride();
    let len = slices.len();
    let blocks = JACKKNIFE_BLOCKS.min(len).max(1);
    // chunks never straddle a block boundary, so each block is a fixed, ordered sum
    let bounds: Vec<usize> = (0..=blocks).map(|b| b * len / blocks).collect();
    let mut work = Vec::new();
    for b in 0..blocks {
        let mut k = bounds[b];
        while k < bounds[b + 1] {
            let end = (k + RECORD_CHUNK).min(bounds[b + 1]);
            work.push((b, k..end));
            k = end;
        }
    }
    let parts: Vec<(usize, Vec<R>)> = work
        .into_par_iter()
        .map(|(b, range)| {
            let mut s = vec![R::zero(); cells * stride];
            let mut u = vec![R::zero(); probes.len()];
            for k in range {
                let x = slices.x(k);
                let Some(cell) = grid.locate(x) else { continue };
                for (slot, &p) in probes.iter().enumerate() {
                    let (vp, vm) = slices.quotients(k, p);
                    u[slot] = (vm - vp) / R::lit(2.0);
                }
                let c = &mut s[cell * stride..(cell + 1) * stride];
                c[0] = c[0] + R::one();
                for a in 0..layout.dim {
                    c[layout.x(a)] = c[layout.x(a)] + x[a];
                    for bb in 0..layout.dim {
                        c[layout.xx(a, bb)] = c[layout.xx(a, bb)] + x[a] * x[bb];
                    }
                }
                for p in 0..layout.probes {
                    c[layout.u(p)] = c[layout.u(p)] + u[p];
                    for q in 0..layout.probes {
                        c[layout.uu(p, q)] = c[layout.uu(p, q)] + u[p] * u[q];
                    }
                }
            }
            (b, s)
        })
        .collect();
    let mut out = vec![vec![R::zero(); cells * stride]; blocks];
    for (b, s) in parts {
        out[b].iter_mut().zip(&s).for_each(|(o, v)| *o = *o + *v);
    }
    out
}

fn moments_from_sums<R: Real>(sums: &[R], layout: &SumLayout) -> Result<BinnedMoments<R>> {
    let stride = layout.stride();
    let (d, p) = (layout.dim, layout.probes);
    let two = R::lit(2.0);
    let mut total = vec![R::zero(); stride];
    for cell in sums.chunks(stride).filter(|c| c[0] >= two) {
        total.iter_mut().zip(cell).for_each(|(t, v)| *t = *t + *v);
    }
    let n = total[0];
    if n < two {
        return Err(Error::InsufficientSamples { needed: 2, got: n.to_usize().unwrap_or(0) });
    }
    let x_mean: Vec<R> = (0..d).map(|a| total[layout.x(a)] / n).collect();
    let mut x_cov = vec![R::zero(); d * d];
    for a in 0..d {
        for b in 0..d {
            x_cov[a * d + b] = (total[layout.xx(a, b)] - n * x_mean[a] * x_mean[b]) / (n - R::one());
        }
    }
    let mut m = vec![R::zero(); p];
    let mut second = vec![R::zero(); p * p];
    for cell in sums.chunks(stride).filter(|c| c[0] >= two) {
        let nc = cell[0];
        let w = nc / n;
        let mean: Vec<R> = (0..p).map(|i| cell[layout.u(i)] / nc).collect();
        for i in 0..p {
            m[i] = m[i] + w * mean[i];
            for j in 0..p {
                let within = (cell[layout.uu(i, j)] - nc * mean[i] * mean[j]) / (nc - R::one());
                second[i * p + j] = second[i * p + j] + w * (mean[i] * mean[j] - within / nc);
            }
        }
    }
    let u_cov = (0..p * p).map(|k| second[k] - m[k / p] * m[k % p]).collect();
    Ok(BinnedMoments { n: n.to_usize().unwrap_or(0), x_mean, x_cov, u_cov })
}

pub(crate) fn binned_jackknife<R: Real>(
    slices: &EnsembleSlices<R>,
    grid: &Grid<R>,
    probes: &[usize],
) -> Result<Jackknife<R>> {
    let layout = SumLayout { dim: slices.n, probes: probes.len() };
    let blocks = block_sums(slices, grid, probes, &layout);
    let mut total = vec![R::zero(); blocks[0].len()];
    for b in &blocks {
        total.iter_mut().zip(b).for_each(|(t, v)| *t = *t + *v);
    }
    let point = moments_from_sums(&total, &layout)?;
    let replicates = blocks
        .iter()
        .map(|b| {
            let rest: Vec<R> = total.iter().zip(b).map(|(t, v)| *t - *v).collect();
            moments_from_sums(&rest, &layout)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Jackknife { point, replicates })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// Estimate should equal `expected`.
    Equals,
    /// Estimate should be at least `expected`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyCheck<R> {
    /// `mean_u`, `x_u` (own coordinate), `x_u_cross` or `var_product`.
    pub quantity: String,
    /// Zero-based coordinate of `u`.
    pub j: usize,
    /// Zero-based coordinate of `x` for the cross moments.
    pub k: Option<usize>,
    pub value: R,
    pub se: R,
    pub expected: R,
    pub relation: Relation,
    /// Deviation beyond the 3-SE band in the forbidden direction.
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport<R> {
    pub temperature: R,
    pub n: usize,
    pub mode: WitnessMode,
    pub checks: Vec<UncertaintyCheck<R>>,
}

impl<R: Real> UncertaintyReport<R> {
    pub fn any_violated(&self) -> bool {
        self.checks.iter().any(|c| c.violated)
    }

    pub fn find(&self, quantity: &str, j: usize, k: Option<usize>) -> Option<&UncertaintyCheck<R>> {
        self.checks.iter().find(|c| c.quantity == quantity && c.j == j && c.k == k)
    }
}

fn check<R: Real>(quantity: &str, j: usize, k: Option<usize>, est: Estimate<R>, expected: R, relation: Relation) -> UncertaintyCheck<R> {
    let band = R::lit(GUARD_SE) * est.se;
    let violated = match relation {
        Relation::Equals => !((est.value - expected).abs() <= band),
        Relation::AtLeast => !(est.value + band >= expected),
    };
    UncertaintyCheck { quantity: quantity.into(), j, k, value: est.value, se: est.se, expected, relation, violated }
}

/// `E[u_j] = 0`, `E[Δx_j Δu_j] = T`, `E[Δx_k Δu_j] = 0` (`k ≠ j`) and
/// `Var(x_j) Var(u_j) >= T²` for every probed `j`.
///
/// The first moments use the per-record estimate `u = (2 x_j(t) - x_j(t-ε) - x_j(t+ε)) / 2ε`.
/// `Var(u_j)` comes from the binned conditional means or from the fitted
/// Gaussian, as selected by `mode`; its error is a block jackknife.
pub fn uncertainty_suite<R: Real>(
    slices: &EnsembleSlices<R>,
    temps: &[R],
    mode: WitnessMode,
    binning: &Binning,
) -> Result<UncertaintyReport<R>> {
    let temperature = common_temperature(temps)?;
    check_probe(slices)?;
    let len = slices.len();
    if len < JACKKNIFE_BLOCKS {
        return Err(Error::InsufficientSamples { needed: JACKKNIFE_BLOCKS, got: len });
    }
    let n = R::from_usize_lossy(len);
    let dim = slices.n;
    let x_mean: Vec<R> = (0..dim).map(|a| (0..len).map(|k| slices.x(k)[a]).sum::<R>() / n).collect();
    let mut checks = Vec::new();
    let slots: Vec<usize> = (0..slices.probed.len()).collect();
    for &slot in &slots {
        let j = slices.probed[slot];
        let u: Vec<R> = (0..len)
            .map(|k| {
                let (vp, vm) = slices.quotients(k, slot);
                (vm - vp) / R::lit(2.0)
            })
            .collect();
        let (mu, se_mu) = mean_and_se(&u);
        checks.push(check("mean_u", j, None, Estimate { value: mu, se: se_mu }, R::zero(), Relation::Equals));
        for kx in 0..dim {
            let prod: Vec<R> = (0..len).map(|r| (slices.x(r)[kx] - x_mean[kx]) * (u[r] - mu)).collect();
            let (m, se) = mean_and_se(&prod);
            let est = Estimate { value: m * n / (n - R::one()), se };
            if kx == j {
                checks.push(check("x_u", j, None, est, temperature, Relation::Equals));
            } else {
                checks.push(check("x_u_cross", j, Some(kx), est, R::zero(), Relation::Equals));
            }
        }
    }
    let t2 = temperature * temperature;
    let products: Vec<(R, Vec<R>)> = match mode {
        WitnessMode::Binned => {
            let all: Vec<usize> = (0..dim).collect();
            let grid = Grid::fit(slices, &all, binning)?;
            let jk = binned_jackknife(slices, &grid, &slots)?;
            let p = slots.len();
            let prod = |b: &BinnedMoments<R>, s: usize| b.x_cov[slices.probed[s] * (dim + 1)] * b.u_cov[s * p + s];
            slots
                .iter()
                .map(|&s| (prod(&jk.point, s), jk.replicates.iter().map(|r| prod(r, s)).collect()))
                .collect()
        }
        WitnessMode::GaussianPlugin => {
            let blocks = JACKKNIFE_BLOCKS;
            let bounds: Vec<usize> = (0..=blocks).map(|b| b * len / blocks).collect();
            let block_cov: Vec<(R, Vec<R>, Vec<R>)> = (0..blocks)
                .map(|b| {
                    let mut s1 = vec![R::zero(); dim];
                    let mut s2 = vec![R::zero(); dim * dim];
                    for r in bounds[b]..bounds[b + 1] {
                        let x = slices.x(r);
                        for a in 0..dim {
                            s1[a] = s1[a] + x[a];
                            for c in 0..dim {
                                s2[a * dim + c] = s2[a * dim + c] + x[a] * x[c];
                            }
                        }
                    }
                    (R::from_usize_lossy(bounds[b + 1] - bounds[b]), s1, s2)
                })
                .collect();
            let total = block_cov.iter().fold((R::zero(), vec![R::zero(); dim], vec![R::zero(); dim * dim]), |mut acc, b| {
                acc.0 = acc.0 + b.0;
                acc.1.iter_mut().zip(&b.1).for_each(|(x, y)| *x = *x + *y);
                acc.2.iter_mut().zip(&b.2).for_each(|(x, y)| *x = *x + *y);
                acc
            });
            let products_of = |cnt: R, s1: &[R], s2: &[R]| -> Result<Vec<R>> {
                let cov = DMatrix::from_fn(dim, dim, |a, c| {
                    ((s2[a * dim + c] - s1[a] * s1[c] / cnt) / (cnt - R::one())).as_f64()
                });
                let inv = cov.clone().try_inverse().ok_or(Error::SingularCovariance { det: cov.determinant() })?;
                Ok(slots
                    .iter()
                    .map(|&s| {
                        let j = slices.probed[s];
                        R::lit(cov[(j, j)] * inv[(j, j)]) * t2
                    })
                    .collect())
            };
            let point = products_of(total.0, &total.1, &total.2)?;
            let reps = block_cov
                .iter()
                .map(|b| {
                    let s1: Vec<R> = total.1.iter().zip(&b.1).map(|(t, v)| *t - *v).collect();
                    let s2: Vec<R> = total.2.iter().zip(&b.2).map(|(t, v)| *t - *v).collect();
                    products_of(total.0 - b.0, &s1, &s2)
                })
                .collect::<Result<Vec<_>>>()?;
            (0..slots.len()).map(|s| (point[s], reps.iter().map(|r| r[s]).collect())).collect()
        }
    };
    for (&slot, (value, reps)) in slots.iter().zip(products) {
        let est = Estimate { value, se: jackknife_se(reps) };
        checks.push(check("var_product", slices.probed[slot], None, est, t2, Relation::AtLeast));
    }
    Ok(UncertaintyReport { temperature, n: len, mode, checks })
}

fn mean_and_se<R: Real>(xs: &[R]) -> (R, R) {
    let (m, se, _) = super::stats::mean_se(xs.iter().copied());
    (m, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::witness_report;

    #[test]
    fn guard_band() {
        assert_eq!(guarded_verdict(3.0, 0.1, 4.0), Verdict::Entangled);
        assert_eq!(guarded_verdict(3.8, 0.1, 4.0), Verdict::Inconclusive);
        assert_eq!(guarded_verdict(4.31, 0.1, 4.0), Verdict::Undecided);
        assert_eq!(guarded_verdict(3.0, f64::NAN, 4.0), Verdict::Inconclusive);
    }

    #[test]
    fn temperatures_must_agree() {
        assert!(matches!(common_temperature(&[1.0, 2.0]), Err(Error::UnequalTemperatures { .. })));
        assert!(common_temperature(&[1.0, -1.0]).is_err());
        assert_eq!(common_temperature(&[1.5, 1.5]).unwrap(), 1.5);
    }

    #[test]
    fn plugin_matches_analytic_report() {
        let cov = Covariance2::new(4.0f64 / 3.0, -2.0 / 3.0, 4.0 / 3.0);
        let est = CovEstimate { n: 1000, mean: [0.0, 0.0], cov, se: Covariance2::zero(), vcov: [[0.0; 3]; 3] };
        let w = plugin_witness(&est, 1.0).unwrap();
        let exact = witness_report(&cov, 1.0).unwrap();
        for v in &w.values {
            assert!((v.value - exact.value(v.signs)).abs() < 1e-12);
        }
        assert!((w.min_value - 7.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn jackknife_of_means_matches_classical_se() {
        let xs: Vec<f64> = (0..JACKKNIFE_BLOCKS).map(|i| (i as f64 * 1.7).sin()).collect();
        // one record per block: leave-one-out means give exactly s/√n
        let n = xs.len() as f64;
        let total: f64 = xs.iter().sum();
        let reps: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1.0)).collect();
        let (_, se) = mean_and_se(&xs);
        assert!((jackknife_se(reps) - se).abs() < 1e-12);
    }

    #[test]
    fn binned_sums_recover_cell_structure() {
        // u equals x1 exactly in every record: no within-cell noise, Var(u) = variance of cell means
        let mut s = EnsembleSlices::<f64>::empty(2, 1.0, 0.5, None, vec![0, 1]);
        for k in 0..2000u64 {
            let x1 = ((k * 7919) % 1000) as f64 / 500.0 - 1.0;
            let x2 = ((k * 104729) % 997) as f64 / 498.5 - 1.0;
            s.push(k, &[x1 - 0.5 * x1, x2], &[x1, x2], &[x1 - 0.5 * x1, x2]);
        }
        let grid = Grid::fit(&s, &[0, 1], &Binning { bins: 4, span_sd: 3.0, min_count: 1 }).unwrap();
        let jk = binned_jackknife(&s, &grid, &[0, 1]).unwrap();
        assert_eq!(jk.point.n, 2000);
        assert_eq!(jk.replicates.len(), JACKKNIFE_BLOCKS);
        // coordinate 2 has zero increments
        assert!(jk.point.u_cov[3].abs() < 1e-12);
        assert!(jk.point.u_cov[0] > 0.0);
    }
}
