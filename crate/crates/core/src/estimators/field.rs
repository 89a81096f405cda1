//! Binned coarse-grained velocities `v_±` and osmotic velocity `u`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{Axis, Binning};
use super::stats::MeanAcc;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sim::EnsembleSlices;

/// Records per parallel work unit in estimator reductions.
pub(crate) const RECORD_CHUNK: usize = 4096;

/// Smallest `ε / dt` the estimators accept.
pub const MIN_EPS_OVER_DT: f64 = 10.0;

pub(crate) fn check_probe<R: Real>(slices: &EnsembleSlices<R>) -> Result<()> {
    slices.validate()?;
    if let Some(dt) = slices.dt {
        // a few ulps of slack so that e.g. 0.01 vs 10 * 0.001 passes in single precision
        if slices.eps < R::lit(MIN_EPS_OVER_DT) * dt * (R::one() - R::lit(64.0) * R::epsilon()) {
            return Err(Error::InvalidProbe {
                eps: slices.eps.as_f64(),
                reason: format!("estimators need eps >= {MIN_EPS_OVER_DT} dt (dt = {dt})"),
            });
        }
    }
    Ok(())
}

/// Cartesian grid over a subset of coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<R> {
    /// Zero-based conditioning coordinates.
    pub coords: Vec<usize>,
    pub axes: Vec<Axis<R>>,
}

impl<R: Real> Grid<R> {
    pub fn fit(slices: &EnsembleSlices<R>, coords: &[usize], binning: &Binning) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|&c| c >= slices.n) {
            return Err(Error::InvalidParameter { name: "coords", reason: "conditioning coordinates out of range".into() });
        }
        let axes = coords
            .iter()
            .map(|&c| {
                let xs: Vec<R> = (0..slices.len()).map(|k| slices.x(k)[c]).collect();
                Axis::fit(&xs, binning)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coords: coords.to_vec(), axes })
    }

    pub fn cells(&self) -> usize {
        self.axes.iter().map(|a| a.bins).product()
    }

    /// Row-major cell of the point `x` (full coordinate vector).
    pub fn locate(&self, x: &[R]) -> Option<usize> {
        let mut cell = 0;
        for (axis, &c) in self.axes.iter().zip(&self.coords) {
            cell = cell * axis.bins + axis.index(x[c])?;
        }
        Some(cell)
    }

    pub fn index_of(&self, mut cell: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (slot, axis) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = cell % axis.bins;
            cell /= axis.bins;
        }
        idx
    }

    pub fn center(&self, cell: usize) -> Vec<R> {
        self.index_of(cell).iter().zip(&self.axes).map(|(&i, a)| a.center(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityCell<R> {
    pub index: Vec<usize>,
    pub center: Vec<R>,
    /// Mean of the conditioning coordinates over the cell's records.
    pub x_mean: Vec<R>,
    pub count: usize,
    pub v_plus: R,
    pub se_vplus: R,
    pub v_minus: R,
    pub se_vminus: R,
    /// `(v_minus - v_plus) / 2`.
    pub u: R,
    pub se_u: R,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityField<R> {
    /// Zero-based coordinate whose velocities are estimated.
    pub j: usize,
    pub grid: Grid<R>,
    pub t: R,
    pub eps: R,
    pub dt: Option<R>,
    pub min_count: usize,
    /// Occupied cells in row-major order.
    pub cells: Vec<VelocityCell<R>>,
}

impl<R: Real> VelocityField<R> {
    pub fn reliable(&self) -> impl Iterator<Item = &VelocityCell<R>> {
        self.cells.iter().filter(|c| c.reliable)
    }
}

#[derive(Clone)]
struct CellAcc<R> {
    x: Vec<MeanAcc<R>>,
    v_plus: MeanAcc<R>,
    v_minus: MeanAcc<R>,
    u: MeanAcc<R>,
}

impl<R: Real> CellAcc<R> {
    fn new(dims: usize) -> Self {
        Self { x: vec![MeanAcc::default(); dims], v_plus: MeanAcc::default(), v_minus: MeanAcc::default(), u: MeanAcc::default() }
    }

    fn merge(&mut self, o: &Self) {
        self.x.iter_mut().zip(&o.x).for_each(|(a, b)| a.merge(b));
        self.v_plus.merge(&o.v_plus);
        self.v_minus.merge(&o.v_minus);
        self.u.merge(&o.u);
    }
}

fn velocity_field<R: Real>(slices: &EnsembleSlices<R>, j: usize, grid: Grid<R>, binning: &Binning) -> Result<VelocityField<R>> {
    let slot = slices.probe_slot(j)?;
    let cells = grid.cells();
    let dims = grid.coords.len();
    let chunks: Vec<_> = (0..slices.len().div_ceil(RECORD_CHUNK)).collect();
    let parts: Vec<Vec<CellAcc<R>>> = chunks
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![CellAcc::new(dims); cells];
            for k in c * RECORD_CHUNK..((c + 1) * RECORD_CHUNK).min(slices.len()) {
                let x = slices.x(k);
                if let Some(cell) = grid.locate(x) {
                    let (vp, vm) = slices.quotients(k, slot);
                    let a = &mut acc[cell];
                    grid.coords.iter().zip(a.x.iter_mut()).for_each(|(&ci, m)| m.push(x[ci]));
                    a.v_plus.push(vp);
                    a.v_minus.push(vm);
                    a.u.push((vm - vp) / R::lit(2.0));
                }
            }
            acc
        })
        .collect();
    let mut total = vec![CellAcc::new(dims); cells];
    for part in &parts {
        total.iter_mut().zip(part).for_each(|(a, b)| a.merge(b));
    }
    let out: Vec<VelocityCell<R>> = total
        .iter()
        .enumerate()
        .filter(|(_, a)| a.u.count() > 0)
        .map(|(cell, a)| {
            let (v_plus, v_minus) = (a.v_plus.mean(), a.v_minus.mean());
            VelocityCell {
                index: grid.index_of(cell),
                center: grid.center(cell),
                x_mean: a.x.iter().map(|m| m.mean()).collect(),
                count: a.u.count(),
                v_plus,
                se_vplus: a.v_plus.se(),
                v_minus,
                se_vminus: a.v_minus.se(),
                u: (v_minus - v_plus) / R::lit(2.0),
                se_u: a.u.se(),
                reliable: a.u.count() >= binning.min_count,
            }
        })
        .collect();
    if !out.iter().any(|c| c.reliable) {
        return Err(Error::EmptyField { min_count: binning.min_count });
    }
    Ok(VelocityField { j, grid, t: slices.t, eps: slices.eps, dt: slices.dt, min_count: binning.min_count, cells: out })
}

/// `v_±` and `u` of coordinate `j` conditioned on the full coordinate vector at `t`.
pub fn estimate_cg_velocities<R: Real>(slices: &EnsembleSlices<R>, j: usize, binning: &Binning) -> Result<VelocityField<R>> {
    check_probe(slices)?;
    let coords: Vec<usize> = (0..slices.n).collect();
    let grid = Grid::fit(slices, &coords, binning)?;
    velocity_field(slices, j, grid, binning)
}

/// `v_±` and `u` of coordinate `j` conditioned on `x_j` alone.
pub fn estimate_local_velocities<R: Real>(slices: &EnsembleSlices<R>, j: usize, binning: &Binning) -> Result<VelocityField<R>> {
    check_probe(slices)?;
    let grid = Grid::fit(slices, &[j], binning)?;
    velocity_field(slices, j, grid, binning)
}

/// Count-weighted average of a field's `u` over every conditioning coordinate except `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalCell<R> {
    pub index: usize,
    pub center: R,
    pub count: usize,
    pub u: R,
    pub se_u: R,
}

/// Collapses a full-vector field onto its `x_j` axis. Cells with fewer than
/// two records carry no standard error and are skipped.
pub fn marginalize<R: Real>(field: &VelocityField<R>, j: usize) -> Result<Vec<MarginalCell<R>>> {
    let pos = field.grid.coords.iter().position(|&c| c == j).ok_or_else(|| Error::InvalidParameter {
        name: "j",
        reason: format!("coordinate {} is not a conditioning axis", j + 1),
    })?;
    let axis = field.grid.axes[pos];
    let mut sums = vec![(0usize, R::zero(), R::zero()); axis.bins];
    for c in field.cells.iter().filter(|c| c.count >= 2) {
        let s = &mut sums[c.index[pos]];
        let n = R::from_usize_lossy(c.count);
        s.0 += c.count;
        s.1 = s.1 + n * c.u;
        s.2 = s.2 + n * n * c.se_u * c.se_u;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .filter(|(_, s)| s.0 > 0)
        .map(|(i, (count, wu, wse))| {
            let n = R::from_usize_lossy(count);
            MarginalCell { index: i, center: axis.center(i), count, u: wu / n, se_u: wse.sqrt() / n }
        })
        .collect())
}
