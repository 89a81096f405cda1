//! Three-time probe records of an ensemble.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per trajectory: the probed coordinates `x_j` at `t - ε` and `t + ε` and the
/// full coordinate vector at `t`, all from one continuous realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSlices<R> {
    /// Number of coordinates.
    pub n: usize,
    pub t: R,
    pub eps: R,
    /// Integration step that produced the record, if known.
    pub dt: Option<R>,
    /// Zero-based probed coordinate indices.
    pub probed: Vec<usize>,
    pub traj: Vec<u64>,
    /// `len × n`, row-major.
    pub center: Vec<R>,
    /// `len × probed.len()`, row-major.
    pub minus: Vec<R>,
    pub plus: Vec<R>,
}

impl<R: Real> EnsembleSlices<R> {
    pub fn empty(n: usize, t: R, eps: R, dt: Option<R>, probed: Vec<usize>) -> Self {
        Self { n, t, eps, dt, probed, traj: Vec::new(), center: Vec::new(), minus: Vec::new(), plus: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.traj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traj.is_empty()
    }

    pub fn push(&mut self, traj: u64, minus: &[R], center: &[R], plus: &[R]) {
        self.traj.push(traj);
        self.minus.extend_from_slice(minus);
        self.center.extend_from_slice(center);
        self.plus.extend_from_slice(plus);
    }

    pub fn x(&self, k: usize) -> &[R] {
        &self.center[k * self.n..(k + 1) * self.n]
    }

    /// Position of coordinate `j` among the probed ones.
    pub fn probe_slot(&self, j: usize) -> Result<usize> {
        self.probed.iter().position(|&p| p == j).ok_or_else(|| Error::InvalidParameter {
            name: "j",
            reason: format!("coordinate {} was not probed", j + 1),
        })
    }

    /// `(x_j(t-ε), x_j(t), x_j(t+ε))` of record `k` for the probe in `slot`.
    #[inline]
    pub fn triple(&self, k: usize, slot: usize) -> (R, R, R) {
        let p = self.probed.len();
        (self.minus[k * p + slot], self.center[k * self.n + self.probed[slot]], self.plus[k * p + slot])
    }

    /// Per-record forward and backward difference quotients `(v_+, v_-)`.
    #[inline]
    pub fn quotients(&self, k: usize, slot: usize) -> (R, R) {
        let (m, c, p) = self.triple(k, slot);
        ((p - c) / self.eps, (c - m) / self.eps)
    }

    /// Coordinates `(x_i, x_j)` at `t` for every record.
    pub fn pair_points(&self, i: usize, j: usize) -> Vec<[R; 2]> {
        (0..self.len()).map(|k| [self.x(k)[i], self.x(k)[j]]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > R::zero()) || !self.eps.is_finite() {
            return Err(Error::InvalidProbe { eps: self.eps.as_f64(), reason: "must be positive".into() });
        }
        if self.n == 0 || self.probed.is_empty() || self.probed.iter().any(|&j| j >= self.n) {
            return Err(Error::Schema(format!("probed indices {:?} invalid for {} coordinates", self.probed, self.n)));
        }
        let len = self.len();
        if self.center.len() != len * self.n
            || self.minus.len() != len * self.probed.len()
            || self.plus.len() != len * self.probed.len()
        {
            return Err(Error::Schema("slice arrays have inconsistent lengths".into()));
        }
        if self.center.iter().chain(&self.minus).chain(&self.plus).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("slice entries"));
        }
        Ok(())
    }
}
