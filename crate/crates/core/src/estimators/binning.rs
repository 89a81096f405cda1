//! Equal-width binning over fitted ranges.

use serde::{Deserialize, Serialize};

use super::stats::MeanAcc;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bins per conditioning axis, the range in fitted standard deviations on
/// each side of the mean, and the occupancy below which a bin is unreliable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Binning {
    pub bins: usize,
    pub span_sd: f64,
    pub min_count: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Self { bins: 25, span_sd: 4.0, min_count: 100 }
    }
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::InvalidParameter { name: "bins", reason: "need at least one bin".into() });
        }
        if !(self.span_sd > 0.0) || !self.span_sd.is_finite() {
            return Err(Error::InvalidParameter { name: "span_sd", reason: "must be positive".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis<R> {
    pub lo: R,
    pub width: R,
    pub bins: usize,
}

impl<R: Real> Axis<R> {
    pub fn new(lo: R, hi: R, bins: usize) -> Self {
        Self { lo, width: (hi - lo) / R::from_usize_lossy(bins), bins }
    }

    /// Spans `mean ± span_sd · sd` of the samples.
    pub fn fit(samples: &[R], binning: &Binning) -> Result<Self> {
        binning.validate()?;
        if samples.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        let mut acc = MeanAcc::default();
        samples.iter().for_each(|&x| acc.push(x));
        let mean = acc.mean();
        let sd = if samples.len() > 1 { acc.variance().sqrt() } else { R::zero() };
        let half = if sd > R::zero() { R::lit(binning.span_sd) * sd } else { R::lit(0.5) };
        Ok(Self::new(mean - half, mean + half, binning.bins))
    }

    pub fn hi(&self) -> R {
        self.lo + self.width * R::from_usize_lossy(self.bins)
    }

    pub fn index(&self, x: R) -> Option<usize> {
        if !(x >= self.lo) {
            return None;
        }
        let k = ((x - self.lo) / self.width).floor().to_usize()?;
        (k < self.bins).then_some(k)
    }

    pub fn center(&self, i: usize) -> R {
        self.lo + self.width * (R::from_usize_lossy(i) + R::lit(0.5))
    }
}
