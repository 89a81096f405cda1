//! Second moments of a coordinate pair with large-sample standard errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Covariance2;
use crate::scalar::Real;

const ORDER: usize = 4;

/// Power sums `Σ dx1^i dx2^k` (`i + k <= 4`) of the shifted samples `dx = x - shift`.
///
/// Merging is plain addition, so any partition of the samples merged in a fixed
/// order gives a fixed result. The shift should be close to the sample mean to
/// keep cancellation small; [`estimate_cov`] uses the exact mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMoments<R> {
    shift: [R; 2],
    n: usize,
    sums: [[R; ORDER + 1]; ORDER + 1],
}

/// Sample covariance with standard errors and the estimation covariance of
/// `(s11, s12, s22)` from fourth moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate<R> {
    pub n: usize,
    pub mean: [R; 2],
    pub cov: Covariance2<R>,
    pub se: Covariance2<R>,
    pub vcov: [[R; 3]; 3],
}

const ENTRIES: [(usize, usize); 3] = [(2, 0), (1, 1), (0, 2)];

impl<R: Real> PairMoments<R> {
    pub fn new(shift: [R; 2]) -> Self {
        Self { shift, n: 0, sums: [[R::zero(); ORDER + 1]; ORDER + 1] }
    }

    #[inline]
    pub fn push(&mut self, x1: R, x2: R) {
        let d1 = x1 - self.shift[0];
        let d2 = x2 - self.shift[1];
        self.n += 1;
        let mut p1 = R::one();
        for i in 0..=ORDER {
            let mut p = p1;
            for k in 0..=ORDER - i {
                self.sums[i][k] = self.sums[i][k] + p;
                p = p * d2;
            }
            p1 = p1 * d1;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.shift, other.shift);
        self.n += other.n;
        for i in 0..=ORDER {
            for k in 0..=ORDER - i {
                self.sums[i][k] = self.sums[i][k] + other.sums[i][k];
            }
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Central moment `E[(x1-m1)^i (x2-m2)^k]` (population normalisation).
    fn central(&self, i: usize, k: usize) -> R {
        let n = R::from_usize_lossy(self.n);
        let raw = |a: usize, b: usize| self.sums[a][b] / n;
        let (m1, m2) = (raw(1, 0), raw(0, 1));
        let mut total = R::zero();
        for a in 0..=i {
            for b in 0..=k {
                let c = R::lit(binomial(i, a) * binomial(k, b));
                total = total + c * (-m1).powi((i - a) as i32) * (-m2).powi((k - b) as i32) * raw(a, b);
            }
        }
        total
    }

    pub fn finish(&self) -> Result<CovEstimate<R>> {
        if self.n < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: self.n });
        }
        let n = R::from_usize_lossy(self.n);
        let bessel = n / (n - R::one());
        let mean = [
            self.shift[0] + self.sums[1][0] / n,
            self.shift[1] + self.sums[0][1] / n,
        ];
        let second = ENTRIES.map(|(i, k)| self.central(i, k));
        let cov = Covariance2::new(second[0] * bessel, second[1] * bessel, second[2] * bessel);
        let mut vcov = [[R::zero(); 3]; 3];
        for (p, &(i, k)) in ENTRIES.iter().enumerate() {
            for (q, &(j, l)) in ENTRIES.iter().enumerate() {
                let v = (self.central(i + j, k + l) - second[p] * second[q]) / n;
                vcov[p][q] = if p == q { v.max(R::zero()) } else { v };
            }
        }
        let se = Covariance2::new(vcov[0][0].sqrt(), vcov[1][1].sqrt(), vcov[2][2].sqrt());
        Ok(CovEstimate { n: self.n, mean, cov, se, vcov })
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Unbiased sample covariance of the pairs, centered on the sample mean.
pub fn estimate_cov<R: Real>(points: &[[R; 2]]) -> Result<CovEstimate<R>> {
    if points.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: points.len() });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("samples"));
    }
    let n = R::from_usize_lossy(points.len());
    let mean = [
        points.iter().map(|p| p[0]).sum::<R>() / n,
        points.iter().map(|p| p[1]).sum::<R>() / n,
    ];
    let mut acc = PairMoments::new(mean);
    for p in points {
        acc.push(p[0], p[1]);
    }
    acc.finish()
}
