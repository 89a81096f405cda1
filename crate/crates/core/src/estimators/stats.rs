//! Mergeable running moments.

use crate::scalar::Real;

/// Running mean and variance (Welford), mergeable with [`MeanAcc::merge`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanAcc<R> {
    n: usize,
    mean: R,
    m2: R,
}

impl<R: Real> MeanAcc<R> {
    pub fn push(&mut self, x: R) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean = self.mean + delta / R::from_usize_lossy(self.n);
        self.m2 = self.m2 + delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let (na, nb, nn) = (R::from_usize_lossy(self.n), R::from_usize_lossy(other.n), R::from_usize_lossy(n));
        let delta = other.mean - self.mean;
        self.mean = self.mean + delta * nb / nn;
        self.m2 = self.m2 + other.m2 + delta * delta * na * nb / nn;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> R {
        if self.n == 0 {
            R::nan()
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> R {
        if self.n < 2 {
            R::nan()
        } else {
            self.m2 / R::from_usize_lossy(self.n - 1)
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> R {
        (self.variance() / R::from_usize_lossy(self.n)).sqrt()
    }
}

/// Mean and standard error of a sample.
pub fn mean_se<R: Real>(xs: impl IntoIterator<Item = R>) -> (R, R, usize) {
    let mut acc = MeanAcc::default();
    for x in xs {
        acc.push(x);
    }
    (acc.mean(), acc.se(), acc.count())
}
