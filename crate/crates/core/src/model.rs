//! Shared domain types: pair parameters, coordinate covariances, Kramers
//! parameters and witness sign pairs.
//!
//! Units follow the overdamped convention used throughout the crate: mass and
//! damping are one, so stiffness and coupling are rates, and coordinates carry
//! the dimension of `sqrt(T)`. Only [`KramersParams`] keeps mass and damping
//! explicit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative tolerance below which a 2x2 covariance counts as singular:
/// `det <= DEGENERACY_TOL * s11 * s22`.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Harmonic pair `U = a x1²/2 + a x2²/2 + g x1 x2` in contact with two baths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairParams<R> {
    pub a: R,
    pub g: R,
    #[serde(rename = "T", alias = "temperature")]
    pub temperature: R,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<R>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<R>,
}

impl<R: Real> PairParams<R> {
    pub fn new(a: R, g: R, temperature: R) -> Self {
        Self { a, g, temperature, t1: None, t2: None }
    }

    pub fn with_bath_temperatures(mut self, t1: R, t2: R) -> Self {
        self.t1 = Some(t1);
        self.t2 = Some(t2);
        self
    }

    pub fn t1(&self) -> R {
        self.t1.unwrap_or(self.temperature)
    }

    pub fn t2(&self) -> R {
        self.t2.unwrap_or(self.temperature)
    }

    /// Normal-mode relaxation rates `(a + g, a - g)` for the center of mass
    /// and relative coordinates.
    pub fn mode_rates(&self) -> (R, R) {
        (self.a + self.g, self.a - self.g)
    }
}

/// Parameters that passed [`validate_pair`], annotated with the stability flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidatedPairParams<R> {
    pub params: PairParams<R>,
    /// `a > |g|`: the potential is positive and a Gibbs state exists.
    pub stable: bool,
}

impl<R: Real> ValidatedPairParams<R> {
    pub fn require_stable(&self) -> Result<&PairParams<R>> {
        if self.stable {
            Ok(&self.params)
        } else {
            Err(Error::NoStationaryState { a: self.params.a.as_f64(), g: self.params.g.as_f64() })
        }
    }

    /// Witness evaluations are only defined for a common bath temperature.
    pub fn require_equal_temperatures(&self) -> Result<R> {
        let (t1, t2) = (self.params.t1(), self.params.t2());
        if t1 == t2 && t1 == self.params.temperature {
            Ok(t1)
        } else {
            Err(Error::UnequalTemperatures { t1: t1.as_f64(), t2: t2.as_f64() })
        }
    }
}

fn finite<R: Real>(name: &'static str, v: R) -> Result<R> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name))
    }
}

fn positive_temperature<R: Real>(name: &'static str, v: R) -> Result<R> {
    finite(name, v)?;
    if v > R::zero() {
        Ok(v)
    } else {
        Err(Error::NonPositiveTemperature { name, value: v.as_f64() })
    }
}

/// Checks finiteness and temperature positivity and records whether the pair is stable.
pub fn validate_pair<R: Real>(params: PairParams<R>) -> Result<ValidatedPairParams<R>> {
    finite("a", params.a)?;
    finite("g", params.g)?;
    positive_temperature("T", params.temperature)?;
    if let Some(t1) = params.t1 {
        positive_temperature("t1", t1)?;
    }
    if let Some(t2) = params.t2 {
        positive_temperature("t2", t2)?;
    }
    let stable = params.a > params.g.abs();
    Ok(ValidatedPairParams { params, stable })
}

/// Symmetric 2x2 coordinate covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covariance2<R> {
    pub s11: R,
    pub s12: R,
    pub s22: R,
}

impl<R: Real> Covariance2<R> {
    pub fn new(s11: R, s12: R, s22: R) -> Self {
        Self { s11, s12, s22 }
    }

    pub fn diagonal(s: R) -> Self {
        Self::new(s, R::zero(), s)
    }

    pub fn zero() -> Self {
        Self::new(R::zero(), R::zero(), R::zero())
    }

    pub fn det(&self) -> R {
        self.s11 * self.s22 - self.s12 * self.s12
    }

    pub fn is_finite(&self) -> bool {
        self.s11.is_finite() && self.s12.is_finite() && self.s22.is_finite()
    }

    /// Positive semidefinite within a few ulps of the diagonal product.
    pub fn is_psd(&self) -> bool {
        let slack = R::lit(16.0) * R::epsilon() * (self.s11.abs() * self.s22.abs());
        self.is_finite() && self.s11 >= R::zero() && self.s22 >= R::zero() && self.det() >= -slack
    }

    /// Accepts covariances with `det > DEGENERACY_TOL * s11 * s22`; returns the determinant.
    pub fn require_positive_definite(&self) -> Result<R> {
        let det = self.det();
        let ok = self.is_finite()
            && self.s11 > R::zero()
            && self.s22 > R::zero()
            && det > R::lit(DEGENERACY_TOL) * self.s11 * self.s22;
        if ok {
            Ok(det)
        } else {
            Err(Error::SingularCovariance { det: det.as_f64() })
        }
    }

    /// Exchanges the particle labels.
    pub fn swapped(&self) -> Self {
        Self::new(self.s22, self.s12, self.s11)
    }

    pub fn scaled(&self, k: R) -> Self {
        Self::new(self.s11 * k, self.s12 * k, self.s22 * k)
    }

    /// Lower Cholesky factor `[[l11, 0], [l21, l22]]`, for sampling. Requires PSD.
    pub fn cholesky(&self) -> Result<[[R; 2]; 2]> {
        if !self.is_psd() {
            return Err(Error::SingularCovariance { det: self.det().as_f64() });
        }
        let l11 = self.s11.max(R::zero()).sqrt();
        let l21 = if l11 > R::zero() { self.s12 / l11 } else { R::zero() };
        let l22 = (self.s22 - l21 * l21).max(R::zero()).sqrt();
        Ok([[l11, R::zero()], [l21, l22]])
    }
}

/// Single underdamped particle `m x'' = -a x - gamma x' + eta`, `<eta eta> = 2 gamma T δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KramersParams<R> {
    pub m: R,
    pub gamma: R,
    pub a: R,
    #[serde(rename = "T", alias = "temperature")]
    pub temperature: R,
}

impl<R: Real> KramersParams<R> {
    pub fn new(m: R, gamma: R, a: R, temperature: R) -> Result<Self> {
        let kp = Self { m, gamma, a, temperature };
        kp.validate()?;
        Ok(kp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("gamma", self.gamma), ("a", self.a)] {
            finite(name, v)?;
        }
        positive_temperature("T", self.temperature)?;
        if self.m <= R::zero() {
            return Err(Error::InvalidParameter { name: "m", reason: "mass must be positive".into() });
        }
        if self.gamma <= R::zero() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "damping must be positive".into(),
            });
        }
        if self.a < R::zero() {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: "stiffness must be non-negative".into(),
            });
        }
        Ok(())
    }

    /// Dimensionless `4 a m / gamma²`; the overdamped limit is this ratio going to zero.
    pub fn damping_ratio(&self) -> R {
        R::lit(4.0) * self.a * self.m / (self.gamma * self.gamma)
    }

    pub fn is_overdamped(&self) -> bool {
        self.damping_ratio() < R::one()
    }

    pub fn tau_p(&self) -> R {
        self.m / self.gamma
    }

    /// `gamma / a`, infinite for a free particle.
    pub fn tau_x(&self) -> R {
        if self.a == R::zero() {
            R::infinity()
        } else {
            self.gamma / self.a
        }
    }
}

/// Momentum and coordinate relaxation times `(tau_p, tau_x)`.
pub fn timescales<R: Real>(kp: &KramersParams<R>) -> (R, R) {
    (kp.tau_p(), kp.tau_x())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value<R: Real>(self) -> R {
        match self {
            Sign::Plus => R::one(),
            Sign::Minus => -R::one(),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Signs in `<(Δu1 + ζ Δu2)²> + <(Δx1 + ε Δx2)²>`. `eps_sign` is the coordinate sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignPair {
    pub zeta: Sign,
    pub eps_sign: Sign,
}

impl SignPair {
    pub const ALL: [SignPair; 4] = [
        SignPair { zeta: Sign::Plus, eps_sign: Sign::Plus },
        SignPair { zeta: Sign::Plus, eps_sign: Sign::Minus },
        SignPair { zeta: Sign::Minus, eps_sign: Sign::Plus },
        SignPair { zeta: Sign::Minus, eps_sign: Sign::Minus },
    ];

    pub fn new(zeta: Sign, eps_sign: Sign) -> Self {
        Self { zeta, eps_sign }
    }

    pub fn flipped(self) -> Self {
        Self::new(self.zeta.flip(), self.eps_sign.flip())
    }

    /// Short label such as `"+-"` (zeta first).
    pub fn label(&self) -> String {
        format!("{}{}", self.zeta, self.eps_sign)
    }
}

impl fmt::Display for SignPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "zeta={},eps={}", self.zeta, self.eps_sign)
    }
}
