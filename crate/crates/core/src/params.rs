//! Cavity and drive configuration.
//!
//! Natural units are used throughout (c = ħ = 1). The moving wall follows
//! `L(t) = L0 (1 + ε sin Ωt)` with `Ω = γ ω₁` and `ω₁ = π / L0`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CasimirError, Result};

/// Above this value of `ε ω₁ T` the first-order results are flagged as
/// untrustworthy.
pub const PERTURBATIVE_LIMIT: f64 = 0.2;

/// Tolerance used when deciding whether a real `γ` is an integer.
pub const INTEGER_GAMMA_TOL: f64 = 1e-9;

/// A `±` label for the `σ`, `σ'` and `s` indices.
///
/// Stored as an index (`Minus` = 0, `Plus` = 1) so it can address the
/// interleaved `(k−, k+)` layout of an X vector; every formula goes through
/// [`Sign::value`], which yields `−1.0` or `+1.0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Minus = 0,
    Plus = 1,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Minus, Sign::Plus];

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Sign {
        if i == 0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    #[inline]
    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }

    /// Sign of a nonzero integer; `None` for zero.
    pub fn of(x: i64) -> Option<Sign> {
        match x.signum() {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Minus => "-",
            Sign::Plus => "+",
        })
    }
}

/// Physical and truncation parameters of one cavity run.
///
/// Fields are private; derived quantities (`ω₁`, `Ω`, `ω_k`) are computed on
/// demand so they always agree with the stored values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct CavityParams {
    l0: f64,
    epsilon: f64,
    gamma: f64,
    duration: f64,
    modes: usize,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    l0: f64,
    epsilon: f64,
    gamma: f64,
    duration: f64,
    modes: usize,
}

impl TryFrom<RawParams> for CavityParams {
    type Error = CasimirError;

    fn try_from(r: RawParams) -> Result<Self> {
        CavityParams::new(r.l0, r.epsilon, r.gamma, r.duration, r.modes)
    }
}

impl From<CavityParams> for RawParams {
    fn from(p: CavityParams) -> Self {
        RawParams {
            l0: p.l0,
            epsilon: p.epsilon,
            gamma: p.gamma,
            duration: p.duration,
            modes: p.modes,
        }
    }
}

impl CavityParams {
    pub fn new(l0: f64, epsilon: f64, gamma: f64, duration: f64, modes: usize) -> Result<Self> {
        let bad = |msg: String| Err(CasimirError::InvalidParameter(msg));
        if !(l0.is_finite() && l0 > 0.0) {
            return bad(format!("L0 must be positive and finite, got {l0}"));
        }
        if !(epsilon.is_finite() && (0.0..1.0).contains(&epsilon)) {
            return bad(format!("epsilon must lie in [0, 1), got {epsilon}"));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return bad(format!("gamma must be positive and finite, got {gamma}"));
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return bad(format!("T must be nonnegative and finite, got {duration}"));
        }
        if modes == 0 {
            return bad("mode truncation K must be at least 1".into());
        }
        Ok(CavityParams {
            l0,
            epsilon,
            gamma,
            duration,
            modes,
        })
    }

    /// Run lasting `periods` full drive periods, so the wall is back at `L0`
    /// when it stops.
    pub fn with_periods(l0: f64, epsilon: f64, gamma: f64, periods: u32, modes: usize) -> Result<Self> {
        let p = CavityParams::new(l0, epsilon, gamma, 0.0, modes)?;
        Ok(CavityParams {
            duration: periods as f64 * p.drive_period(),
            ..p
        })
    }

    /// Default truncation `max(16, ⌈4γ⌉)`.
    pub fn default_modes(gamma: f64) -> usize {
        16.max((4.0 * gamma).ceil() as usize)
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Wall-stop time `T`.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Truncation `K`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Fundamental frequency `ω₁ = π / L0`.
    pub fn omega1(&self) -> f64 {
        PI / self.l0
    }

    /// Wall angular frequency `Ω = γ ω₁`.
    pub fn drive_frequency(&self) -> f64 {
        self.gamma * self.omega1()
    }

    pub fn drive_period(&self) -> f64 {
        2.0 * PI / self.drive_frequency()
    }

    /// Static mode frequency `ω_k = k ω₁`.
    pub fn omega(&self, k: usize) -> f64 {
        k as f64 * self.omega1()
    }

    /// `ε ω₁ T`, the expansion parameter of the short-time results.
    pub fn epsilon_omega_t(&self) -> f64 {
        self.epsilon * self.omega1() * self.duration
    }

    pub fn perturbative_warning(&self) -> bool {
        self.epsilon_omega_t() > PERTURBATIVE_LIMIT
    }

    /// Number of drive periods in `T`, as a real number.
    pub fn periods(&self) -> f64 {
        self.duration / self.drive_period()
    }

    /// `γ` as an integer, or [`CasimirError::NonIntegerGamma`].
    pub fn integer_gamma(&self) -> Result<i64> {
        let r = self.gamma.round();
        if (self.gamma - r).abs() <= INTEGER_GAMMA_TOL {
            Ok(r as i64)
        } else {
            Err(CasimirError::NonIntegerGamma(self.gamma))
        }
    }

    pub fn check_mode(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.modes {
            Err(CasimirError::IndexRange { index: k, max: self.modes })
        } else {
            Ok(())
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        CavityParams::new(self.l0, epsilon, self.gamma, self.duration, self.modes)
    }

    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        CavityParams::new(self.l0, self.epsilon, self.gamma, duration, self.modes)
    }

    pub fn with_modes(&self, modes: usize) -> Result<Self> {
        CavityParams::new(self.l0, self.epsilon, self.gamma, self.duration, modes)
    }
}
