//! Standard normal density, distribution function and log distribution function.
//!
//! Every acquisition formula in this crate is written in terms of these three
//! functions evaluated at a standardized score `z`, and the interesting inputs
//! are frequently far in the lower tail (a candidate whose posterior sits well
//! above or below the incumbent). The distribution function is therefore
//! evaluated through `erfc`, which keeps full relative precision for `z ≪ 0`,
//! and the log distribution function switches to a continued fraction for the
//! Mills ratio below [`LOG_CDF_TAIL_CROSSOVER`] so that it stays finite long
//! after `Φ(z)` itself has underflowed.
//!
//! The checked entry points ([`normal_pdf`], [`normal_cdf`], [`log_normal_cdf`])
//! reject non-finite input. Once a value has been wrapped in a
//! [`StandardizedScore`] the evaluations are total.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{ensure_finite, Result};

/// 1/√(2π)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// ln √(2π)
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this score `ln Φ(z)` is computed from the Mills-ratio continued
/// fraction instead of `ln(Φ(z))`.
pub const LOG_CDF_TAIL_CROSSOVER: f64 = -5.0;

// Enough for ~1e-19 relative accuracy at t = 5; convergence is faster for larger t.
const MILLS_TERMS: u32 = 40;

/// A finite score `z = (reference − μ) / σ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct StandardizedScore(f64);

impl StandardizedScore {
    pub fn new(z: f64) -> Result<Self> {
        ensure_finite("standardized score", z).map(StandardizedScore)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn pdf(self) -> f64 {
        pdf(self.0)
    }

    #[inline]
    pub fn log_pdf(self) -> f64 {
        log_pdf(self.0)
    }

    #[inline]
    pub fn cdf(self) -> f64 {
        cdf(self.0)
    }

    #[inline]
    pub fn log_cdf(self) -> f64 {
        log_cdf(self.0)
    }
}

impl From<StandardizedScore> for f64 {
    fn from(z: StandardizedScore) -> f64 {
        z.0
    }
}

/// φ(z)
pub fn normal_pdf(z: f64) -> Result<f64> {
    StandardizedScore::new(z).map(StandardizedScore::pdf)
}

/// Φ(z)
///
/// Underflows to zero for z below about −38.5; use [`log_normal_cdf`] there.
pub fn normal_cdf(z: f64) -> Result<f64> {
    StandardizedScore::new(z).map(StandardizedScore::cdf)
}

/// ln Φ(z), finite for every finite z ≥ −1e154.
pub fn log_normal_cdf(z: f64) -> Result<f64> {
    StandardizedScore::new(z).map(StandardizedScore::log_cdf)
}

/// ln φ(z)
pub fn log_normal_pdf(z: f64) -> Result<f64> {
    StandardizedScore::new(z).map(StandardizedScore::log_pdf)
}

#[inline]
pub(crate) fn pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

#[inline]
pub(crate) fn log_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

#[inline]
pub(crate) fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

pub(crate) fn log_cdf(z: f64) -> f64 {
    if z < LOG_CDF_TAIL_CROSSOVER {
        // Φ(z) = φ(z)·m(−z), m the upper-tail Mills ratio.
        let (d0, _) = mills_denominators(-z);
        log_pdf(z) - d0.ln()
    } else if z > 0.0 {
        (-cdf(-z)).ln_1p()
    } else {
        cdf(z).ln()
    }
}

/// Denominators of the Laplace continued fraction for the Mills ratio
/// `m(t) = (1 − Φ(t)) / φ(t)`:
///
/// ```text
/// m(t) = 1 / (t + 1 / (t + 2 / (t + 3 / (t + …))))
/// ```
///
/// Returns `(d0, d1)` where `m(t) = 1/d0` and `1/m(t) − t = 1/d1`. The second
/// identity gives `1 − t·m(t) = 1/(d0·d1)` with no cancellation, which is what
/// the lower tail of the EI factor `zΦ(z) + φ(z)` needs. Intended for t ≥ 5.
pub(crate) fn mills_denominators(t: f64) -> (f64, f64) {
    debug_assert!(t >= -LOG_CDF_TAIL_CROSSOVER);
    let mut d = t;
    for k in (2..=MILLS_TERMS).rev() {
        d = t + f64::from(k) / d;
    }
    let d1 = d;
    let d0 = t + 1.0 / d1;
    (d0, d1)
}
