//! The scalar abstraction shared by plain evaluation and differentiation.
//!
//! Every kinematic and loss routine in this crate is written once against
//! [`Real`]. Instantiated with `f64` it is an ordinary numeric evaluation;
//! instantiated with [`crate::autodiff::Var`] the same code records a tape.

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

/// Below this magnitude `sinc` and `atanc` switch to their Taylor series.
const SERIES_CUTOFF: f64 = 1e-3;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// A constant carrying no derivative information.
    fn cst(v: f64) -> Self;

    fn value(&self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn atan(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn acos(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;

    /// `sin(x) / x`, analytic through `x = 0`.
    fn sinc(self) -> Self;

    /// `atan(x) / x`, analytic through `x = 0`.
    fn atanc(self) -> Self;

    /// `max(0, x)`; the derivative at 0 is taken as 0.
    fn relu(self) -> Self;

    /// `|x|`; the derivative at 0 is taken as 0.
    fn abs(self) -> Self;

    /// `acos` with its argument clamped to `[-1, 1]`. Inside the band
    /// `1 - |x| < band` the derivative is frozen at its value on the band edge
    /// so gradients stay finite.
    fn acos_clamped(self, band: f64) -> Self;

    /// Records which side of a non-smooth choice was taken (a segment
    /// index, a clamp, a sign). Only recording scalars keep it; see
    /// [`crate::autodiff::Tape::branch_signature`].
    fn note_branch(&self, _tag: u64) {}

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn one() -> Self {
        Self::cst(1.0)
    }

    fn sq(self) -> Self {
        self * self
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    /// `1 - x`.
    fn one_minus(self) -> Self {
        -self + 1.0
    }

    fn sigmoid(self) -> Self {
        (-self).exp().add(1.0).recip()
    }

    /// Subgradient maximum: the derivative follows the larger operand.
    fn max(self, other: Self) -> Self {
        if self.value() >= other.value() {
            self
        } else {
            other
        }
    }

    fn min(self, other: Self) -> Self {
        if self.value() <= other.value() {
            self
        } else {
            other
        }
    }
}

pub(crate) fn sinc_f64(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        libm::sin(x) / x
    }
}

pub(crate) fn sinc_deriv_f64(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        -x / 3.0 + x * x2 / 30.0
    } else {
        (x * libm::cos(x) - libm::sin(x)) / (x * x)
    }
}

pub(crate) fn atanc_f64(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 3.0 + x2 * x2 / 5.0
    } else {
        libm::atan(x) / x
    }
}

pub(crate) fn atanc_deriv_f64(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        -2.0 * x / 3.0 + 4.0 * x * x2 / 5.0
    } else {
        (x / (1.0 + x * x) - libm::atan(x)) / (x * x)
    }
}

pub(crate) fn acos_clamped_f64(x: f64) -> f64 {
    libm::acos(x.clamp(-1.0, 1.0))
}

pub(crate) fn acos_clamped_deriv_f64(x: f64, band: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let gap = (1.0 - x * x).max(2.0 * band);
    -1.0 / libm::sqrt(gap)
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        libm::sin(self)
    }
    fn cos(self) -> Self {
        libm::cos(self)
    }
    fn tan(self) -> Self {
        libm::tan(self)
    }
    fn atan(self) -> Self {
        libm::atan(self)
    }
    fn atan2(self, x: Self) -> Self {
        libm::atan2(self, x)
    }
    fn acos(self) -> Self {
        libm::acos(self)
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn exp(self) -> Self {
        libm::exp(self)
    }
    fn ln(self) -> Self {
        libm::log(self)
    }
    fn sinc(self) -> Self {
        sinc_f64(self)
    }
    fn atanc(self) -> Self {
        atanc_f64(self)
    }
    fn relu(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
    }
    fn abs(self) -> Self {
        libm::fabs(self)
    }
    fn acos_clamped(self, _band: f64) -> Self {
        acos_clamped_f64(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_match_closed_forms_at_cutoff() {
        for &x in &[SERIES_CUTOFF * 0.999, -SERIES_CUTOFF * 0.999] {
            let s = libm::sin(x) / x;
            assert!((sinc_f64(x) - s).abs() < 1e-15);
            let a = libm::atan(x) / x;
            assert!((atanc_f64(x) - a).abs() < 1e-15);
            let ds = (x * libm::cos(x) - libm::sin(x)) / (x * x);
            assert!((sinc_deriv_f64(x) - ds).abs() < 1e-9);
        }
        assert_eq!(sinc_f64(0.0), 1.0);
        assert_eq!(atanc_f64(0.0), 1.0);
    }

    #[test]
    fn sigmoid_midpoint() {
        assert_eq!(0.0f64.sigmoid(), 0.5);
        assert!(30.0f64.sigmoid() < 1.0);
    }
}
