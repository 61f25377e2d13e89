//! Geometry of a single scissor unit.
//!
//! Frame convention used throughout the crate: a unit with heading `e`
//! (chain direction) and left normal `n = perp(e)` has its two members at
//! angles `-phi/2` and `+phi/2` from `e`. Member 1 reaches its `alpha` end
//! below the heading line on the distal face, member 2 reaches its `alpha`
//! end below the heading line on the proximal face. With this choice a unit
//! with `alpha > 1/2` turns the chain counterclockwise, and every curvature
//! below is positive for `alpha > 1/2`.
//!
//! Three curvature measures are provided:
//!
//! * [`effective_curvature`] `kappa_o`: rotation of the face tangents across
//!   the unit width `Delta_o`. This is the one used by the solvers. For a
//!   uniform chain it is exactly the inverse radius of the circle through the
//!   unit centers.
//! * [`turning_curvature`] `kappa_t`: turning angle between successive
//!   center-to-center chords of a uniform chain divided by the chord length.
//! * [`osculating_curvature`] `kappa_osc`: inverse radius of the circle
//!   tangent to both members. Unlike the other two it does **not** vanish at
//!   `alpha = 1/2`; `kappa_osc(1/2, pi/2, 1) = 2`.

use core::f64::consts::PI;

use alloc::format;

use crate::{Error, Real, Result, Vec2};

/// Internal angles closer than this to 0 or pi are clamped in pure geometry
/// queries.
pub const PHI_MIN: f64 = 1e-6;

/// Intrinsic parameters of one unit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UnitGeometry {
    pub alpha: f64,
    pub l: f64,
}

impl UnitGeometry {
    pub fn new(alpha: f64, l: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("aspect ratio {alpha} not in (0, 1)")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::domain(format!("member length {l} must be positive")));
        }
        Ok(UnitGeometry { alpha, l })
    }
}

/// Internal angle of one unit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UnitState {
    pub phi: f64,
}

impl UnitState {
    pub fn new(phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < PI) {
            return Err(Error::domain(format!("internal angle {phi} not in (0, pi)")));
        }
        Ok(UnitState { phi })
    }

    fn clamped(&self) -> f64 {
        self.phi.clamp(PHI_MIN, PI - PHI_MIN)
    }
}

/// All three curvature measures of one unit plus its width.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvatureReport {
    pub kappa_o: f64,
    pub kappa_t: f64,
    pub kappa_osc: f64,
    pub width: f64,
}

/// `kappa_o = (2 alpha - 1) / (2 alpha (1 - alpha) l sin(phi/2))`.
pub fn kappa_o<R: Real>(alpha: R, phi: R, l: R) -> R {
    let g = alpha * alpha.one_minus();
    (alpha - alpha.one_minus()) / (g * l * (phi * 0.5).sin() * 2.0)
}

/// `Delta_o = 4 alpha (1 - alpha) l cos(phi/2)`.
pub fn width<R: Real>(alpha: R, phi: R, l: R) -> R {
    alpha * alpha.one_minus() * l * (phi * 0.5).cos() * 4.0
}

/// `phi* = 2 atan((2 alpha - 1) tan((pi - phi)/2))`, the relative rotation of
/// adjacent identical units.
pub fn rotation_angle<R: Real>(alpha: R, phi: R) -> R {
    let half = phi * 0.5;
    ((alpha * 2.0 - 1.0) * half.cos() / half.sin()).atan() * 2.0
}

pub fn effective_curvature(u: UnitGeometry, s: UnitState) -> Result<f64> {
    Ok(kappa_o(u.alpha, s.clamped(), u.l))
}

pub fn unit_width(u: UnitGeometry, s: UnitState) -> Result<f64> {
    Ok(width(u.alpha, s.clamped(), u.l))
}

/// Face vectors `N_e = alpha l t1 + (1 - alpha) l t2` and
/// `N_w = (1 - alpha) l t1 + alpha l t2`, with `t1` at angle `beta` and `t2`
/// at `beta + pi - phi`.
pub fn face_normals(u: UnitGeometry, s: UnitState, beta: f64) -> (Vec2, Vec2) {
    let t1 = Vec2::from_angle(beta);
    let t2 = Vec2::from_angle(beta + PI - s.phi);
    let (a, b) = (u.alpha * u.l, (1.0 - u.alpha) * u.l);
    (t1 * a + t2 * b, t1 * b + t2 * a)
}

/// Turning curvature of a uniform chain.
///
/// Adjacent chords between unit centers turn by `phi*` and have length
/// `Delta_o / sqrt(1 + tan^2(phi*/2))`, so
/// `kappa_t = phi* sqrt(1 + u^2) / Delta_o` with `u = tan(phi*/2)`.
pub fn turning_curvature(u: UnitGeometry, s: UnitState) -> Result<f64> {
    let phi = s.clamped();
    let half = phi * 0.5;
    let t = (2.0 * u.alpha - 1.0) * libm::cos(half) / libm::sin(half);
    let turn = 2.0 * libm::atan(t);
    Ok(turn * libm::sqrt(1.0 + t * t) / width(u.alpha, phi, u.l))
}

/// `kappa_osc = 1 / ((1 - alpha) l cot(phi/2))`.
pub fn osculating_curvature(u: UnitGeometry, s: UnitState) -> Result<f64> {
    let half = s.clamped() * 0.5;
    Ok(libm::tan(half) / ((1.0 - u.alpha) * u.l))
}

pub fn unit_rotation_angle(u: UnitGeometry, s: UnitState) -> Result<f64> {
    Ok(rotation_angle(u.alpha, s.clamped()))
}

pub fn curvature_report(u: UnitGeometry, s: UnitState) -> Result<CurvatureReport> {
    Ok(CurvatureReport {
        kappa_o: effective_curvature(u, s)?,
        kappa_t: turning_curvature(u, s)?,
        kappa_osc: osculating_curvature(u, s)?,
        width: unit_width(u, s)?,
    })
}

/// Actuation angle at which a uniform chain of `n_units` closes into a ring
/// (`n_units * phi* = 2 pi`): `2 atan((2 alpha - 1) / tan(pi / n_units))`.
pub fn closure_actuation(alpha: f64, n_units: usize) -> Result<f64> {
    if n_units < 3 {
        return Err(Error::domain(format!("closure needs at least 3 units, got {n_units}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("aspect ratio {alpha} not in (0, 1)")));
    }
    let arg = (2.0 * alpha - 1.0) / libm::tan(PI / n_units as f64);
    if arg <= 0.0 {
        return Err(Error::NoClosure { alpha, n_units });
    }
    Ok(2.0 * libm::atan(arg))
}
