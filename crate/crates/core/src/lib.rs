//! Kinematics and inverse design of planar scissor linkages.
//!
//! A scissor unit is two rigid members of length `l` pinned together at the
//! fraction `alpha` of their length. Chaining units pin-to-pin leaves a single
//! degree of freedom, the internal angle of the first unit (the actuation
//! angle `psi`). This crate provides
//!
//! * per-unit geometry: curvature definitions, unit rotation, closure angle
//!   ([`geometry`]),
//! * exact unit-by-unit chain assembly, closed-form sectioned tip kinematics
//!   and a first-order perturbative solution ([`kinematics`]),
//! * a tape-based reverse-mode differentiation engine that all of the above
//!   are generic over ([`autodiff`]),
//! * target curve processing: arc-length resampling with cubic splines and
//!   smoothed curvature profiles ([`targets`]),
//! * the shape-morphing and trajectory-writing solvers ([`optimize`]),
//! * validation studies: closure, perturbation order, tip sensitivity
//!   ([`analysis`]).
//!
//! The crate is `no_std` and only needs `alloc`. Transcendental functions come
//! from `libm`, so results are bit-reproducible across platforms.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod autodiff;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod optimize;
pub mod real;
pub mod targets;
pub mod vec2;

pub use error::{Error, Result};
pub use real::Real;
pub use vec2::Vec2;
