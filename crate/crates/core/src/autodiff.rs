//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every elementary operation performed on [`Var`]s as a
//! node holding at most two parent indices and the local partial derivatives.
//! [`Tape::gradient`] then sweeps the tape backwards once, so the cost of a
//! full gradient is a small multiple of the cost of the forward evaluation
//! regardless of the number of parameters.
//!
//! `Var` implements [`Real`], so any routine written against `Real` can be
//! differentiated without modification:
//!
//! ```
//! use scissor_core::autodiff::{grad_fn, ParamVector};
//! use scissor_core::Real;
//!
//! let at = ParamVector::from_values(&[1.0, 2.0, 3.0]);
//! let (v, g) = grad_fn(|x| x.iter().fold(x[0] * 0.0, |acc, &xi| acc + xi.sq()), &at).unwrap();
//! assert_eq!(v, 14.0);
//! assert_eq!(g, vec![2.0, 4.0, 6.0]);
//! ```
//!
//! Constants (`Var::cst`) carry no tape reference and never create nodes.
//! A tape is single-threaded; independent evaluations use independent tapes.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::{Cell, RefCell};
use core::cmp::Ordering;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::real::{
    acos_clamped_deriv_f64, acos_clamped_f64, atanc_deriv_f64, atanc_f64, sinc_deriv_f64, sinc_f64,
};
use crate::{Error, Real, Result};

const NONE: u32 = u32::MAX;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

#[derive(Debug, Clone, Copy)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
}

/// Operation recorder.
#[derive(Debug)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    nan_op: Cell<Option<&'static str>>,
    kink_distance: Cell<f64>,
    branches: Cell<u64>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::with_capacity(0)
    }

    pub fn with_capacity(n: usize) -> Self {
        Tape {
            nodes: RefCell::new(Vec::with_capacity(n)),
            nan_op: Cell::new(None),
            kink_distance: Cell::new(f64::INFINITY),
            branches: Cell::new(FNV_OFFSET),
        }
    }

    /// Drops all recorded nodes. Existing `Var`s must not be used afterwards.
    pub fn clear(&mut self) {
        self.nodes.get_mut().clear();
        self.nan_op.set(None);
        self.kink_distance.set(f64::INFINITY);
        self.branches.set(FNV_OFFSET);
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A new independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [NONE, NONE],
            partials: [0.0, 0.0],
        });
        Var {
            val: value,
            idx,
            tape: Some(self),
        }
    }

    /// Name of the first operation that produced a NaN, if any.
    pub fn nan_op(&self) -> Option<&'static str> {
        self.nan_op.get()
    }

    /// Smallest distance between an argument of a non-smooth primitive
    /// (`relu`, `abs`, `max`, `min`, clamped `acos`) and its kink, over the
    /// whole recording. Infinite if none was evaluated.
    pub fn kink_distance(&self) -> f64 {
        self.kink_distance.get()
    }

    /// Hash of every branch choice recorded so far. Two evaluations with
    /// equal signatures ran through the same smooth piece of the function.
    pub fn branch_signature(&self) -> u64 {
        self.branches.get()
    }

    fn note_branch(&self, tag: u64) {
        let mut h = self.branches.get();
        for b in tag.to_le_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
        self.branches.set(h);
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(node);
        idx
    }

    fn note_kink(&self, distance: f64) {
        if distance < self.kink_distance.get() {
            self.kink_distance.set(distance);
        }
    }

    fn note_value(&self, op: &'static str, v: f64) {
        if v.is_nan() && self.nan_op.get().is_none() {
            self.nan_op.set(Some(op));
        }
    }

    /// Adjoints of every recorded node with respect to `output`.
    pub fn gradient(&self, output: Var<'_>) -> Gradients {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        if output.idx == NONE {
            return Gradients { adjoints: adj };
        }
        adj[output.idx as usize] = 1.0;
        for i in (0..=output.idx as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let n = nodes[i];
            for k in 0..2 {
                let p = n.parents[k];
                if p != NONE {
                    adj[p as usize] += a * n.partials[k];
                }
            }
        }
        Gradients { adjoints: adj }
    }
}

/// Result of a backward sweep.
#[derive(Debug, Clone)]
pub struct Gradients {
    adjoints: Vec<f64>,
}

impl Gradients {
    pub fn wrt(&self, v: &Var<'_>) -> f64 {
        if v.idx == NONE {
            0.0
        } else {
            self.adjoints[v.idx as usize]
        }
    }
}

/// A scalar that may be recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    val: f64,
    idx: u32,
    tape: Option<&'t Tape>,
}

impl core::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.idx == NONE {
            write!(f, "Var({})", self.val)
        } else {
            write!(f, "Var({} @{})", self.val, self.idx)
        }
    }
}

impl<'t> Var<'t> {
    pub fn is_constant(&self) -> bool {
        self.tape.is_none()
    }

    #[inline]
    fn unary(self, op: &'static str, val: f64, d: f64) -> Self {
        match self.tape {
            None => Var {
                val,
                idx: NONE,
                tape: None,
            },
            Some(t) => {
                t.note_value(op, val);
                let idx = t.push(Node {
                    parents: [self.idx, NONE],
                    partials: [d, 0.0],
                });
                Var {
                    val,
                    idx,
                    tape: Some(t),
                }
            }
        }
    }

    #[inline]
    fn binary(self, other: Self, op: &'static str, val: f64, da: f64, db: f64) -> Self {
        match (self.tape, other.tape) {
            (None, None) => Var {
                val,
                idx: NONE,
                tape: None,
            },
            (Some(_), None) => self.unary(op, val, da),
            (None, Some(_)) => other.unary(op, val, db),
            (Some(t), Some(_)) => {
                t.note_value(op, val);
                let idx = t.push(Node {
                    parents: [self.idx, other.idx],
                    partials: [da, db],
                });
                Var {
                    val,
                    idx,
                    tape: Some(t),
                }
            }
        }
    }

    fn kink(&self, distance: f64, branch: u64) {
        if let Some(t) = self.tape {
            t.note_kink(distance);
            t.note_branch(branch);
        }
    }
}

impl PartialEq for Var<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.val == other.val
    }
}

impl PartialOrd for Var<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.val.partial_cmp(&other.val)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.binary(o, "add", self.val + o.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.binary(o, "sub", self.val - o.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.binary(o, "mul", self.val * o.val, o.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.val / o.val;
        self.binary(o, "div", q, 1.0 / o.val, -q / o.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary("neg", -self.val, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        self.unary("add", self.val + c, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        self.unary("sub", self.val - c, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.unary("mul", self.val * c, c)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        self.unary("div", self.val / c, 1.0 / c)
    }
}

impl<'t> Real for Var<'t> {
    fn cst(v: f64) -> Self {
        Var {
            val: v,
            idx: NONE,
            tape: None,
        }
    }

    #[inline]
    fn value(&self) -> f64 {
        self.val
    }

    fn sin(self) -> Self {
        self.unary("sin", libm::sin(self.val), libm::cos(self.val))
    }

    fn cos(self) -> Self {
        self.unary("cos", libm::cos(self.val), -libm::sin(self.val))
    }

    fn tan(self) -> Self {
        let t = libm::tan(self.val);
        self.unary("tan", t, 1.0 + t * t)
    }

    fn atan(self) -> Self {
        self.unary(
            "atan",
            libm::atan(self.val),
            1.0 / (1.0 + self.val * self.val),
        )
    }

    fn atan2(self, x: Self) -> Self {
        let (y, xv) = (self.val, x.val);
        let r2 = xv * xv + y * y;
        self.binary(x, "atan2", libm::atan2(y, xv), xv / r2, -y / r2)
    }

    fn acos(self) -> Self {
        let x = self.val;
        self.unary("acos", libm::acos(x), -1.0 / libm::sqrt(1.0 - x * x))
    }

    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.val);
        self.unary("sqrt", s, 0.5 / s)
    }

    fn exp(self) -> Self {
        let e = libm::exp(self.val);
        self.unary("exp", e, e)
    }

    fn ln(self) -> Self {
        self.unary("ln", libm::log(self.val), 1.0 / self.val)
    }

    fn sinc(self) -> Self {
        self.unary("sinc", sinc_f64(self.val), sinc_deriv_f64(self.val))
    }

    fn atanc(self) -> Self {
        self.unary("atanc", atanc_f64(self.val), atanc_deriv_f64(self.val))
    }

    fn note_branch(&self, tag: u64) {
        if let Some(t) = self.tape {
            t.note_branch(tag);
        }
    }

    fn relu(self) -> Self {
        self.kink(libm::fabs(self.val), u64::from(self.val > 0.0));
        if self.val > 0.0 {
            self
        } else {
            Var::cst(0.0)
        }
    }

    fn abs(self) -> Self {
        self.kink(libm::fabs(self.val), u64::from(self.val > 0.0));
        if self.val > 0.0 {
            self
        } else if self.val < 0.0 {
            -self
        } else {
            Var::cst(0.0)
        }
    }

    fn acos_clamped(self, band: f64) -> Self {
        self.kink(1.0 - libm::fabs(self.val), u64::from(libm::fabs(self.val) >= 1.0 - band));
        self.unary(
            "acos_clamped",
            acos_clamped_f64(self.val),
            acos_clamped_deriv_f64(self.val, band),
        )
    }

    fn max(self, other: Self) -> Self {
        let pick = u64::from(self.val >= other.val);
        self.kink(libm::fabs(self.val - other.val), pick);
        other.kink(libm::fabs(self.val - other.val), pick);
        if self.val >= other.val {
            self
        } else {
            other
        }
    }

    fn min(self, other: Self) -> Self {
        let pick = u64::from(self.val <= other.val);
        self.kink(libm::fabs(self.val - other.val), pick);
        other.kink(libm::fabs(self.val - other.val), pick);
        if self.val <= other.val {
            self
        } else {
            other
        }
    }
}

/// An ordered list of uniquely named real parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new() -> Self {
        ParamVector {
            names: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Parameters named `x0`, `x1`, ...
    pub fn from_values(values: &[f64]) -> Self {
        let mut p = ParamVector::new();
        for (i, &v) in values.iter().enumerate() {
            p.names.push(format!("x{i}"));
            p.values.push(v);
        }
        p
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64) -> Result<()> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::config(format!("duplicate parameter name `{name}`")));
        }
        self.names.push(name);
        self.values.push(value);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same names, new values.
    pub fn with_values(&self, values: &[f64]) -> Self {
        assert_eq!(values.len(), self.values.len());
        ParamVector {
            names: self.names.clone(),
            values: values.to_vec(),
        }
    }
}

impl Default for ParamVector {
    fn default() -> Self {
        Self::new()
    }
}

/// A scalar function that can be evaluated over any [`Real`].
pub trait Objective {
    fn eval<R: Real>(&self, x: &[R]) -> R;
}

impl<O: Objective + ?Sized> Objective for &O {
    fn eval<R: Real>(&self, x: &[R]) -> R {
        (**self).eval(x)
    }
}

/// Value and gradient of a closure written directly against [`Var`].
pub fn grad_fn<F>(f: F, at: &ParamVector) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let xs: Vec<Var<'_>> = at.values().iter().map(|&v| tape.var(v)).collect();
    let out = f(&xs);
    finish(&tape, &xs, out)
}

/// Value and gradient of an [`Objective`].
pub fn grad<O: Objective + ?Sized>(f: &O, at: &[f64]) -> Result<(f64, Vec<f64>)> {
    let tape = Tape::new();
    let xs: Vec<Var<'_>> = at.iter().map(|&v| tape.var(v)).collect();
    let out = f.eval(&xs);
    finish(&tape, &xs, out)
}

fn finish(tape: &Tape, xs: &[Var<'_>], out: Var<'_>) -> Result<(f64, Vec<f64>)> {
    if let Some(op) = tape.nan_op() {
        return Err(Error::NanPoisoned { op });
    }
    if out.val.is_nan() {
        return Err(Error::NanPoisoned { op: "output" });
    }
    let g = tape.gradient(out);
    Ok((out.val, xs.iter().map(|x| g.wrt(x)).collect()))
}

/// Outcome of comparing one gradient component against finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Mismatch at a point where a non-smooth primitive sits within the
    /// finite-difference stencil; the engine returns a valid subgradient.
    BoundarySubgradient,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FdReport {
    pub value: f64,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub rel_errors: Vec<f64>,
    pub status: Vec<CheckStatus>,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Compares the reverse-mode gradient of `f` against central differences.
///
/// A mismatching component counts as [`CheckStatus::BoundarySubgradient`]
/// when the stencil `x +/- step e_i` runs through a different smooth piece
/// than `x` (another interpolation segment, clamp or sign choice), or when a
/// non-smooth primitive's argument lies within `sqrt(step)` of its kink.
///
/// The relative error of component `i` is
/// `|a_i - n_i| / (max(|a_i|, |n_i|) + 1e-8 (1 + max_k |n_k|))`, so
/// components that are zero up to rounding compare in absolute terms.
/// `max_rel_error` and `passed` only consider components that are not
/// classified as [`CheckStatus::BoundarySubgradient`].
pub fn finite_diff_check<O: Objective + ?Sized>(
    f: &O,
    at: &[f64],
    step: f64,
    tolerance: f64,
) -> Result<FdReport> {
    if step <= 0.0 {
        return Err(Error::config("finite-difference step must be positive"));
    }
    let tape = Tape::new();
    let xs: Vec<Var<'_>> = at.iter().map(|&v| tape.var(v)).collect();
    let out = f.eval(&xs);
    let kink_distance = tape.kink_distance();
    let signature = tape.branch_signature();
    let (value, analytic) = finish(&tape, &xs, out)?;

    // recorded evaluation: same value as plain f64, plus the branch signature
    let probe = |x: &[f64]| {
        let t = Tape::new();
        let v: Vec<Var<'_>> = x.iter().map(|&v| t.var(v)).collect();
        let y = f.eval(&v).value();
        (y, t.branch_signature())
    };
    let mut x = at.to_vec();
    let mut numeric = Vec::with_capacity(at.len());
    let mut straddles = Vec::with_capacity(at.len());
    for i in 0..at.len() {
        let xi = x[i];
        x[i] = xi + step;
        let (fp, sp) = probe(&x);
        x[i] = xi - step;
        let (fm, sm) = probe(&x);
        x[i] = xi;
        numeric.push((fp - fm) / (2.0 * step));
        straddles.push(sp != signature || sm != signature);
    }
    let scale = 1e-8 * (1.0 + numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let near_kink = kink_distance < libm::sqrt(step);
    let mut rel_errors = Vec::with_capacity(at.len());
    let mut status = Vec::with_capacity(at.len());
    let mut max_rel_error = 0.0f64;
    for ((a, n), straddle) in analytic.iter().zip(&numeric).zip(straddles) {
        let e = (a - n).abs() / (a.abs().max(n.abs()) + scale);
        rel_errors.push(e);
        let s = if e <= tolerance {
            CheckStatus::Pass
        } else if near_kink || straddle {
            CheckStatus::BoundarySubgradient
        } else {
            CheckStatus::Fail
        };
        if s != CheckStatus::BoundarySubgradient {
            max_rel_error = max_rel_error.max(e);
        }
        status.push(s);
    }
    let passed = status.iter().all(|s| *s != CheckStatus::Fail);
    Ok(FdReport {
        value,
        analytic,
        numeric,
        rel_errors,
        status,
        max_rel_error,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    struct Quadratic;
    impl Objective for Quadratic {
        fn eval<R: Real>(&self, x: &[R]) -> R {
            x[0].sq() * 3.0 + x[0] * x[1] - x[1].sq() * 0.5 + x[2]
        }
    }

    #[test]
    fn sin_at_zero() {
        let at = ParamVector::from_values(&[0.0]);
        let (v, g) = grad_fn(|x| x[0].sin(), &at).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, vec![1.0]);
    }

    #[test]
    fn sum_of_squares() {
        let at = ParamVector::from_values(&[1.0, 2.0, 3.0]);
        let (v, g) = grad_fn(|x| x[0].sq() + x[1].sq() + x[2].sq(), &at).unwrap();
        assert_eq!(v, 14.0);
        assert_eq!(g, vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn quadratic_matches_fd() {
        let rep = finite_diff_check(&Quadratic, &[0.3, -1.2, 2.0], 1e-4, 1e-10).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.max_rel_error < 1e-10);
    }

    #[test]
    fn constants_do_not_touch_the_tape() {
        let tape = Tape::new();
        let a = Var::cst(2.0);
        let b = (a * 3.0).sin() + a;
        assert!(b.is_constant());
        assert!(tape.is_empty());
        let x = tape.var(1.0);
        let y = x * a + b;
        assert_eq!(tape.len(), 3);
        assert_eq!(tape.gradient(y).wrt(&x), 2.0);
    }

    #[test]
    fn nan_is_reported_with_op_name() {
        let at = ParamVector::from_values(&[-1.0]);
        let err = grad_fn(|x| x[0].sqrt() + x[0], &at).unwrap_err();
        assert_eq!(err, Error::NanPoisoned { op: "sqrt" });
    }

    #[test]
    fn zero_seeded_values_are_bit_identical_to_f64() {
        struct F;
        impl Objective for F {
            fn eval<R: Real>(&self, x: &[R]) -> R {
                (x[0].sin() * x[1] + x[1].atan2(x[0])).exp() / (x[0].sq() + 1.0).sqrt()
                    - x[1].acos_clamped(1e-9)
                    + x[0].sinc() * x[1].atanc()
            }
        }
        let x = [0.7, 0.3];
        let plain = F.eval(&x);
        let (v, _) = grad(&F, &x).unwrap();
        assert_eq!(plain.to_bits(), v.to_bits());
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut p = ParamVector::new();
        p.push("a", 1.0).unwrap();
        assert!(p.push("a", 2.0).is_err());
        assert_eq!(p.get("a"), Some(1.0));
    }

    #[test]
    fn clamped_acos_at_boundary_is_a_subgradient_case() {
        struct Clamped;
        impl Objective for Clamped {
            fn eval<R: Real>(&self, x: &[R]) -> R {
                x[0].acos_clamped(1e-9)
            }
        }
        let rep = finite_diff_check(&Clamped, &[1.0], 1e-6, 1e-5).unwrap();
        assert_eq!(rep.status[0], CheckStatus::BoundarySubgradient);
        assert!(rep.passed);
        let rep = finite_diff_check(&Clamped, &[0.3], 1e-6, 1e-5).unwrap();
        assert_eq!(rep.status[0], CheckStatus::Pass);
    }
}
