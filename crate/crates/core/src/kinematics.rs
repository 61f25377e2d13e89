//! Chain kinematics.
//!
//! Three routes to the configuration of a chain at actuation `psi`:
//!
//! * [`assemble_chain`]: unit by unit. Internal angles follow the
//!   law-of-cosines recursion ([`propagate_angles`]), headings accumulate
//!   `(phi*_j + phi*_{j+1}) / 2` per joint and centers follow
//!   `r_j = r_{j-1} + l (alpha_{j-1} t1_{j-1} + alpha_j t2_j)`.
//! * [`tip_segmented`]: closed form for chains made of constant-`alpha`
//!   sections. Each section is a rigid rotation about its own center of
//!   curvature; the centers jump along the shared face at each interface.
//! * [`perturbative_config`]: first-order expansion for a linearly varying
//!   aspect ratio `alpha_j = alpha_0 + epsilon j`.
//!
//! The tip is the center of the last unit. With that choice the sectioned
//! closed form has half-step rotations `(N_1 - 1/2) phi*_1` into the first
//! interface and `(N_J - 1/2) phi*_J` out of the last one, and collapses to
//! `(N - 1) phi*` for a single section.
//!
//! Pin constraints force every face in a chain to have the same length, so
//! `alpha_j (1 - alpha_j) cos^2(phi_j / 2)` is constant along the chain.
//! The sectioned evaluator uses that invariant directly instead of the
//! recursion.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geometry::{kappa_o, rotation_angle};
use crate::{Error, Real, Result, Vec2};

/// Tolerance on the law-of-cosines argument before an assembly is declared
/// infeasible.
pub const ACOS_TOLERANCE: f64 = 1e-9;

fn check_alpha(alpha: f64, unit: usize) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("aspect ratio {alpha} of unit {unit} not in (0, 1)")))
    }
}

fn check_psi(psi: f64) -> Result<()> {
    if psi > 0.0 && psi < PI {
        Ok(())
    } else {
        Err(Error::domain(format!("actuation angle {psi} not in (0, pi)")))
    }
}

/// Diagonal `d = alpha^2 + (1 - alpha)^2 - 2 alpha (1 - alpha) cos(phi)` of
/// the quadrilateral shared by two units, in units of `l^2`.
pub fn diagonal(alpha: f64, phi: f64) -> f64 {
    alpha * alpha + (1.0 - alpha) * (1.0 - alpha) - 2.0 * alpha * (1.0 - alpha) * libm::cos(phi)
}

/// Internal angles of every unit, starting from `phis[0] = psi`.
pub fn propagate_angles(alphas: &[f64], psi: f64) -> Result<Vec<f64>> {
    check_psi(psi)?;
    let mut phis = Vec::with_capacity(alphas.len());
    let Some((&first, rest)) = alphas.split_first() else {
        return Ok(phis);
    };
    check_alpha(first, 0)?;
    phis.push(psi);
    let mut prev = (first, psi);
    for (i, &a) in rest.iter().enumerate() {
        let unit = i + 1;
        check_alpha(a, unit)?;
        let d = diagonal(prev.0, prev.1);
        let arg = (a * a + (1.0 - a) * (1.0 - a) - d) / (2.0 * a * (1.0 - a));
        if arg.abs() > 1.0 + ACOS_TOLERANCE {
            return Err(Error::InfeasibleAssembly { unit, argument: arg });
        }
        let phi = libm::acos(arg.clamp(-1.0, 1.0));
        phis.push(phi);
        prev = (a, phi);
    }
    Ok(phis)
}

/// A mechanism of `alphas.len()` units.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainSpec {
    pub alphas: Vec<f64>,
    pub l: f64,
    /// Center of the first unit.
    pub base_position: Vec2,
    /// Heading of the first unit; the unit is symmetric about it.
    pub base_angle: f64,
}

impl ChainSpec {
    pub fn new(alphas: Vec<f64>, l: f64) -> Result<Self> {
        let spec = ChainSpec {
            alphas,
            l,
            base_position: Vec2::cst(0.0, 0.0),
            base_angle: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(alpha: f64, n: usize, l: f64) -> Result<Self> {
        Self::new(alloc::vec![alpha; n], l)
    }

    pub fn with_base(mut self, position: Vec2, angle: f64) -> Self {
        self.base_position = position;
        self.base_angle = angle;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::domain("a chain needs at least one unit"));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::domain(format!("member length {} must be positive", self.l)));
        }
        for (i, &a) in self.alphas.iter().enumerate() {
            check_alpha(a, i)?;
        }
        Ok(())
    }
}

/// Resolved configuration of a chain at one actuation angle.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainConfig {
    pub psi: f64,
    pub l: f64,
    pub alphas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Heading of each unit (bisector of its two members).
    pub headings: Vec<f64>,
    pub centers: Vec<Vec2>,
    /// Angles of `(t1, t2)` for each unit.
    pub orientations: Vec<(f64, f64)>,
}

/// The four member ends of one unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPins {
    /// Member 1, `alpha` end (distal face).
    pub a: Vec2,
    /// Member 2, `1 - alpha` end (distal face).
    pub b: Vec2,
    /// Member 2, `alpha` end (proximal face).
    pub c: Vec2,
    /// Member 1, `1 - alpha` end (proximal face).
    pub d: Vec2,
}

impl ChainConfig {
    pub fn n_units(&self) -> usize {
        self.centers.len()
    }

    pub fn tip(&self) -> Vec2 {
        *self.centers.last().expect("non-empty chain")
    }

    pub fn t1(&self, j: usize) -> Vec2 {
        Vec2::from_angle(self.orientations[j].0)
    }

    pub fn t2(&self, j: usize) -> Vec2 {
        Vec2::from_angle(self.orientations[j].1)
    }

    pub fn pins(&self, j: usize) -> UnitPins {
        let (r, a, l) = (self.centers[j], self.alphas[j], self.l);
        let (t1, t2) = (self.t1(j), self.t2(j));
        UnitPins {
            a: r + t1 * (a * l),
            b: r + t2 * ((1.0 - a) * l),
            c: r - t2 * (a * l),
            d: r - t1 * ((1.0 - a) * l),
        }
    }
}

/// Unit-by-unit assembly.
pub fn assemble_chain(spec: &ChainSpec, psi: f64) -> Result<ChainConfig> {
    spec.validate()?;
    let phis = propagate_angles(&spec.alphas, psi)?;
    let stars: Vec<f64> = spec
        .alphas
        .iter()
        .zip(&phis)
        .map(|(&a, &p)| rotation_angle(a, p))
        .collect();
    let n = phis.len();
    let mut headings = Vec::with_capacity(n);
    let mut theta = spec.base_angle;
    headings.push(theta);
    for j in 1..n {
        theta += 0.5 * (stars[j - 1] + stars[j]);
        headings.push(theta);
    }
    let orientations: Vec<(f64, f64)> = headings
        .iter()
        .zip(&phis)
        .map(|(&h, &p)| (h - 0.5 * p, h + 0.5 * p))
        .collect();
    let mut centers = Vec::with_capacity(n);
    let mut r = spec.base_position;
    centers.push(r);
    for j in 1..n {
        let t1_prev = Vec2::from_angle(orientations[j - 1].0);
        let t2 = Vec2::from_angle(orientations[j].1);
        r = r + (t1_prev * spec.alphas[j - 1] + t2 * spec.alphas[j]) * spec.l;
        centers.push(r);
    }
    Ok(ChainConfig {
        psi,
        l: spec.l,
        alphas: spec.alphas.clone(),
        phis,
        headings,
        centers,
        orientations,
    })
}

/// Signed position, measured from the `alpha`-end pin toward the other pin,
/// of the center of curvature on a face: `alpha D / (2 alpha - 1)`.
fn pivot_offset(alpha: f64, face_length: f64) -> f64 {
    alpha * face_length / (2.0 * alpha - 1.0)
}

/// Jump `zeta` of the center of curvature across an interface between a unit
/// with `(alpha_j, phi_j)` and one with `alpha_j1`, along the radial
/// direction of the interface face.
///
/// `zeta = D (alpha_j / (2 alpha_j - 1) - alpha_j1 / (2 alpha_j1 - 1))` where
/// `D = l sqrt(d(alpha_j, phi_j))` is the shared face length. Antisymmetric
/// under exchanging the two sides of the same face.
pub fn center_shift(alpha_j: f64, alpha_j1: f64, phi_j: f64, l: f64) -> Result<f64> {
    check_alpha(alpha_j, 0)?;
    check_alpha(alpha_j1, 1)?;
    check_psi(phi_j)?;
    if alpha_j == 0.5 || alpha_j1 == 0.5 {
        return Err(Error::domain("center of curvature is at infinity for alpha = 1/2"));
    }
    let face = l * libm::sqrt(diagonal(alpha_j, phi_j));
    Ok(pivot_offset(alpha_j, face) - pivot_offset(alpha_j1, face))
}

/// A chain of constant-`alpha` sections.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SectionedSpec {
    /// `(n_units, alpha)` per section, base to tip.
    pub sections: Vec<(usize, f64)>,
    pub l: f64,
    /// Center of the first unit.
    pub base_position: Vec2,
    /// Unit heading of the first unit. The radial direction used by the
    /// center-of-curvature form, `p1`, is this rotated by -90 degrees.
    pub base_direction: Vec2,
}

impl SectionedSpec {
    pub fn new(sections: Vec<(usize, f64)>, l: f64) -> Result<Self> {
        let s = SectionedSpec {
            sections,
            l,
            base_position: Vec2::cst(0.0, 0.0),
            base_direction: Vec2::cst(1.0, 0.0),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_base(mut self, position: Vec2, direction: Vec2) -> Self {
        self.base_position = position;
        self.base_direction = direction;
        self
    }

    pub fn n_units(&self) -> usize {
        self.sections.iter().map(|s| s.0).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sections.is_empty() {
            return Err(Error::domain("at least one section required"));
        }
        if self.n_units() < 2 {
            return Err(Error::domain("a sectioned chain needs at least 2 units"));
        }
        for (i, &(n, a)) in self.sections.iter().enumerate() {
            if n == 0 {
                return Err(Error::domain(format!("section {i} has no units")));
            }
            check_alpha(a, i)?;
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::domain(format!("member length {} must be positive", self.l)));
        }
        if (self.base_direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::domain("base direction must be a unit vector"));
        }
        Ok(())
    }

    /// Equivalent unit-by-unit description.
    pub fn to_chain(&self) -> ChainSpec {
        let alphas = self
            .sections
            .iter()
            .flat_map(|&(n, a)| core::iter::repeat_n(a, n))
            .collect();
        ChainSpec {
            alphas,
            l: self.l,
            base_position: self.base_position,
            base_angle: self.base_direction.angle(),
        }
    }
}

/// Half-angle state of one section at a given actuation.
#[derive(Debug, Clone, Copy)]
pub struct SectionAngles<R> {
    /// `cos(phi_j / 2)`
    pub cos_half: R,
    /// `sin(phi_j / 2)`
    pub sin_half: R,
    /// `tan(phi*_j / 2) = (2 alpha_j - 1) cot(phi_j / 2)`
    pub turn_tan: R,
    /// How far `cos(phi_j / 2)` was pushed past 1 before clamping
    /// (0 for feasible sections).
    pub excess: R,
}

impl<R: Real> SectionAngles<R> {
    /// `phi_j`, continued to negative values past the fold
    /// (`-2 acosh(cos(phi_j/2))`) so a penalty on it keeps a gradient.
    pub fn phi_extended(&self) -> R {
        if self.excess.value() > 0.0 {
            let c = self.excess + 1.0;
            -(c + (c.sq() - 1.0).sqrt()).ln() * 2.0
        } else {
            self.sin_half.atan2(self.cos_half) * 2.0
        }
    }
}

/// Upper clamp for `cos(phi/2)` in penalized evaluations.
const COS_HALF_CEIL: f64 = 1.0 - 1e-12;

/// Per-section angles from the face-length invariant
/// `g_j cos^2(phi_j/2) = g_1 cos^2(psi/2)`, `g = alpha (1 - alpha)`.
///
/// Infeasible sections are clamped just short of the fold and reported
/// through [`SectionAngles::excess`].
pub fn section_angles<R: Real>(alphas: &[R], psi: R) -> Vec<SectionAngles<R>> {
    let g0 = alphas[0] * alphas[0].one_minus();
    let c0 = (psi * 0.5).cos();
    alphas
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            let c = if j == 0 {
                c0
            } else {
                c0 * (g0 / (a * a.one_minus())).sqrt()
            };
            c.note_branch(u64::from(c.value() > COS_HALF_CEIL));
            let (c, excess) = if c.value() > COS_HALF_CEIL {
                (R::cst(COS_HALF_CEIL), c - 1.0)
            } else {
                (c, R::zero())
            };
            let s = c.sq().one_minus().sqrt();
            let turn_tan = (a * 2.0 - 1.0) * c / s;
            SectionAngles {
                cos_half: c,
                sin_half: s,
                turn_tan,
                excess,
            }
        })
        .collect()
}

/// Closed-form tip of a sectioned chain, generic over the scalar.
///
/// Every term stays finite through `alpha = 1/2`: a run of `k` unit steps
/// along a section circle has chord
/// `4 alpha (1 - alpha) l k cos(phi/2) atanc(u) sinc(k atan u)` at mid-arc
/// heading, and the interface jump along the face is the difference of
/// `alpha l (sin(phi/2) + u cos(phi/2) / (1 + sqrt(1 + u^2)))` between the
/// two sides, with `u = tan(phi*/2)`.
pub fn sectioned_tip<R: Real>(
    counts: &[usize],
    alphas: &[R],
    angles: &[SectionAngles<R>],
    l: R,
    base: Vec2<R>,
    heading: R,
) -> Vec2<R> {
    let m = counts.len();
    let mut r = base;
    let mut theta = heading;
    let arc = |r: &mut Vec2<R>, theta: &mut R, j: usize, steps: f64| {
        let a = alphas[j];
        let sa = &angles[j];
        let half_turn = sa.turn_tan.atan() * steps;
        let chord = a * a.one_minus() * l * sa.cos_half * sa.turn_tan.atanc() * half_turn.sinc()
            * (4.0 * steps);
        *r = *r + Vec2::from_angle(*theta + half_turn).scale(chord);
        *theta = *theta + half_turn * 2.0;
    };
    let face_point = |j: usize| {
        let sa = &angles[j];
        let u = sa.turn_tan;
        alphas[j] * l * (sa.sin_half + u * sa.cos_half / ((u.sq() + 1.0).sqrt() + 1.0))
    };
    if m == 1 {
        arc(&mut r, &mut theta, 0, counts[0] as f64 - 1.0);
        return r;
    }
    for (j, &count) in counts.iter().enumerate().take(m) {
        let steps = if j == 0 || j == m - 1 {
            count as f64 - 0.5
        } else {
            count as f64
        };
        arc(&mut r, &mut theta, j, steps);
        if j + 1 < m {
            let jump = face_point(j + 1) - face_point(j);
            r = r + Vec2::from_angle(theta).perp().scale(jump);
        }
    }
    r
}

/// Unit centers of a chain whose internal angles are given as
/// [`SectionAngles`] (one entry per unit), generic over the scalar.
///
/// Heading `theta_j` advances by `atan(u_j) + atan(u_{j+1})` per joint;
/// members sit at `theta_j -/+ phi_j / 2`.
pub fn chain_centers<R: Real>(
    alphas: &[R],
    angles: &[SectionAngles<R>],
    l: R,
    base: Vec2<R>,
    heading: R,
) -> Vec<Vec2<R>> {
    let n = alphas.len();
    let mut centers = Vec::with_capacity(n);
    let mut r = base;
    let mut theta = heading;
    centers.push(r);
    let mut half_prev = angles[0].turn_tan.atan();
    for j in 1..n {
        let half = angles[j].turn_tan.atan();
        let prev = &angles[j - 1];
        let t1_prev = Vec2::new(prev.cos_half, -prev.sin_half).rotate(theta);
        theta = theta + half_prev + half;
        let cur = &angles[j];
        let t2 = Vec2::new(cur.cos_half, cur.sin_half).rotate(theta);
        r = r + (t1_prev.scale(alphas[j - 1]) + t2.scale(alphas[j])).scale(l);
        centers.push(r);
        half_prev = half;
    }
    centers
}

fn sectioned_inputs(spec: &SectionedSpec) -> (Vec<usize>, Vec<f64>) {
    spec.sections.iter().map(|&(n, a)| (n, a)).unzip()
}

fn check_feasible(angles: &[SectionAngles<f64>], spec: &SectionedSpec) -> Result<()> {
    let mut unit = 0;
    for (sa, &(n, _)) in angles.iter().zip(&spec.sections) {
        if sa.excess > ACOS_TOLERANCE {
            return Err(Error::InfeasibleAssembly {
                unit,
                argument: 2.0 * (1.0 + sa.excess) * (1.0 + sa.excess) - 1.0,
            });
        }
        unit += n;
    }
    Ok(())
}

/// Tip (center of the last unit) of a sectioned chain.
pub fn tip_segmented(spec: &SectionedSpec, psi: f64) -> Result<Vec2> {
    spec.validate()?;
    check_psi(psi)?;
    let (counts, alphas) = sectioned_inputs(spec);
    let angles = section_angles(&alphas, psi);
    check_feasible(&angles, spec)?;
    Ok(sectioned_tip(
        &counts,
        &alphas,
        &angles,
        spec.l,
        spec.base_position,
        spec.base_direction.angle(),
    ))
}

/// The same tip through explicit centers of curvature: `q1 = r0 - p1 / kappa_1`,
/// `q_{j+1} = q_j + zeta R(Omega_j) p_j`, `tip = q_J + R(Omega_tip) p_J / kappa_J`.
///
/// Undefined when a section has `alpha = 1/2`; use [`tip_segmented`] there.
pub fn tip_segmented_pivots(spec: &SectionedSpec, psi: f64) -> Result<Vec2> {
    spec.validate()?;
    check_psi(psi)?;
    let (counts, alphas) = sectioned_inputs(spec);
    let angles = section_angles(&alphas, psi);
    check_feasible(&angles, spec)?;
    let phis: Vec<f64> = angles.iter().map(|a| a.phi_extended()).collect();
    let radius = |j: usize| {
        let k = kappa_o(alphas[j], phis[j], spec.l);
        if k == 0.0 {
            Err(Error::domain("section with alpha = 1/2 has no center of curvature"))
        } else {
            Ok(1.0 / k)
        }
    };
    let m = counts.len();
    let stars: Vec<f64> = alphas.iter().zip(&phis).map(|(&a, &p)| rotation_angle(a, p)).collect();
    let mut p = -spec.base_direction.perp();
    let mut q = spec.base_position - p * radius(0)?;
    if m == 1 {
        return Ok(q + p.rotate(stars[0] * (counts[0] as f64 - 1.0)) * radius(0)?);
    }
    for j in 0..m - 1 {
        let steps = if j == 0 { counts[0] as f64 - 0.5 } else { counts[j] as f64 };
        p = p.rotate(stars[j] * steps);
        let zeta = center_shift(alphas[j], alphas[j + 1], phis[j], spec.l)?;
        q = q + p * zeta;
    }
    let last = m - 1;
    let omega_tip = stars[last] * (counts[last] as f64 - 0.5);
    Ok(q + p.rotate(omega_tip) * radius(last)?)
}

/// Tip positions over a uniform actuation grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TipTrajectory {
    pub psi_grid: Vec<f64>,
    pub points: Vec<Vec2>,
}

/// Uniform grid from `psi_start` to `psi_end` inclusive.
pub fn psi_grid(psi_start: f64, psi_end: f64, n_samples: usize) -> Vec<f64> {
    let step = (psi_end - psi_start) / (n_samples - 1) as f64;
    (0..n_samples)
        .map(|k| {
            if k + 1 == n_samples {
                psi_end
            } else {
                psi_start + step * k as f64
            }
        })
        .collect()
}

/// Samples [`tip_segmented`] from `psi_max` down to `psi_min`.
pub fn sweep_tip(
    spec: &SectionedSpec,
    psi_max: f64,
    psi_min: f64,
    n_samples: usize,
) -> Result<TipTrajectory> {
    if !(PI > psi_max && psi_max > psi_min && psi_min > 0.0) {
        return Err(Error::domain(format!(
            "sweep range must satisfy pi > psi_max > psi_min > 0, got [{psi_max}, {psi_min}]"
        )));
    }
    if n_samples < 2 {
        return Err(Error::domain("a sweep needs at least 2 samples"));
    }
    let grid = psi_grid(psi_max, psi_min, n_samples);
    let points = grid
        .iter()
        .enumerate()
        .map(|(index, &psi)| {
            tip_segmented(spec, psi).map_err(|e| Error::Sweep {
                index,
                psi,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TipTrajectory {
        psi_grid: grid,
        points,
    })
}

/// First-order coefficients of the linearly graded chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationCoefficients {
    /// `phi*` of the ungraded chain.
    pub rotation: f64,
    /// `Lambda = lambda cot(psi/2)`, `lambda = (2 alpha_0 - 1) / (alpha_0 (alpha_0 - 1))`:
    /// `phi_j = psi + j epsilon Lambda`.
    pub lambda_cap: f64,
    /// `mu`: `phi*_j = phi*_0 + epsilon j mu`.
    pub mu: f64,
}

pub fn perturbation_coefficients(alpha0: f64, psi: f64) -> PerturbationCoefficients {
    let lambda = (2.0 * alpha0 - 1.0) / (alpha0 * (alpha0 - 1.0));
    let half = 0.5 * psi;
    let lambda_cap = lambda * libm::cos(half) / libm::sin(half);
    let t = libm::tan(0.5 * (PI - psi));
    let sec2 = 1.0 + t * t;
    let a = 2.0 * alpha0 - 1.0;
    let mu = 2.0 / (1.0 + a * a * t * t) * (2.0 * t - a * 0.5 * lambda_cap * sec2);
    PerturbationCoefficients {
        rotation: rotation_angle(alpha0, psi),
        lambda_cap,
        mu,
    }
}

/// First-order configuration for `alpha_j = alpha0 + epsilon j`, `j = 0..n`.
///
/// Member angles are
/// `j phi*_0 -/+ psi/2 + epsilon (mu j^2 / 2 -/+ Lambda j / 2)` relative to the
/// base heading; centers accumulate with the graded aspect ratios. Accurate
/// to `O(epsilon^2)` while `epsilon * n_units` stays small (about 0.1).
pub fn perturbative_config(
    alpha0: f64,
    epsilon: f64,
    n_units: usize,
    psi: f64,
    l: f64,
) -> Result<ChainConfig> {
    check_psi(psi)?;
    if n_units == 0 {
        return Err(Error::domain("a chain needs at least one unit"));
    }
    let alphas: Vec<f64> = (0..n_units).map(|j| alpha0 + epsilon * j as f64).collect();
    for (j, &a) in alphas.iter().enumerate() {
        check_alpha(a, j)?;
    }
    let co = perturbation_coefficients(alpha0, psi);
    let mut phis = Vec::with_capacity(n_units);
    let mut headings = Vec::with_capacity(n_units);
    let mut orientations = Vec::with_capacity(n_units);
    for j in 0..n_units {
        let jf = j as f64;
        let heading = jf * co.rotation + epsilon * 0.5 * co.mu * jf * jf;
        let half_open = 0.5 * psi + epsilon * 0.5 * co.lambda_cap * jf;
        phis.push(psi + epsilon * co.lambda_cap * jf);
        headings.push(heading);
        orientations.push((heading - half_open, heading + half_open));
    }
    let mut centers = Vec::with_capacity(n_units);
    let mut r = Vec2::cst(0.0, 0.0);
    centers.push(r);
    for j in 1..n_units {
        let t1 = Vec2::from_angle(orientations[j - 1].0);
        let t2 = Vec2::from_angle(orientations[j].1);
        r = r + (t1 * alphas[j - 1] + t2 * alphas[j]) * l;
        centers.push(r);
    }
    Ok(ChainConfig {
        psi,
        l,
        alphas,
        phis,
        headings,
        centers,
        orientations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn uniform_angles_are_constant() {
        let phis = propagate_angles(&[0.63; 12], 1.1).unwrap();
        assert!(phis.iter().all(|&p| (p - 1.1).abs() < 1e-12));
    }

    #[test]
    fn propagation_matches_invariant() {
        let alphas = [0.6, 0.4, 0.55, 0.3, 0.52];
        let psi = 1.3;
        let phis = propagate_angles(&alphas, psi).unwrap();
        let inv = |a: f64, p: f64| a * (1.0 - a) * libm::cos(0.5 * p).powi(2);
        for (a, p) in alphas.iter().zip(&phis) {
            assert!((inv(*a, *p) - inv(alphas[0], psi)).abs() < 1e-14);
        }
        let angles = section_angles(&alphas, psi);
        for (sa, p) in angles.iter().zip(&phis) {
            assert!((sa.phi_extended() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn infeasible_assembly_is_reported() {
        // A unit far from 1/2 after a symmetric one cannot open as wide.
        let err = propagate_angles(&[0.5, 0.1], 0.2).unwrap_err();
        assert!(matches!(err, Error::InfeasibleAssembly { unit: 1, .. }));
    }

    #[test]
    fn symmetric_chain_is_straight() {
        let spec = ChainSpec::uniform(0.5, 8, 1.0).unwrap();
        let cfg = assemble_chain(&spec, 1.0).unwrap();
        for c in &cfg.centers {
            assert!(c.y.abs() < 1e-15);
        }
        let step = libm::cos(0.5);
        assert!((cfg.tip().x - 7.0 * step).abs() < 1e-12);
    }

    #[test]
    fn center_shift_vanishes_for_equal_sides() {
        assert_eq!(center_shift(0.6, 0.6, 1.0, 1.0).unwrap(), 0.0);
        assert!(center_shift(0.5, 0.6, 1.0, 1.0).is_err());
    }

    #[test]
    fn center_shift_is_antisymmetric_across_a_face() {
        let (a, b, phi_a) = (0.6, 0.4, FRAC_PI_2);
        let phi_b = propagate_angles(&[a, b], phi_a).unwrap()[1];
        let z_ab = center_shift(a, b, phi_a, 1.3).unwrap();
        let z_ba = center_shift(b, a, phi_b, 1.3).unwrap();
        assert!((z_ab + z_ba).abs() < 1e-14, "{z_ab} {z_ba}");
    }

    #[test]
    fn single_section_matches_chain() {
        let spec = SectionedSpec::new(vec![(5, 0.6)], 1.0).unwrap();
        let tip = tip_segmented(&spec, FRAC_PI_2).unwrap();
        let direct = assemble_chain(&spec.to_chain(), FRAC_PI_2).unwrap().tip();
        assert!((tip - direct).norm() < 1e-12);
        let piv = tip_segmented_pivots(&spec, FRAC_PI_2).unwrap();
        assert!((piv - direct).norm() < 1e-12);
    }

    #[test]
    fn two_sections_match_chain() {
        let spec = SectionedSpec::new(vec![(3, 0.6), (3, 0.4)], 1.0).unwrap();
        let direct = assemble_chain(&spec.to_chain(), FRAC_PI_2).unwrap().tip();
        let tip = tip_segmented(&spec, FRAC_PI_2).unwrap();
        let piv = tip_segmented_pivots(&spec, FRAC_PI_2).unwrap();
        assert!((tip - direct).norm() < 1e-9);
        assert!((piv - direct).norm() < 1e-9);
    }

    #[test]
    fn straight_sections_use_the_limit() {
        let spec = SectionedSpec::new(vec![(4, 0.5), (3, 0.62), (2, 0.5)], 0.7).unwrap();
        let direct = assemble_chain(&spec.to_chain(), 1.2).unwrap().tip();
        let tip = tip_segmented(&spec, 1.2).unwrap();
        assert!((tip - direct).norm() < 1e-12);
        assert!(tip_segmented_pivots(&spec, 1.2).is_err());
    }

    #[test]
    fn sweep_orders_and_validates() {
        let spec = SectionedSpec::new(vec![(5, 0.5)], 1.0).unwrap();
        let tr = sweep_tip(&spec, 3.0, 0.3, 20).unwrap();
        assert_eq!(tr.points.len(), 20);
        assert_eq!(tr.psi_grid[0], 3.0);
        assert_eq!(tr.psi_grid[19], 0.3);
        assert!(tr.points.iter().all(|p| p.y.abs() < 1e-12));
        assert!(sweep_tip(&spec, 0.3, 3.0, 20).is_err());
        assert!(sweep_tip(&spec, 3.0, 0.3, 1).is_err());
    }

    #[test]
    fn generic_centers_match_assembly() {
        let alphas = [0.6, 0.4, 0.55, 0.3, 0.52, 0.7];
        let spec = ChainSpec::new(alphas.to_vec(), 0.8)
            .unwrap()
            .with_base(Vec2::cst(0.3, -1.0), 0.4);
        let cfg = assemble_chain(&spec, 1.3).unwrap();
        let angles = section_angles(&alphas, 1.3);
        let centers = chain_centers(&alphas, &angles, 0.8, spec.base_position, 0.4);
        for (a, b) in centers.iter().zip(&cfg.centers) {
            assert!((*a - *b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_grading_matches_uniform_chain() {
        let cfg = perturbative_config(0.52, 0.0, 30, PI / 4.0, 1.0).unwrap();
        let full = assemble_chain(&ChainSpec::uniform(0.52, 30, 1.0).unwrap(), PI / 4.0).unwrap();
        for (a, b) in cfg.centers.iter().zip(&full.centers) {
            assert!((*a - *b).norm() < 1e-12);
        }
    }
}
