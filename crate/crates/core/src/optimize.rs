//! Inverse design.
//!
//! Two problems share one toolchain (unconstrained parameters, smooth
//! transforms, reverse-mode gradients and Adam):
//!
//! * **morphing** ([`MorphProblem`]): choose `alpha_j`, `l`, the actuation
//!   `psi` and base heading `beta_0` so that the deployed chain's per-unit
//!   curvature matches a target profile and its last unit lands on the end of
//!   the target;
//! * **writing** ([`WriteProblem`]): choose per-section `alpha_j` and `l` (and
//!   optionally the actuation range) so that the tip, swept from `psi_max`
//!   down to `psi_min`, traces a curve whose length-normalized curvature
//!   `kappa * L` matches the target's as a function of normalized arc length.
//!
//! Parameter transforms: `alpha = alpha_min + (alpha_max - alpha_min) sigmoid(a)`,
//! `l = exp(b)` (or a sigmoid into `[l_min, l_max]` when length bounds are
//! set), actuation angles `psi = PSI_LO + (PSI_HI - PSI_LO) sigmoid(c)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{grad, Objective, ParamVector};
use crate::kinematics::{
    chain_centers, psi_grid, section_angles, sectioned_tip, SectionAngles, TipTrajectory,
};
use crate::targets::{arclength_parameterize, normalize_bbox, ArcLengthProfile, TargetCurve};
use crate::{Error, Real, Result, Vec2};

/// Lower limit of every optimized actuation angle.
pub const PSI_LO: f64 = 0.05;
/// Upper limit of every optimized actuation angle.
pub const PSI_HI: f64 = PI - 0.05;

/// Base value of the penalty returned for a chain that cannot assemble.
pub const INFEASIBLE_PENALTY: f64 = 1e6;

/// Box constraints enforced by the parameter transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Optional `(l_min, l_max)`; unbounded positive when absent.
    pub length: Option<(f64, f64)>,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            alpha_min: 0.1,
            alpha_max: 0.9,
            length: None,
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.alpha_min && self.alpha_min < 0.5 && 0.5 < self.alpha_max && self.alpha_max < 1.0) {
            return Err(Error::config(format!(
                "aspect ratio bounds must satisfy 0 < min < 0.5 < max < 1, got ({}, {})",
                self.alpha_min, self.alpha_max
            )));
        }
        if let Some((lo, hi)) = self.length {
            if !(0.0 < lo && lo < hi && hi.is_finite()) {
                return Err(Error::config(format!("length bounds ({lo}, {hi}) invalid")));
            }
        }
        Ok(())
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    libm::log(p / (1.0 - p))
}

pub fn transform_alpha<R: Real>(raw: R, bounds: &Bounds) -> R {
    raw.sigmoid() * (bounds.alpha_max - bounds.alpha_min) + bounds.alpha_min
}

pub fn inverse_alpha(alpha: f64, bounds: &Bounds) -> f64 {
    logit((alpha - bounds.alpha_min) / (bounds.alpha_max - bounds.alpha_min))
}

pub fn transform_length<R: Real>(raw: R, bounds: &Bounds) -> R {
    match bounds.length {
        None => raw.exp(),
        Some((lo, hi)) => raw.sigmoid() * (hi - lo) + lo,
    }
}

pub fn inverse_length(l: f64, bounds: &Bounds) -> f64 {
    match bounds.length {
        None => libm::log(l),
        Some((lo, hi)) => logit((l - lo) / (hi - lo)),
    }
}

pub fn transform_psi<R: Real>(raw: R) -> R {
    raw.sigmoid() * (PSI_HI - PSI_LO) + PSI_LO
}

pub fn inverse_psi(psi: f64) -> f64 {
    logit((psi - PSI_LO) / (PSI_HI - PSI_LO))
}

/// `(psi_max, psi_min)` from their raw parameters: `psi_min` is bounded to
/// `(PSI_LO, PSI_HI)` and `psi_max` to `(psi_min, PSI_HI)`.
pub fn transform_psi_range<R: Real>(raw_max: R, raw_min: R) -> (R, R) {
    let lo = transform_psi(raw_min);
    let hi = lo + (-lo + PSI_HI) * raw_max.sigmoid();
    (hi, lo)
}

pub fn inverse_psi_range(psi_max: f64, psi_min: f64) -> (f64, f64) {
    let raw_min = inverse_psi(psi_min);
    let raw_max = logit((psi_max - psi_min) / (PSI_HI - psi_min));
    (raw_max, raw_min)
}

/// Maps a raw parameter vector to physical values by name: `alpha_*` through
/// the aspect-ratio sigmoid, `l` through the length transform, `psi` through
/// the actuation sigmoid and the pair `psi_max`/`psi_min` through
/// [`transform_psi_range`]. Other entries pass through unchanged.
pub fn transform_params(raw: &ParamVector, bounds: &Bounds) -> ParamVector {
    let mut out = ParamVector::new();
    let range = match (raw.get("psi_max"), raw.get("psi_min")) {
        (Some(a), Some(b)) => Some(transform_psi_range(a, b)),
        _ => None,
    };
    for (name, &v) in raw.names().iter().zip(raw.values()) {
        let phys = if name.starts_with("alpha_") {
            transform_alpha(v, bounds)
        } else if name == "l" {
            transform_length(v, bounds)
        } else if name == "psi" {
            transform_psi(v)
        } else if name == "psi_max" {
            range.map_or(v, |r| r.0)
        } else if name == "psi_min" {
            range.map_or(v, |r| r.1)
        } else {
            v
        };
        out.push(name.clone(), phys).expect("names are unique in the input");
    }
    out
}

/// Adam hyperparameters and stopping rule.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Stop once the loss changed by less than this over `patience`
    /// iterations.
    pub tolerance: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_iterations: 5000,
            tolerance: 1e-10,
            patience: 100,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.max_iterations > 0
            && self.tolerance >= 0.0
            && self.patience > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Outcome of [`adam`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimized {
    /// Best iterate seen.
    pub x: Vec<f64>,
    pub loss: f64,
    /// Loss at every evaluated iterate.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Adam on `f`, which returns the value and gradient at a point.
pub fn adam<F>(mut f: F, x0: &[f64], config: &OptimizerConfig) -> Result<Minimized>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    config.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut best = (f64::INFINITY, x.clone());
    let mut trace = Vec::new();
    let mut converged = false;
    let (mut b1t, mut b2t) = (1.0, 1.0);
    for it in 0..config.max_iterations {
        let (loss, g) = f(&x)?;
        trace.push(loss);
        if loss < best.0 {
            best = (loss, x.clone());
        }
        if it >= config.patience && (trace[it - config.patience] - loss).abs() < config.tolerance {
            converged = true;
            break;
        }
        b1t *= config.beta1;
        b2t *= config.beta2;
        for i in 0..n {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            let mh = m[i] / (1.0 - b1t);
            let vh = v[i] / (1.0 - b2t);
            x[i] -= config.learning_rate * mh / (libm::sqrt(vh) + config.epsilon);
        }
    }
    Ok(Minimized {
        x: best.1,
        loss: best.0,
        iterations: trace.len(),
        trace,
        converged,
    })
}

/// Physical design found by a solver.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Design {
    Morph(MorphDesign),
    Write(WriteDesign),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Feasibility {
    pub converged: bool,
    /// The chain assembles at the design actuation (morphing) or at every
    /// sample of the sweep (writing).
    pub assembled: bool,
    /// Morphing only: the last unit is within 1% of the target length of the
    /// target end point.
    pub tip_reached: Option<bool>,
}

/// One optimization run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunResult {
    pub design: Design,
    /// Final unconstrained parameters.
    pub raw: ParamVector,
    pub loss: f64,
    pub trace: Vec<f64>,
    pub seed: u64,
    pub iterations: usize,
    pub feasibility: Feasibility,
}

fn indexed_names(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |j| format!("{prefix}_{j}"))
}

fn random_alphas(rng: &mut ChaCha8Rng, n: usize, narrow: bool, bounds: &Bounds) -> Vec<f64> {
    let (lo, hi) = if narrow {
        (0.45, 0.55)
    } else {
        (bounds.alpha_min, bounds.alpha_max)
    };
    (0..n)
        .map(|_| {
            let a: f64 = rng.random_range(lo..hi);
            inverse_alpha(a, bounds)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Morphing

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MorphWeights {
    pub kappa: f64,
    pub tip: f64,
    pub rot: f64,
}

impl Default for MorphWeights {
    fn default() -> Self {
        MorphWeights {
            kappa: 1.0,
            tip: 1.0,
            rot: 0.1,
        }
    }
}

/// Deployed-shape matching.
///
/// Unit `j` is compared against target station `j`: for an open target the
/// `N` units map onto `N` stations spanning the whole curve, for a closed
/// target onto `N` of the `N + 1` stations (the last one repeats the first).
/// The first unit sits on the first station.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MorphProblem {
    pub target: ArcLengthProfile,
    pub n_units: usize,
    pub weights: MorphWeights,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MorphDesign {
    pub alphas: Vec<f64>,
    pub l: f64,
    pub psi: f64,
    pub beta0: f64,
    pub base_position: Vec2,
}

impl MorphProblem {
    pub fn new(
        target: ArcLengthProfile,
        n_units: usize,
        weights: MorphWeights,
        bounds: Bounds,
    ) -> Result<Self> {
        bounds.validate()?;
        if n_units < 2 {
            return Err(Error::config(format!("morphing needs at least 2 units, got {n_units}")));
        }
        if target.nodes.len() < n_units {
            return Err(Error::config(format!(
                "target has {} stations for {n_units} units",
                target.nodes.len()
            )));
        }
        if [weights.kappa, weights.tip, weights.rot].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::config("weights must be non-negative"));
        }
        Ok(MorphProblem {
            target,
            n_units,
            weights,
            bounds,
        })
    }

    /// Resamples `curve` so that each unit has one station.
    pub fn from_curve(
        curve: &TargetCurve,
        n_units: usize,
        weights: MorphWeights,
        bounds: Bounds,
    ) -> Result<Self> {
        if n_units < 2 {
            return Err(Error::config(format!("morphing needs at least 2 units, got {n_units}")));
        }
        let m = if curve.closed { n_units } else { n_units - 1 };
        let target = arclength_parameterize(curve, m.max(3))?;
        Self::new(target, n_units, weights, bounds)
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["l", "psi", "beta0"].iter().map(|s| String::from(*s)).collect();
        names.extend(indexed_names("alpha", self.n_units));
        names
    }

    /// Seeded starting point: `psi = pi/2`, unit spacing equal to the station
    /// spacing, heading along the target, aspect ratios drawn from
    /// `(0.45, 0.55)` (`narrow`) or the full bounds.
    pub fn initial_params(&self, seed: u64, narrow: bool) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi0 = PI / 2.0;
        let spacing = self.target.spacing();
        let mut l0 = spacing / libm::cos(0.5 * psi0);
        if let Some((lo, hi)) = self.bounds.length {
            l0 = l0.clamp(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo));
        }
        let mut values = vec![
            inverse_length(l0, &self.bounds),
            inverse_psi(psi0),
            self.target.initial_tangent,
        ];
        values.extend(random_alphas(&mut rng, self.n_units, narrow, &self.bounds));
        named(self.param_names(), values)
    }

    pub fn decode<R: Real>(&self, x: &[R]) -> (Vec<R>, R, R, R) {
        let l = transform_length(x[0], &self.bounds);
        let psi = transform_psi(x[1]);
        let beta0 = x[2];
        let alphas = x[3..3 + self.n_units]
            .iter()
            .map(|&a| transform_alpha(a, &self.bounds))
            .collect();
        (alphas, l, psi, beta0)
    }

    pub fn design(&self, x: &[f64]) -> MorphDesign {
        let (alphas, l, psi, beta0) = self.decode(x);
        MorphDesign {
            alphas,
            l,
            psi,
            beta0,
            base_position: self.target.nodes[0],
        }
    }
}

fn named(names: Vec<String>, values: Vec<f64>) -> ParamVector {
    let mut p = ParamVector::new();
    for (n, v) in names.into_iter().zip(values) {
        p.push(n, v).expect("generated names are unique");
    }
    p
}

/// Curvature `kappa_o` of every unit from its half-angle state.
fn unit_curvatures<R: Real>(alphas: &[R], angles: &[SectionAngles<R>], l: R) -> Vec<R> {
    alphas
        .iter()
        .zip(angles)
        .map(|(&a, sa)| (a * 2.0 - 1.0) / (a * a.one_minus() * l * sa.sin_half * 2.0))
        .collect()
}

/// `lambda_kappa sum_j (kappa_j - kappa^t_j)^2 + lambda_tip |r_N - p_N|^2
/// + lambda_rot (beta_0 - theta_target)^2` at raw parameters `x`.
///
/// Internal angles follow the exact chain (through the face-length
/// invariant). A chain that cannot assemble returns
/// `INFEASIBLE_PENALTY + total excess`.
pub fn morph_loss<R: Real>(x: &[R], problem: &MorphProblem) -> R {
    let (alphas, l, psi, beta0) = problem.decode(x);
    let angles = section_angles(&alphas, psi);
    let mut excess = R::zero();
    let mut infeasible = false;
    for sa in &angles {
        if sa.excess.value() > 0.0 {
            infeasible = true;
            excess = excess + sa.excess;
        }
    }
    if infeasible {
        return excess + INFEASIBLE_PENALTY;
    }
    let t = &problem.target;
    let w = &problem.weights;
    let kappas = unit_curvatures(&alphas, &angles, l);
    let mut curv = R::zero();
    for (k, kt) in kappas.iter().zip(&t.kappa) {
        curv = curv + (*k - *kt).sq();
    }
    let centers = chain_centers(&alphas, &angles, l, t.nodes[0].lift(), beta0);
    let last = problem.n_units - 1;
    let tip = centers[last] - t.nodes[last].lift();
    curv * w.kappa + tip.norm_sq() * w.tip + (beta0 - t.initial_tangent).sq() * w.rot
}

impl Objective for MorphProblem {
    fn eval<R: Real>(&self, x: &[R]) -> R {
        morph_loss(x, self)
    }
}

/// Per-unit curvature, unit centers and feasibility of a morphing design.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphEvaluation {
    pub kappa: Vec<f64>,
    pub centers: Vec<Vec2>,
    pub assembled: bool,
}

pub fn evaluate_morph(problem: &MorphProblem, x: &[f64]) -> MorphEvaluation {
    let (alphas, l, psi, beta0) = problem.decode(x);
    let angles = section_angles(&alphas, psi);
    MorphEvaluation {
        kappa: unit_curvatures(&alphas, &angles, l),
        centers: chain_centers(&alphas, &angles, l, problem.target.nodes[0], beta0),
        assembled: angles.iter().all(|a| a.excess <= 0.0),
    }
}

fn solve<O: Objective>(
    objective: &O,
    init: &ParamVector,
    config: &OptimizerConfig,
) -> Result<(Minimized, f64)> {
    let out = adam(|x| grad(objective, x), init.values(), config)?;
    let reevaluated = objective.eval(&out.x);
    Ok((out, reevaluated))
}

/// Adam over `{l, psi, beta_0, alpha_1..alpha_N}` from `init`.
pub fn solve_morph(
    problem: &MorphProblem,
    config: &OptimizerConfig,
    init: &ParamVector,
) -> Result<RunResult> {
    if init.len() != 3 + problem.n_units {
        return Err(Error::config("initial parameter vector has the wrong length"));
    }
    let (out, loss) = solve(problem, init, config)?;
    let eval = evaluate_morph(problem, &out.x);
    let last = problem.n_units - 1;
    let miss = eval.centers[last].dist(problem.target.nodes[last]);
    let feasibility = Feasibility {
        converged: out.converged,
        assembled: eval.assembled,
        tip_reached: Some(eval.assembled && miss <= 1e-2 * problem.target.total_length),
    };
    Ok(RunResult {
        design: Design::Morph(problem.design(&out.x)),
        raw: init.with_values(&out.x),
        loss,
        trace: out.trace,
        seed: config.seed,
        iterations: out.iterations,
        feasibility,
    })
}

// ---------------------------------------------------------------------------
// Writing

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WriteWeights {
    pub smooth: f64,
    pub length: f64,
    pub steric: f64,
}

impl Default for WriteWeights {
    fn default() -> Self {
        WriteWeights {
            smooth: 1e-2,
            length: 1.0,
            steric: 10.0,
        }
    }
}

/// Tip-trajectory matching.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WriteProblem {
    /// Target curvature on a uniform arc-length grid.
    pub target: ArcLengthProfile,
    /// Units per section, base to tip.
    pub sections: Vec<usize>,
    pub weights: WriteWeights,
    pub phi_min: f64,
    /// `(psi_max, psi_min)`: the fixed sweep, or the starting sweep when
    /// `optimize_psi` is set.
    pub psi_range: (f64, f64),
    pub optimize_psi: bool,
    /// Number of actuation samples `K + 1`.
    pub n_psi_samples: usize,
    pub bounds: Bounds,
}

/// Physical writing design.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WriteDesign {
    /// `(n_units, alpha)` per section.
    pub sections: Vec<(usize, f64)>,
    pub l: f64,
    pub psi_max: f64,
    pub psi_min: f64,
}

/// Splits `n_units` into `n_sections` contiguous sections whose sizes differ
/// by at most one (larger sections first).
pub fn split_units(n_units: usize, n_sections: usize) -> Result<Vec<usize>> {
    if n_sections == 0 || n_sections > n_units {
        return Err(Error::config(format!(
            "cannot split {n_units} units into {n_sections} sections"
        )));
    }
    let (q, r) = (n_units / n_sections, n_units % n_sections);
    Ok((0..n_sections).map(|i| q + usize::from(i < r)).collect())
}

/// Defaults of the writing problem.
pub const DEFAULT_PSI_RANGE: (f64, f64) = (3.0, 0.3);
pub const DEFAULT_PSI_SAMPLES: usize = 400;
pub const DEFAULT_PHI_MIN: f64 = 0.1;

impl WriteProblem {
    /// Writing problem for `curve` (normalized to the unit box) with the
    /// given section sizes and default settings.
    pub fn from_curve(curve: &TargetCurve, sections: Vec<usize>) -> Result<Self> {
        let target = arclength_parameterize(&normalize_bbox(curve)?, DEFAULT_PSI_SAMPLES - 1)?;
        let p = WriteProblem {
            target,
            sections,
            weights: WriteWeights::default(),
            phi_min: DEFAULT_PHI_MIN,
            psi_range: DEFAULT_PSI_RANGE,
            optimize_psi: false,
            n_psi_samples: DEFAULT_PSI_SAMPLES,
            bounds: Bounds::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.sections.is_empty() || self.sections.contains(&0) {
            return Err(Error::config("every section needs at least one unit"));
        }
        if self.n_units() < 2 {
            return Err(Error::config("writing needs at least 2 units"));
        }
        let (hi, lo) = self.psi_range;
        if !(PSI_HI >= hi && hi > lo && lo >= PSI_LO) {
            return Err(Error::config(format!(
                "actuation range must satisfy {PSI_HI:.4} >= psi_max > psi_min >= {PSI_LO}, got ({hi}, {lo})"
            )));
        }
        if !(self.phi_min > 0.0) {
            return Err(Error::config("phi_min must be positive"));
        }
        if self.n_psi_samples < 5 {
            return Err(Error::config("need at least 5 actuation samples"));
        }
        let w = &self.weights;
        if [w.smooth, w.length, w.steric].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::config("weights must be non-negative"));
        }
        Ok(())
    }

    pub fn n_units(&self) -> usize {
        self.sections.iter().sum()
    }

    /// Same settings with a different unit count, keeping the number of
    /// sections (or one section per unit when every section has one unit).
    pub fn with_units(&self, n_units: usize) -> Result<Self> {
        let per_unit = self.sections.iter().all(|&n| n == 1);
        let sections = if per_unit {
            vec![1; n_units]
        } else {
            split_units(n_units, self.sections.len())?
        };
        let p = WriteProblem {
            sections,
            ..self.clone()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec![String::from("l")];
        names.extend(indexed_names("alpha", self.sections.len()));
        if self.optimize_psi {
            names.push("psi_max".into());
            names.push("psi_min".into());
        }
        names
    }

    /// Seeded starting point. The member length is chosen so that a straight
    /// chain's tip would travel the target length over the sweep.
    pub fn initial_params(&self, seed: u64, narrow: bool) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (hi, lo) = self.psi_range;
        let travel = (self.n_units() - 1) as f64 * (libm::cos(0.5 * lo) - libm::cos(0.5 * hi));
        let mut l0 = self.target.total_length / travel;
        if let Some((a, b)) = self.bounds.length {
            l0 = l0.clamp(a + 1e-3 * (b - a), b - 1e-3 * (b - a));
        }
        let mut values = vec![inverse_length(l0, &self.bounds)];
        values.extend(random_alphas(&mut rng, self.sections.len(), narrow, &self.bounds));
        if self.optimize_psi {
            let (a, b) = inverse_psi_range(hi, lo);
            values.push(a);
            values.push(b);
        }
        named(self.param_names(), values)
    }

    pub fn decode<R: Real>(&self, x: &[R]) -> (Vec<R>, R, R, R) {
        let m = self.sections.len();
        let l = transform_length(x[0], &self.bounds);
        let alphas = x[1..1 + m].iter().map(|&a| transform_alpha(a, &self.bounds)).collect();
        let (hi, lo) = if self.optimize_psi {
            transform_psi_range(x[1 + m], x[2 + m])
        } else {
            (R::cst(self.psi_range.0), R::cst(self.psi_range.1))
        };
        (alphas, l, hi, lo)
    }

    pub fn design(&self, x: &[f64]) -> WriteDesign {
        let (alphas, l, psi_max, psi_min) = self.decode(x);
        WriteDesign {
            sections: self.sections.iter().copied().zip(alphas).collect(),
            l,
            psi_max,
            psi_min,
        }
    }
}

/// Individual terms of the writing loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WriteLossTerms<R> {
    pub mismatch: R,
    pub smooth: R,
    pub length: R,
    pub steric: R,
    /// Trajectory length `L`.
    pub trajectory_length: R,
}

impl<R: Real> WriteLossTerms<R> {
    pub fn total(&self, w: &WriteWeights) -> R {
        self.mismatch + self.smooth * w.smooth + self.length * w.length + self.steric * w.steric
    }
}

/// Piecewise-linear interpolation of `(xs, ys)` at `q`, differentiable in
/// the samples and in the query. `xs` must be non-decreasing; queries
/// outside the range extrapolate from the end intervals.
pub fn interp_linear<R: Real>(xs: &[R], ys: &[R], q: R) -> R {
    let n = xs.len();
    let qv = q.value();
    let mut k = xs.partition_point(|x| x.value() <= qv);
    k = k.clamp(1, n - 1) - 1;
    let w = (q - xs[k]) / (xs[k + 1] - xs[k]);
    let y = ys[k] + (ys[k + 1] - ys[k]) * w;
    y.note_branch(k as u64);
    y
}

/// Tip positions of a writing design at each actuation sample (penalized
/// evaluation: infeasible sections are clamped at the fold), together with
/// the steric penalty of the sweep and whether every sample assembled.
fn sweep_terms<R: Real>(
    counts: &[usize],
    alphas: &[R],
    l: R,
    psi_max: R,
    psi_min: R,
    n_samples: usize,
    phi_min: f64,
) -> (Vec<Vec2<R>>, R, bool) {
    let k_max = (n_samples - 1) as f64;
    let mut tips = Vec::with_capacity(n_samples);
    let mut steric = R::zero();
    let mut assembled = true;
    let origin = Vec2::<R>::zero();
    for k in 0..n_samples {
        let psi = if k + 1 == n_samples {
            psi_min
        } else {
            psi_max + (psi_min - psi_max) * (k as f64 / k_max)
        };
        let angles = section_angles(alphas, psi);
        for (sa, &n) in angles.iter().zip(counts) {
            if sa.excess.value() > 0.0 {
                assembled = false;
            }
            let phi_value = 2.0 * libm::atan2(sa.sin_half.value(), sa.cos_half.value());
            let violated = sa.excess.value() > 0.0 || phi_value < phi_min;
            alphas[0].note_branch(u64::from(violated));
            if violated {
                steric = steric + (-sa.phi_extended() + phi_min).relu().sq() * n as f64;
            }
        }
        tips.push(sectioned_tip(counts, alphas, &angles, l, origin, R::zero()));
    }
    (tips, steric, assembled)
}

/// Signed curvature of a sampled trajectory by finite differences in the
/// sample index (second order, one-sided at the ends).
fn trajectory_curvature<R: Real>(p: &[Vec2<R>]) -> Vec<R> {
    let n = p.len();
    (0..n)
        .map(|i| {
            let (d1, d2) = if i == 0 {
                (
                    (p[0] * -3.0 + p[1] * 4.0 - p[2]) * 0.5,
                    p[0] * 2.0 - p[1] * 5.0 + p[2] * 4.0 - p[3],
                )
            } else if i == n - 1 {
                (
                    (p[n - 1] * 3.0 - p[n - 2] * 4.0 + p[n - 3]) * 0.5,
                    p[n - 1] * 2.0 - p[n - 2] * 5.0 + p[n - 3] * 4.0 - p[n - 4],
                )
            } else {
                ((p[i + 1] - p[i - 1]) * 0.5, p[i + 1] + p[i - 1] - p[i] * 2.0)
            };
            let speed2 = d1.norm_sq() + 1e-24;
            d1.cross(d2) / (speed2 * speed2.sqrt())
        })
        .collect()
}

/// All terms of the writing loss at raw parameters `x`.
///
/// * mismatch: mean over target stations of
///   `(kappa_tip L - kappa^t L^t)^2`, with the tip curvature interpolated at
///   the station's normalized arc length `s / L^t` along the normalized
///   cumulative arc length of the trajectory;
/// * smooth: `sum_j (alpha_{j+1} - alpha_j)^2`;
/// * length: `((L - L^t) / L^t)^2`;
/// * steric: `sum_k sum_units max(0, phi_min - phi_j(psi_k))^2`.
pub fn write_loss_terms<R: Real>(x: &[R], problem: &WriteProblem) -> WriteLossTerms<R> {
    let (alphas, l, psi_max, psi_min) = problem.decode(x);
    let (tips, steric, _) = sweep_terms(
        &problem.sections,
        &alphas,
        R::one(),
        psi_max,
        psi_min,
        problem.n_psi_samples,
        problem.phi_min,
    );
    // the shape is computed at unit member length; `l` only scales it
    let kappa = trajectory_curvature(&tips);
    let mut cum = Vec::with_capacity(tips.len());
    let mut total = R::zero();
    cum.push(total);
    for w in tips.windows(2) {
        total = total + ((w[1] - w[0]).norm_sq() + 1e-24).sqrt();
        cum.push(total);
    }
    let u: Vec<R> = cum.iter().map(|&c| c / total).collect();
    let scaled: Vec<R> = kappa.iter().map(|&k| k * total).collect();
    let t = &problem.target;
    let lt = t.total_length;
    let mut mismatch = R::zero();
    for (s, kt) in t.s_grid.iter().zip(&t.kappa) {
        let v = interp_linear(&u, &scaled, R::cst(s / lt));
        mismatch = mismatch + (v - kt * lt).sq();
    }
    mismatch = mismatch / t.s_grid.len() as f64;
    let mut smooth = R::zero();
    for w in alphas.windows(2) {
        smooth = smooth + (w[1] - w[0]).sq();
    }
    let total = total * l;
    WriteLossTerms {
        mismatch,
        smooth,
        length: ((total - lt) / lt).sq(),
        steric,
        trajectory_length: total,
    }
}

pub fn write_loss<R: Real>(x: &[R], problem: &WriteProblem) -> R {
    write_loss_terms(x, problem).total(&problem.weights)
}

impl Objective for WriteProblem {
    fn eval<R: Real>(&self, x: &[R]) -> R {
        write_loss(x, self)
    }
}

/// Tip trajectory of a writing design over `n_samples` actuation samples,
/// starting at the origin with the first unit heading along +x. Also
/// reports whether the chain assembles at every sample.
pub fn write_trajectory(design: &WriteDesign, n_samples: usize) -> (TipTrajectory, bool) {
    let counts: Vec<usize> = design.sections.iter().map(|s| s.0).collect();
    let alphas: Vec<f64> = design.sections.iter().map(|s| s.1).collect();
    let (points, _, assembled) = sweep_terms(
        &counts,
        &alphas,
        design.l,
        design.psi_max,
        design.psi_min,
        n_samples,
        0.0,
    );
    let psi_grid = psi_grid(design.psi_max, design.psi_min, n_samples);
    (TipTrajectory { psi_grid, points }, assembled)
}

/// Locates the first actuation sample whose tip is not finite.
fn diagnose_nan(problem: &WriteProblem, x: &[f64], source: Error) -> Error {
    let design = problem.design(x);
    let (traj, _) = write_trajectory(&design, problem.n_psi_samples);
    match traj
        .points
        .iter()
        .position(|p| !(p.x.is_finite() && p.y.is_finite()))
    {
        Some(index) => Error::Sweep {
            index,
            psi: traj.psi_grid[index],
            source: alloc::boxed::Box::new(source),
        },
        None => source,
    }
}

/// Adam over `{alpha_j, l}` (and the actuation range when
/// `problem.optimize_psi` is set) from `init`.
pub fn solve_write(
    problem: &WriteProblem,
    config: &OptimizerConfig,
    init: &ParamVector,
) -> Result<RunResult> {
    problem.validate()?;
    if init.len() != problem.param_names().len() {
        return Err(Error::config("initial parameter vector has the wrong length"));
    }
    let out = adam(
        |x| grad(problem, x).map_err(|e| diagnose_nan(problem, x, e)),
        init.values(),
        config,
    )?;
    let loss = write_loss(&out.x, problem);
    let design = problem.design(&out.x);
    let (_, assembled) = write_trajectory(&design, problem.n_psi_samples);
    Ok(RunResult {
        design: Design::Write(design),
        raw: init.with_values(&out.x),
        loss,
        trace: out.trace,
        seed: config.seed,
        iterations: out.iterations,
        feasibility: Feasibility {
            converged: out.converged,
            assembled,
            tip_reached: None,
        },
    })
}

/// One cell of a grid search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridCell {
    pub n_units: usize,
    /// Restart index; the run uses seed `config.seed + restart`.
    pub restart: usize,
}

impl GridCell {
    pub fn seed(&self, base: u64) -> u64 {
        base.wrapping_add(self.restart as u64)
    }
}

/// One row of the grid-search table.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridRow {
    pub n_units: usize,
    pub seed: u64,
    /// Infinite when the run failed.
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: RunResult,
    /// Rows ordered by `(n_units, seed)`.
    pub table: Vec<GridRow>,
}

/// Cells for `n_candidates x restarts`, in table order.
pub fn grid_cells(n_candidates: &[usize], restarts: usize) -> Vec<GridCell> {
    n_candidates
        .iter()
        .flat_map(|&n_units| (0..restarts).map(move |restart| GridCell { n_units, restart }))
        .collect()
}

/// Runs one grid cell. Restart 0 starts from aspect ratios near 1/2, later
/// restarts from the full bounds.
pub fn run_cell(problem: &WriteProblem, cell: GridCell, config: &OptimizerConfig) -> Result<RunResult> {
    let p = problem.with_units(cell.n_units)?;
    let seed = cell.seed(config.seed);
    let init = p.initial_params(seed, cell.restart == 0);
    let cfg = OptimizerConfig {
        seed,
        ..config.clone()
    };
    solve_write(&p, &cfg, &init)
}

/// Combines per-cell outcomes (in any order) into the table and global best.
/// Ties in loss go to the smaller `(n_units, seed)`.
pub fn collect_grid(
    results: Vec<(GridCell, Result<RunResult>)>,
    config: &OptimizerConfig,
) -> Result<GridSearchResult> {
    let mut rows = Vec::with_capacity(results.len());
    let mut best: Option<(GridRow, RunResult)> = None;
    for (cell, res) in results {
        let seed = cell.seed(config.seed);
        let row = match &res {
            Ok(r) => GridRow {
                n_units: cell.n_units,
                seed,
                loss: if r.loss.is_nan() { f64::INFINITY } else { r.loss },
                iterations: r.iterations,
                converged: r.feasibility.converged,
            },
            Err(_) => GridRow {
                n_units: cell.n_units,
                seed,
                loss: f64::INFINITY,
                iterations: 0,
                converged: false,
            },
        };
        rows.push(row);
        if let Ok(r) = res {
            let better = match &best {
                None => true,
                Some((b, _)) => {
                    row.loss < b.loss
                        || (row.loss == b.loss && (row.n_units, row.seed) < (b.n_units, b.seed))
                }
            };
            if better {
                best = Some((row, r));
            }
        }
    }
    rows.sort_by_key(|r| (r.n_units, r.seed));
    let best = best.ok_or_else(|| Error::config("every grid-search run failed"))?.1;
    Ok(GridSearchResult { best, table: rows })
}

/// Serial grid search over unit counts and restarts.
pub fn grid_search(
    problem: &WriteProblem,
    n_candidates: &[usize],
    restarts: usize,
    config: &OptimizerConfig,
) -> Result<GridSearchResult> {
    if restarts == 0 || n_candidates.is_empty() {
        return Err(Error::config("grid search needs at least one unit count and one restart"));
    }
    let results = grid_cells(n_candidates, restarts)
        .into_iter()
        .map(|c| (c, run_cell(problem, c, config)))
        .collect();
    collect_grid(results, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::finite_diff_check;
    use crate::targets::analytic_targets;

    #[test]
    fn transforms() {
        let b = Bounds::default();
        assert_eq!(transform_alpha(0.0, &b), 0.5);
        assert!(transform_alpha(-800.0, &b) >= b.alpha_min);
        assert!(transform_alpha(800.0, &b) <= b.alpha_max);
        assert!(transform_alpha(-30.0, &b) > b.alpha_min);
        assert_eq!(transform_length(0.0, &b), 1.0);
        assert!((transform_alpha(inverse_alpha(0.73, &b), &b) - 0.73).abs() < 1e-12);
        let (hi, lo) = transform_psi_range(0.4, -1.0);
        let (a, c) = inverse_psi_range(hi, lo);
        assert!((a - 0.4).abs() < 1e-9 && (c + 1.0).abs() < 1e-9);
        let mut raw = ParamVector::new();
        raw.push("alpha_0", 0.0).unwrap();
        raw.push("l", 0.0).unwrap();
        let phys = transform_params(&raw, &b);
        assert_eq!(phys.values(), &[0.5, 1.0]);
    }

    #[test]
    fn adam_minimizes_a_bowl() {
        let cfg = OptimizerConfig {
            learning_rate: 0.05,
            ..Default::default()
        };
        let out = adam(
            |x| Ok(((x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2), vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] + 2.0)])),
            &[0.0, 0.0],
            &cfg,
        )
        .unwrap();
        assert!(out.loss < 1e-6, "{}", out.loss);
    }

    #[test]
    fn interpolation() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [1.0, 3.0, -1.0];
        assert_eq!(interp_linear(&xs, &ys, 0.5), 2.0);
        assert_eq!(interp_linear(&xs, &ys, 2.0), 1.0);
        assert_eq!(interp_linear(&xs, &ys, 3.0), -1.0);
    }

    #[test]
    fn split_units_is_balanced() {
        assert_eq!(split_units(10, 3).unwrap(), vec![4, 3, 3]);
        assert!(split_units(2, 3).is_err());
    }

    #[test]
    fn straight_target_zero_loss() {
        let curve = analytic_targets("line", &[("length".into(), 3.0)]).unwrap();
        let p = MorphProblem::from_curve(&curve, 4, MorphWeights::default(), Bounds::default()).unwrap();
        // Station spacing 1 at psi = pi/2 for alpha = 1/2 needs l = sqrt(2).
        let x = [
            inverse_length(core::f64::consts::SQRT_2, &p.bounds),
            inverse_psi(PI / 2.0),
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ];
        assert!(morph_loss(&x, &p) < 1e-20, "{}", morph_loss(&x, &p));
    }

    #[test]
    fn morph_gradient_matches_fd() {
        let curve = analytic_targets("spiral", &[]).unwrap();
        let p = MorphProblem::from_curve(&curve, 6, MorphWeights::default(), Bounds::default()).unwrap();
        let x = p.initial_params(3, false);
        let r = finite_diff_check(&p, x.values(), 1e-6, 1e-5).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn write_gradient_matches_fd() {
        let curve = analytic_targets("circle", &[]).unwrap();
        let mut p = WriteProblem::from_curve(&curve, vec![4, 4, 4]).unwrap();
        p.n_psi_samples = 60;
        p.optimize_psi = true;
        let x = p.initial_params(1, false);
        let r = finite_diff_check(&p, x.values(), 1e-6, 1e-5).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn zero_weights_leave_the_mismatch() {
        let curve = analytic_targets("circle", &[]).unwrap();
        let mut p = WriteProblem::from_curve(&curve, vec![1; 5]).unwrap();
        p.n_psi_samples = 50;
        p.weights = WriteWeights {
            smooth: 0.0,
            length: 0.0,
            steric: 0.0,
        };
        let x = p.initial_params(0, false);
        let terms = write_loss_terms(x.values(), &p);
        assert_eq!(write_loss(x.values(), &p), terms.mismatch);
    }
}
