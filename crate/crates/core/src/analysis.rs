//! Validation studies: closure angle, perturbation accuracy and tip
//! sensitivity.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::closure_actuation;
use crate::kinematics::{assemble_chain, perturbative_config, ChainSpec};
use crate::{Error, Result};

/// Tip-displacement variance per perturbed unit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityProfile {
    pub n_units: usize,
    /// Perturbed unit, 1-based from the base.
    pub unit: Vec<usize>,
    pub sigma: Vec<f64>,
    pub n_samples: usize,
    pub epsilon: f64,
    pub psi: f64,
}

impl SensitivityProfile {
    /// `unit / n_units` for every row.
    pub fn relative_position(&self) -> Vec<f64> {
        self.unit.iter().map(|&j| j as f64 / self.n_units as f64).collect()
    }
}

/// For each unit `j` of a straight chain (`alpha = 1/2`, `l = 1`), draws
/// `n_samples` offsets `delta ~ U[-epsilon, epsilon]`, sets
/// `alpha_j = 1/2 + delta` and records the variance of the tip displacement
/// magnitude.
///
/// Randomness comes from one ChaCha8 stream seeded with `seed`, consumed in
/// unit order.
pub fn sensitivity_profile(
    n_units: usize,
    epsilon: f64,
    n_samples: usize,
    psi: f64,
    seed: u64,
) -> Result<SensitivityProfile> {
    if n_units < 2 || n_samples < 2 {
        return Err(Error::config("sensitivity needs at least 2 units and 2 samples"));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::config(format!("perturbation half-width {epsilon} not in (0, 0.5)")));
    }
    let mut spec = ChainSpec::uniform(0.5, n_units, 1.0)?;
    let base_tip = assemble_chain(&spec, psi)?.tip();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma = Vec::with_capacity(n_units);
    let mut samples = Vec::with_capacity(n_samples);
    for j in 0..n_units {
        samples.clear();
        for _ in 0..n_samples {
            let delta: f64 = rng.random_range(-epsilon..=epsilon);
            spec.alphas[j] = 0.5 + delta;
            samples.push(assemble_chain(&spec, psi)?.tip().dist(base_tip));
        }
        spec.alphas[j] = 0.5;
        let mean = samples.iter().sum::<f64>() / n_samples as f64;
        let var = samples.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n_samples as f64;
        sigma.push(var);
    }
    Ok(SensitivityProfile {
        n_units,
        unit: (1..=n_units).collect(),
        sigma,
        n_samples,
        epsilon,
        psi,
    })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / libm::sqrt(sxx * syy)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = alloc::vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut k = i;
        while k + 1 < idx.len() && v[idx[k + 1]] == v[idx[i]] {
            k += 1;
        }
        let avg = 0.5 * (i + k) as f64 + 1.0;
        for &t in &idx[i..=k] {
            r[t] = avg;
        }
        i = k + 1;
    }
    r
}

/// Largest pairwise difference of `ln(sigma / max sigma)` between profiles,
/// compared at the relative positions of the coarsest profile by linear
/// interpolation of the finer ones.
pub fn collapse_deviation(profiles: &[SensitivityProfile]) -> f64 {
    let curves: Vec<(Vec<f64>, Vec<f64>)> = profiles
        .iter()
        .map(|p| {
            let top = p.sigma.iter().cloned().fold(f64::MIN, f64::max);
            let y = p.sigma.iter().map(|s| libm::log(s / top)).collect();
            (p.relative_position(), y)
        })
        .collect();
    let Some(coarse) = curves.iter().min_by_key(|c| c.0.len()) else {
        return 0.0;
    };
    let lo = curves.iter().map(|c| c.0[0]).fold(f64::MIN, f64::max);
    let eval = |c: &(Vec<f64>, Vec<f64>), q: f64| {
        let k = c.0.partition_point(|x| *x <= q).clamp(1, c.0.len() - 1) - 1;
        let w = (q - c.0[k]) / (c.0[k + 1] - c.0[k]);
        c.1[k] + w * (c.1[k + 1] - c.1[k])
    };
    let mut worst = 0.0f64;
    for &q in coarse.0.iter().filter(|&&q| q >= lo) {
        let vals: Vec<f64> = curves.iter().map(|c| eval(c, q)).collect();
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        worst = worst.max(hi - lo);
    }
    worst
}

/// One row of [`closure_experiment`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClosureRow {
    pub alpha: f64,
    pub n_units: usize,
    pub theory: Option<f64>,
    pub measured: Option<f64>,
    /// Why the row has no values.
    pub flag: Option<String>,
}

/// Total rotation of member 1 over `n_units` joints of a uniform chain
/// assembled at `psi`, measured joint by joint from the assembled
/// orientations.
pub fn measured_rotation(alpha: f64, n_units: usize, psi: f64) -> Result<f64> {
    let spec = ChainSpec::uniform(alpha, n_units + 1, 1.0)?;
    let cfg = assemble_chain(&spec, psi)?;
    let mut total = 0.0;
    for j in 0..n_units {
        let (a, b) = (cfg.t1(j), cfg.t1(j + 1));
        total += libm::atan2(a.cross(b), a.dot(b));
    }
    Ok(total)
}

/// Actuation angle at which the measured rotation of an `n_units` uniform
/// chain reaches `2 pi`, by bisection on `(0, pi)`.
///
/// Near `psi = 0` each joint turns by almost `pi` (`pi - phi* ~ psi / |2 alpha - 1|`)
/// and the measured angle would wrap, so the lower end of the bracket is
/// `1e-6 |2 alpha - 1|`; every closure angle lies above it.
pub fn measured_closure(alpha: f64, n_units: usize) -> Result<f64> {
    let f = |psi: f64| measured_rotation(alpha, n_units, psi).map(|r| r - 2.0 * PI);
    let (mut lo, mut hi) = ((1e-6 * libm::fabs(2.0 * alpha - 1.0)).max(1e-15), PI - 1e-9);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::NoClosure { alpha, n_units });
    }
    let rising = fhi > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if (fm > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Theory and measured closure angle for every `(alpha, n)` pair.
pub fn closure_experiment(alphas: &[f64], n_units: &[usize]) -> Vec<ClosureRow> {
    let mut rows = Vec::with_capacity(alphas.len() * n_units.len());
    for &alpha in alphas {
        for &n in n_units {
            let row = match closure_actuation(alpha, n) {
                Ok(theory) => match measured_closure(alpha, n) {
                    Ok(measured) => ClosureRow {
                        alpha,
                        n_units: n,
                        theory: Some(theory),
                        measured: Some(measured),
                        flag: None,
                    },
                    Err(e) => ClosureRow {
                        alpha,
                        n_units: n,
                        theory: Some(theory),
                        measured: None,
                        flag: Some(format!("{e}")),
                    },
                },
                Err(e) => ClosureRow {
                    alpha,
                    n_units: n,
                    theory: None,
                    measured: None,
                    flag: Some(format!("{e}")),
                },
            };
            rows.push(row);
        }
    }
    rows
}

/// Node-wise distance between the perturbative and the exact chain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationReport {
    pub max_error: f64,
    pub errors: Vec<f64>,
}

/// Compares [`perturbative_config`] with the exact assembly of
/// `alpha_j = alpha0 + epsilon j`, `l = 1`.
pub fn perturbation_validation(
    alpha0: f64,
    epsilon: f64,
    n_units: usize,
    psi: f64,
) -> Result<PerturbationReport> {
    let approx = perturbative_config(alpha0, epsilon, n_units, psi, 1.0)?;
    let exact = assemble_chain(&ChainSpec::new(approx.alphas.clone(), 1.0)?, psi)?;
    let errors: Vec<f64> = approx
        .centers
        .iter()
        .zip(&exact.centers)
        .map(|(a, b)| a.dist(*b))
        .collect();
    let max_error = errors.iter().cloned().fold(0.0, f64::max);
    Ok(PerturbationReport { max_error, errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_matches_theory() {
        let rows = closure_experiment(&[0.6, 0.5], &[10]);
        let r = &rows[0];
        assert!((r.theory.unwrap() - r.measured.unwrap()).abs() < 1e-8);
        assert!(rows[1].flag.is_some() && rows[1].theory.is_none());
    }

    #[test]
    fn closure_is_monotone_in_n() {
        let rows = closure_experiment(&[0.7], &[5, 7, 9]);
        let t: Vec<f64> = rows.iter().map(|r| r.measured.unwrap()).collect();
        assert!(t[0] < t[1] && t[1] < t[2]);
    }

    #[test]
    fn no_perturbation_no_error() {
        let r = perturbation_validation(0.52, 0.0, 30, PI / 4.0).unwrap();
        assert!(r.max_error < 1e-12);
    }

    #[test]
    fn spearman_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[8.0, 6.0, 4.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[1.0, 2.0, 2.0, 5.0]) - 0.948_683_298_050_513_8).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_is_positive_and_reproducible() {
        let a = sensitivity_profile(12, 0.01, 50, PI / 2.0, 7).unwrap();
        let b = sensitivity_profile(12, 0.01, 50, PI / 2.0, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.sigma.iter().all(|s| *s > 0.0));
    }
}
