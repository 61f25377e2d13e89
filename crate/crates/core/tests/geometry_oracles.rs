use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scissor_core::geometry::*;
use scissor_core::kinematics::{assemble_chain, ChainSpec};

/// Curvature from the rotation of the face tangents across the unit,
/// built directly from the member directions.
fn face_tangent_curvature(alpha: f64, phi: f64, l: f64) -> f64 {
    let beta: f64 = 0.37;
    let t1 = (beta.cos(), beta.sin());
    let t2 = ((beta + PI - phi).cos(), (beta + PI - phi).sin());
    let ne = (alpha * l * t1.0 + (1.0 - alpha) * l * t2.0, alpha * l * t1.1 + (1.0 - alpha) * l * t2.1);
    let nw = ((1.0 - alpha) * l * t1.0 + alpha * l * t2.0, (1.0 - alpha) * l * t1.1 + alpha * l * t2.1);
    // tangents: normals turned by -pi/2
    let te = (ne.1, -ne.0);
    let tw = (nw.1, -nw.0);
    let dt = (te.0 - tw.0, te.1 - tw.1);
    let avg = (0.5 * (ne.0 + nw.0), 0.5 * (ne.1 + nw.1));
    let delta = 4.0 * alpha * (1.0 - alpha) * l * (phi / 2.0).cos();
    // (T_e - T_w) / Delta = kappa N_avg, projected on N_avg
    (dt.0 * avg.0 + dt.1 * avg.1) / (delta * (avg.0 * avg.0 + avg.1 * avg.1))
}

// The construction's tangents point along `-n` of this crate's frame, hence
// the opposite sign.
#[test]
fn face_tangent_construction_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let alpha = rng.random_range(0.05..0.95);
        let phi = rng.random_range(0.05..PI - 0.05);
        let l = rng.random_range(0.1..5.0);
        let oracle = face_tangent_curvature(alpha, phi, l);
        let k = effective_curvature(UnitGeometry::new(alpha, l).unwrap(), UnitState::new(phi).unwrap()).unwrap();
        assert!((k + oracle).abs() <= 1e-10 * (1.0 + k.abs()), "{alpha} {phi} {l}: {k} vs {oracle}");
    }
}

#[test]
fn rotation_matches_composed_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let alpha = rng.random_range(0.1..0.9);
        let phi = rng.random_range(0.2..PI - 0.2);
        let cfg = assemble_chain(&ChainSpec::uniform(alpha, 3, 1.0).unwrap(), phi).unwrap();
        let (a, b) = (cfg.t1(0), cfg.t1(1));
        let measured = a.cross(b).atan2(a.dot(b));
        let star = unit_rotation_angle(UnitGeometry::new(alpha, 1.0).unwrap(), UnitState::new(phi).unwrap()).unwrap();
        assert!((measured - star).abs() < 1e-10);
    }
}

#[test]
fn turning_curvature_matches_chord_construction() {
    let cfg = assemble_chain(&ChainSpec::uniform(0.6, 3, 1.0).unwrap(), PI / 2.0).unwrap();
    let v0 = cfg.centers[1] - cfg.centers[0];
    let v1 = cfg.centers[2] - cfg.centers[1];
    let turn = v0.cross(v1).atan2(v0.dot(v1));
    let oracle = turn / (0.5 * (v0.norm() + v1.norm()));
    let k = turning_curvature(UnitGeometry::new(0.6, 1.0).unwrap(), UnitState::new(PI / 2.0).unwrap()).unwrap();
    assert!((k - oracle).abs() < 1e-12, "{k} vs {oracle}");
}

#[test]
fn all_measures_vanish_when_symmetric_except_osculating() {
    for phi in [0.3, 1.0, 2.0, 3.0] {
        let r = curvature_report(UnitGeometry::new(0.5, 1.3).unwrap(), UnitState::new(phi).unwrap()).unwrap();
        assert!(r.kappa_o.abs() < 1e-12 && r.kappa_t.abs() < 1e-12);
        assert!(r.kappa_osc > 0.0);
    }
}

#[test]
fn domain_errors() {
    assert!(UnitState::new(0.0).is_err());
    assert!(UnitState::new(PI).is_err());
    assert!(UnitGeometry::new(1.0, 1.0).is_err());
    assert!(UnitGeometry::new(0.5, 0.0).is_err());
}

proptest! {
    #[test]
    fn signs_agree(alpha in 0.01f64..0.99, phi in 0.01f64..3.13) {
        prop_assume!((alpha - 0.5).abs() > 1e-6);
        let (u, s) = (UnitGeometry::new(alpha, 1.0).unwrap(), UnitState::new(phi).unwrap());
        let r = curvature_report(u, s).unwrap();
        let sign = (2.0 * alpha - 1.0).signum();
        prop_assert_eq!(r.kappa_o.signum(), sign);
        prop_assert_eq!(r.kappa_t.signum(), sign);
    }

    #[test]
    fn mirror_antisymmetry(alpha in 0.5f64..0.99, phi in 0.01f64..3.13, l in 0.01f64..100.0) {
        // alpha >= 1/2 makes 1 - alpha and 1 - (1 - alpha) exact
        let m = 1.0 - alpha;
        prop_assert_eq!(kappa_o(alpha, phi, l), -kappa_o(m, phi, l));
        prop_assert_eq!(kappa_o(m, phi, l), -kappa_o(1.0 - m, phi, l));
    }

    #[test]
    fn scale_covariance(alpha in 0.01f64..0.99, phi in 0.01f64..3.13, c in 0.01f64..100.0) {
        let k = kappa_o(alpha, phi, 1.0);
        prop_assert!((kappa_o(alpha, phi, c) - k / c).abs() <= 1e-13 * k.abs() / c);
        prop_assert!((width(alpha, phi, c) - c * width(alpha, phi, 1.0)).abs() <= 1e-13 * c);
    }

    #[test]
    fn divergence_is_inverse_sine(alpha in 0.01f64..0.99, p1 in 0.01f64..3.13, p2 in 0.01f64..3.13) {
        let a = kappa_o(alpha, p1, 1.0) * (p1 / 2.0).sin();
        let b = kappa_o(alpha, p2, 1.0) * (p2 / 2.0).sin();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}
