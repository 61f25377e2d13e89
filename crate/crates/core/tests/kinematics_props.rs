use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scissor_core::geometry::kappa_o;
use scissor_core::kinematics::*;
use scissor_core::Vec2;

/// Intersection of the circle of radius `ra` about `a` with the circle of
/// radius `rb` about `b`, on the side away from `away`.
fn intersect(a: Vec2, ra: f64, b: Vec2, rb: f64, away: Vec2) -> Vec2 {
    let d = b.dist(a);
    let x = (ra * ra - rb * rb + d * d) / (2.0 * d);
    let h = (ra * ra - x * x).max(0.0).sqrt();
    let e = (b - a) * (1.0 / d);
    let foot = a + e * x;
    let (p, q) = (foot + e.perp() * h, foot - e.perp() * h);
    if p.dist(away) > q.dist(away) {
        p
    } else {
        q
    }
}

/// Builds every unit from the two pins it shares with its predecessor.
fn circle_construction(alphas: &[f64], psi: f64, l: f64) -> Vec<Vec2> {
    let mut r = Vec2::new(0.0, 0.0);
    let mut t1 = Vec2::from_angle(-psi / 2.0);
    let mut t2 = Vec2::from_angle(psi / 2.0);
    let mut centers = vec![r];
    for w in alphas.windows(2) {
        let (a0, a1) = (w[0], w[1]);
        let pin_a = r + t1 * (a0 * l);
        let pin_b = r + t2 * ((1.0 - a0) * l);
        let next = intersect(pin_a, a1 * l, pin_b, (1.0 - a1) * l, r);
        t2 = (next - pin_a) * (1.0 / (a1 * l));
        t1 = (next - pin_b) * (1.0 / ((1.0 - a1) * l));
        r = next;
        centers.push(r);
    }
    centers
}

#[test]
fn assembly_matches_circle_intersections() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.random_range(2..25);
        let alphas: Vec<f64> = (0..n).map(|_| rng.random_range(0.45..0.55)).collect();
        let psi = rng.random_range(0.8..2.4);
        let l = rng.random_range(0.5..2.0);
        let Ok(cfg) = assemble_chain(&ChainSpec::new(alphas.clone(), l).unwrap(), psi) else {
            continue;
        };
        for (c, o) in cfg.centers.iter().zip(circle_construction(&alphas, psi, l)) {
            assert!(c.dist(o) < 1e-9 * l * n as f64, "{c:?} vs {o:?}");
        }
    }
}

#[test]
fn shared_pins_coincide_and_members_keep_length() {
    let spec = ChainSpec::new(vec![0.55, 0.48, 0.6, 0.52, 0.45, 0.5], 1.3).unwrap();
    for psi in psi_grid(2.8, 0.4, 40) {
        let cfg = assemble_chain(&spec, psi).unwrap();
        for j in 0..cfg.n_units() {
            let p = cfg.pins(j);
            assert!((p.a.dist(p.d) - 1.3).abs() < 1e-12);
            assert!((p.b.dist(p.c) - 1.3).abs() < 1e-12);
            if j + 1 < cfg.n_units() {
                let q = cfg.pins(j + 1);
                assert!(p.a.dist(q.c) < 1e-12);
                assert!(p.b.dist(q.d) < 1e-9);
            }
        }
    }
}

#[test]
fn uniform_chain_lies_on_a_circle() {
    for (alpha, psi) in [(0.6, 1.2), (0.35, 2.0), (0.8, 0.7)] {
        let cfg = assemble_chain(&ChainSpec::uniform(alpha, 12, 1.0).unwrap(), psi).unwrap();
        let radius = 1.0 / kappa_o(alpha, psi, 1.0);
        let center = cfg.centers[0] + Vec2::from_angle(cfg.headings[0]).perp() * radius;
        for c in &cfg.centers {
            assert!((c.dist(center) - radius.abs()).abs() < 1e-12, "{alpha} {psi}");
        }
    }
}

#[test]
fn segmented_tip_matches_unit_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 200 {
        let j = rng.random_range(1..=4);
        let sections: Vec<(usize, f64)> = (0..j)
            .map(|_| (rng.random_range(1..=30 / j), rng.random_range(0.4..0.6)))
            .collect();
        let l = rng.random_range(0.2..3.0);
        let psi = rng.random_range(0.3..2.8);
        if sections.iter().map(|s| s.0).sum::<usize>() < 2 {
            continue;
        }
        let spec = SectionedSpec::new(sections, l).unwrap();
        let Ok(direct) = assemble_chain(&spec.to_chain(), psi) else {
            assert!(tip_segmented(&spec, psi).is_err());
            continue;
        };
        let tip = tip_segmented(&spec, psi).unwrap();
        assert!(tip.dist(direct.tip()) < 1e-9 * l, "{spec:?} {psi}");
        let pivots = tip_segmented_pivots(&spec, psi).unwrap();
        assert!(pivots.dist(direct.tip()) < 1e-8 * l, "{spec:?} {psi}");
        checked += 1;
    }
}

#[test]
fn straight_section_is_collinear() {
    let spec = SectionedSpec::new(vec![(7, 0.5)], 1.0).unwrap();
    let traj = sweep_tip(&spec, 2.5, 0.5, 30).unwrap();
    for p in &traj.points {
        assert!(p.y.abs() < 1e-12);
    }
}

#[test]
fn reversed_grid_reverses_points() {
    let spec = SectionedSpec::new(vec![(3, 0.55), (4, 0.47)], 1.0).unwrap();
    let traj = sweep_tip(&spec, 2.5, 0.5, 21).unwrap();
    let mut back: Vec<Vec2> = traj
        .psi_grid
        .iter()
        .rev()
        .map(|&p| tip_segmented(&spec, p).unwrap())
        .collect();
    back.reverse();
    assert_eq!(back, traj.points);
}

#[test]
fn loops_tighten_away_from_symmetry() {
    let span = |alpha: f64| {
        let spec = SectionedSpec::new(vec![(5, alpha)], 1.0).unwrap();
        let t = sweep_tip(&spec, 2.5, 0.5, 50).unwrap();
        t.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    };
    assert!(span(0.52) > span(0.7));
}

#[test]
fn sweep_reports_the_failing_sample() {
    let spec = SectionedSpec::new(vec![(2, 0.5), (2, 0.85)], 1.0).unwrap();
    match sweep_tip(&spec, 3.0, 0.1, 30) {
        Err(scissor_core::Error::Sweep { index, .. }) => assert!(index < 30),
        other => panic!("expected a sweep error, got {other:?}"),
    }
}

#[test]
fn perturbation_halving_epsilon_quarters_error() {
    let err = |eps: f64| {
        let approx = perturbative_config(0.52, eps, 30, PI / 4.0, 1.0).unwrap();
        let exact = assemble_chain(&ChainSpec::new(approx.alphas.clone(), 1.0).unwrap(), PI / 4.0).unwrap();
        approx
            .centers
            .iter()
            .zip(&exact.centers)
            .map(|(a, b)| a.dist(*b))
            .fold(0.0, f64::max)
    };
    let ratio = err(1e-5) / err(5e-6);
    assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
}

proptest! {
    #[test]
    fn rigid_motion_equivariance(
        alphas in prop::collection::vec(0.42f64..0.58, 2..15),
        psi in 0.5f64..2.6,
        dx in -5.0f64..5.0,
        dy in -5.0f64..5.0,
        beta in -3.0f64..3.0,
    ) {
        let spec = ChainSpec::new(alphas, 1.0).unwrap();
        let Ok(base) = assemble_chain(&spec, psi) else { return Ok(()); };
        let moved = assemble_chain(&spec.clone().with_base(Vec2::new(dx, dy), beta), psi).unwrap();
        let shift = Vec2::new(dx, dy);
        for (a, b) in base.centers.iter().zip(&moved.centers) {
            prop_assert!((a.rotate(beta) + shift).dist(*b) < 1e-12 * (1.0 + a.norm()));
        }
        for (a, b) in base.orientations.iter().zip(&moved.orientations) {
            prop_assert!((a.0 + beta - b.0).abs() < 1e-12);
            prop_assert!((a.1 + beta - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn face_invariant_holds(alphas in prop::collection::vec(0.4f64..0.6, 2..20), psi in 0.3f64..2.8) {
        if let Ok(phis) = propagate_angles(&alphas, psi) {
            let g0 = alphas[0] * (1.0 - alphas[0]) * (psi / 2.0).cos().powi(2);
            for (a, p) in alphas.iter().zip(&phis) {
                let g = a * (1.0 - a) * (p / 2.0).cos().powi(2);
                prop_assert!((g - g0).abs() < 1e-12);
            }
        }
    }
}
