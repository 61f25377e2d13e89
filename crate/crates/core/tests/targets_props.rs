use std::f64::consts::PI;

use scissor_core::targets::*;
use scissor_core::Vec2;

fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy * sxy / (sxx * syy)
}

#[test]
fn spiral_curvature_is_linear_in_arc_length() {
    let curve = analytic_targets("spiral", &[("c".into(), 1.5)]).unwrap();
    let p = arclength_parameterize(&curve, 60).unwrap();
    assert!(r_squared(&p.s_grid, &p.kappa) > 0.999);
    let mid = p.kappa.len() / 2;
    assert!((p.kappa[mid] - 1.5 * p.s_grid[mid]).abs() < 0.02 * 1.5 * p.s_grid[mid]);
    assert!((p.total_length - 3.0).abs() < 1e-6);
}

#[test]
fn sine_curvature_follows_the_generator() {
    let curve = analytic_targets("sine", &[]).unwrap();
    let p = arclength_parameterize(&curve, 80).unwrap();
    for (s, k) in p.s_grid.iter().zip(&p.kappa).skip(8).take(60) {
        let want = 3.0 * (2.0 * PI * 1.5 * s / 3.0).sin();
        assert!((k - want).abs() < 0.1, "{s}: {k} vs {want}");
    }
}

#[test]
fn curvature_ignores_sample_spacing() {
    // same ellipse, uniform and clustered parameter samples
    let ellipse = |t: f64| Vec2::new(2.0 * t.cos(), t.sin());
    let uniform: Vec<Vec2> = (0..600).map(|i| ellipse(2.0 * PI * i as f64 / 600.0)).collect();
    let clustered: Vec<Vec2> = (0..600)
        .map(|i| {
            let u = i as f64 / 600.0;
            ellipse(2.0 * PI * (u + 0.05 * (2.0 * PI * u).sin()))
        })
        .collect();
    let a = arclength_parameterize(&TargetCurve::new(uniform, true).unwrap(), 50).unwrap();
    let b = arclength_parameterize(&TargetCurve::new(clustered, true).unwrap(), 50).unwrap();
    assert!((a.total_length - b.total_length).abs() < 1e-4);
    for (x, y) in a.kappa.iter().zip(&b.kappa) {
        assert!((x - y).abs() < 0.02, "{x} vs {y}");
    }
}

#[test]
fn curvature_is_rigid_invariant_and_scales_inversely() {
    let curve = analytic_targets("flower3", &[]).unwrap();
    let base = arclength_parameterize(&curve, 40).unwrap();
    let moved = TargetCurve::new(
        curve
            .points
            .iter()
            .map(|p| p.rotate(0.7) + Vec2::new(3.0, -1.0))
            .collect(),
        true,
    )
    .unwrap();
    let m = arclength_parameterize(&moved, 40).unwrap();
    for (x, y) in base.kappa.iter().zip(&m.kappa) {
        assert!((x - y).abs() < 1e-8);
    }
    let scaled = TargetCurve::new(curve.points.iter().map(|p| *p * 4.0).collect(), true).unwrap();
    let s = arclength_parameterize(&scaled, 40).unwrap();
    for (x, y) in base.kappa.iter().zip(&s.kappa) {
        assert!((x - 4.0 * y).abs() < 1e-8 * (1.0 + x.abs()));
    }
    assert_eq!(base.normalized_kappa().len(), 41);
}

#[test]
fn closed_profile_wraps() {
    let p = arclength_parameterize(&analytic_targets("circle", &[("R".into(), 2.0)]).unwrap(), 32).unwrap();
    assert!(p.nodes[0].dist(p.nodes[32]) < 1e-9);
    for k in &p.kappa {
        assert!((k - 0.5).abs() < 1e-3);
    }
}

#[test]
fn unknown_and_invalid_targets() {
    assert!(analytic_targets("heart", &[]).is_err());
    assert!(analytic_targets("circle", &[("R".into(), -1.0)]).is_err());
    assert!(analytic_targets("line", &[("n".into(), 3.0)]).is_err());
    assert!(arclength_parameterize(&analytic_targets("line", &[]).unwrap(), 2).is_err());
}
