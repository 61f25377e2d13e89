//! Target curves and their arc-length curvature profiles.
//!
//! Point lists are interpolated with cubic splines in the cumulative chord
//! length (not-a-knot ends for open curves, periodic for closed ones),
//! measured with Gauss-Legendre quadrature and resampled at uniform true arc
//! length. Counterclockwise traversal has positive curvature.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result, Vec2};

/// Points closer than this (relative to the curve extent) are duplicates.
const DUPLICATE_TOL: f64 = 1e-12;

/// An ordered planar point list.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetCurve {
    pub points: Vec<Vec2>,
    pub closed: bool,
}

impl TargetCurve {
    /// Validates the point list. For closed curves a repeated final point
    /// equal to the first one is dropped.
    pub fn new(mut points: Vec<Vec2>, closed: bool) -> Result<Self> {
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::target("non-finite coordinate"));
        }
        let extent = bbox(&points).map(|(lo, hi)| (hi.x - lo.x).max(hi.y - lo.y)).unwrap_or(0.0);
        let tol = DUPLICATE_TOL * extent.max(1.0);
        if closed && points.len() > 1 && points[0].dist(points[points.len() - 1]) <= tol {
            points.pop();
        }
        if points.len() < 4 {
            return Err(Error::target(format!("need at least 4 points, got {}", points.len())));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[0].dist(w[1]) <= tol {
                return Err(Error::target(format!("points {i} and {} coincide", i + 1)));
            }
        }
        Ok(TargetCurve { points, closed })
    }
}

fn bbox(points: &[Vec2]) -> Option<(Vec2, Vec2)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| {
        (
            Vec2::new(lo.x.min(p.x), lo.y.min(p.y)),
            Vec2::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    }))
}

/// Isotropic scale and translation into the unit box `[0, 1]^2`: the longer
/// side spans exactly 1 and the lower-left corner moves to the origin.
pub fn normalize_bbox(curve: &TargetCurve) -> Result<TargetCurve> {
    let (lo, hi) = bbox(&curve.points).ok_or_else(|| Error::target("empty curve"))?;
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    if !(extent > 0.0) {
        return Err(Error::target("curve has zero extent"));
    }
    let points = curve.points.iter().map(|&p| (p - lo) * (1.0 / extent)).collect();
    Ok(TargetCurve {
        points,
        closed: curve.closed,
    })
}

/// A target resampled at `m + 1` uniformly spaced arc-length stations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArcLengthProfile {
    /// `s_j = j L / m`, `j = 0..=m`.
    pub s_grid: Vec<f64>,
    /// Smoothed signed curvature at each station.
    pub kappa: Vec<f64>,
    pub nodes: Vec<Vec2>,
    pub total_length: f64,
    /// Tangent angle at `s = 0`.
    pub initial_tangent: f64,
    pub closed: bool,
}

impl ArcLengthProfile {
    pub fn spacing(&self) -> f64 {
        self.total_length / (self.s_grid.len() - 1) as f64
    }

    /// Curvature made dimensionless with the total length, `kappa * L`.
    pub fn normalized_kappa(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| k * self.total_length).collect()
    }
}

/// Second derivatives of a not-a-knot cubic spline through `(t, y)` (the
/// third derivative is continuous at the second and second-to-last knots).
fn open_moments(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = (0..n - 1).map(|i| t[i + 1] - t[i]).collect();
    let k = n - 2;
    let mut a = vec![0.0; k];
    let mut b = vec![0.0; k];
    let mut c = vec![0.0; k];
    let mut r = vec![0.0; k];
    for row in 0..k {
        let i = row + 1;
        a[row] = h[i - 1];
        b[row] = 2.0 * (h[i - 1] + h[i]);
        c[row] = h[i];
        r[row] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    // Eliminate M_0 = M_1 (1 + h0/h1) - (h0/h1) M_2 and the mirror image at
    // the far end.
    let q0 = h[0] / h[1];
    b[0] += h[0] * (1.0 + q0);
    c[0] -= h[0] * q0;
    let q1 = h[n - 2] / h[n - 3];
    b[k - 1] += h[n - 2] * (1.0 + q1);
    a[k - 1] -= h[n - 2] * q1;
    let inner = solve_tridiagonal(&a, &b, &c, &r);
    let mut m = Vec::with_capacity(n);
    m.push(inner[0] * (1.0 + q0) - q0 * inner[1.min(k - 1)]);
    m.extend_from_slice(&inner);
    m.push(inner[k - 1] * (1.0 + q1) - q1 * inner[k.saturating_sub(2)]);
    m
}

/// Second derivatives of a periodic cubic spline. `t` has `n + 1` knots with
/// `y[n] == y[0]`.
fn periodic_moments(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len() - 1;
    let h: Vec<f64> = (0..n).map(|i| t[i + 1] - t[i]).collect();
    let d: Vec<f64> = (0..n).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    // Row i (knot i, cyclic): h_{i-1} M_{i-1} + 2 (h_{i-1} + h_i) M_i + h_i M_{i+1}
    //   = 6 (d_i - d_{i-1}).
    let prev = |i: usize| if i == 0 { n - 1 } else { i - 1 };
    let a: Vec<f64> = (0..n).map(|i| h[prev(i)]).collect();
    let b: Vec<f64> = (0..n).map(|i| 2.0 * (h[prev(i)] + h[i])).collect();
    let c: Vec<f64> = h.clone();
    let r: Vec<f64> = (0..n).map(|i| 6.0 * (d[i] - d[prev(i)])).collect();
    let mut m = solve_cyclic(&a, &b, &c, &r);
    m.push(m[0]);
    m
}

/// Cyclic tridiagonal solve via Sherman-Morrison.
fn solve_cyclic(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Vec<f64> {
    let n = b.len();
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= a[0] * c[n - 1] / gamma;
    let x = solve_tridiagonal(a, &bb, c, r);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = c[n - 1];
    let z = solve_tridiagonal(a, &bb, c, &u);
    let fact = (x[0] + a[0] * x[n - 1] / gamma) / (1.0 + z[0] + a[0] * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = r[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (r[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Planar cubic spline in a chord-length parameter.
#[derive(Debug, Clone)]
pub struct Spline {
    t: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    mx: Vec<f64>,
    my: Vec<f64>,
    /// Arc length from the start to each knot.
    arc: Vec<f64>,
}

impl Spline {
    pub fn new(curve: &TargetCurve) -> Result<Self> {
        let mut pts = curve.points.clone();
        if curve.closed {
            pts.push(pts[0]);
        }
        let mut t = Vec::with_capacity(pts.len());
        t.push(0.0);
        for w in pts.windows(2) {
            let h = w[0].dist(w[1]);
            if !(h > 0.0) {
                return Err(Error::target("duplicate spline parameter"));
            }
            t.push(t[t.len() - 1] + h);
        }
        let x: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.y).collect();
        let (mx, my) = if curve.closed {
            (periodic_moments(&t, &x), periodic_moments(&t, &y))
        } else {
            (open_moments(&t, &x), open_moments(&t, &y))
        };
        let mut s = Spline {
            t,
            x,
            y,
            mx,
            my,
            arc: Vec::new(),
        };
        let mut arc = Vec::with_capacity(s.t.len());
        arc.push(0.0);
        for i in 0..s.t.len() - 1 {
            let len = s.segment_length(i, s.t[i + 1]);
            arc.push(arc[i] + len);
        }
        s.arc = arc;
        Ok(s)
    }

    pub fn length(&self) -> f64 {
        self.arc[self.arc.len() - 1]
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.t.len() - 1;
        match self.t.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Position and first two derivatives at parameter `t`.
    pub fn eval(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let i = self.segment(t);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - t) / h;
        let b = (t - self.t[i]) / h;
        let comp = |v: &[f64], m: &[f64]| {
            let val = a * v[i] + b * v[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
            let d1 = (v[i + 1] - v[i]) / h - (3.0 * a * a - 1.0) * h * m[i] / 6.0
                + (3.0 * b * b - 1.0) * h * m[i + 1] / 6.0;
            let d2 = a * m[i] + b * m[i + 1];
            (val, d1, d2)
        };
        let (x, dx, ddx) = comp(&self.x, &self.mx);
        let (y, dy, ddy) = comp(&self.y, &self.my);
        (Vec2::new(x, y), Vec2::new(dx, dy), Vec2::new(ddx, ddy))
    }

    /// Signed curvature at parameter `t`.
    pub fn curvature(&self, t: f64) -> f64 {
        let (_, d1, d2) = self.eval(t);
        d1.cross(d2) / libm::pow(d1.norm_sq(), 1.5)
    }

    fn speed(&self, t: f64) -> f64 {
        self.eval(t).1.norm()
    }

    /// Arc length along segment `i` from its start knot to `t`.
    fn segment_length(&self, i: usize, t: f64) -> f64 {
        let (t0, t1) = (self.t[i], t);
        // Two Gauss panels per segment.
        let mut total = 0.0;
        for p in 0..2 {
            let lo = t0 + (t1 - t0) * p as f64 / 2.0;
            let hi = t0 + (t1 - t0) * (p + 1) as f64 / 2.0;
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (xg, wg) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
                total += wg * half * self.speed(mid + half * xg);
            }
        }
        total
    }

    /// Parameter at arc length `s` from the start.
    pub fn param_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let i = match self.arc.binary_search_by(|k| k.total_cmp(&s)) {
            Ok(i) => return self.t[i],
            Err(i) => i.saturating_sub(1).min(self.t.len() - 2),
        };
        let (mut lo, mut hi) = (self.t[i], self.t[i + 1]);
        let target = s - self.arc[i];
        let mut t = lo + (hi - lo) * target / (self.arc[i + 1] - self.arc[i]);
        for _ in 0..50 {
            let f = self.segment_length(i, t) - target;
            if f.abs() < 1e-14 * self.length().max(1.0) {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let step = t - f / self.speed(t);
            t = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        }
        t
    }
}

/// Default Gaussian smoothing bandwidth, in units of the mean spacing of the
/// input points.
pub const DEFAULT_SMOOTHING_SPACINGS: f64 = 2.0;

/// [`arclength_parameterize_with`] with the default smoothing.
pub fn arclength_parameterize(curve: &TargetCurve, m: usize) -> Result<ArcLengthProfile> {
    arclength_parameterize_with(curve, m, None)
}

/// Resamples `curve` at `m + 1` uniform arc-length stations.
///
/// Curvature is the spline curvature on a dense uniform grid (at least four
/// samples per input segment), smoothed with a Gaussian of arc-length
/// bandwidth `smoothing` and read off at the stations. The default
/// bandwidth is two input point spacings; `Some(0.0)` disables smoothing.
/// For closed curves the last station coincides with the first.
pub fn arclength_parameterize_with(
    curve: &TargetCurve,
    m: usize,
    smoothing: Option<f64>,
) -> Result<ArcLengthProfile> {
    if m < 3 {
        return Err(Error::target(format!("need at least 3 segments, got {m}")));
    }
    let spline = Spline::new(curve)?;
    let total = spline.length();
    let segments = spline.t.len() - 1;
    let refine = (4 * segments).div_ceil(m).max(1);
    let dense = m * refine;
    let h = total / dense as f64;
    let mut params = Vec::with_capacity(dense + 1);
    for i in 0..=dense {
        let s = if i == dense { total } else { h * i as f64 };
        params.push(spline.param_at(s));
    }
    let mut raw: Vec<f64> = params.iter().map(|&t| spline.curvature(t)).collect();
    if curve.closed {
        raw[dense] = raw[0];
    }
    let sigma = smoothing.unwrap_or(DEFAULT_SMOOTHING_SPACINGS * total / segments as f64);
    let smooth = gaussian_smooth(&raw, h, sigma, curve.closed);
    let ds = total / m as f64;
    let mut s_grid = Vec::with_capacity(m + 1);
    let mut nodes = Vec::with_capacity(m + 1);
    let mut kappa = Vec::with_capacity(m + 1);
    for j in 0..=m {
        s_grid.push(if j == m { total } else { ds * j as f64 });
        nodes.push(spline.eval(params[j * refine]).0);
        kappa.push(smooth[j * refine]);
    }
    if curve.closed {
        nodes[m] = nodes[0];
    }
    let d1 = spline.eval(0.0).1;
    Ok(ArcLengthProfile {
        s_grid,
        kappa,
        nodes,
        total_length: total,
        initial_tangent: d1.angle(),
        closed: curve.closed,
    })
}

/// Gaussian smoothing of samples on a uniform grid with spacing `ds`.
///
/// Closed sequences (last sample equal to the first) wrap around; open ones
/// renormalize the truncated kernel at the ends.
pub fn gaussian_smooth(values: &[f64], ds: f64, sigma: f64, closed: bool) -> Vec<f64> {
    if !(sigma > 0.0) || values.len() < 2 {
        return values.to_vec();
    }
    let width = sigma / ds;
    let reach = libm::ceil(4.0 * width) as isize;
    let kernel: Vec<f64> = (-reach..=reach)
        .map(|k| libm::exp(-0.5 * (k as f64 / width) * (k as f64 / width)))
        .collect();
    let n = values.len();
    let period = if closed { n - 1 } else { n };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (w, k) in kernel.iter().zip(-reach..=reach) {
            let j = i as isize + k;
            let idx = if closed {
                j.rem_euclid(period as isize) as usize
            } else if j < 0 || j >= n as isize {
                continue;
            } else {
                j as usize
            };
            acc += w * values[idx];
            wsum += w;
        }
        out.push(acc / wsum);
    }
    if closed {
        out[n - 1] = out[0];
    }
    out
}

/// Signed curvature of uniformly spaced nodes by central differences,
/// followed by Gaussian smoothing of arc-length bandwidth `smoothing`.
///
/// Closed node lists (last node equal to the first) wrap the stencil; open
/// ones use second-order one-sided stencils at the ends.
pub fn curvature_profile(nodes: &[Vec2], closed: bool, smoothing: f64) -> Result<Vec<f64>> {
    let n = nodes.len();
    if n < 5 {
        return Err(Error::target(format!("curvature needs at least 5 nodes, got {n}")));
    }
    let (d1, d2) = if closed {
        let period = n - 1;
        let at = |i: isize| nodes[i.rem_euclid(period as isize) as usize];
        (0..n)
            .map(|i| {
                let i = i as isize;
                let (p, c, q) = (at(i - 1), at(i), at(i + 1));
                ((q - p) * 0.5, p + q - c * 2.0)
            })
            .unzip::<_, _, Vec<_>, Vec<_>>()
    } else {
        (0..n)
            .map(|i| differences_open(nodes, i))
            .unzip::<_, _, Vec<_>, Vec<_>>()
    };
    let raw: Vec<f64> = d1
        .iter()
        .zip(&d2)
        .map(|(a, b)| a.cross(*b) / libm::pow(a.norm_sq(), 1.5))
        .collect();
    let ds: f64 = nodes.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>() / (n - 1) as f64;
    Ok(gaussian_smooth(&raw, ds, smoothing, closed))
}

fn differences_open(p: &[Vec2], i: usize) -> (Vec2, Vec2) {
    let n = p.len();
    if i == 0 {
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
    }
}

/// Curvature of the graph `y = f(x)` from `f'` and `f''`.
pub fn graph_curvature(dy: f64, d2y: f64) -> f64 {
    d2y / libm::pow(1.0 + dy * dy, 1.5)
}

/// Named parameters for [`analytic_targets`].
pub type TargetParams = [(String, f64)];

fn param(params: &TargetParams, key: &str, default: f64) -> f64 {
    params
        .iter()
        .rev()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .unwrap_or(default)
}

/// Names accepted by [`analytic_targets`].
pub const ANALYTIC_NAMES: [&str; 5] = ["line", "circle", "spiral", "sine", "flower3"];

/// Densely sampled analytic target families.
///
/// | name      | parameters (defaults)                  | curve |
/// |-----------|----------------------------------------|-------|
/// | `line`    | `length` (1)                           | segment along +x |
/// | `circle`  | `R` (1)                                | closed, counterclockwise |
/// | `spiral`  | `c` (1), `length` (3)                  | clothoid, `kappa(s) = c s` |
/// | `sine`    | `amplitude` (3), `waves` (1.5), `length` (3) | `kappa(s) = A sin(2 pi w s / L)` |
/// | `flower3` | `a` (1), `b` (0.3)                     | closed, `r = a (1 + b cos 3 theta)` |
///
/// Every family also accepts `n`, the number of samples (default 1000).
pub fn analytic_targets(name: &str, params: &TargetParams) -> Result<TargetCurve> {
    let n = param(params, "n", 1000.0);
    if !(n >= 8.0) {
        return Err(Error::target("`n` must be at least 8"));
    }
    let n = n as usize;
    match name {
        "line" => {
            let len = positive(params, "length", 1.0)?;
            let pts = (0..n).map(|i| Vec2::new(len * i as f64 / (n - 1) as f64, 0.0)).collect();
            TargetCurve::new(pts, false)
        }
        "circle" => {
            let r = positive(params, "R", 1.0)?;
            let pts = (0..n)
                .map(|i| Vec2::from_angle(2.0 * PI * i as f64 / n as f64) * r)
                .collect();
            TargetCurve::new(pts, true)
        }
        "spiral" => {
            let c = param(params, "c", 1.0);
            let len = positive(params, "length", 3.0)?;
            Ok(integrate_intrinsic(|s| 0.5 * c * s * s, len, n))
        }
        "sine" => {
            let amp = param(params, "amplitude", 3.0);
            let waves = param(params, "waves", 1.5);
            let len = positive(params, "length", 3.0)?;
            let k = 2.0 * PI * waves / len;
            // theta(s) = integral of A sin(k s) = A (1 - cos(k s)) / k
            let theta = move |s: f64| {
                if k == 0.0 {
                    0.0
                } else {
                    amp * (1.0 - libm::cos(k * s)) / k
                }
            };
            Ok(integrate_intrinsic(theta, len, n))
        }
        "flower3" => {
            let a = positive(params, "a", 1.0)?;
            let b = param(params, "b", 0.3);
            if !(0.0..1.0).contains(&b) {
                return Err(Error::target("flower3 needs 0 <= b < 1"));
            }
            let pts = (0..n)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / n as f64;
                    Vec2::from_angle(th) * (a * (1.0 + b * libm::cos(3.0 * th)))
                })
                .collect();
            TargetCurve::new(pts, true)
        }
        other => Err(Error::target(format!(
            "unknown target `{other}` (known: {})",
            ANALYTIC_NAMES.join(", ")
        ))),
    }
}

fn positive(params: &TargetParams, key: &str, default: f64) -> Result<f64> {
    let v = param(params, key, default);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::target(format!("`{key}` must be positive, got {v}")))
    }
}

/// Curve with tangent angle `theta(s)` starting at the origin, sampled at
/// `n` uniform arc-length stations. Positions use Simpson's rule on each
/// interval.
fn integrate_intrinsic(theta: impl Fn(f64) -> f64, length: f64, n: usize) -> TargetCurve {
    let h = length / (n - 1) as f64;
    let mut p = Vec2::new(0.0, 0.0);
    let mut pts = Vec::with_capacity(n);
    pts.push(p);
    for i in 0..n - 1 {
        let s0 = h * i as f64;
        let t = |s: f64| Vec2::from_angle(theta(s));
        let step = (t(s0) + t(s0 + 0.5 * h) * 4.0 + t(s0 + h)) * (h / 6.0);
        p = p + step;
        pts.push(p);
    }
    TargetCurve {
        points: pts,
        closed: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, r: f64, c: Vec2) -> TargetCurve {
        let pts = (0..n)
            .map(|i| c + Vec2::from_angle(2.0 * PI * i as f64 / n as f64) * r)
            .collect();
        TargetCurve::new(pts, true).unwrap()
    }

    #[test]
    fn rejects_short_and_duplicate_inputs() {
        let p = |x: f64, y: f64| Vec2::new(x, y);
        assert!(TargetCurve::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)], false).is_err());
        let dup = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)];
        assert!(TargetCurve::new(dup, false).is_err());
        let ring = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(0.0, 0.0)];
        assert_eq!(TargetCurve::new(ring, true).unwrap().points.len(), 4);
    }

    #[test]
    fn unit_box_is_unchanged() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let c = TargetCurve::new(pts.clone(), true).unwrap();
        assert_eq!(normalize_bbox(&c).unwrap().points, pts);
    }

    #[test]
    fn circle_normalizes_to_unit_diameter() {
        let c = normalize_bbox(&circle(400, 5.0, Vec2::new(-3.0, 7.0))).unwrap();
        let (lo, hi) = bbox(&c.points).unwrap();
        assert!(lo.x.abs() < 1e-12 && lo.y.abs() < 1e-12);
        assert!((hi.x - 1.0).abs() < 1e-12);
        assert!((hi.y - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ellipse_keeps_aspect() {
        let pts = (0..300)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 300.0;
                Vec2::new(2.0 * libm::cos(t) + 4.0, libm::sin(t))
            })
            .collect();
        let c = normalize_bbox(&TargetCurve::new(pts, true).unwrap()).unwrap();
        let (lo, hi) = bbox(&c.points).unwrap();
        assert!((hi.x - lo.x - 1.0).abs() < 1e-12);
        assert!((hi.y - lo.y - 0.5).abs() < 1e-3);
    }

    #[test]
    fn degenerate_extent_is_rejected() {
        let pts = vec![Vec2::new(1.0, 1.0); 4];
        let c = TargetCurve {
            points: pts,
            closed: false,
        };
        assert!(normalize_bbox(&c).is_err());
    }

    #[test]
    fn circle_circumference() {
        let p = arclength_parameterize(&circle(1000, 1.0, Vec2::new(0.0, 0.0)), 100).unwrap();
        assert!((p.total_length - 2.0 * PI).abs() < 1e-4, "{}", p.total_length);
        for k in &p.kappa {
            assert!((k - 1.0).abs() < 1e-4);
        }
        assert_eq!(p.nodes[0], p.nodes[100]);
    }

    #[test]
    fn straight_segment_stations() {
        let pts = (0..7).map(|i| Vec2::new(0.5 * i as f64, 0.0)).collect();
        let p = arclength_parameterize(&TargetCurve::new(pts, false).unwrap(), 3).unwrap();
        for (j, node) in p.nodes.iter().enumerate() {
            assert!((node.x - j as f64).abs() < 1e-12 && node.y.abs() < 1e-12);
            assert!((p.s_grid[j] - j as f64).abs() < 1e-12);
        }
        assert!(p.kappa.iter().all(|k| k.abs() < 1e-12));
    }

    #[test]
    fn open_spline_reproduces_cubics() {
        let pts = (0..6)
            .map(|i| {
                let x = i as f64;
                Vec2::new(x, 0.1 * x * x * x - x)
            })
            .collect();
        let curve = TargetCurve::new(pts, false).unwrap();
        let s = Spline::new(&curve).unwrap();
        // A cubic in x is not a cubic in chord length, but the end curvature
        // must not be forced to zero.
        assert!(s.curvature(0.0).abs() > 1e-3);
        let last = s.t[s.t.len() - 1];
        assert!(s.curvature(last).abs() > 1e-3);
    }

    #[test]
    fn spline_is_periodic() {
        let s = Spline::new(&circle(12, 1.0, Vec2::new(0.0, 0.0))).unwrap();
        let (_, d0, dd0) = s.eval(0.0);
        let (_, d1, dd1) = s.eval(s.t[s.t.len() - 1]);
        assert!((d0 - d1).norm() < 1e-12);
        assert!((dd0 - dd1).norm() < 1e-12);
    }

    #[test]
    fn discrete_curvature_of_circle_and_line() {
        let nodes: Vec<Vec2> = (0..=64)
            .map(|i| Vec2::from_angle(2.0 * PI * i as f64 / 64.0) * 2.0)
            .collect();
        let k = curvature_profile(&nodes, true, 0.0).unwrap();
        assert!(k.iter().all(|k| (k - 0.5).abs() < 0.005));
        let line: Vec<Vec2> = (0..10).map(|i| Vec2::new(i as f64, 2.0 * i as f64)).collect();
        let k = curvature_profile(&line, false, 0.3).unwrap();
        assert!(k.iter().all(|k| k.abs() < 1e-12));
        assert!(curvature_profile(&line[..4], false, 0.0).is_err());
    }

    #[test]
    fn parabola_vertex() {
        assert_eq!(graph_curvature(0.0, 1.0), 1.0);
        let nodes: Vec<Vec2> = (-200..=200)
            .map(|i| {
                let x = i as f64 * 1e-3;
                Vec2::new(x, 0.5 * x * x)
            })
            .collect();
        let k = curvature_profile(&nodes, false, 0.0).unwrap();
        assert!((k[200] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn analytic_names() {
        for name in ANALYTIC_NAMES {
            assert!(analytic_targets(name, &[]).is_ok(), "{name}");
        }
        assert!(analytic_targets("heart", &[]).is_err());
        assert!(analytic_targets("circle", &[("R".into(), -1.0)]).is_err());
    }
}
