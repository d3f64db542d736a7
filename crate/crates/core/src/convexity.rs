//! Sinusoidal convexity along geodesics, one-sided gradients and the
//! fiber curvature bounds `κ_F`.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::comparison::Kind;
use crate::metric::{CatalogSpace, MetricOracle, Point};
use crate::model::{angle_at, opposite_side, Curvature};
use crate::warp::{bounded_range, WarpFunction};
use crate::warped::WarpedTriple;

/// Nodes per sampled geodesic in the two-point test.
const NODES: usize = 32;

/// Steps of the one-sided difference table.
const RIDDERS_STEPS: usize = 7;

const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexityError {
    #[error("no geodesics available on {0}")]
    NoGeodesics(String),
    #[error("no admissible step from {0:?}")]
    StepUnderflow(Point),
    #[error("the vanishing set of f is empty")]
    ZEmpty,
    #[error("unsupported base {0}")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    Convex,
    Concave,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    Convex,
    Concave,
    Both,
    Neither,
}

impl Classification {
    fn from_flags(convex: bool, concave: bool) -> Self {
        match (convex, concave) {
            (true, true) => Classification::Both,
            (true, false) => Classification::Convex,
            (false, true) => Classification::Concave,
            (false, false) => Classification::Neither,
        }
    }

    pub fn includes(self, mode: Mode) -> bool {
        matches!(
            (self, mode),
            (Classification::Both, _)
                | (Classification::Convex, Mode::Convex)
                | (Classification::Concave, Mode::Concave)
        )
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Convex => "convex",
            Classification::Concave => "concave",
            Classification::Both => "both",
            Classification::Neither => "neither",
        })
    }
}

/// Outcome of the two-point sinusoid test.
///
/// Violations are the largest amounts by which `f∘γ` exceeds (convex) or
/// falls below (concave) the two-point sinusoid, clamped at zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityVerdict {
    pub classification: Classification,
    pub mode: Mode,
    pub passed: bool,
    pub worst_violation: f64,
    pub convex_violation: f64,
    pub concave_violation: f64,
    /// Classification from second differences at the node spacing.
    pub tangential: Classification,
    pub geodesics_tested: usize,
    /// Subintervals of length `≥ ϖ^κ`, which have no two-point sinusoid.
    pub skipped: usize,
    pub tol: f64,
}

#[derive(Default)]
struct Tally {
    convex: f64,
    concave: f64,
    tan_convex: f64,
    tan_concave: f64,
    skipped: usize,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.convex = self.convex.max(o.convex);
        self.concave = self.concave.max(o.concave);
        self.tan_convex = self.tan_convex.max(o.tan_convex);
        self.tan_concave = self.tan_concave.max(o.tan_concave);
        self.skipped += o.skipped;
        self
    }
}

/// Solution of `y'' + κy = 0` on `[0, ℓ]` with `y(0) = a`, `y(ℓ) = b`, at `s`.
pub fn two_point_sinusoid(kappa: Curvature, a: f64, b: f64, ell: f64, s: f64) -> Option<f64> {
    if kappa.value() > 0.0 && ell >= kappa.varpi() * (1.0 - 1e-9) {
        return None;
    }
    let den = kappa.sn(ell);
    if den <= 0.0 {
        return None;
    }
    Some((a * kappa.sn(ell - s) + b * kappa.sn(s)) / den)
}

fn scan_geodesic(kappa: Curvature, s: &[f64], v: &[f64]) -> Tally {
    let mut t = Tally::default();
    let n = s.len();
    for i in 0..n {
        for j in (i + 2)..n {
            let ell = s[j] - s[i];
            let Some(_) = two_point_sinusoid(kappa, v[i], v[j], ell, 0.0) else {
                t.skipped += 1;
                continue;
            };
            for m in (i + 1)..j {
                let y = two_point_sinusoid(kappa, v[i], v[j], ell, s[m] - s[i]).unwrap_or(v[m]);
                t.convex = t.convex.max(v[m] - y);
                t.concave = t.concave.max(y - v[m]);
            }
        }
    }
    for m in 1..n.saturating_sub(1) {
        let (h1, h2) = (s[m] - s[m - 1], s[m + 1] - s[m]);
        if h1 <= 0.0 || h2 <= 0.0 {
            continue;
        }
        let second = 2.0 * ((v[m + 1] - v[m]) / h2 - (v[m] - v[m - 1]) / h1) / (h1 + h2);
        let defect = (second + kappa.value() * v[m]) * 0.5 * h1 * h2;
        t.tan_convex = t.tan_convex.max(-defect);
        t.tan_concave = t.tan_concave.max(defect);
    }
    t
}

/// Two-point sinusoid test of `f` along `n_geodesics` sampled geodesics of `space`.
pub fn sinusoidal_test_on<S, F>(
    space: &S,
    f: F,
    kappa: Curvature,
    mode: Mode,
    n_geodesics: usize,
    seed: u64,
    tol: f64,
) -> Result<ConvexityVerdict, ConvexityError>
where
    S: MetricOracle + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    let pts = space.sample(2 * n_geodesics, seed);
    let tallies: Vec<Option<Tally>> = (0..n_geodesics)
        .into_par_iter()
        .map(|g| {
            let (x, y) = (&pts[2 * g], &pts[2 * g + 1]);
            let d = space.distance(x, y);
            if d <= 0.0 {
                return Some(Tally::default());
            }
            let geo = space.geodesic(x, y, d / NODES as f64)?;
            let mut s = Vec::with_capacity(geo.len());
            let mut acc = 0.0;
            for (k, p) in geo.points.iter().enumerate() {
                if k > 0 {
                    acc += space.distance(&geo.points[k - 1], p);
                }
                s.push(acc);
            }
            let v: Vec<f64> = geo.points.iter().map(|p| f(p)).collect();
            Some(scan_geodesic(kappa, &s, &v))
        })
        .collect();
    let mut total = Tally::default();
    let mut tested = 0;
    for t in tallies {
        let t = t.ok_or_else(|| ConvexityError::NoGeodesics(space.label()))?;
        total = total.merge(t);
        tested += 1;
    }
    let classification = Classification::from_flags(total.convex <= tol, total.concave <= tol);
    let worst_violation = match mode {
        Mode::Convex => total.convex,
        Mode::Concave => total.concave,
    };
    Ok(ConvexityVerdict {
        classification,
        mode,
        passed: classification.includes(mode),
        worst_violation,
        convex_violation: total.convex,
        concave_violation: total.concave,
        tangential: Classification::from_flags(total.tan_convex <= tol, total.tan_concave <= tol),
        geodesics_tested: tested,
        skipped: total.skipped,
        tol,
    })
}

/// [`sinusoidal_test_on`] for a warping function on its base.
pub fn sinusoidal_test(
    f: &WarpFunction,
    base: &CatalogSpace,
    kappa: Curvature,
    mode: Mode,
    n_geodesics: usize,
    seed: u64,
    tol: f64,
) -> Result<ConvexityVerdict, ConvexityError> {
    sinusoidal_test_on(base, |x| f.eval(x), kappa, mode, n_geodesics, seed, tol)
}

/// Direction of the gradient estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GradientSide {
    /// `|∇_p f|`.
    Up,
    /// `|∇_p(−f)|`.
    Down,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub point: Point,
    pub value: f64,
    pub directions_sampled: usize,
}

/// Point at distance `h` from `p` along direction `dir`.
///
/// On 1-D bases `dir` is `±1`; on model disks it is the angle from the
/// outward radial direction, counterclockwise.
pub fn step(base: &CatalogSpace, p: &[f64], dir: f64, h: f64) -> Option<Point> {
    match *base {
        CatalogSpace::Interval { a, b } => {
            let x = p[0] + dir * h;
            (x >= a && x <= b).then(|| vec![x])
        }
        CatalogSpace::Ray => {
            let x = p[0] + dir * h;
            (x >= 0.0).then(|| vec![x])
        }
        CatalogSpace::Line => Some(vec![p[0] + dir * h]),
        CatalogSpace::Circle { length } => Some(vec![(p[0] + dir * h).rem_euclid(length)]),
        CatalogSpace::ModelDisk { kappa, radius } => {
            let k = Curvature::new(kappa).ok()?;
            if kappa > 0.0 && p[0] + h >= 0.5 * k.varpi() {
                return None;
            }
            let (r, theta) = (p[0], p[1]);
            let out = if r <= 1e-14 {
                vec![h, (theta + dir).rem_euclid(2.0 * PI)]
            } else {
                let psi = (dir + PI).rem_euclid(2.0 * PI) - PI;
                let r2 = opposite_side(k, r, h, PI - psi.abs()).ok()?;
                let dth = if r2 <= 1e-14 { 0.0 } else { angle_at(k, r, r2, h).value().unwrap_or(0.0) };
                vec![r2, (theta + psi.signum() * dth).rem_euclid(2.0 * PI)]
            };
            (out[0] <= radius * (1.0 + 1e-12)).then_some(out)
        }
        _ => None,
    }
}

/// Geodesic directions at `p` in the encoding of [`step`].
pub fn directions(base: &CatalogSpace, n_dirs: usize) -> Vec<f64> {
    match base {
        CatalogSpace::ModelDisk { .. } => {
            let n = n_dirs.max(4);
            (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
        }
        _ => vec![1.0, -1.0],
    }
}

/// Richardson-extrapolated derivative at 0 of `g` from one-sided
/// differences with steps `h0·2^{−k}`; `None` when no step is admissible.
pub fn one_sided_derivative<G: Fn(f64) -> Option<f64>>(g: G, h0: f64) -> Option<f64> {
    let g0 = g(0.0)?;
    let mut h = h0;
    while g(h).is_none() {
        h *= 0.5;
        if h < MIN_STEP {
            return None;
        }
    }
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(RIDDERS_STEPS);
    let mut best = (f64::INFINITY, f64::NAN);
    for k in 0..RIDDERS_STEPS {
        let hk = h / (1u64 << k) as f64;
        let Some(gk) = g(hk) else { break };
        let mut row = vec![(gk - g0) / hk];
        for j in 1..=k {
            let fac = ((1u64 << j) - 1) as f64;
            let v = row[j - 1] + (row[j - 1] - table[k - 1][j - 1]) / fac;
            let err = (v - row[j - 1]).abs().max((v - table[k - 1][j - 1]).abs());
            if err <= best.0 {
                best = (err, v);
            }
            row.push(v);
        }
        if k == 0 {
            best = (f64::INFINITY, row[0]);
        }
        table.push(row);
    }
    Some(best.1)
}

/// Sup over sampled directions of the positive part of the one-sided
/// derivative of `f` (side `Up`) or `−f` (side `Down`).
pub fn gradient_norm<F: Fn(&[f64]) -> f64>(
    f: F,
    base: &CatalogSpace,
    p: &[f64],
    side: GradientSide,
    n_dirs: usize,
    h0: f64,
) -> Result<GradientEstimate, ConvexityError> {
    if matches!(base, CatalogSpace::Finite(_) | CatalogSpace::Point) {
        return Err(ConvexityError::Unsupported(base.to_string()));
    }
    let sign = match side {
        GradientSide::Up => 1.0,
        GradientSide::Down => -1.0,
    };
    let mut value: f64 = 0.0;
    let mut sampled = 0;
    for dir in directions(base, n_dirs) {
        let g = |h: f64| step(base, p, dir, h).map(|q| sign * f(&q));
        if let Some(d) = one_sided_derivative(g, h0) {
            value = value.max(d);
            sampled += 1;
        }
    }
    if sampled == 0 {
        return Err(ConvexityError::StepUnderflow(p.to_vec()));
    }
    Ok(GradientEstimate { point: p.to_vec(), value, directions_sampled: sampled })
}

/// A sampled `dist_Z`-realizer: the footpoint, the direction leaving it,
/// a probe point at distance `probe_distance`, and `(f∘α)⁺(0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Realizer {
    pub footpoint: Point,
    pub direction: f64,
    pub probe: Point,
    pub probe_distance: f64,
    pub derivative: f64,
}

fn dist_to(base: &CatalogSpace, zs: &[Point], p: &[f64]) -> f64 {
    zs.iter().map(|z| base.distance(z, p)).fold(f64::INFINITY, f64::min)
}

fn probe_scale(base: &CatalogSpace) -> f64 {
    let (lo, hi) = bounded_range(base);
    (0.05 * (hi - lo)).min(0.1)
}

/// `(footpoint, direction, probe)`.
type Seed = (Point, f64, Point);

/// Footpoint/direction pairs leaving `Z`, with the probe at distance `delta`.
fn realizer_seeds(
    f: &WarpFunction,
    base: &CatalogSpace,
    n: usize,
    delta: f64,
) -> Result<(Vec<Seed>, Vec<Point>), ConvexityError> {
    let zero = f.zero_set(base);
    if zero.is_empty() {
        return Err(ConvexityError::ZEmpty);
    }
    let zs = zero.sample(base, 256);
    let mut out = Vec::new();
    for z in &zero.points {
        for dir in directions(base, n) {
            if let Some(p) = step(base, z, dir, delta) {
                out.push((z.clone(), dir, p));
            }
        }
    }
    if let CatalogSpace::ModelDisk { radius, .. } = *base {
        for &(t0, t1) in &zero.arcs {
            let span = (t1 - t0).clamp(0.0, 2.0 * PI);
            let m = n.max(2);
            for i in 0..m {
                let th = (t0 + span * (i as f64 + 0.5) / m as f64).rem_euclid(2.0 * PI);
                let z = vec![radius, th];
                if let Some(p) = step(base, &z, PI, delta) {
                    out.push((z, PI, p));
                }
            }
        }
    }
    out.retain(|(_, _, p)| dist_to(base, &zs, p) >= delta * (1.0 - 1e-6));
    Ok((out, zs))
}

/// Sampled `dist_Z`-realizers with their footpoint derivatives.
pub fn dist_z_realizers(
    f: &WarpFunction,
    base: &CatalogSpace,
    n_footpoints: usize,
) -> Result<Vec<Realizer>, ConvexityError> {
    let delta = probe_scale(base);
    let (seeds, _) = realizer_seeds(f, base, n_footpoints, delta)?;
    let out: Vec<Realizer> = seeds
        .into_iter()
        .filter_map(|(z, dir, p)| {
            let g = |h: f64| if h <= delta { step(base, &z, dir, h).map(|q| f.eval(&q)) } else { None };
            let derivative = one_sided_derivative(g, delta)?;
            Some(Realizer { footpoint: z, direction: dir, probe: p, probe_distance: delta, derivative })
        })
        .collect();
    if out.is_empty() {
        return Err(ConvexityError::ZEmpty);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    ZEmpty,
    ZNonempty,
}

/// The fiber curvature bound and its ingredients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaFReport {
    pub side: Kind,
    pub branch: Branch,
    /// Inf (CAT) or sup (CBB) of squared footpoint derivatives; `+∞` when `Z = ∅`.
    pub kappa_foot: f64,
    /// CAT only; `+∞` when no point has `dist_Z ≥ ϖ^κ/2`.
    pub kappa_far: f64,
    pub kappa_f: f64,
    /// Gradient form of `kappa_foot` (CAT) or of `kappa_f` (CBB).
    pub gradient_form: Option<f64>,
    pub gradient_difference: Option<f64>,
    /// `(ε, inf |∇(−f)|²)` over shells `0 < dist_Z ≤ ε` (CAT).
    pub shells: Vec<(f64, f64)>,
    pub samples: usize,
    /// `Z` was located numerically rather than declared.
    pub warning: bool,
}

fn sample_density(f: &WarpFunction) -> usize {
    ((16.0 * (1.0 + f.lipschitz)).ceil() as usize).clamp(16, 256)
}

/// `κ_F` for the given side, with footpoint and gradient forms.
pub fn kappa_f(side: Kind, triple: &WarpedTriple, kappa: Curvature) -> Result<KappaFReport, ConvexityError> {
    let (base, f) = (&triple.base, &triple.warp);
    let n = sample_density(f);
    let zero = triple.zero_set();
    if zero.is_empty() {
        let inf = f.inf_on(base);
        return Ok(KappaFReport {
            side,
            branch: Branch::ZEmpty,
            kappa_foot: f64::INFINITY,
            kappa_far: f64::INFINITY,
            kappa_f: kappa.value() * inf * inf,
            gradient_form: None,
            gradient_difference: None,
            shells: Vec::new(),
            samples: 4097,
            warning: zero.detected,
        });
    }
    let realizers = dist_z_realizers(f, base, n)?;
    let squares = realizers.iter().map(|r| r.derivative * r.derivative);
    let h0 = probe_scale(base) / 8.0;
    let eval = |x: &[f64]| f.eval(x);
    let mut report = KappaFReport {
        side,
        branch: Branch::ZNonempty,
        kappa_foot: 0.0,
        kappa_far: f64::INFINITY,
        kappa_f: 0.0,
        gradient_form: None,
        gradient_difference: None,
        shells: Vec::new(),
        samples: realizers.len(),
        warning: zero.detected,
    };
    match side {
        Kind::Cat => {
            report.kappa_foot = squares.fold(f64::INFINITY, f64::min);
            let varpi = kappa.varpi();
            if varpi.is_finite() {
                let zs = zero.sample(base, 256);
                for p in WarpFunction::check_grid(base, 4097) {
                    if dist_to(base, &zs, &p) >= 0.5 * varpi - 1e-9 * (1.0 + varpi) {
                        let v = f.eval(&p);
                        report.kappa_far = report.kappa_far.min(kappa.value() * v * v);
                    }
                }
            }
            report.kappa_f = report.kappa_foot.min(report.kappa_far);
            let eps0 = probe_scale(base);
            for k in 0..6 {
                let eps = eps0 / (1u64 << k) as f64;
                let mut inf = f64::INFINITY;
                for frac in [1.0, 0.5] {
                    let (seeds, _) = realizer_seeds(f, base, n, eps * frac)?;
                    for (_, _, p) in seeds {
                        let g = gradient_norm(eval, base, &p, GradientSide::Down, n, h0.min(0.25 * eps))?;
                        inf = inf.min(g.value * g.value);
                    }
                }
                report.shells.push((eps, inf));
            }
            let m = report.shells.len();
            let (last, prev) = (report.shells[m - 1].1, report.shells[m - 2].1);
            let g = if (last - prev).abs() <= 1e-3 * (1.0 + last.abs()) { 2.0 * last - prev } else { last };
            report.gradient_form = Some(g);
            report.gradient_difference = Some((report.kappa_foot - g).abs());
        }
        Kind::Cbb => {
            report.kappa_foot = squares.fold(f64::NEG_INFINITY, f64::max);
            report.kappa_f = report.kappa_foot;
            let mut sup: f64 = 0.0;
            for z in zero.sample(base, n) {
                let g = gradient_norm(eval, base, &z, GradientSide::Up, n, h0)?;
                sup = sup.max(g.value * g.value);
            }
            report.gradient_form = Some(sup);
            report.gradient_difference = Some((report.kappa_f - sup).abs());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warp::ZeroHint;
    use approx::assert_abs_diff_eq;

    fn warp(src: &str, base: &CatalogSpace, lip: f64) -> WarpFunction {
        WarpFunction::parse(src, base, lip, ZeroHint::Unknown).unwrap()
    }

    fn classify(src: &str, base: &CatalogSpace, lip: f64, kappa: f64) -> ConvexityVerdict {
        let f = warp(src, base, lip);
        sinusoidal_test(&f, base, Curvature::new(kappa).unwrap(), Mode::Convex, 48, 5, 1e-9).unwrap()
    }

    #[test]
    fn exact_sinusoids_are_both() {
        let v = classify("cosh(t)", &CatalogSpace::Line, 4.0, -1.0);
        assert_eq!(v.classification, Classification::Both, "{v:?}");
        let v = classify("sin(t)", &CatalogSpace::interval(0.0, PI).unwrap(), 1.0, 1.0);
        assert_eq!(v.classification, Classification::Both, "{v:?}");
    }

    #[test]
    fn parabola_is_convex_only() {
        let v = classify("t^2", &CatalogSpace::interval(-1.0, 1.0).unwrap(), 2.0, 0.0);
        assert_eq!(v.classification, Classification::Convex);
        assert_eq!(v.tangential, Classification::Convex);
        assert!(v.concave_violation > 0.1);
    }

    #[test]
    fn constant_is_convex_for_positive_kappa() {
        let base = CatalogSpace::interval(0.0, 2.0).unwrap();
        let c = 0.7;
        let v = classify("0.7", &base, 0.0, 1.0);
        assert_eq!(v.classification, Classification::Convex);
        assert!(v.passed);
        // the interpolant through equal values c is c·cos(s−m)/cos(h)
        let (h, ell) = (0.8, 1.6);
        let k = Curvature::ONE;
        let y = two_point_sinusoid(k, c, c, ell, h).unwrap();
        assert_abs_diff_eq!(y, c / h.cos(), epsilon = 1e-12);
        let y = two_point_sinusoid(k, c, c, ell, 0.3).unwrap();
        assert_abs_diff_eq!(y, c * (0.3 - h).cos() / h.cos(), epsilon = 1e-12);
    }

    #[test]
    fn long_intervals_are_skipped() {
        let v = classify("1", &CatalogSpace::Line, 0.0, 4.0);
        assert!(v.skipped > 0);
        assert!(two_point_sinusoid(Curvature::new(4.0).unwrap(), 1.0, 1.0, PI / 2.0, 0.1).is_none());
    }

    #[test]
    fn distance_sine_is_convex_on_half_disk() {
        let base = CatalogSpace::model_disk(1.0, 1.5).unwrap();
        let f = warp("sn(1, dist_point(0.2, 1.0))", &base, 1.0);
        let v = sinusoidal_test(&f, &base, Curvature::ONE, Mode::Convex, 32, 2, 1e-9).unwrap();
        assert!(v.passed, "{v:?}");
    }

    #[test]
    fn gradient_examples() {
        let ray = CatalogSpace::Ray;
        let g = gradient_norm(|x| x[0], &ray, &[0.0], GradientSide::Up, 2, 0.1).unwrap();
        assert_abs_diff_eq!(g.value, 1.0, epsilon = 1e-12);
        assert_eq!(g.directions_sampled, 1);

        let plane = CatalogSpace::model_disk(0.0, 3.0).unwrap();
        let a = 1.7;
        let g = gradient_norm(|x| a * x[0], &plane, &[1.0, 0.4], GradientSide::Down, 64, 0.1).unwrap();
        assert_abs_diff_eq!(g.value, a, epsilon = 1e-9);

        let seg = CatalogSpace::interval(0.0, PI).unwrap();
        let g = gradient_norm(|x| x[0].sin(), &seg, &[PI / 2.0], GradientSide::Up, 2, 0.1).unwrap();
        assert_abs_diff_eq!(g.value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn disk_step_matches_distance() {
        for kappa in [-1.0, 0.0, 1.0] {
            let base = CatalogSpace::model_disk(kappa, 1.2).unwrap();
            let p = vec![0.5, 1.0];
            for dir in directions(&base, 12) {
                let q = step(&base, &p, dir, 0.3).unwrap();
                assert_abs_diff_eq!(base.distance(&p, &q), 0.3, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn realizer_examples() {
        let base = CatalogSpace::interval(0.0, PI).unwrap();
        let f = warp("sin(t)", &base, 1.0);
        let rs = dist_z_realizers(&f, &base, 16).unwrap();
        assert_eq!(rs.len(), 2);
        for r in &rs {
            assert_abs_diff_eq!(r.derivative, 1.0, epsilon = 1e-9);
        }
        let disk = CatalogSpace::model_disk(0.0, 1.0).unwrap();
        let f = WarpFunction::parse("dist_boundary()", &disk, 1.0, ZeroHint::BoundaryArcs(vec![(0.0, 2.0 * PI)]))
            .unwrap();
        let rs = dist_z_realizers(&f, &disk, 16).unwrap();
        assert_eq!(rs.len(), 16);
        for r in &rs {
            assert_abs_diff_eq!(r.derivative, 1.0, epsilon = 1e-9);
        }
        let f = warp("1", &base, 0.0);
        assert_eq!(dist_z_realizers(&f, &base, 4), Err(ConvexityError::ZEmpty));
    }
    fn triple(base: CatalogSpace, src: &str, lip: f64) -> WarpedTriple {
        let f = warp(src, &base, lip);
        let fiber: std::sync::Arc<dyn MetricOracle> = std::sync::Arc::new(CatalogSpace::Line);
        WarpedTriple::new(base, f, fiber).unwrap()
    }

    #[test]
    fn cone_kappa_f_is_slope_squared() {
        for a in [0.5, 1.0, 2.0] {
            let t = triple(CatalogSpace::Ray, &format!("{a}*t"), a);
            let cbb = kappa_f(Kind::Cbb, &t, Curvature::ZERO).unwrap();
            assert_abs_diff_eq!(cbb.kappa_f, a * a, epsilon = 1e-9);
            assert!(cbb.gradient_difference.unwrap() < 1e-9);
            let cat = kappa_f(Kind::Cat, &t, Curvature::ZERO).unwrap();
            assert_abs_diff_eq!(cat.kappa_foot, a * a, epsilon = 1e-9);
            assert_eq!(cat.kappa_far, f64::INFINITY);
            assert!(cat.gradient_difference.unwrap() < 5e-3, "{cat:?}");
        }
    }

    #[test]
    fn suspension_kappa_f_is_one() {
        let t = triple(CatalogSpace::interval(0.0, PI).unwrap(), "sin(t)", 1.0);
        let r = kappa_f(Kind::Cat, &t, Curvature::ONE).unwrap();
        assert_abs_diff_eq!(r.kappa_foot, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.kappa_far, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.kappa_f, 1.0, epsilon = 1e-6);
        assert!(r.gradient_difference.unwrap() < 5e-3, "{r:?}");
        let r = kappa_f(Kind::Cbb, &t, Curvature::ONE).unwrap();
        assert_abs_diff_eq!(r.kappa_f, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn empty_zero_set_uses_infimum() {
        let t = triple(CatalogSpace::interval(0.0, 1.0).unwrap(), "1.5", 0.0);
        for side in [Kind::Cat, Kind::Cbb] {
            let r = kappa_f(side, &t, Curvature::new(-1.0).unwrap()).unwrap();
            assert_eq!(r.branch, Branch::ZEmpty);
            assert_abs_diff_eq!(r.kappa_f, -2.25, epsilon = 1e-12);
        }
    }
}
