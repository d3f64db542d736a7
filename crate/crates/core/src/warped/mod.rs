//! Warped products `B ×_f F` as distance oracles.

mod path;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::Expr;
use crate::metric::{
    seeded_rng, CatalogSpace, GeodesicPolyline, MetricError, MetricOracle, Point, Shape,
};
use crate::model::{model_interpolate, opposite_side, Curvature, ModelPoint};
use crate::warp::{golden_min, WarpError, WarpFunction, ZeroHint, ZeroSet, ZERO_THRESHOLD};

use path::{lattice_path_1d, lattice_path_disk, polish, Chart, Chart1D, ChartDisk, Path};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpedError {
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error("invalid warped-product triple: {0}")]
    InvalidTriple(String),
    #[error(transparent)]
    Point(#[from] MetricError),
    #[error("distance did not converge after {levels} refinements; bracket [{low}, {high}]")]
    NotConverged { low: f64, high: f64, levels: usize },
    #[error("{0}")]
    Argument(String),
}

/// Engine tuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EngineOptions {
    /// Lattice nodes per axis for the initial shortest-path search.
    pub grid: usize,
    /// Maximum number of node doublings after the first level.
    pub max_refinements: usize,
    /// Segments on the first polished level.
    pub initial_segments: usize,
    pub newton_iterations: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { grid: 128, max_refinements: 8, initial_segments: 16, newton_iterations: 60 }
    }
}

/// `(B, f, F)`: base, warping function and fiber.
#[derive(Clone, Debug)]
pub struct WarpedTriple {
    pub base: CatalogSpace,
    pub warp: WarpFunction,
    pub fiber: Arc<dyn MetricOracle>,
    zeros: ZeroSet,
}

impl WarpedTriple {
    pub fn new(
        base: CatalogSpace,
        warp: WarpFunction,
        fiber: Arc<dyn MetricOracle>,
    ) -> Result<Self, WarpedError> {
        match base {
            CatalogSpace::Finite(_) | CatalogSpace::Point => {
                return Err(WarpedError::InvalidTriple(format!("base {base} is not intrinsic")))
            }
            CatalogSpace::ModelDisk { .. } if !base.is_convex_disk() => {
                return Err(WarpedError::InvalidTriple(format!(
                    "model-disk base {base} must have radius below half of π/√κ"
                )))
            }
            _ => {}
        }
        if fiber.shape() == Shape::Point || fiber.diameter_hint() == Some(0.0) {
            return Err(WarpedError::InvalidTriple("fiber is a single point".into()));
        }
        warp.validate_on(&base, 2049)?;
        let zeros = warp.zero_set(&base);
        Ok(WarpedTriple { base, warp, fiber, zeros })
    }

    pub fn zero_set(&self) -> &ZeroSet {
        &self.zeros
    }

    /// Splits a point of `W` into its base and fiber parts.
    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.base.dimension().min(x.len()))
    }

    pub fn join(base: &[f64], fiber: &[f64]) -> Point {
        base.iter().chain(fiber).copied().collect()
    }

    pub fn validate(&self, x: &[f64]) -> Result<(), MetricError> {
        let (b, f) = self.split(x);
        self.base.validate(b)?;
        self.fiber.validate(f)
    }

    /// Equality in `W`: equal base points and, off `Z`, equal fiber points.
    pub fn same_point(&self, x: &[f64], y: &[f64]) -> bool {
        let (bx, fx) = self.split(x);
        let (by, fy) = self.split(y);
        self.base.distance(bx, by) == 0.0
            && (self.warp.eval(bx) <= ZERO_THRESHOLD || self.fiber.distance(fx, fy) == 0.0)
    }

    /// `(a, κ')` when `W` is a κ'-cone with closed-form distances.
    pub fn cone_fast_path(&self) -> Option<(f64, Curvature)> {
        let (a, k) = self.warp.cone_profile()?;
        let k = Curvature::new(k).ok()?;
        if a <= 0.0 {
            return None;
        }
        let ok = match self.base {
            CatalogSpace::Ray => k.value() <= 0.0,
            CatalogSpace::Interval { a: 0.0, b: hi } => {
                let w = k.varpi();
                k.value() <= 0.0 || hi <= 0.5 * w || (hi - w).abs() <= 1e-12 * w
            }
            _ => false,
        };
        ok.then_some((a, k))
    }
}

impl fmt::Display for WarpedTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x[{}] {}", self.base, self.warp.source(), self.fiber.label())
    }
}

/// A converged (or best-effort) distance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub value: f64,
    /// `2·D_k − D_{k−1}` from the last two levels.
    pub richardson: f64,
    pub levels: usize,
    pub segments: usize,
    /// Final segment length scale `D / segments`.
    pub spacing: f64,
    pub via_zero: bool,
    pub converged: bool,
}

impl DistanceEstimate {
    fn exact(value: f64, via_zero: bool) -> Self {
        DistanceEstimate {
            value,
            richardson: value,
            levels: 0,
            segments: 1,
            spacing: 0.0,
            via_zero,
            converged: true,
        }
    }
}

enum Route {
    /// Straight in the base, fiber collapsed or trivial.
    Base,
    /// Two base geodesics through a zero of `f`.
    ThroughZero(Point),
    Polished { path: Path },
}

struct Solution {
    est: DistanceEstimate,
    route: Route,
}

fn fiber_param(triple: &WarpedTriple, u: &[f64], v: &[f64]) -> f64 {
    let (_, fu) = triple.split(u);
    let (_, fv) = triple.split(v);
    triple.fiber.distance(fu, fv)
}

/// Best path through the vanishing set, as `(length, footpoint)`.
fn through_zero(triple: &WarpedTriple, p: &[f64], q: &[f64]) -> Option<(f64, Point)> {
    let base = &triple.base;
    let zs = &triple.zeros;
    let mut best: Option<(f64, Point)> = None;
    let consider = |z: Point, best: &mut Option<(f64, Point)>| {
        let d = base.distance(p, &z) + base.distance(&z, q);
        if best.as_ref().is_none_or(|(b, _)| d < *b) {
            *best = Some((d, z));
        }
    };
    for z in &zs.points {
        consider(z.clone(), &mut best);
    }
    if let CatalogSpace::ModelDisk { radius, .. } = *base {
        for &(t0, t1) in &zs.arcs {
            let span = (t1 - t0).clamp(0.0, 2.0 * PI);
            let n = 256;
            let cost = |th: f64| {
                let z = vec![radius, th.rem_euclid(2.0 * PI)];
                base.distance(p, &z) + base.distance(&z, q)
            };
            let mut bi = 0;
            let mut bv = f64::INFINITY;
            for i in 0..=n {
                let v = cost(t0 + span * i as f64 / n as f64);
                if v < bv {
                    bv = v;
                    bi = i;
                }
            }
            let h = span / n as f64;
            let lo = (t0 + h * bi as f64 - h).max(t0);
            let hi = (t0 + h * bi as f64 + h).min(t0 + span);
            let th = golden_min(cost, lo, hi);
            consider(vec![radius, th.rem_euclid(2.0 * PI)], &mut best);
        }
    }
    best
}

fn solve(
    triple: &WarpedTriple,
    p: &[f64],
    q: &[f64],
    ell: f64,
    tol: f64,
    opts: &EngineOptions,
    min_segments: usize,
) -> Solution {
    let d_b = triple.base.distance(p, q);
    let fp = triple.warp.eval(p);
    let fq = triple.warp.eval(q);
    if ell <= 0.0 || fp <= ZERO_THRESHOLD || fq <= ZERO_THRESHOLD {
        return Solution { est: DistanceEstimate::exact(d_b, false), route: Route::Base };
    }
    let zero = through_zero(triple, p, q);
    if let Some((dz, z)) = &zero {
        if *dz <= d_b * (1.0 + 1e-12) + 1e-15 {
            return Solution { est: DistanceEstimate::exact(*dz, true), route: Route::ThroughZero(z.clone()) };
        }
    }
    let upper = (d_b + fp.min(fq) * ell).min(zero.as_ref().map_or(f64::INFINITY, |z| z.0));
    let mut best = match triple.base {
        CatalogSpace::ModelDisk { kappa, radius } => {
            let k = Curvature::new(kappa).expect("validated curvature");
            let chart = ChartDisk { f: &triple.warp, kappa: k, radius };
            let a = ChartDisk::normal(p);
            let b = ChartDisk::normal(q);
            let n = opts.grid.clamp(8, 40);
            let init = lattice_path_disk(&chart, a, b, ell, n, n);
            refine_levels(&chart, Path::from_nodes(&init), tol, opts, min_segments)
        }
        _ => {
            let roots: Vec<f64> = triple.zeros.points.iter().map(|z| z[0]).collect();
            let (lo, hi, period) = match triple.base {
                CatalogSpace::Circle { length } => (f64::NEG_INFINITY, f64::INFINITY, Some(length)),
                _ => {
                    let (lo, hi) = triple.base.coordinate_range();
                    (lo, hi, None)
                }
            };
            let mut shifts = vec![0.0];
            if let Some(l) = period {
                let mut cand: Vec<f64> = [-l, 0.0, l].into_iter().map(|k| q[0] + k - p[0]).collect();
                cand.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
                shifts = cand.into_iter().map(|t| t + p[0] - q[0]).collect();
            }
            let mut best: Option<Solution> = None;
            for shift in shifts {
                let q0 = q[0] + shift;
                let gap = (q0 - p[0]).abs();
                let bound = best.as_ref().map_or(upper, |s| s.est.value.min(upper));
                if gap > bound && best.is_some() {
                    continue;
                }
                let mut unwrapped = Vec::new();
                if let Some(l) = period {
                    for z in &roots {
                        for k in -3..=3 {
                            unwrapped.push(z + k as f64 * l);
                        }
                    }
                } else {
                    unwrapped = roots.clone();
                }
                unwrapped.sort_by(f64::total_cmp);
                let chart = Chart1D { f: &triple.warp, lo, hi, period, roots: unwrapped };
                let ub = gap + fp.min(fq) * ell;
                let pad = 0.5 * (ub - gap).max(0.0) + 1e-9;
                let w0 = (p[0].min(q0) - pad).max(lo);
                let w1 = (p[0].max(q0) + pad).min(hi);
                let nb = opts.grid.max(8);
                let init = lattice_path_1d(&chart, (w0, w1), p[0], q0, ell, nb, opts.grid.max(8));
                let sol = refine_levels(&chart, Path::from_nodes(&init), tol, opts, min_segments);
                if best.as_ref().is_none_or(|b| sol.est.value < b.est.value) {
                    best = Some(sol);
                }
            }
            best.expect("at least one unwrapping")
        }
    };
    if let Some((dz, z)) = zero {
        if dz <= best.est.value {
            best = Solution {
                est: DistanceEstimate { value: dz, richardson: dz, via_zero: true, converged: true, ..best.est },
                route: Route::ThroughZero(z),
            };
        }
    }
    best
}

fn refine_levels<C: Chart>(
    chart: &C,
    init: Path,
    tol: f64,
    opts: &EngineOptions,
    min_segments: usize,
) -> Solution {
    let mut path = init.resample(chart, opts.initial_segments.max(2));
    polish(chart, &mut path, opts.newton_iterations);
    let mut prev = path.length(chart);
    let mut levels = 0;
    let mut extra = 0;
    loop {
        path = path.refine();
        polish(chart, &mut path, opts.newton_iterations);
        let cur = path.length(chart);
        let converged = (cur - prev).abs() < 0.5 * tol;
        if converged && path.nodes() > min_segments {
            return finish(path, cur, prev, levels + 1, true);
        }
        if converged {
            extra += 1;
        } else {
            levels += 1;
        }
        if levels >= opts.max_refinements || extra > 12 {
            return finish(path, cur, prev, levels + 1, converged);
        }
        prev = cur;
    }
}

fn finish(path: Path, cur: f64, prev: f64, levels: usize, converged: bool) -> Solution {
    let segments = path.nodes() - 1;
    Solution {
        est: DistanceEstimate {
            value: cur,
            richardson: 2.0 * cur - prev,
            levels,
            segments,
            spacing: cur / segments as f64,
            via_zero: false,
            converged,
        },
        route: Route::Polished { path },
    }
}

/// Distance in `B ×_f F` with its refinement record.
pub fn warped_distance_detailed(
    triple: &WarpedTriple,
    u: &[f64],
    v: &[f64],
    tol: f64,
    opts: &EngineOptions,
) -> Result<DistanceEstimate, WarpedError> {
    if !(tol > 0.0) {
        return Err(WarpedError::Argument(format!("tolerance must be positive, got {tol}")));
    }
    triple.validate(u)?;
    triple.validate(v)?;
    let ell = fiber_param(triple, u, v);
    let (p, _) = triple.split(u);
    let (q, _) = triple.split(v);
    let sol = solve(triple, p, q, ell, tol, opts, 0);
    if !sol.est.converged {
        let (a, b) = (sol.est.value, sol.est.richardson);
        return Err(WarpedError::NotConverged { low: a.min(b), high: a.max(b), levels: sol.est.levels });
    }
    Ok(sol.est)
}

/// Distance in `B ×_f F` to within `tol`.
pub fn warped_distance(triple: &WarpedTriple, u: &[f64], v: &[f64], tol: f64) -> Result<f64, WarpedError> {
    warped_distance_detailed(triple, u, v, tol, &EngineOptions::default()).map(|e| e.value)
}

/// Distance between `(p, 0)` and `(q, ℓ)` with an interval fiber, best effort.
pub fn interval_fiber_distance(
    triple: &WarpedTriple,
    p: &[f64],
    q: &[f64],
    ell: f64,
    tol: f64,
) -> DistanceEstimate {
    solve(triple, p, q, ell, tol, &EngineOptions::default(), 0).est
}

fn fiber_point(triple: &WarpedTriple, fu: &[f64], fv: &[f64], frac: f64) -> Point {
    if frac <= 0.0 {
        return fu.to_vec();
    }
    if frac >= 1.0 {
        return fv.to_vec();
    }
    triple
        .fiber
        .interpolate(fu, fv, frac)
        .unwrap_or_else(|| if frac < 0.5 { fu.to_vec() } else { fv.to_vec() })
}

/// Distance tolerance for geodesic extraction; `resolution` sets the node count.
const GEODESIC_TOL: f64 = 1e-3;

/// Minimizing geodesic as a polyline with at most `resolution` between nodes.
pub fn warped_geodesic(
    triple: &WarpedTriple,
    u: &[f64],
    v: &[f64],
    resolution: f64,
) -> Result<GeodesicPolyline, WarpedError> {
    if !(resolution > 0.0) {
        return Err(WarpedError::Argument(format!("resolution must be positive, got {resolution}")));
    }
    triple.validate(u)?;
    triple.validate(v)?;
    let ell = fiber_param(triple, u, v);
    let (p, fu) = triple.split(u);
    let (q, fv) = triple.split(v);
    let upper = triple.base.distance(p, q) + triple.warp.eval(p).min(triple.warp.eval(q)) * ell;
    let min_segments = ((upper / resolution).ceil() as usize).max(8);
    let sol = solve(triple, p, q, ell, GEODESIC_TOL, &EngineOptions::default(), min_segments);
    if !sol.est.converged {
        let (a, b) = (sol.est.value, sol.est.richardson);
        return Err(WarpedError::NotConverged { low: a.min(b), high: a.max(b), levels: sol.est.levels });
    }
    let total = sol.est.value;
    let base = &triple.base;
    let mut base_points: Vec<Point> = Vec::new();
    let mut fiber_params: Vec<f64> = Vec::new();
    let mut jumps: Vec<bool> = Vec::new();
    let mut params: Vec<f64> = Vec::new();
    match sol.route {
        Route::Base | Route::ThroughZero(_) => {
            let phi = if triple.warp.eval(p) <= ZERO_THRESHOLD { ell } else { 0.0 };
            let legs: Vec<(Point, Point, f64)> = match &sol.route {
                Route::ThroughZero(z) => vec![(p.to_vec(), z.clone(), 0.0), (z.clone(), q.to_vec(), ell)],
                _ => vec![(p.to_vec(), q.to_vec(), phi)],
            };
            let lens: Vec<f64> = legs.iter().map(|(a, b, _)| base.distance(a, b)).collect();
            let sum: f64 = lens.iter().sum();
            let m = min_segments.max(legs.len() * 2);
            let mut acc = 0.0;
            for (li, (a, b, phi)) in legs.iter().enumerate() {
                let n = if sum > 0.0 { ((m as f64 * lens[li] / sum).round() as usize).max(1) } else { m };
                let start = if li == 0 { 0 } else { 1 };
                for i in start..=n {
                    let t = i as f64 / n as f64;
                    let pt = base
                        .interpolate(a, b, t)
                        .unwrap_or_else(|| if t < 1.0 { a.clone() } else { b.clone() });
                    base_points.push(pt);
                    fiber_params.push(*phi);
                    params.push(if sum > 0.0 { (acc + t * lens[li]) / sum } else { t });
                }
                acc += lens[li];
            }
            jumps = fiber_params.windows(2).map(|w| w[0] != w[1]).collect();
        }
        Route::Polished { path } => {
            let m = path.nodes() - 1;
            for i in 0..=m {
                let node = path.node(i);
                let k = node.len();
                let bp = match *base {
                    CatalogSpace::ModelDisk { .. } => {
                        let pol = ChartDisk::polar(node);
                        vec![pol[0], pol[1]]
                    }
                    CatalogSpace::Circle { length } => vec![node[0].rem_euclid(length)],
                    _ => vec![node[0]],
                };
                base_points.push(bp);
                fiber_params.push(node[k - 1]);
                params.push(i as f64 / m as f64);
            }
            for i in 0..m {
                let (a, b) = (path.node(i), path.node(i + 1));
                let g = match *base {
                    CatalogSpace::ModelDisk { kappa, radius } => {
                        let chart = ChartDisk { f: &triple.warp, kappa: Curvature::new(kappa).unwrap(), radius };
                        chart.g_min(a, b)
                    }
                    _ => {
                        let chart = one_d_chart(triple);
                        chart.g_min(a, b)
                    }
                };
                jumps.push(g == 0.0);
            }
        }
    }
    let n = base_points.len();
    let points: Vec<Point> = base_points
        .iter()
        .zip(&fiber_params)
        .map(|(b, &phi)| {
            let frac = if ell > 0.0 { phi / ell } else { 0.0 };
            WarpedTriple::join(b, &fiber_point(triple, fu, fv, frac))
        })
        .collect();
    let mut speed_base = vec![0.0; n];
    let mut speed_fiber = vec![0.0; n];
    for i in 0..n {
        let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let dt = params[r] - params[l];
        if dt > 0.0 {
            speed_base[i] = base.distance(&base_points[l], &base_points[r]) / dt;
        }
        let mut rates = Vec::with_capacity(2);
        if i > 0 && !jumps[i - 1] {
            rates.push((fiber_params[i] - fiber_params[i - 1]) / (params[i] - params[i - 1]));
        }
        if i + 1 < n && !jumps[i] {
            rates.push((fiber_params[i + 1] - fiber_params[i]) / (params[i + 1] - params[i]));
        }
        if !rates.is_empty() {
            speed_fiber[i] = rates.iter().sum::<f64>() / rates.len() as f64;
        }
    }
    Ok(GeodesicPolyline {
        params,
        points,
        base_points: Some(base_points),
        fiber_params: Some(fiber_params),
        speed_base,
        speed_fiber,
        total_length: total,
    })
}

fn one_d_chart(triple: &WarpedTriple) -> Chart1D<'_> {
    let mut roots: Vec<f64> = triple.zeros.points.iter().map(|z| z[0]).collect();
    let period = match triple.base {
        CatalogSpace::Circle { length } => {
            roots = roots.iter().flat_map(|z| (-3..=3).map(move |k| z + k as f64 * length)).collect();
            Some(length)
        }
        _ => None,
    };
    roots.sort_by(f64::total_cmp);
    let (lo, hi) = if period.is_some() {
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        triple.base.coordinate_range()
    };
    Chart1D { f: &triple.warp, lo, hi, period, roots }
}

/// Clairaut statistics of a polyline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClairautReport {
    pub constant: f64,
    pub max_drift: f64,
    pub speed_residual: f64,
    pub speed: f64,
}

/// Checks `(f∘γ_B)²·v̄_F = c` and `v_B = √(a² − (c/f)²)` along a polyline.
pub fn clairaut_check(geodesic: &GeodesicPolyline, triple: &WarpedTriple) -> ClairautReport {
    let a = geodesic.total_length / (geodesic.params.last().copied().unwrap_or(1.0) - geodesic.params[0]).max(1e-300);
    let Some(base_points) = &geodesic.base_points else {
        return ClairautReport { constant: 0.0, max_drift: 0.0, speed_residual: 0.0, speed: a };
    };
    let n = base_points.len();
    let interior = 1..n.saturating_sub(1);
    let f: Vec<f64> = base_points.iter().map(|b| triple.warp.eval(b)).collect();
    let mut products: Vec<f64> = interior.clone().map(|i| f[i] * f[i] * geodesic.speed_fiber[i]).collect();
    let mut sorted = products.clone();
    sorted.sort_by(f64::total_cmp);
    let c = if sorted.is_empty() {
        0.0
    } else if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let max_drift = products.iter_mut().map(|v| (*v - c).abs()).fold(0.0, f64::max);
    let mut speed_residual: f64 = 0.0;
    for i in interior {
        if f[i] > ZERO_THRESHOLD {
            let expected = (a * a - (c / f[i]).powi(2)).max(0.0).sqrt();
            speed_residual = speed_residual.max((geodesic.speed_base[i] - expected).abs());
        }
    }
    ClairautReport { constant: c, max_drift, speed_residual, speed: a }
}

/// Least-squares estimate of the extrinsic curvature bound of the leaf `{p}×F`.
pub fn leaf_extrinsic_curvature(triple: &WarpedTriple, p: &[f64], max_scale: f64) -> Result<f64, WarpedError> {
    triple.base.validate(p)?;
    let fp = triple.warp.eval(p);
    if fp <= ZERO_THRESHOLD {
        return Err(WarpedError::Argument("the leaf over a zero of f is a point".into()));
    }
    if !(max_scale > 0.0) {
        return Err(WarpedError::Argument(format!("scale must be positive, got {max_scale}")));
    }
    let opts = EngineOptions { max_refinements: 10, ..EngineOptions::default() };
    let mut rows = Vec::new();
    for j in 0..8 {
        let rho = max_scale * 0.8f64.powi(j);
        let est = solve(triple, p, p, rho / fp, 1e-9, &opts, 0).est;
        let s = est.richardson.min(rho);
        if s <= 0.0 {
            continue;
        }
        rows.push((s * s, (rho - s) / (s * s * s)));
    }
    if rows.len() < 2 {
        return Err(WarpedError::Argument("not enough usable scales".into()));
    }
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let sxx: f64 = rows.iter().map(|r| (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.0 - mx) * (r.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    Ok((24.0 * intercept).max(0.0).sqrt())
}

/// `sn^κ(dist((p, ε), B×{0})) / ε`, an estimate of `f(p)`.
pub fn recover_warp(triple: &WarpedTriple, p: &[f64], kappa: Curvature, eps: f64) -> Result<f64, WarpedError> {
    triple.base.validate(p)?;
    let fp = triple.warp.eval(p);
    if fp <= ZERO_THRESHOLD {
        return Err(WarpedError::Argument("f vanishes at p".into()));
    }
    if !(eps > 0.0) {
        return Err(WarpedError::Argument(format!("eps must be positive, got {eps}")));
    }
    match triple.fiber.shape() {
        Shape::Interval(l) if l < 2.0 * eps => {
            return Err(WarpedError::Argument("fiber is shorter than 2·eps".into()))
        }
        Shape::Circle(l) if l < 4.0 * eps => {
            return Err(WarpedError::Argument("fiber is shorter than 4·eps".into()))
        }
        _ => {}
    }
    let reach = fp / triple.warp.lipschitz.max(1e-12);
    let limit = 0.25 * kappa.varpi().min(reach);
    if eps * fp > limit {
        return Err(WarpedError::Argument(format!(
            "eps = {eps} is too large: eps·f(p) = {} exceeds {limit}",
            eps * fp
        )));
    }
    let d = solve(triple, p, p, 2.0 * eps, 1e-8, &EngineOptions::default(), 0).est.value;
    Ok(kappa.sn(0.5 * d) / eps)
}

/// `B ×_f F` as a metric oracle.
#[derive(Clone, Debug)]
pub struct WarpedProduct {
    pub triple: WarpedTriple,
    pub tol: f64,
    pub opts: EngineOptions,
    fast: Option<(f64, Curvature)>,
}

impl WarpedProduct {
    pub fn new(triple: WarpedTriple, tol: f64) -> Self {
        let fast = triple.cone_fast_path();
        WarpedProduct { triple, tol, opts: EngineOptions::default(), fast }
    }

    /// Always uses the numerical engine.
    pub fn engine_only(triple: WarpedTriple, tol: f64) -> Self {
        WarpedProduct { triple, tol, opts: EngineOptions::default(), fast: None }
    }

    pub fn with_options(mut self, opts: EngineOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn has_fast_path(&self) -> bool {
        self.fast.is_some()
    }

    fn cone_distance(&self, a: f64, k: Curvature, x: &[f64], y: &[f64]) -> f64 {
        let ell = fiber_param(&self.triple, x, y);
        let angle = (a * ell).min(PI);
        opposite_side(k, x[0], y[0], angle).unwrap_or(x[0] + y[0])
    }

    pub fn estimate(&self, x: &[f64], y: &[f64]) -> Result<DistanceEstimate, WarpedError> {
        if let Some((a, k)) = self.fast {
            return Ok(DistanceEstimate::exact(self.cone_distance(a, k, x, y), false));
        }
        warped_distance_detailed(&self.triple, x, y, self.tol, &self.opts)
    }
}

impl MetricOracle for WarpedProduct {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.estimate(x, y) {
            Ok(e) => e.value,
            Err(WarpedError::NotConverged { low, high, .. }) => 0.5 * (low + high),
            Err(_) => f64::NAN,
        }
    }

    fn validate(&self, x: &[f64]) -> Result<(), MetricError> {
        self.triple.validate(x)
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<Point> {
        use rand::Rng;
        let fiber_seed: u64 = seeded_rng(seed, 21).gen();
        let b = self.triple.base.sample(n, seed);
        let f = self.triple.fiber.sample(n, fiber_seed);
        b.iter().zip(&f).map(|(b, f)| WarpedTriple::join(b, f)).collect()
    }

    fn interpolate(&self, x: &[f64], y: &[f64], t: f64) -> Option<Point> {
        let (p, fu) = self.triple.split(x);
        let (q, fv) = self.triple.split(y);
        if let Some((a, k)) = self.fast {
            let ell = fiber_param(&self.triple, x, y);
            let theta = (a * ell).min(PI);
            let m = model_interpolate(&ModelPoint::polar(k, p[0], 0.0), &ModelPoint::polar(k, q[0], theta), t);
            let (r, th) = m.to_polar();
            let th = if th > PI { 0.0 } else { th };
            let frac = if theta > 0.0 { (th / theta).clamp(0.0, 1.0) } else { 0.0 };
            let frac = if r <= 1e-15 { t.round() } else { frac };
            return Some(WarpedTriple::join(&[r], &fiber_point(&self.triple, fu, fv, frac)));
        }
        let g = warped_geodesic(&self.triple, x, y, self.distance(x, y).max(1e-9) / 64.0).ok()?;
        let i = g.params.iter().position(|&s| s >= t).unwrap_or(g.len() - 1);
        Some(g.points[i].clone())
    }

    fn geodesic(&self, x: &[f64], y: &[f64], resolution: f64) -> Option<GeodesicPolyline> {
        warped_geodesic(&self.triple, x, y, resolution).ok()
    }

    fn tol_metric(&self) -> f64 {
        if self.fast.is_some() {
            crate::metric::DEFAULT_TOL_METRIC
        } else {
            2.0 * self.tol
        }
    }

    fn label(&self) -> String {
        self.triple.to_string()
    }
}

const DISK_TOL: f64 = 1e-5;

fn disk_as_warped(kappa: Curvature, radius: f64) -> Option<WarpedTriple> {
    let base = CatalogSpace::interval(0.0, radius).ok()?;
    let expr = Expr::Sn(kappa.value(), Box::new(Expr::Coord(0)));
    let warp = WarpFunction::from_expr(expr, &format!("sn({}, r)", kappa.value()), &base, 1.0, ZeroHint::Points(vec![vec![0.0]]))
        .ok()?;
    let fiber: Arc<dyn MetricOracle> = Arc::new(CatalogSpace::Circle { length: 2.0 * PI });
    WarpedTriple::new(base, warp, fiber).ok()
}

/// Intrinsic distance of a non-convex model disk, in polar coordinates.
pub fn nonconvex_disk_distance(kappa: Curvature, radius: f64, x: &[f64], y: &[f64]) -> f64 {
    let Some(triple) = disk_as_warped(kappa, radius) else {
        return f64::NAN;
    };
    let ell = CatalogSpace::Circle { length: 2.0 * PI }.distance(&[x[1]], &[y[1]]);
    solve(&triple, &x[..1], &y[..1], ell, DISK_TOL, &EngineOptions::default(), 0).est.value
}

/// Geodesic of a non-convex model disk, in polar coordinates.
pub fn nonconvex_disk_geodesic(
    kappa: Curvature,
    radius: f64,
    x: &[f64],
    y: &[f64],
    resolution: f64,
) -> Option<GeodesicPolyline> {
    let triple = disk_as_warped(kappa, radius)?;
    let g = warped_geodesic(&triple, x, y, resolution).ok()?;
    Some(GeodesicPolyline { base_points: None, fiber_params: None, ..g })
}
