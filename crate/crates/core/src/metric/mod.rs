//! Distance oracles and the catalog of closed-form spaces.

mod catalog;
mod finite;

use std::fmt::Debug;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::comparison::{ComparisonVerdict, Witness};

pub use catalog::{CatalogSpace, UNBOUNDED_EXTENT};
pub use finite::FiniteMetric;

/// A point of some space, in that space's own encoding.
pub type Point = Vec<f64>;

/// Default triangle-inequality tolerance for closed-form spaces.
pub const DEFAULT_TOL_METRIC: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("point {point:?} does not belong to {space}")]
    PointOutside { space: String, point: Point },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

/// Coarse isometry type, used by the structural convention checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Point,
    /// Closed interval of the given length.
    Interval(f64),
    /// Circle of the given length.
    Circle(f64),
    Other,
}

/// Uniform read-only interface every space exposes.
pub trait MetricOracle: Send + Sync + Debug {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64;

    fn validate(&self, x: &[f64]) -> Result<(), MetricError>;

    /// `n` points drawn deterministically from `seed`.
    fn sample(&self, n: usize, seed: u64) -> Vec<Point>;

    fn diameter_hint(&self) -> Option<f64> {
        None
    }

    /// Point at fraction `t` along some minimizing geodesic, when available.
    fn interpolate(&self, _x: &[f64], _y: &[f64], _t: f64) -> Option<Point> {
        None
    }

    fn geodesic(&self, x: &[f64], y: &[f64], resolution: f64) -> Option<GeodesicPolyline> {
        let d = self.distance(x, y);
        let n = ((d / resolution.max(1e-12)).ceil() as usize).clamp(1, 1 << 16);
        let mut points = Vec::with_capacity(n + 1);
        for i in 0..=n {
            points.push(self.interpolate(x, y, i as f64 / n as f64)?);
        }
        Some(GeodesicPolyline::from_points(self, points))
    }

    fn tol_metric(&self) -> f64 {
        DEFAULT_TOL_METRIC
    }

    fn shape(&self) -> Shape {
        Shape::Other
    }

    fn label(&self) -> String;
}

/// Discrete constant-parameter curve.
///
/// For warped products `base_points`/`fiber_params` carry the two
/// components and the speeds are per-node estimates of `v_B` and `v̄_F`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicPolyline {
    pub params: Vec<f64>,
    pub points: Vec<Point>,
    pub base_points: Option<Vec<Point>>,
    pub fiber_params: Option<Vec<f64>>,
    pub speed_base: Vec<f64>,
    pub speed_fiber: Vec<f64>,
    pub total_length: f64,
}

impl GeodesicPolyline {
    /// Polyline through `points` with uniform parameters on `[0, 1]`.
    pub fn from_points<S: MetricOracle + ?Sized>(space: &S, points: Vec<Point>) -> Self {
        let n = points.len().saturating_sub(1).max(1);
        let params: Vec<f64> = (0..points.len()).map(|i| i as f64 / n as f64).collect();
        let chords: Vec<f64> = points.windows(2).map(|w| space.distance(&w[0], &w[1])).collect();
        let total_length = chords.iter().sum();
        let speed_base = node_speeds(&chords, 1.0 / n as f64);
        GeodesicPolyline {
            params,
            speed_fiber: vec![0.0; points.len()],
            points,
            base_points: None,
            fiber_params: None,
            speed_base,
            total_length,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Node closest to arclength fraction `s ∈ [0, 1]`.
    pub fn node_at_fraction(&self, s: f64) -> usize {
        let i = (s * (self.len().saturating_sub(1)) as f64).round() as usize;
        i.min(self.len().saturating_sub(1))
    }
}

/// Per-node speeds from segment lengths: central averages inside, one-sided at the ends.
pub(crate) fn node_speeds(segments: &[f64], dt: f64) -> Vec<f64> {
    let m = segments.len();
    if m == 0 {
        return vec![0.0];
    }
    let mut out = Vec::with_capacity(m + 1);
    out.push(segments[0] / dt);
    for i in 1..m {
        out.push(0.5 * (segments[i - 1] + segments[i]) / dt);
    }
    out.push(segments[m - 1] / dt);
    out
}

/// Deterministic generator for `(seed, stream)`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Checks identity, symmetry and the triangle inequality on all sampled triples.
pub fn verify_metric_axioms<S: MetricOracle + ?Sized>(
    space: &S,
    n_samples: usize,
    seed: u64,
) -> ComparisonVerdict {
    let tol = space.tol_metric();
    let mut points = space.sample(n_samples.max(3), seed);
    let mut seen: Vec<Point> = Vec::with_capacity(points.len());
    points.retain(|p| {
        if seen.contains(p) {
            false
        } else {
            seen.push(p.clone());
            true
        }
    });
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = space.distance(&points[i], &points[j]);
        }
    }

    let mut margin = f64::INFINITY;
    let mut witness: Option<Witness> = None;
    let mut n_tested = 0usize;
    let record = |m: f64, idx: &[usize], margin: &mut f64, witness: &mut Option<Witness>| {
        if m < *margin {
            *margin = m;
        }
        if m < -tol && witness.is_none() {
            let pts: Vec<Point> = idx.iter().map(|&k| points[k].clone()).collect();
            *witness = Some(Witness::from_points(space, pts));
        }
    };

    for i in 0..n {
        record(-d[i][i].abs(), &[i], &mut margin, &mut witness);
        for j in (i + 1)..n {
            record(-(d[i][j] - d[j][i]).abs(), &[i, j], &mut margin, &mut witness);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                n_tested += 1;
                let (a, b, c) = (d[i][j], d[j][k], d[i][k]);
                record(a + b - c, &[i, j, k], &mut margin, &mut witness);
                record(a + c - b, &[j, i, k], &mut margin, &mut witness);
                record(b + c - a, &[i, k, j], &mut margin, &mut witness);
            }
        }
    }
    if !margin.is_finite() {
        margin = 0.0;
    }
    ComparisonVerdict::new(margin, tol, n_tested, witness)
}
