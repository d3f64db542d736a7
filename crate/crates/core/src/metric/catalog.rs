use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{seeded_rng, FiniteMetric, MetricError, MetricOracle, Point, Shape};
use crate::model::{model_interpolate, polar_distance, Curvature, ModelPoint};

/// Sampling extent used for unbounded spaces (`Ray` samples `[0, 2]`, `Line` samples `[−2, 2]`).
pub const UNBOUNDED_EXTENT: f64 = 2.0;

/// Concrete spaces with closed-form distances.
///
/// Point encodings: one coordinate for the 1-D spaces, polar `[r, θ]`
/// for model disks, a single integer-valued index for finite metrics and
/// the empty vector for `Point`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CatalogSpace {
    Interval { a: f64, b: f64 },
    /// `[0, ∞)`.
    Ray,
    /// The real line.
    Line,
    Circle { length: f64 },
    /// Closed disk of the given radius about the base point of the model surface.
    ModelDisk { kappa: f64, radius: f64 },
    Finite(FiniteMetric),
    Point,
}

impl CatalogSpace {
    pub fn interval(a: f64, b: f64) -> Result<Self, MetricError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(MetricError::InvalidSpace(format!("interval [{a}, {b}]")));
        }
        Ok(CatalogSpace::Interval { a, b })
    }

    pub fn circle(length: f64) -> Result<Self, MetricError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(MetricError::InvalidSpace(format!("circle of length {length}")));
        }
        Ok(CatalogSpace::Circle { length })
    }

    pub fn model_disk(kappa: f64, radius: f64) -> Result<Self, MetricError> {
        let k = Curvature::new(kappa).map_err(|e| MetricError::InvalidSpace(e.to_string()))?;
        if !(radius.is_finite() && radius > 0.0 && radius < k.varpi()) {
            return Err(MetricError::InvalidSpace(format!(
                "model disk radius {radius} must lie in (0, {})",
                k.varpi()
            )));
        }
        Ok(CatalogSpace::ModelDisk { kappa, radius })
    }

    pub fn finite(metric: FiniteMetric) -> Self {
        CatalogSpace::Finite(metric)
    }

    /// Number of coordinates in the point encoding.
    pub fn dimension(&self) -> usize {
        match self {
            CatalogSpace::ModelDisk { .. } => 2,
            CatalogSpace::Point => 0,
            _ => 1,
        }
    }

    /// Disks of radius `< ϖ^κ/2` are convex in the model surface, so their
    /// intrinsic metric is the restricted model metric.
    pub fn is_convex_disk(&self) -> bool {
        match *self {
            CatalogSpace::ModelDisk { kappa, radius } => {
                kappa <= 0.0 || radius < 0.5 * Curvature::new(kappa).map(|k| k.varpi()).unwrap_or(0.0)
            }
            _ => false,
        }
    }

    pub fn curvature(&self) -> Option<Curvature> {
        match *self {
            CatalogSpace::ModelDisk { kappa, .. } => Curvature::new(kappa).ok(),
            _ => None,
        }
    }

    /// Boundary point of a model disk at parameter `θ`.
    pub fn boundary_point(&self, theta: f64) -> Option<Point> {
        match *self {
            CatalogSpace::ModelDisk { radius, .. } => Some(vec![radius, theta.rem_euclid(2.0 * PI)]),
            CatalogSpace::Interval { a, b } => Some(vec![if theta <= 0.5 { a } else { b }]),
            _ => None,
        }
    }

    /// Boundary of a 1-D space as a list of points.
    pub fn boundary_points(&self) -> Vec<Point> {
        match *self {
            CatalogSpace::Interval { a, b } => vec![vec![a], vec![b]],
            CatalogSpace::Ray => vec![vec![0.0]],
            _ => Vec::new(),
        }
    }

    /// Bounds of the first coordinate.
    pub fn coordinate_range(&self) -> (f64, f64) {
        match *self {
            CatalogSpace::Interval { a, b } => (a, b),
            CatalogSpace::Ray => (0.0, f64::INFINITY),
            CatalogSpace::Line => (f64::NEG_INFINITY, f64::INFINITY),
            CatalogSpace::Circle { length } => (0.0, length),
            CatalogSpace::ModelDisk { radius, .. } => (0.0, radius),
            CatalogSpace::Finite(ref m) => (0.0, (m.len() - 1) as f64),
            CatalogSpace::Point => (0.0, 0.0),
        }
    }

    /// All distances multiplied by `λ`.
    pub fn scaled(&self, lambda: f64) -> Result<Self, MetricError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(MetricError::InvalidSpace(format!("scale factor {lambda}")));
        }
        Ok(match self {
            CatalogSpace::Interval { a, b } => CatalogSpace::Interval { a: a * lambda, b: b * lambda },
            CatalogSpace::Ray => CatalogSpace::Ray,
            CatalogSpace::Line => CatalogSpace::Line,
            CatalogSpace::Circle { length } => CatalogSpace::Circle { length: length * lambda },
            CatalogSpace::ModelDisk { kappa, radius } => CatalogSpace::ModelDisk {
                kappa: kappa / (lambda * lambda),
                radius: radius * lambda,
            },
            CatalogSpace::Finite(m) => CatalogSpace::Finite(m.scaled(lambda)),
            CatalogSpace::Point => CatalogSpace::Point,
        })
    }

    /// Maps a point of `self` to the corresponding point of `self.scaled(λ)`.
    pub fn scale_point(&self, x: &[f64], lambda: f64) -> Point {
        match self {
            CatalogSpace::ModelDisk { .. } => vec![x[0] * lambda, x[1]],
            CatalogSpace::Finite(_) | CatalogSpace::Point => x.to_vec(),
            _ => vec![x[0] * lambda],
        }
    }

    fn circle_gap(length: f64, x: f64, y: f64) -> f64 {
        let d = (x - y).rem_euclid(length);
        d.min(length - d)
    }

    fn disk_point(kappa: f64, x: &[f64]) -> ModelPoint {
        ModelPoint::polar(Curvature::new(kappa).unwrap_or(Curvature::ZERO), x[0], x[1])
    }
}

impl fmt::Display for CatalogSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogSpace::Interval { a, b } => write!(f, "interval({a},{b})"),
            CatalogSpace::Ray => write!(f, "ray"),
            CatalogSpace::Line => write!(f, "line"),
            CatalogSpace::Circle { length } => write!(f, "circle({length})"),
            CatalogSpace::ModelDisk { kappa, radius } => write!(f, "disk({kappa},{radius})"),
            CatalogSpace::Finite(m) => write!(f, "finite({} points)", m.len()),
            CatalogSpace::Point => write!(f, "point"),
        }
    }
}

impl MetricOracle for CatalogSpace {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            CatalogSpace::Interval { .. } | CatalogSpace::Ray | CatalogSpace::Line => (x[0] - y[0]).abs(),
            CatalogSpace::Circle { length } => Self::circle_gap(length, x[0], y[0]),
            CatalogSpace::ModelDisk { kappa, radius } => {
                let k = Curvature::new(kappa).unwrap_or(Curvature::ZERO);
                if self.is_convex_disk() {
                    polar_distance(k, x[0], x[1], y[0], y[1])
                } else {
                    crate::warped::nonconvex_disk_distance(k, radius, x, y)
                }
            }
            CatalogSpace::Finite(ref m) => m.get(x[0] as usize, y[0] as usize),
            CatalogSpace::Point => 0.0,
        }
    }

    fn validate(&self, x: &[f64]) -> Result<(), MetricError> {
        let outside = || MetricError::PointOutside { space: self.to_string(), point: x.to_vec() };
        if x.len() != self.dimension() || x.iter().any(|v| !v.is_finite()) {
            return Err(outside());
        }
        let ok = match *self {
            CatalogSpace::Interval { a, b } => x[0] >= a && x[0] <= b,
            CatalogSpace::Ray => x[0] >= 0.0,
            CatalogSpace::Line => true,
            CatalogSpace::Circle { length } => x[0] >= 0.0 && x[0] <= length,
            CatalogSpace::ModelDisk { radius, .. } => x[0] >= 0.0 && x[0] <= radius * (1.0 + 1e-12),
            CatalogSpace::Finite(ref m) => {
                x[0] >= 0.0 && x[0].fract() == 0.0 && (x[0] as usize) < m.len()
            }
            CatalogSpace::Point => true,
        };
        if ok {
            Ok(())
        } else {
            Err(outside())
        }
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = seeded_rng(seed, 0);
        (0..n)
            .map(|_| match *self {
                CatalogSpace::Interval { a, b } => vec![rng.gen_range(a..=b)],
                CatalogSpace::Ray => vec![rng.gen_range(0.0..=UNBOUNDED_EXTENT)],
                CatalogSpace::Line => vec![rng.gen_range(-UNBOUNDED_EXTENT..=UNBOUNDED_EXTENT)],
                CatalogSpace::Circle { length } => vec![rng.gen_range(0.0..length)],
                CatalogSpace::ModelDisk { radius, .. } => {
                    let u: f64 = rng.gen();
                    vec![radius * u.sqrt(), rng.gen_range(0.0..2.0 * PI)]
                }
                CatalogSpace::Finite(ref m) => vec![rng.gen_range(0..m.len()) as f64],
                CatalogSpace::Point => Vec::new(),
            })
            .collect()
    }

    fn diameter_hint(&self) -> Option<f64> {
        match *self {
            CatalogSpace::Interval { a, b } => Some(b - a),
            CatalogSpace::Ray | CatalogSpace::Line => None,
            CatalogSpace::Circle { length } => Some(0.5 * length),
            CatalogSpace::ModelDisk { .. } => None,
            CatalogSpace::Finite(ref m) => Some(m.max_distance()),
            CatalogSpace::Point => Some(0.0),
        }
    }

    fn interpolate(&self, x: &[f64], y: &[f64], t: f64) -> Option<Point> {
        match *self {
            CatalogSpace::Interval { .. } | CatalogSpace::Ray | CatalogSpace::Line => {
                Some(vec![x[0] + t * (y[0] - x[0])])
            }
            CatalogSpace::Circle { length } => {
                let mut d = (y[0] - x[0]).rem_euclid(length);
                if d > 0.5 * length {
                    d -= length;
                }
                Some(vec![(x[0] + t * d).rem_euclid(length)])
            }
            CatalogSpace::ModelDisk { kappa, .. } if self.is_convex_disk() => {
                let p = model_interpolate(&Self::disk_point(kappa, x), &Self::disk_point(kappa, y), t);
                let (r, theta) = p.to_polar();
                Some(vec![r, theta])
            }
            CatalogSpace::Point => Some(Vec::new()),
            _ => None,
        }
    }

    fn geodesic(&self, x: &[f64], y: &[f64], resolution: f64) -> Option<super::GeodesicPolyline> {
        if let CatalogSpace::ModelDisk { kappa, radius } = *self {
            if !self.is_convex_disk() {
                let k = Curvature::new(kappa).ok()?;
                return crate::warped::nonconvex_disk_geodesic(k, radius, x, y, resolution);
            }
        }
        let d = self.distance(x, y);
        let n = ((d / resolution.max(1e-12)).ceil() as usize).clamp(1, 1 << 16);
        let points: Option<Vec<Point>> =
            (0..=n).map(|i| self.interpolate(x, y, i as f64 / n as f64)).collect();
        Some(super::GeodesicPolyline::from_points(self, points?))
    }

    fn shape(&self) -> Shape {
        match *self {
            CatalogSpace::Interval { a, b } => Shape::Interval(b - a),
            CatalogSpace::Circle { length } => Shape::Circle(length),
            CatalogSpace::Point => Shape::Point,
            CatalogSpace::Finite(ref m) if m.len() == 1 => Shape::Point,
            _ => Shape::Other,
        }
    }

    fn label(&self) -> String {
        self.to_string()
    }
}
