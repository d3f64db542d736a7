//! Trigonometry of the constant-curvature model surfaces.
//!
//! Everything here is expressed through the generalized sine `sn^κ`
//! (solution of `y'' + κy = 0`, `y(0) = 0`, `y'(0) = 1`) so that the
//! spherical, Euclidean and hyperbolic cases share one code path. Near
//! `κ = 0` the kernels switch to Maclaurin series to stay continuous.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this value of `|κ|·t²` the kernels use truncated series.
const SERIES_THRESHOLD: f64 = 1e-6;

/// Arguments of `asin`/`acos`-type inverses are clamped when they
/// overshoot their domain by at most this much.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Off-surface tolerance for chart coordinates.
pub const CHART_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("curvature must be finite, got {0}")]
    NonFiniteCurvature(f64),
    #[error("negative side length {0}")]
    NegativeSide(f64),
    #[error("point is not on the model surface (residual {residual:e})")]
    OffSurface { residual: f64 },
    #[error("argument {0} outside the domain of the inverse trigonometric kernel")]
    OutOfDomain(f64),
    #[error("vertex index {0} is not 0, 1 or 2")]
    BadVertex(usize),
}

/// A curvature bound κ (units 1/length²).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Curvature(f64);

impl Curvature {
    pub const ZERO: Curvature = Curvature(0.0);
    pub const ONE: Curvature = Curvature(1.0);

    pub fn new(kappa: f64) -> Result<Self, ModelError> {
        if kappa.is_finite() {
            Ok(Curvature(kappa))
        } else {
            Err(ModelError::NonFiniteCurvature(kappa))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `ϖ^κ`: `π/√κ` for κ > 0, infinite otherwise.
    pub fn varpi(self) -> f64 {
        if self.0 > 0.0 {
            PI / self.0.sqrt()
        } else {
            f64::INFINITY
        }
    }

    pub fn sn(self, t: f64) -> f64 {
        sn(self, t)
    }

    pub fn cs(self, t: f64) -> f64 {
        cs(self, t)
    }
}

impl fmt::Display for Curvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Generalized sine `sn^κ(t)`.
pub fn sn(kappa: Curvature, t: f64) -> f64 {
    let k = kappa.0;
    let x = k * t * t;
    if x.abs() < SERIES_THRESHOLD {
        t * (1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0)
    } else if k > 0.0 {
        let r = k.sqrt();
        (r * t).sin() / r
    } else {
        let r = (-k).sqrt();
        (r * t).sinh() / r
    }
}

/// Generalized cosine `cs^κ(t) = (sn^κ)'(t)`.
pub fn cs(kappa: Curvature, t: f64) -> f64 {
    let k = kappa.0;
    let x = k * t * t;
    if x.abs() < SERIES_THRESHOLD {
        1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0
    } else if k > 0.0 {
        (k.sqrt() * t).cos()
    } else {
        ((-k).sqrt() * t).cosh()
    }
}

/// Inverse of `sn^κ` on `[0, ϖ^κ/2]` (all of ℝ when κ ≤ 0).
pub fn asn(kappa: Curvature, y: f64) -> Result<f64, ModelError> {
    let k = kappa.0;
    let x = k * y * y;
    if x.abs() < SERIES_THRESHOLD {
        return Ok(y * (1.0 + x / 6.0 + 3.0 * x * x / 40.0 + 5.0 * x * x * x / 112.0));
    }
    if k > 0.0 {
        let r = k.sqrt();
        let mut arg = r * y;
        if arg.abs() > 1.0 {
            if arg.abs() <= 1.0 + CLAMP_TOLERANCE {
                arg = arg.signum();
            } else {
                return Err(ModelError::OutOfDomain(arg));
            }
        }
        Ok(arg.asin() / r)
    } else {
        let r = (-k).sqrt();
        Ok((r * y).asinh() / r)
    }
}

/// How strictly the κ > 0 perimeter bound is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerimeterRule {
    /// Perimeter < 2ϖ^κ and every side ≤ ϖ^κ (uniqueness of the model triangle).
    #[default]
    Standard,
    /// Perimeter ≤ ϖ^κ.
    Strict,
}

/// A model angle: a value in `[0, π]`, or undefined when the model
/// triangle is not unique.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelAngle {
    Defined(f64),
    Undefined,
}

impl ModelAngle {
    pub fn value(self) -> Option<f64> {
        match self {
            ModelAngle::Defined(v) => Some(v),
            ModelAngle::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, ModelAngle::Defined(_))
    }
}

/// Triangle with prescribed side lengths in the model surface.
///
/// `sides[i]` is the side opposite vertex `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelTriangle {
    pub kappa: Curvature,
    pub sides: [f64; 3],
    pub rule: PerimeterRule,
}

impl ModelTriangle {
    pub fn new(kappa: Curvature, sides: [f64; 3]) -> Result<Self, ModelError> {
        Self::with_rule(kappa, sides, PerimeterRule::Standard)
    }

    pub fn with_rule(
        kappa: Curvature,
        sides: [f64; 3],
        rule: PerimeterRule,
    ) -> Result<Self, ModelError> {
        for &s in &sides {
            if s < 0.0 || s.is_nan() {
                return Err(ModelError::NegativeSide(s));
            }
        }
        Ok(ModelTriangle { kappa, sides, rule })
    }

    pub fn perimeter(&self) -> f64 {
        self.sides.iter().sum()
    }

    /// True when the model triangle exists and is unique.
    pub fn is_defined(&self) -> bool {
        let [a, b, c] = self.sides;
        admissible(self.kappa, a, b, c, self.rule).is_some()
    }

    pub fn angle(&self, vertex: usize) -> Result<ModelAngle, ModelError> {
        if vertex > 2 {
            return Err(ModelError::BadVertex(vertex));
        }
        let opposite = self.sides[vertex];
        let adj1 = self.sides[(vertex + 1) % 3];
        let adj2 = self.sides[(vertex + 2) % 3];
        Ok(angle_with_rule(self.kappa, adj1, adj2, opposite, self.rule))
    }
}

/// Angle at the vertex of `tri` with the given index.
pub fn model_angle(tri: &ModelTriangle, vertex_index: usize) -> Result<ModelAngle, ModelError> {
    tri.angle(vertex_index)
}

/// `∠̃^κ` at a vertex with adjacent sides `adj1`, `adj2` and opposite side
/// `opposite`. Negative inputs yield `Undefined`.
pub fn angle_at(kappa: Curvature, adj1: f64, adj2: f64, opposite: f64) -> ModelAngle {
    angle_with_rule(kappa, adj1, adj2, opposite, PerimeterRule::Standard)
}

fn snap(x: f64, thr: f64) -> Option<f64> {
    if x.abs() <= thr {
        Some(0.0)
    } else if x < 0.0 {
        None
    } else {
        Some(x)
    }
}

/// Snapped half-perimeter excesses `(s−a, s−b, s−c)` when the triangle
/// exists and is unique.
fn admissible(
    kappa: Curvature,
    a: f64,
    b: f64,
    c: f64,
    rule: PerimeterRule,
) -> Option<(f64, f64, f64)> {
    if !(a >= 0.0 && b >= 0.0 && c >= 0.0) || !(a + b + c).is_finite() {
        return None;
    }
    let perimeter = a + b + c;
    // Inputs degenerate in exact arithmetic are treated as exactly degenerate.
    let thr = 8.0 * f64::EPSILON * perimeter;
    let sa = snap(0.5 * (b + c - a), thr)?;
    let sb = snap(0.5 * (a + c - b), thr)?;
    let sc = snap(0.5 * (a + b - c), thr)?;
    if kappa.0 > 0.0 {
        let w = kappa.varpi();
        let ok = match rule {
            PerimeterRule::Standard => {
                perimeter < 2.0 * w - thr && a <= w + thr && b <= w + thr && c <= w + thr
            }
            PerimeterRule::Strict => perimeter <= w + thr,
        };
        if !ok {
            return None;
        }
    }
    Some((sa, sb, sc))
}

fn angle_with_rule(
    kappa: Curvature,
    b: f64,
    c: f64,
    a: f64,
    rule: PerimeterRule,
) -> ModelAngle {
    let Some((sa, sb, sc)) = admissible(kappa, a, b, c, rule) else {
        return ModelAngle::Undefined;
    };
    // A zero adjacent side leaves the angle undetermined.
    if b == 0.0 || c == 0.0 {
        return ModelAngle::Undefined;
    }
    let perimeter = a + b + c;
    if sa == 0.0 {
        return ModelAngle::Defined(PI);
    }
    if sb == 0.0 || sc == 0.0 {
        return ModelAngle::Defined(0.0);
    }
    let s = 0.5 * perimeter;
    let num = sn(kappa, sb) * sn(kappa, sc);
    let den = sn(kappa, s) * sn(kappa, sa);
    if !(num >= 0.0 && den >= 0.0) {
        return ModelAngle::Undefined;
    }
    let angle = 2.0 * num.sqrt().atan2(den.sqrt());
    ModelAngle::Defined(angle.clamp(0.0, PI))
}

/// Length of the side opposite an angle `angle` enclosed by sides `b`, `c`
/// (the κ-law of cosines in haversine form).
pub fn opposite_side(kappa: Curvature, b: f64, c: f64, angle: f64) -> Result<f64, ModelError> {
    let h = sn(kappa, 0.5 * (b - c));
    let s = (0.5 * angle).sin();
    let rhs = h * h + sn(kappa, b) * sn(kappa, c) * s * s;
    Ok(2.0 * asn(kappa, rhs.max(0.0).sqrt())?)
}

/// Which chart a model point lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    /// Sphere of radius 1/√κ in ℝ³.
    Sphere,
    /// Plane z = 0 in ℝ³.
    Plane,
    /// Upper sheet of `x² + y² − z² = −1/|κ|`.
    Hyperboloid,
}

impl Chart {
    pub fn for_curvature(kappa: Curvature) -> Chart {
        if kappa.0 > 0.0 {
            Chart::Sphere
        } else if kappa.0 < 0.0 {
            Chart::Hyperboloid
        } else {
            Chart::Plane
        }
    }
}

/// A point of the model surface in ambient coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelPoint {
    pub kappa: Curvature,
    pub coords: [f64; 3],
}

fn form(chart: Chart, x: &[f64; 3], y: &[f64; 3]) -> f64 {
    match chart {
        Chart::Sphere | Chart::Plane => x[0] * y[0] + x[1] * y[1] + x[2] * y[2],
        Chart::Hyperboloid => x[0] * y[0] + x[1] * y[1] - x[2] * y[2],
    }
}

impl ModelPoint {
    pub fn plane(x: f64, y: f64) -> ModelPoint {
        ModelPoint { kappa: Curvature::ZERO, coords: [x, y, 0.0] }
    }

    /// Validates ambient coordinates, renormalizing residuals up to
    /// [`CHART_TOLERANCE`].
    pub fn on_surface(kappa: Curvature, coords: [f64; 3]) -> Result<ModelPoint, ModelError> {
        let chart = Chart::for_curvature(kappa);
        match chart {
            Chart::Plane => {
                if coords[2].abs() > CHART_TOLERANCE {
                    return Err(ModelError::OffSurface { residual: coords[2].abs() });
                }
                Ok(ModelPoint { kappa, coords: [coords[0], coords[1], 0.0] })
            }
            Chart::Sphere => {
                let target = 1.0 / kappa.0;
                let q = form(chart, &coords, &coords);
                let residual = (q - target).abs() / target;
                if residual > CHART_TOLERANCE {
                    return Err(ModelError::OffSurface { residual });
                }
                let scale = (target / q).sqrt();
                Ok(ModelPoint { kappa, coords: coords.map(|c| c * scale) })
            }
            Chart::Hyperboloid => {
                let target = -1.0 / (-kappa.0);
                let q = form(chart, &coords, &coords);
                let residual = (q - target).abs() / target.abs();
                if residual > CHART_TOLERANCE || coords[2] <= 0.0 {
                    return Err(ModelError::OffSurface { residual });
                }
                let scale = (target / q).sqrt();
                Ok(ModelPoint { kappa, coords: coords.map(|c| c * scale) })
            }
        }
    }

    /// The point at geodesic polar coordinates `(r, θ)` around the base
    /// point of the chart (north pole, origin or hyperboloid vertex).
    pub fn polar(kappa: Curvature, r: f64, theta: f64) -> ModelPoint {
        let chart = Chart::for_curvature(kappa);
        let center_height = match chart {
            Chart::Plane => 0.0,
            _ => 1.0 / kappa.0.abs().sqrt(),
        };
        let s = sn(kappa, r);
        let c = cs(kappa, r);
        let z = match chart {
            Chart::Plane => 0.0,
            _ => c * center_height,
        };
        ModelPoint { kappa, coords: [s * theta.cos(), s * theta.sin(), z] }
    }

    pub fn chart(&self) -> Chart {
        Chart::for_curvature(self.kappa)
    }

    /// Geodesic polar coordinates `(r, θ)` around the chart's base point.
    pub fn to_polar(&self) -> (f64, f64) {
        let center = ModelPoint::polar(self.kappa, 0.0, 0.0);
        let r = model_distance_unchecked(self, &center);
        let theta = self.coords[1].atan2(self.coords[0]);
        (r, if theta < 0.0 { theta + 2.0 * PI } else { theta })
    }
}

fn model_distance_unchecked(a: &ModelPoint, b: &ModelPoint) -> f64 {
    let chart = a.chart();
    let d = [
        a.coords[0] - b.coords[0],
        a.coords[1] - b.coords[1],
        a.coords[2] - b.coords[2],
    ];
    let chord = form(chart, &d, &d).max(0.0).sqrt();
    // Chord ≤ 2/√κ on the sphere; asn clamps rounding overshoot.
    2.0 * asn(a.kappa, 0.5 * chord).unwrap_or(a.kappa.varpi())
}

/// Geodesic distance on the model surface of curvature κ.
pub fn model_distance(kappa: Curvature, a: &ModelPoint, b: &ModelPoint) -> Result<f64, ModelError> {
    let a = ModelPoint::on_surface(kappa, a.coords)?;
    let b = ModelPoint::on_surface(kappa, b.coords)?;
    Ok(model_distance_unchecked(&a, &b))
}

/// Point at fraction `t` along the minimizing geodesic from `a` to `b`.
pub fn model_interpolate(a: &ModelPoint, b: &ModelPoint, t: f64) -> ModelPoint {
    let d = model_distance_unchecked(a, b);
    if d == 0.0 {
        return *a;
    }
    let k = a.kappa;
    let sd = sn(k, d);
    let (wa, wb) = if sd.abs() < 1e-300 {
        (1.0 - t, t)
    } else {
        (sn(k, (1.0 - t) * d) / sd, sn(k, t * d) / sd)
    };
    let mut coords = [0.0; 3];
    for i in 0..3 {
        coords[i] = wa * a.coords[i] + wb * b.coords[i];
    }
    ModelPoint::on_surface(k, coords).unwrap_or(ModelPoint { kappa: k, coords })
}

/// Distance between points at polar coordinates `(r1, θ1)` and `(r2, θ2)`,
/// i.e. the side opposite the included angle `|θ1 − θ2|` (folded to `[0, π]`).
pub fn polar_distance(kappa: Curvature, r1: f64, theta1: f64, r2: f64, theta2: f64) -> f64 {
    let mut dt = (theta1 - theta2).rem_euclid(2.0 * PI);
    if dt > PI {
        dt = 2.0 * PI - dt;
    }
    opposite_side(kappa, r1, r2, dt).unwrap_or_else(|_| kappa.varpi())
}
