//! Cones, suspensions, rescalings, the partial double `B†(f)` and the
//! space-spec grammar.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::expr::{fold_const, Expr};
use crate::metric::{
    seeded_rng, CatalogSpace, FiniteMetric, GeodesicPolyline, MetricError, MetricOracle, Point, Shape,
};
use crate::warp::{golden_min, WarpFunction, ZeroHint};
use crate::warped::{WarpedError, WarpedProduct, WarpedTriple};

/// Engine tolerance for constructed warped products.
pub const CONSTRUCTION_TOL: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Warped(#[from] WarpedError),
    #[error("the vanishing set of f is not contained in the boundary of {0}")]
    ZeroSetInterior(String),
    #[error("cannot double {0}")]
    Unsupported(String),
    #[error("space spec: {0}")]
    Spec(String),
}

/// `ℝ≥0 ×_{a·t} F`.
pub fn make_cone(fiber: Arc<dyn MetricOracle>, a: f64) -> Result<WarpedProduct, ConstructionError> {
    if !(a.is_finite() && a > 0.0) {
        return Err(ConstructionError::Spec(format!("cone slope {a} must be positive")));
    }
    let base = CatalogSpace::Ray;
    let expr = Expr::Mul(Box::new(Expr::Const(a)), Box::new(Expr::Coord(0)));
    let warp = WarpFunction::from_expr(expr, &format!("{a}*t"), &base, a, ZeroHint::Points(vec![vec![0.0]]))
        .map_err(WarpedError::from)?;
    Ok(WarpedProduct::new(WarpedTriple::new(base, warp, fiber)?, CONSTRUCTION_TOL))
}

/// `[0, π] ×_{sin} F`.
pub fn make_suspension(fiber: Arc<dyn MetricOracle>) -> Result<WarpedProduct, ConstructionError> {
    let base = CatalogSpace::interval(0.0, PI)?;
    let warp = WarpFunction::parse("sin(t)", &base, 1.0, ZeroHint::Points(vec![vec![0.0], vec![PI]]))
        .map_err(WarpedError::from)?;
    Ok(WarpedProduct::new(WarpedTriple::new(base, warp, fiber)?, CONSTRUCTION_TOL))
}

/// A space with all distances multiplied by `λ`; points keep their encoding.
#[derive(Clone, Debug)]
pub struct ScaledSpace {
    pub inner: Arc<dyn MetricOracle>,
    pub lambda: f64,
}

impl MetricOracle for ScaledSpace {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.lambda * self.inner.distance(x, y)
    }

    fn validate(&self, x: &[f64]) -> Result<(), MetricError> {
        self.inner.validate(x)
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<Point> {
        self.inner.sample(n, seed)
    }

    fn diameter_hint(&self) -> Option<f64> {
        self.inner.diameter_hint().map(|d| d * self.lambda)
    }

    fn interpolate(&self, x: &[f64], y: &[f64], t: f64) -> Option<Point> {
        self.inner.interpolate(x, y, t)
    }

    fn geodesic(&self, x: &[f64], y: &[f64], resolution: f64) -> Option<GeodesicPolyline> {
        let mut g = self.inner.geodesic(x, y, resolution / self.lambda)?;
        g.total_length *= self.lambda;
        g.speed_base.iter_mut().for_each(|v| *v *= self.lambda);
        g.speed_fiber.iter_mut().for_each(|v| *v *= self.lambda);
        Some(g)
    }

    fn tol_metric(&self) -> f64 {
        self.lambda * self.inner.tol_metric()
    }

    fn shape(&self) -> Shape {
        match self.inner.shape() {
            Shape::Interval(l) => Shape::Interval(l * self.lambda),
            Shape::Circle(l) => Shape::Circle(l * self.lambda),
            s => s,
        }
    }

    fn label(&self) -> String {
        format!("scaled({}, {})", self.lambda, self.inner.label())
    }
}

/// `λ·X`.
pub fn scale_space(space: Arc<dyn MetricOracle>, lambda: f64) -> Result<Arc<dyn MetricOracle>, ConstructionError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ConstructionError::Spec(format!("scale factor {lambda} must be positive")));
    }
    if lambda == 1.0 {
        return Ok(space);
    }
    Ok(Arc::new(ScaledSpace { inner: space, lambda }))
}

/// `(λB) ×_{λ(f∘i_λ)} F`, isometric to `λ(B ×_f F)` with the same fiber coordinates.
pub fn scale_triple(triple: &WarpedTriple, lambda: f64) -> Result<WarpedTriple, ConstructionError> {
    let base = triple.base.scaled(lambda)?;
    let warp = triple.warp.rescaled(lambda, &triple.base);
    Ok(WarpedTriple::new(base, warp, triple.fiber.clone())?)
}

/// `cl(∂B − Z)` in boundary coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum GlueSet {
    /// Boundary points of a 1-D base.
    Endpoints(Vec<f64>),
    /// Closed boundary arcs `[θ0, θ1]` of a model disk, `θ0 ∈ [0, 2π)`, `θ1 ≥ θ0`.
    Arcs(Vec<(f64, f64)>),
}

impl GlueSet {
    pub fn is_empty(&self) -> bool {
        match self {
            GlueSet::Endpoints(e) => e.is_empty(),
            GlueSet::Arcs(a) => a.is_empty(),
        }
    }
}

/// How a 1-D double unfolds onto a catalog space.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Fold {
    /// Glued at both ends: a circle of length `2L`.
    Both,
    /// Glued at the lower end: `[−L, L]`.
    Lower,
    /// Glued at the upper end: `[0, 2L]`.
    Upper,
}

/// Two copies of a base glued along a boundary subset.
///
/// Points are `[base coordinates…, sheet]` with sheet `0` or `1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubledBase {
    pub base: CatalogSpace,
    pub glue: GlueSet,
    fold: Option<Fold>,
}

impl DoubledBase {
    pub fn lift(x: &[f64], sheet: usize) -> Point {
        let mut p = x.to_vec();
        p.push(sheet as f64);
        p
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], usize) {
        let n = self.base.dimension();
        (&x[..n], if x.get(n).copied().unwrap_or(0.0) >= 0.5 { 1 } else { 0 })
    }

    /// The sheet projection `Π†`.
    pub fn project<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        self.split(x).0
    }

    fn glue_points(&self) -> Vec<Point> {
        match &self.glue {
            GlueSet::Endpoints(e) => e.iter().map(|&g| vec![g]).collect(),
            GlueSet::Arcs(_) => Vec::new(),
        }
    }

    /// Shortest crossing `min_g d(x, g) + d(g, y)` and its glue point.
    fn crossing(&self, x: &[f64], y: &[f64]) -> Option<(f64, Point)> {
        match (&self.glue, &self.base) {
            (GlueSet::Endpoints(_), _) => self
                .glue_points()
                .into_iter()
                .map(|g| (self.base.distance(x, &g) + self.base.distance(&g, y), g))
                .min_by(|a, b| a.0.total_cmp(&b.0)),
            (GlueSet::Arcs(arcs), &CatalogSpace::ModelDisk { radius, .. }) => {
                let cost = |th: f64| {
                    let g = [radius, th.rem_euclid(2.0 * PI)];
                    self.base.distance(x, &g) + self.base.distance(&g, y)
                };
                let mut best: Option<(f64, f64)> = None;
                for &(t0, t1) in arcs {
                    let span = t1 - t0;
                    let n = ((span / (2.0 * PI) * 720.0).ceil() as usize).max(16);
                    let h = span / n as f64;
                    let vals: Vec<f64> = (0..=n).map(|i| cost(t0 + h * i as f64)).collect();
                    for i in 0..=n {
                        let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
                        let right = if i < n { vals[i + 1] } else { f64::INFINITY };
                        if vals[i] > left || vals[i] > right {
                            continue;
                        }
                        let lo = t0 + h * (i as f64 - 1.0).max(0.0);
                        let hi = t0 + h * (i as f64 + 1.0).min(n as f64);
                        let th = golden_min(cost, lo, hi);
                        let c = cost(th).min(vals[i]);
                        let th = if c == vals[i] { t0 + h * i as f64 } else { th };
                        if best.is_none_or(|(b, _)| c < b) {
                            best = Some((c, th));
                        }
                    }
                }
                best.map(|(c, th)| (c, vec![radius, th.rem_euclid(2.0 * PI)]))
            }
            _ => None,
        }
    }

    /// The catalog space this double is isometric to, for 1-D bases glued
    /// somewhere.
    pub fn explicit(&self) -> Option<CatalogSpace> {
        let fold = self.fold?;
        Some(match self.base {
            CatalogSpace::Interval { a, b } => {
                let l = b - a;
                match fold {
                    Fold::Both => CatalogSpace::Circle { length: 2.0 * l },
                    Fold::Lower => CatalogSpace::Interval { a: -l, b: l },
                    Fold::Upper => CatalogSpace::Interval { a: 0.0, b: 2.0 * l },
                }
            }
            CatalogSpace::Ray => CatalogSpace::Line,
            _ => return None,
        })
    }

    /// Coordinate in [`Self::explicit`] of a point of the double.
    pub fn unfold(&self, x: &[f64]) -> Option<Point> {
        let fold = self.fold?;
        let (p, sheet) = self.split(x);
        let (a, l) = match self.base {
            CatalogSpace::Interval { a, b } => (a, b - a),
            CatalogSpace::Ray => (0.0, 0.0),
            _ => return None,
        };
        let s = p[0] - a;
        Some(vec![match (fold, sheet) {
            (_, 0) => s,
            (Fold::Lower, _) => -s,
            (_, _) => 2.0 * l - s,
        }])
        .map(|mut v| {
            if fold == Fold::Both {
                v[0] = v[0].rem_euclid(2.0 * l);
            }
            v
        })
    }

    /// Base point under an explicit-space coordinate.
    pub fn fold_down(&self, s: &[f64]) -> Option<Point> {
        let fold = self.fold?;
        Some(match self.base {
            CatalogSpace::Interval { a, b } => {
                let l = b - a;
                match fold {
                    Fold::Lower => vec![a + s[0].abs()],
                    _ => vec![a + s[0].min(2.0 * l - s[0]).max(0.0)],
                }
            }
            CatalogSpace::Ray => vec![s[0].abs()],
            _ => return None,
        })
    }
}

impl MetricOracle for DoubledBase {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let (p, i) = self.split(x);
        let (q, j) = self.split(y);
        if i == j {
            return self.base.distance(p, q);
        }
        self.crossing(p, q).map_or(f64::INFINITY, |(d, _)| d)
    }

    fn validate(&self, x: &[f64]) -> Result<(), MetricError> {
        let n = self.base.dimension();
        if x.len() != n + 1 || !(x[n] == 0.0 || x[n] == 1.0) {
            return Err(MetricError::PointOutside { space: self.label(), point: x.to_vec() });
        }
        self.base.validate(&x[..n])
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = seeded_rng(seed, 31);
        self.base
            .sample(n, seed)
            .into_iter()
            .map(|p| Self::lift(&p, rng.gen_range(0..2)))
            .collect()
    }

    fn diameter_hint(&self) -> Option<f64> {
        if self.glue.is_empty() {
            return None;
        }
        self.explicit().and_then(|e| e.diameter_hint())
    }

    fn interpolate(&self, x: &[f64], y: &[f64], t: f64) -> Option<Point> {
        let (p, i) = self.split(x);
        let (q, j) = self.split(y);
        if i == j {
            return Some(Self::lift(&self.base.interpolate(p, q, t)?, i));
        }
        let (d, g) = self.crossing(p, q)?;
        if !d.is_finite() {
            return None;
        }
        let l1 = self.base.distance(p, &g);
        let s = t * d;
        if s <= l1 && l1 > 0.0 {
            Some(Self::lift(&self.base.interpolate(p, &g, s / l1)?, i))
        } else {
            let l2 = d - l1;
            let u = if l2 > 0.0 { (s - l1) / l2 } else { 1.0 };
            Some(Self::lift(&self.base.interpolate(&g, q, u.clamp(0.0, 1.0))?, j))
        }
    }

    fn shape(&self) -> Shape {
        match self.explicit() {
            Some(e) => e.shape(),
            None => Shape::Other,
        }
    }

    fn label(&self) -> String {
        format!("double({})", self.base)
    }
}

/// `f† = f ∘ Π†`.
#[derive(Clone, Debug)]
pub struct ExtendedWarp {
    pub warp: WarpFunction,
    pub doubled: DoubledBase,
}

impl ExtendedWarp {
    /// Value at a point of the double.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.warp.eval(self.doubled.project(x))
    }

    /// Value at a coordinate of the explicit unfolding.
    pub fn eval_unfolded(&self, s: &[f64]) -> f64 {
        self.doubled.fold_down(s).map_or(f64::NAN, |p| self.warp.eval(&p))
    }
}

fn merge_arcs(mut arcs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut pieces = Vec::new();
    for (t0, t1) in arcs.drain(..) {
        let span = (t1 - t0).clamp(0.0, 2.0 * PI);
        let s = t0.rem_euclid(2.0 * PI);
        if s + span > 2.0 * PI {
            pieces.push((s, 2.0 * PI));
            pieces.push((0.0, s + span - 2.0 * PI));
        } else {
            pieces.push((s, s + span));
        }
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in pieces {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Closure of the complement of `zero_arcs` in the boundary circle.
fn complement_arcs(zero_arcs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let z = merge_arcs(zero_arcs.to_vec());
    if z.is_empty() {
        return vec![(0.0, 2.0 * PI)];
    }
    let mut out = Vec::new();
    for k in 0..z.len() {
        let start = z[k].1;
        let end = if k + 1 < z.len() { z[k + 1].0 } else { z[0].0 + 2.0 * PI };
        if end > start {
            out.push((start.rem_euclid(2.0 * PI), start.rem_euclid(2.0 * PI) + (end - start)));
        }
    }
    out
}

/// `B†(f)`: two copies of `B` glued along `cl(∂B − Z)`, with `f†`.
pub fn make_doubled(base: &CatalogSpace, f: &WarpFunction) -> Result<(DoubledBase, ExtendedWarp), ConstructionError> {
    let zero = f.zero_set(base);
    let interior = || ConstructionError::ZeroSetInterior(base.to_string());
    let on = |z: &Point, e: f64| (z[0] - e).abs() <= 1e-9 * (1.0 + e.abs());
    let (glue, fold) = match *base {
        CatalogSpace::Interval { a, b } => {
            if zero.points.iter().any(|z| !on(z, a) && !on(z, b)) {
                return Err(interior());
            }
            let keep: Vec<f64> = [a, b].into_iter().filter(|&e| !zero.points.iter().any(|z| on(z, e))).collect();
            let fold = match keep.len() {
                2 => Some(Fold::Both),
                1 if keep[0] == a => Some(Fold::Lower),
                1 => Some(Fold::Upper),
                _ => None,
            };
            (GlueSet::Endpoints(keep), fold)
        }
        CatalogSpace::Ray => {
            if zero.points.iter().any(|z| !on(z, 0.0)) {
                return Err(interior());
            }
            if zero.is_empty() {
                (GlueSet::Endpoints(vec![0.0]), Some(Fold::Lower))
            } else {
                (GlueSet::Endpoints(Vec::new()), None)
            }
        }
        CatalogSpace::Line | CatalogSpace::Circle { .. } => {
            if !zero.is_empty() {
                return Err(interior());
            }
            (GlueSet::Endpoints(Vec::new()), None)
        }
        CatalogSpace::ModelDisk { radius, .. } => {
            if !base.is_convex_disk() {
                return Err(ConstructionError::Unsupported(base.to_string()));
            }
            let mut arcs = zero.arcs.clone();
            for z in &zero.points {
                if (z[0] - radius).abs() > 1e-9 * (1.0 + radius) {
                    return Err(interior());
                }
                arcs.push((z[1], z[1]));
            }
            (GlueSet::Arcs(complement_arcs(&arcs)), None)
        }
        _ => return Err(ConstructionError::Unsupported(base.to_string())),
    };
    let doubled = DoubledBase { base: base.clone(), glue, fold };
    let ext = ExtendedWarp { warp: f.clone(), doubled: doubled.clone() };
    Ok((doubled, ext))
}

/// Parsed space-spec.
///
/// ```text
/// space := name | name '(' arg (',' arg)* ')'
/// arg   := space | constant expression | path
/// ```
///
/// Names: `interval(a,b) ray line circle(L) disk(κ,R) point two_points(D)
/// tripod(legs,leg) finite(path) cone(a,F) suspension(F) scaled(λ,X)`.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceSpec {
    Catalog(CatalogSpace),
    Cone(f64, Box<SpaceSpec>),
    Suspension(Box<SpaceSpec>),
    Scaled(f64, Box<SpaceSpec>),
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::Catalog(c) => write!(f, "{c}"),
            SpaceSpec::Cone(a, s) => write!(f, "cone({a}, {s})"),
            SpaceSpec::Suspension(s) => write!(f, "suspension({s})"),
            SpaceSpec::Scaled(l, s) => write!(f, "scaled({l}, {s})"),
        }
    }
}

fn split_args(s: &str) -> Result<Vec<&str>, ConstructionError> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(ConstructionError::Spec(format!("unbalanced parentheses in `{s}`")));
        }
    }
    if depth != 0 {
        return Err(ConstructionError::Spec(format!("unbalanced parentheses in `{s}`")));
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    Ok(out)
}

/// Constant expression such as `2*pi*0.9`.
pub fn parse_number(s: &str) -> Result<f64, ConstructionError> {
    Expr::parse(s)
        .ok()
        .and_then(|e| fold_const(&e))
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConstructionError::Spec(format!("`{s}` is not a constant")))
}

impl SpaceSpec {
    pub fn parse(src: &str) -> Result<Self, ConstructionError> {
        Self::parse_in(src, None)
    }

    /// Relative `finite(path)` arguments are resolved against `dir`.
    pub fn parse_in(src: &str, dir: Option<&Path>) -> Result<Self, ConstructionError> {
        let src = src.trim();
        let (name, args) = match src.find('(') {
            Some(i) if src.ends_with(')') => (src[..i].trim(), split_args(&src[i + 1..src.len() - 1])?),
            Some(_) => return Err(ConstructionError::Spec(format!("malformed `{src}`"))),
            None => (src, Vec::new()),
        };
        let arity = |n: usize| -> Result<(), ConstructionError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(ConstructionError::Spec(format!("`{name}` takes {n} argument(s), got {}", args.len())))
            }
        };
        let num = |i: usize| parse_number(args[i]);
        let cat = |c: Result<CatalogSpace, MetricError>| c.map(SpaceSpec::Catalog).map_err(ConstructionError::from);
        match name.to_ascii_lowercase().as_str() {
            "interval" => {
                arity(2)?;
                cat(CatalogSpace::interval(num(0)?, num(1)?))
            }
            "ray" => {
                arity(0)?;
                Ok(SpaceSpec::Catalog(CatalogSpace::Ray))
            }
            "line" => {
                arity(0)?;
                Ok(SpaceSpec::Catalog(CatalogSpace::Line))
            }
            "point" => {
                arity(0)?;
                Ok(SpaceSpec::Catalog(CatalogSpace::Point))
            }
            "circle" => {
                arity(1)?;
                cat(CatalogSpace::circle(num(0)?))
            }
            "disk" => {
                arity(2)?;
                cat(CatalogSpace::model_disk(num(0)?, num(1)?))
            }
            "two_points" => {
                arity(1)?;
                cat(FiniteMetric::two_points(num(0)?).map(CatalogSpace::finite))
            }
            "tripod" => {
                arity(2)?;
                let legs = num(0)?;
                if legs < 1.0 || legs.fract() != 0.0 {
                    return Err(ConstructionError::Spec(format!("tripod needs a whole number of legs, got {legs}")));
                }
                cat(FiniteMetric::tripod(legs as usize, num(1)?).map(CatalogSpace::finite))
            }
            "finite" => {
                arity(1)?;
                let raw = args[0].trim_matches('"');
                let path = match dir {
                    Some(d) if Path::new(raw).is_relative() => d.join(raw),
                    _ => Path::new(raw).to_path_buf(),
                };
                cat(FiniteMetric::from_file(&path).map(CatalogSpace::finite))
            }
            "cone" => {
                arity(2)?;
                Ok(SpaceSpec::Cone(num(0)?, Box::new(Self::parse_in(args[1], dir)?)))
            }
            "suspension" => {
                arity(1)?;
                Ok(SpaceSpec::Suspension(Box::new(Self::parse_in(args[0], dir)?)))
            }
            "scaled" => {
                arity(2)?;
                Ok(SpaceSpec::Scaled(num(0)?, Box::new(Self::parse_in(args[1], dir)?)))
            }
            other => Err(ConstructionError::Spec(format!("unknown space `{other}`"))),
        }
    }

    /// `kind` with `params` appended as arguments, unless `kind` already has them.
    pub fn from_kind(kind: &str, params: &[f64], dir: Option<&Path>) -> Result<Self, ConstructionError> {
        if kind.contains('(') || params.is_empty() {
            return Self::parse_in(kind, dir);
        }
        let args: Vec<String> = params.iter().map(|p| format!("{p:e}")).collect();
        Self::parse_in(&format!("{kind}({})", args.join(",")), dir)
    }

    pub fn as_catalog(&self) -> Option<&CatalogSpace> {
        match self {
            SpaceSpec::Catalog(c) => Some(c),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<Arc<dyn MetricOracle>, ConstructionError> {
        Ok(match self {
            SpaceSpec::Catalog(c) => Arc::new(c.clone()),
            SpaceSpec::Cone(a, s) => Arc::new(make_cone(s.build()?, *a)?),
            SpaceSpec::Suspension(s) => Arc::new(make_suspension(s.build()?)?),
            SpaceSpec::Scaled(l, s) => scale_space(s.build()?, *l)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexity::{sinusoidal_test_on, Mode};
    use crate::model::Curvature;
    use approx::assert_abs_diff_eq;

    fn circle() -> Arc<dyn MetricOracle> {
        Arc::new(CatalogSpace::Circle { length: 2.0 * PI })
    }

    #[test]
    fn cone_examples() {
        let c = make_cone(circle(), 1.0).unwrap();
        assert_abs_diff_eq!(c.distance(&[1.0, 0.0], &[1.0, PI]), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.distance(&[1.0, 0.0], &[1.0, PI / 2.0]), 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.distance(&[0.0, 1.0], &[0.7, 3.0]), 0.7, epsilon = 1e-12);
        let two: Arc<dyn MetricOracle> = Arc::new(CatalogSpace::finite(FiniteMetric::two_points(4.0).unwrap()));
        let c = make_cone(two, 1.0).unwrap();
        assert_abs_diff_eq!(c.distance(&[0.3, 0.0], &[1.1, 1.0]), 1.4, epsilon = 1e-12);
    }

    #[test]
    fn suspension_examples() {
        let s = make_suspension(circle()).unwrap();
        assert!(s.has_fast_path());
        assert_abs_diff_eq!(s.distance(&[0.0, 1.0], &[PI, 2.0]), PI, epsilon = 1e-12);
        let (t1, t2, dphi) = (0.4f64, 2.0f64, 1.3f64);
        let want = (t1.cos() * t2.cos() + t1.sin() * t2.sin() * dphi.cos()).acos();
        assert_abs_diff_eq!(s.distance(&[t1, 0.0], &[t2, dphi]), want, epsilon = 1e-12);
        let lune = make_suspension(Arc::new(CatalogSpace::interval(0.0, PI).unwrap())).unwrap();
        assert_abs_diff_eq!(lune.distance(&[PI / 2.0, 0.0], &[PI / 2.0, PI]), PI, epsilon = 1e-12);
    }

    #[test]
    fn scaling() {
        let c: Arc<dyn MetricOracle> = Arc::new(CatalogSpace::Circle { length: 3.0 });
        let s = scale_space(c.clone(), 2.0).unwrap();
        let big = CatalogSpace::Circle { length: 6.0 };
        for (x, y) in [(0.1, 1.2), (0.3, 2.9), (1.0, 2.5)] {
            assert_abs_diff_eq!(s.distance(&[x], &[y]), big.distance(&[2.0 * x], &[2.0 * y]), epsilon = 1e-12);
        }
        assert!(Arc::ptr_eq(&scale_space(c.clone(), 1.0).unwrap(), &c));
    }

    fn doubled(base: CatalogSpace, src: &str, lip: f64) -> (DoubledBase, ExtendedWarp) {
        let f = WarpFunction::parse(src, &base, lip, ZeroHint::Unknown).unwrap();
        make_doubled(&base, &f).unwrap()
    }

    fn check_isometry(d: &DoubledBase) {
        let e = d.explicit().unwrap();
        let pts = d.sample(200, 9);
        for x in &pts {
            for y in pts.iter().take(20) {
                let want = e.distance(&d.unfold(x).unwrap(), &d.unfold(y).unwrap());
                assert_abs_diff_eq!(d.distance(x, y), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn doubled_examples() {
        let (d, f) = doubled(CatalogSpace::interval(0.0, PI / 2.0).unwrap(), "cos(t)", 1.0);
        assert_eq!(d.explicit(), Some(CatalogSpace::Interval { a: -PI / 2.0, b: PI / 2.0 }));
        check_isometry(&d);
        assert_abs_diff_eq!(f.eval_unfolded(&[-0.4]), 0.4f64.cos(), epsilon = 1e-15);

        let (d, _) = doubled(CatalogSpace::interval(0.0, 1.0).unwrap(), "1", 0.0);
        assert_eq!(d.explicit(), Some(CatalogSpace::Circle { length: 2.0 }));
        check_isometry(&d);

        let (d, f) = doubled(CatalogSpace::interval(0.0, 1.0).unwrap(), "t", 1.0);
        assert_eq!(d.explicit(), Some(CatalogSpace::Interval { a: 0.0, b: 2.0 }));
        check_isometry(&d);
        assert_abs_diff_eq!(f.eval_unfolded(&[1.5]), 0.5, epsilon = 1e-15);
        let e = d.explicit().unwrap();
        let v = sinusoidal_test_on(&e, |s| f.eval_unfolded(s), Curvature::ZERO, Mode::Concave, 32, 1, 1e-9).unwrap();
        assert!(v.passed);
        let v = sinusoidal_test_on(&e, |s| f.eval_unfolded(s), Curvature::ZERO, Mode::Convex, 32, 1, 1e-9).unwrap();
        assert!(!v.passed);
    }

    #[test]
    fn interior_zeros_rejected() {
        let base = CatalogSpace::interval(-1.0, 1.0).unwrap();
        let f = WarpFunction::parse("abs(t)", &base, 1.0, ZeroHint::Unknown).unwrap();
        assert!(matches!(make_doubled(&base, &f), Err(ConstructionError::ZeroSetInterior(_))));
    }

    #[test]
    fn disk_double_swaps_sheets() {
        let base = CatalogSpace::model_disk(0.0, 1.0).unwrap();
        let f = WarpFunction::parse("1", &base, 0.0, ZeroHint::Empty).unwrap();
        let (d, _) = make_doubled(&base, &f).unwrap();
        let x = DoubledBase::lift(&[0.5, 0.0], 0);
        let y = DoubledBase::lift(&[0.5, 0.0], 1);
        assert_abs_diff_eq!(d.distance(&x, &y), 1.0, epsilon = 1e-9);
        let pts = d.sample(30, 4);
        for p in &pts {
            for q in &pts {
                let (pp, qq) = (swap(p), swap(q));
                assert_abs_diff_eq!(d.distance(p, q), d.distance(&pp, &qq), epsilon = 1e-12);
            }
        }
        let arcs = complement_arcs(&[(PI / 2.0, PI), (3.0 * PI / 2.0, 1.9 * PI)]);
        assert_eq!(arcs.len(), 2);
        assert_abs_diff_eq!(arcs[0].0, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(arcs[1].1 - arcs[1].0, 0.6 * PI, epsilon = 1e-12);
        assert_eq!(complement_arcs(&[(PI / 2.0, PI), (PI, 2.5 * PI)]), Vec::<(f64, f64)>::new());
    }

    fn swap(p: &[f64]) -> Point {
        let mut q = p.to_vec();
        let n = q.len() - 1;
        q[n] = 1.0 - q[n];
        q
    }

    #[test]
    fn spec_grammar() {
        let s = SpaceSpec::parse("cone(1, circle(2*pi*0.9))").unwrap();
        assert_eq!(s.to_string(), format!("cone(1, circle({}))", 2.0 * PI * 0.9));
        let built = s.build().unwrap();
        assert_abs_diff_eq!(built.distance(&[1.0, 0.0], &[2.0, 0.0]), 1.0, epsilon = 1e-12);
        assert_eq!(SpaceSpec::from_kind("interval", &[0.0, 2.0], None).unwrap(),
            SpaceSpec::Catalog(CatalogSpace::Interval { a: 0.0, b: 2.0 }));
        assert!(SpaceSpec::parse("circle(1, 2)").is_err());
        assert!(SpaceSpec::parse("blob").is_err());
        assert!(SpaceSpec::parse("cone(1, circle(3)").is_err());
    }
}
