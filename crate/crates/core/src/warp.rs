//! Warping functions bound to a base space.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError, Jet};
use crate::metric::{CatalogSpace, MetricOracle, Point, UNBOUNDED_EXTENT};

/// Values below this are treated as zeros of `f`.
pub const ZERO_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("warping function is negative ({value:e}) at {at:?}")]
    Negative { at: Point, value: f64 },
    #[error("warping function vanishes identically on the base")]
    VanishesEverywhere,
    #[error("declared Lipschitz constant {declared} is below the observed slope {observed}")]
    Lipschitz { declared: f64, observed: f64 },
    #[error("invalid zero-set hint: {0}")]
    Hint(String),
}

/// User-supplied description of `Z = f⁻¹(0)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum ZeroHint {
    #[default]
    Unknown,
    Empty,
    Points(Vec<Point>),
    /// Closed boundary arcs `[θ0, θ1]` of a model disk.
    BoundaryArcs(Vec<(f64, f64)>),
}

/// The vanishing set as used by the engine.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ZeroSet {
    pub points: Vec<Point>,
    pub arcs: Vec<(f64, f64)>,
    /// Set when `Z` was located numerically rather than from a hint.
    pub detected: bool,
}

impl ZeroSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.arcs.is_empty()
    }

    /// Finite sample of `Z`; arcs are sampled with `per_arc` points.
    pub fn sample(&self, base: &CatalogSpace, per_arc: usize) -> Vec<Point> {
        let mut out = self.points.clone();
        if let CatalogSpace::ModelDisk { radius, .. } = *base {
            for &(t0, t1) in &self.arcs {
                let n = per_arc.max(2);
                let span = (t1 - t0).clamp(0.0, 2.0 * PI);
                for i in 0..n {
                    let th = t0 + span * i as f64 / (n - 1) as f64;
                    out.push(vec![radius, th.rem_euclid(2.0 * PI)]);
                }
            }
        }
        out
    }
}

/// `f: B → ℝ≥0` with a declared Lipschitz constant.
///
/// The expression is written against `source_base`; the function is
/// evaluated as `post · expr(x / pre)` so that rescaled copies share the tree.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpFunction {
    expr: Expr,
    source: String,
    source_base: CatalogSpace,
    pre: f64,
    post: f64,
    pub lipschitz: f64,
    pub zeros: ZeroHint,
}

impl WarpFunction {
    pub fn parse(
        source: &str,
        base: &CatalogSpace,
        lipschitz: f64,
        zeros: ZeroHint,
    ) -> Result<Self, WarpError> {
        let expr = Expr::parse(source)?;
        Self::from_expr(expr, source, base, lipschitz, zeros)
    }

    pub fn from_expr(
        expr: Expr,
        source: &str,
        base: &CatalogSpace,
        lipschitz: f64,
        zeros: ZeroHint,
    ) -> Result<Self, WarpError> {
        expr.check(base)?;
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(WarpError::Lipschitz { declared: lipschitz, observed: f64::NAN });
        }
        match (&zeros, base) {
            (ZeroHint::BoundaryArcs(_), CatalogSpace::ModelDisk { .. }) => {}
            (ZeroHint::BoundaryArcs(_), _) => {
                return Err(WarpError::Hint("boundary arcs need a model-disk base".into()))
            }
            (ZeroHint::Points(ps), _) => {
                for p in ps {
                    base.validate(p).map_err(|e| WarpError::Hint(e.to_string()))?;
                }
            }
            _ => {}
        }
        Ok(WarpFunction {
            expr,
            source: source.to_string(),
            source_base: base.clone(),
            pre: 1.0,
            post: 1.0,
            lipschitz,
            zeros,
        })
    }

    pub fn constant(c: f64, base: &CatalogSpace) -> Self {
        let zeros = if c > 0.0 { ZeroHint::Empty } else { ZeroHint::Unknown };
        Self::from_expr(Expr::Const(c), &format!("{c}"), base, 0.0, zeros)
            .expect("constants bind to every base")
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// `(a, κ')` when `f = a·sn^κ'(t)` on a 1-D base.
    pub fn cone_profile(&self) -> Option<(f64, f64)> {
        let (a, k) = self.expr.as_cone_profile()?;
        // sn^k(t/pre) = sn^{k/pre²}(t)/pre
        Some((self.post * a / self.pre, k / (self.pre * self.pre)))
    }

    fn unscale(&self, x: &[f64]) -> Point {
        if self.pre == 1.0 {
            return x.to_vec();
        }
        match self.source_base {
            CatalogSpace::ModelDisk { .. } => vec![x[0] / self.pre, x[1]],
            _ => x.iter().map(|v| v / self.pre).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.pre == 1.0 {
            return self.post * self.expr.eval(x, &self.source_base);
        }
        self.post * self.expr.eval(&self.unscale(x), &self.source_base)
    }

    /// Value and first two derivatives on a 1-D base.
    pub fn jet(&self, t: f64) -> Jet {
        let j = self.expr.jet(t / self.pre, &self.source_base);
        Jet {
            v: self.post * j.v,
            d: self.post / self.pre * j.d,
            dd: self.post / (self.pre * self.pre) * j.dd,
        }
    }

    /// `λ·f` (same base).
    pub fn scaled_values(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.post *= lambda;
        out.lipschitz *= lambda;
        out
    }

    /// `λ·(f ∘ i_λ)` on the rescaled base `λB`.
    pub fn rescaled(&self, lambda: f64, base: &CatalogSpace) -> Self {
        let mut out = self.clone();
        out.pre *= lambda;
        out.post *= lambda;
        out.zeros = match &self.zeros {
            ZeroHint::Points(ps) => {
                ZeroHint::Points(ps.iter().map(|p| base.scale_point(p, lambda)).collect())
            }
            z => z.clone(),
        };
        out
    }

    /// Replaces the zero hint.
    pub fn with_zeros(mut self, zeros: ZeroHint) -> Self {
        self.zeros = zeros;
        self
    }

    /// Dense grid over the (bounded part of the) base, used for checks.
    pub fn check_grid(base: &CatalogSpace, n: usize) -> Vec<Point> {
        match *base {
            CatalogSpace::ModelDisk { radius, .. } => {
                let nr = (n as f64).sqrt().ceil() as usize;
                let nt = 2 * nr;
                let mut out = Vec::with_capacity(nr * nt + 1);
                out.push(vec![0.0, 0.0]);
                for i in 1..=nr {
                    for j in 0..nt {
                        out.push(vec![
                            radius * i as f64 / nr as f64,
                            2.0 * PI * j as f64 / nt as f64,
                        ]);
                    }
                }
                out
            }
            CatalogSpace::Point => vec![Vec::new()],
            CatalogSpace::Finite(ref m) => (0..m.len()).map(|i| vec![i as f64]).collect(),
            _ => {
                let (lo, hi) = bounded_range(base);
                (0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64]).collect()
            }
        }
    }

    /// Checks `f ≥ 0`, `f ≢ 0` and the declared Lipschitz constant on a dense grid.
    pub fn validate_on(&self, base: &CatalogSpace, n: usize) -> Result<(), WarpError> {
        let grid = Self::check_grid(base, n);
        let values: Vec<f64> = grid.iter().map(|p| self.eval(p)).collect();
        let mut any_positive = false;
        for (p, &v) in grid.iter().zip(&values) {
            if !(v >= -1e-12) {
                return Err(WarpError::Negative { at: p.clone(), value: v });
            }
            any_positive |= v > ZERO_THRESHOLD;
        }
        if !any_positive {
            return Err(WarpError::VanishesEverywhere);
        }
        if base.dimension() == 1 {
            let mut observed: f64 = 0.0;
            for i in 1..grid.len() {
                let d = base.distance(&grid[i - 1], &grid[i]);
                if d > 0.0 {
                    observed = observed.max((values[i] - values[i - 1]).abs() / d);
                }
            }
            if observed > self.lipschitz * (1.0 + 1e-6) + 1e-9 {
                return Err(WarpError::Lipschitz { declared: self.lipschitz, observed });
            }
        }
        Ok(())
    }

    /// The vanishing set: from the hint when present, otherwise by locating
    /// near-zero local minima on a dense grid.
    pub fn zero_set(&self, base: &CatalogSpace) -> ZeroSet {
        match &self.zeros {
            ZeroHint::Empty => ZeroSet::default(),
            ZeroHint::Points(ps) => ZeroSet { points: ps.clone(), arcs: Vec::new(), detected: false },
            ZeroHint::BoundaryArcs(a) => ZeroSet { points: Vec::new(), arcs: a.clone(), detected: false },
            ZeroHint::Unknown => self.detect_zeros(base),
        }
    }

    fn detect_zeros(&self, base: &CatalogSpace) -> ZeroSet {
        let mut points = Vec::new();
        match base {
            CatalogSpace::ModelDisk { .. } => {
                let grid = Self::check_grid(base, 4096);
                for p in grid {
                    if self.eval(&p) < ZERO_THRESHOLD {
                        points.push(p);
                    }
                }
            }
            CatalogSpace::Point | CatalogSpace::Finite(_) => {}
            _ => {
                let n = 4097;
                let (lo, hi) = bounded_range(base);
                let h = (hi - lo) / (n - 1) as f64;
                let xs: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
                let fs: Vec<f64> = xs.iter().map(|&x| self.eval(&[x])).collect();
                for i in 0..n {
                    let left = if i > 0 { fs[i - 1] } else { f64::INFINITY };
                    let right = if i + 1 < n { fs[i + 1] } else { f64::INFINITY };
                    let is_min = fs[i] <= left && fs[i] <= right;
                    if !is_min || fs[i] > self.lipschitz * h + ZERO_THRESHOLD {
                        continue;
                    }
                    let a = if i > 0 { xs[i - 1] } else { xs[i] };
                    let b = if i + 1 < n { xs[i + 1] } else { xs[i] };
                    let x = golden_min(|t| self.eval(&[t]), a, b);
                    if self.eval(&[x]) < ZERO_THRESHOLD
                        && !points.iter().any(|p: &Point| (p[0] - x).abs() < 2.0 * h)
                    {
                        points.push(vec![x]);
                    }
                }
            }
        }
        ZeroSet { points, arcs: Vec::new(), detected: true }
    }

    /// Infimum of `f` over a dense grid of the base.
    pub fn inf_on(&self, base: &CatalogSpace) -> f64 {
        Self::check_grid(base, 4097)
            .iter()
            .map(|p| self.eval(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Bounded window of a 1-D base used for grids and root search.
pub fn bounded_range(base: &CatalogSpace) -> (f64, f64) {
    match *base {
        CatalogSpace::Interval { a, b } => (a, b),
        CatalogSpace::Ray => (0.0, 4.0 * UNBOUNDED_EXTENT),
        CatalogSpace::Line => (-4.0 * UNBOUNDED_EXTENT, 4.0 * UNBOUNDED_EXTENT),
        CatalogSpace::Circle { length } => (0.0, length),
        CatalogSpace::ModelDisk { radius, .. } => (0.0, radius),
        _ => (0.0, 0.0),
    }
}

/// Golden-section minimization on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    [a, m, b].into_iter().fold(m, |best, x| if f(x) < f(best) { x } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn validation() {
        let b = CatalogSpace::interval(-1.0, 1.0).unwrap();
        assert!(WarpFunction::parse("abs(t)", &b, 1.0, ZeroHint::Unknown)
            .unwrap()
            .validate_on(&b, 1001)
            .is_ok());
        assert!(matches!(
            WarpFunction::parse("t", &b, 1.0, ZeroHint::Unknown).unwrap().validate_on(&b, 1001),
            Err(WarpError::Negative { .. })
        ));
        assert!(matches!(
            WarpFunction::parse("0*t", &b, 1.0, ZeroHint::Unknown).unwrap().validate_on(&b, 1001),
            Err(WarpError::VanishesEverywhere)
        ));
        assert!(matches!(
            WarpFunction::parse("3*abs(t)", &b, 1.0, ZeroHint::Unknown).unwrap().validate_on(&b, 1001),
            Err(WarpError::Lipschitz { .. })
        ));
    }

    #[test]
    fn detects_roots() {
        let b = CatalogSpace::interval(0.0, PI).unwrap();
        let f = WarpFunction::parse("sin(t)", &b, 1.0, ZeroHint::Unknown).unwrap();
        let z = f.zero_set(&b);
        assert!(z.detected);
        assert_eq!(z.points.len(), 2);
        assert_abs_diff_eq!(z.points[0][0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(z.points[1][0], PI, epsilon = 1e-9);

        let b = CatalogSpace::interval(-1.0, 1.0).unwrap();
        let f = WarpFunction::parse("abs(t - 0.3)", &b, 1.0, ZeroHint::Unknown).unwrap();
        let z = f.zero_set(&b);
        assert_eq!(z.points.len(), 1);
        assert_abs_diff_eq!(z.points[0][0], 0.3, epsilon = 1e-9);
    }

    #[test]
    fn rescaling_follows_the_base() {
        let b = CatalogSpace::interval(0.0, PI).unwrap();
        let f = WarpFunction::parse("sin(t)", &b, 1.0, ZeroHint::Points(vec![vec![0.0], vec![PI]]))
            .unwrap();
        let g = f.rescaled(2.0, &b);
        assert_abs_diff_eq!(g.eval(&[PI]), 2.0 * (PI / 2.0).sin(), epsilon = 1e-15);
        assert_eq!(g.zeros, ZeroHint::Points(vec![vec![0.0], vec![2.0 * PI]]));
        let j = g.jet(1.0);
        assert_abs_diff_eq!(j.d, (0.5f64).cos(), epsilon = 1e-15);
        // 2·sin(t/2) = sn^{1/4}(t)
        assert_eq!(g.cone_profile(), Some((1.0, 0.25)));
    }
}
