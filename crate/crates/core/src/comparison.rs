//! Distance-only curvature comparisons and the sampling harness.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::metric::{seeded_rng, GeodesicPolyline, MetricOracle, Point};
use crate::model::{angle_at, opposite_side, Curvature, ModelAngle};

/// Which comparison a sampler applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Kind {
    /// Curvature bounded below; tested with `(1+3)^κ`.
    Cbb,
    /// Curvature bounded above; tested with `(2+2)^κ`.
    Cat,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Cbb => "CBB",
            Kind::Cat => "CAT",
        })
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CBB" => Ok(Kind::Cbb),
            "CAT" => Ok(Kind::Cat),
            other => Err(format!("unknown comparison kind `{other}` (expected CAT or CBB)")),
        }
    }
}

/// Four points and their six distances, `d[i][j]` symmetric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quadruple {
    pub d: [[f64; 4]; 4],
}

impl Quadruple {
    pub fn from_matrix(d: [[f64; 4]; 4]) -> Result<Self, String> {
        for i in 0..4 {
            if d[i][i] != 0.0 {
                return Err(format!("nonzero diagonal entry d[{i}][{i}]"));
            }
            for j in 0..4 {
                if !(d[i][j] >= 0.0) || (d[i][j] - d[j][i]).abs() > 1e-12 * (1.0 + d[i][j]) {
                    return Err(format!("entry d[{i}][{j}] is negative or asymmetric"));
                }
            }
        }
        Ok(Quadruple { d })
    }

    /// Distances among four points of `space`.
    pub fn from_points<S: MetricOracle + ?Sized>(space: &S, pts: &[Point]) -> Self {
        let mut d = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in (i + 1)..4 {
                d[i][j] = space.distance(&pts[i], &pts[j]);
                d[j][i] = d[i][j];
            }
        }
        Quadruple { d }
    }

    fn angle(&self, kappa: Curvature, v: usize, a: usize, b: usize) -> ModelAngle {
        angle_at(kappa, self.d[v][a], self.d[v][b], self.d[a][b])
    }

    #[cfg(test)]
    fn permuted(&self, p: [usize; 4]) -> Quadruple {
        let mut d = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                d[i][j] = self.d[p[i]][p[j]];
            }
        }
        Quadruple { d }
    }
}

/// Evidence for a failed check: the offending points and their distances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub points: Vec<Point>,
    pub distances: Vec<Vec<f64>>,
}

impl Witness {
    pub fn from_points<S: MetricOracle + ?Sized>(space: &S, points: Vec<Point>) -> Self {
        let distances = points
            .iter()
            .map(|x| points.iter().map(|y| space.distance(x, y)).collect())
            .collect();
        Witness { points, distances }
    }
}

/// Outcome of a comparison battery.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonVerdict {
    pub passed: bool,
    pub witness: Option<Witness>,
    /// Smallest slack observed; negative values measure violations.
    pub margin: f64,
    pub n_tested: usize,
    pub slack_used: f64,
}

impl ComparisonVerdict {
    pub fn new(margin: f64, slack: f64, n_tested: usize, witness: Option<Witness>) -> Self {
        let passed = margin >= -slack;
        ComparisonVerdict {
            passed,
            witness: if passed { None } else { witness },
            margin,
            n_tested,
            slack_used: slack,
        }
    }
}

/// `(1+3)^κ` for every choice of the distinguished point.
///
/// Returns the pass flag and the smallest `2π − (angle sum)`; labelings with
/// an undefined model angle hold vacuously and do not contribute.
pub fn test_1plus3(q: &Quadruple, kappa: Curvature, slack: f64) -> (bool, f64) {
    let mut margin = f64::INFINITY;
    for v in 0..4 {
        let o: Vec<usize> = (0..4).filter(|&i| i != v).collect();
        let angles = [
            q.angle(kappa, v, o[0], o[1]),
            q.angle(kappa, v, o[1], o[2]),
            q.angle(kappa, v, o[2], o[0]),
        ];
        if let [Some(a), Some(b), Some(c)] = angles.map(ModelAngle::value) {
            margin = margin.min(2.0 * PI - (a + b + c));
        }
    }
    finish(margin, slack)
}

/// The six ways to split four labels into `{x¹, x²} | {x³, x⁴}`.
const SPLITS: [[usize; 4]; 6] = [
    [0, 1, 2, 3],
    [0, 2, 1, 3],
    [0, 3, 1, 2],
    [1, 2, 0, 3],
    [1, 3, 0, 2],
    [2, 3, 0, 1],
];

/// `(2+2)^κ` over all splits; each split passes if either disjunct holds.
pub fn test_2plus2(q: &Quadruple, kappa: Curvature, slack: f64) -> (bool, f64) {
    let mut margin = f64::INFINITY;
    for s in SPLITS {
        let [x1, x2, x3, x4] = s;
        let angles = [
            q.angle(kappa, x1, x3, x4),
            q.angle(kappa, x1, x3, x2),
            q.angle(kappa, x1, x2, x4),
            q.angle(kappa, x2, x3, x4),
            q.angle(kappa, x2, x3, x1),
            q.angle(kappa, x2, x1, x4),
        ];
        let v = angles.map(ModelAngle::value);
        if v.iter().any(Option::is_none) {
            continue;
        }
        let v = v.map(Option::unwrap);
        let a = v[1] + v[2] - v[0];
        let b = v[4] + v[5] - v[3];
        margin = margin.min(a.max(b));
    }
    finish(margin, slack)
}

fn finish(margin: f64, slack: f64) -> (bool, f64) {
    let margin = if margin.is_finite() { margin } else { 0.0 };
    (margin >= -slack, margin)
}

/// Margin of one quadruple under the comparison for `kind`.
pub fn quadruple_margin(q: &Quadruple, kappa: Curvature, kind: Kind) -> f64 {
    match kind {
        Kind::Cbb => test_1plus3(q, kappa, 0.0).1,
        Kind::Cat => test_2plus2(q, kappa, 0.0).1,
    }
}

/// Tuning for [`sample_comparisons_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerOptions {
    /// Number of points drawn once; quadruples are drawn from this pool.
    pub pool: usize,
    /// Fraction of quadruples built around near-degenerate triples.
    pub adversarial: f64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions { pool: 256, adversarial: 0.25 }
    }
}

/// Samples `n` quadruples and applies `(1+3)^κ` (CBB) or `(2+2)^κ` (CAT).
pub fn sample_comparisons<S: MetricOracle + ?Sized>(
    space: &S,
    kappa: Curvature,
    kind: Kind,
    n: usize,
    seed: u64,
    slack: f64,
) -> ComparisonVerdict {
    sample_comparisons_with(space, kappa, kind, n, seed, slack, SamplerOptions::default())
}

struct Pool {
    points: Vec<Point>,
    d: Vec<Vec<f64>>,
}

impl Pool {
    fn build<S: MetricOracle + ?Sized>(space: &S, size: usize, seed: u64) -> Pool {
        let uniform = (size * 3 / 4).max(4.min(size));
        let mut points = space.sample(uniform, seed);
        // Geodesic midpoints and near-endpoints give nearly collinear triples.
        let mut rng = seeded_rng(seed, 11);
        let base = points.len();
        let mut attempts = 0;
        while points.len() < size && base >= 2 && attempts < 4 * size {
            attempts += 1;
            let i = rng.gen_range(0..base);
            let j = rng.gen_range(0..base);
            if i == j {
                continue;
            }
            let t = [0.5, 0.25, 0.75, 0.02, 0.98][rng.gen_range(0..5)];
            match space.interpolate(&points[i], &points[j], t) {
                Some(p) => points.push(p),
                None => break,
            }
        }
        let d: Vec<Vec<f64>> = (0..points.len())
            .into_par_iter()
            .map(|i| points.iter().map(|y| space.distance(&points[i], y)).collect())
            .collect();
        let mut d = d;
        for i in 0..d.len() {
            d[i][i] = 0.0;
            for j in 0..i {
                let m = 0.5 * (d[i][j] + d[j][i]);
                d[i][j] = m;
                d[j][i] = m;
            }
        }
        Pool { points, d }
    }

    fn quad(&self, idx: [usize; 4]) -> Quadruple {
        let mut d = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                d[i][j] = self.d[idx[i]][idx[j]];
            }
        }
        Quadruple { d }
    }

    /// Pool point `z` among a few candidates with smallest excess `|xz|+|zy|−|xy|`.
    fn near_between<R: Rng>(&self, rng: &mut R, x: usize, y: usize, exclude: &[usize]) -> usize {
        let n = self.points.len();
        let mut best = None;
        let mut best_excess = f64::INFINITY;
        for _ in 0..16 {
            let z = rng.gen_range(0..n);
            if exclude.contains(&z) {
                continue;
            }
            let e = self.d[x][z] + self.d[z][y] - self.d[x][y];
            if e < best_excess {
                best_excess = e;
                best = Some(z);
            }
        }
        best.unwrap_or_else(|| (0..n).find(|z| !exclude.contains(z)).unwrap_or(0))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn sample_comparisons_with<S: MetricOracle + ?Sized>(
    space: &S,
    kappa: Curvature,
    kind: Kind,
    n: usize,
    seed: u64,
    slack: f64,
    opts: SamplerOptions,
) -> ComparisonVerdict {
    let pool = Pool::build(space, opts.pool.max(4), seed);
    let m = pool.points.len();
    if m < 4 || n == 0 {
        return ComparisonVerdict::new(0.0, slack, 0, None);
    }
    let mut rng = seeded_rng(seed, 12);
    let quads: Vec<[usize; 4]> = (0..n)
        .map(|_| {
            let pick = index_sample(&mut rng, m, 4).into_vec();
            let mut idx = [pick[0], pick[1], pick[2], pick[3]];
            if rng.gen_bool(opts.adversarial.clamp(0.0, 1.0)) {
                idx[2] = pool.near_between(&mut rng, idx[0], idx[1], &idx[..2]);
                if rng.gen_bool(0.5) {
                    idx[3] = pool.near_between(&mut rng, idx[0], idx[2], &idx[..3]);
                }
                if idx[3] == idx[2] || idx[..2].contains(&idx[3]) {
                    idx[3] = (0..m).find(|z| !idx[..3].contains(z)).unwrap_or(idx[3]);
                }
            }
            idx
        })
        .collect();
    let margins: Vec<f64> = quads
        .par_iter()
        .map(|&idx| quadruple_margin(&pool.quad(idx), kappa, kind))
        .collect();
    let mut worst = f64::INFINITY;
    let mut first_violation = None;
    for (i, &mg) in margins.iter().enumerate() {
        worst = worst.min(mg);
        if mg < -slack && first_violation.is_none() {
            first_violation = Some(i);
        }
    }
    let witness = first_violation.map(|i| {
        let idx = shrink(&pool, quads[i], kappa, kind, slack);
        Witness::from_points(space, idx.iter().map(|&k| pool.points[k].clone()).collect())
    });
    ComparisonVerdict::new(worst, slack, n, witness)
}

fn diameter(pool: &Pool, idx: [usize; 4]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..4 {
        for j in 0..i {
            d = d.max(pool.d[idx[i]][idx[j]]);
        }
    }
    d
}

/// Greedy shrinking: swap in pool points that keep the violation and reduce the diameter.
fn shrink(pool: &Pool, mut idx: [usize; 4], kappa: Curvature, kind: Kind, slack: f64) -> [usize; 4] {
    let mut diam = diameter(pool, idx);
    for _ in 0..32 {
        let mut improved = false;
        for slot in 0..4 {
            for c in 0..pool.points.len() {
                if idx.contains(&c) {
                    continue;
                }
                let mut cand = idx;
                cand[slot] = c;
                let dc = diameter(pool, cand);
                if dc < diam && quadruple_margin(&pool.quad(cand), kappa, kind) < -slack {
                    idx = cand;
                    diam = dc;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    idx
}

/// Compares distances from `x1` to the nodes of a geodesic `[x² x³]` with
/// the model triangle at matched arclength.
pub fn point_side_test<S: MetricOracle + ?Sized>(
    space: &S,
    kappa: Curvature,
    kind: Kind,
    x1: &[f64],
    geodesic: &GeodesicPolyline,
    slack: f64,
) -> (bool, f64) {
    if geodesic.len() < 2 {
        return (true, 0.0);
    }
    let x2 = &geodesic.points[0];
    let x3 = &geodesic.points[geodesic.len() - 1];
    let a = space.distance(x1, x2);
    let b = space.distance(x1, x3);
    let chords: Vec<f64> = geodesic.points.windows(2).map(|w| space.distance(&w[0], &w[1])).collect();
    let c: f64 = chords.iter().sum();
    let Some(angle) = angle_at(kappa, c, a, b).value() else {
        return (true, 0.0);
    };
    let mut s = 0.0;
    let mut margin = f64::INFINITY;
    for (i, p) in geodesic.points.iter().enumerate() {
        if i > 0 {
            s += chords[i - 1];
        }
        let Ok(model) = opposite_side(kappa, a, s.min(c), angle) else {
            continue;
        };
        let actual = space.distance(x1, p);
        let m = match kind {
            Kind::Cbb => actual - model,
            Kind::Cat => model - actual,
        };
        margin = margin.min(m);
    }
    finish(margin, slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{CatalogSpace, FiniteMetric};
    use approx::assert_abs_diff_eq;

    fn plane_quad(p: [[f64; 2]; 4]) -> Quadruple {
        let mut d = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                d[i][j] = (p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1]);
            }
        }
        Quadruple { d }
    }

    #[test]
    fn planar_centroid_sums_to_two_pi() {
        let q = plane_quad([[0.0, 0.0], [1.0, 0.0], [-0.5, 0.8], [-0.5, -0.8]]);
        let (ok, margin) = test_1plus3(&q, Curvature::ZERO, 1e-9);
        assert!(ok);
        assert_abs_diff_eq!(margin, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tripod_fails_one_plus_three() {
        let t = FiniteMetric::tripod(3, 1.0).unwrap();
        let mut d = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                d[i][j] = t.get(i, j);
            }
        }
        let (ok, margin) = test_1plus3(&Quadruple { d }, Curvature::ZERO, 1e-9);
        assert!(!ok);
        assert_abs_diff_eq!(margin, -PI, epsilon = 1e-12);
    }

    #[test]
    fn long_pairs_hold_vacuously() {
        let q = Quadruple::from_matrix([
            [0.0, 3.5, 3.5, 3.5],
            [3.5, 0.0, 1.0, 1.0],
            [3.5, 1.0, 0.0, 1.0],
            [3.5, 1.0, 1.0, 0.0],
        ])
        .unwrap();
        let (ok, _) = test_1plus3(&q, Curvature::ONE, 0.0);
        assert!(ok);
    }

    #[test]
    fn circle_quarter_points_fail_two_plus_two() {
        let c = CatalogSpace::circle(4.0).unwrap();
        let q = Quadruple::from_points(&c, &[vec![0.0], vec![2.0], vec![1.0], vec![3.0]]);
        let (ok, margin) = test_2plus2(&q, Curvature::ZERO, 1e-9);
        assert!(!ok);
        assert_abs_diff_eq!(margin, -PI, epsilon = 1e-12);
    }

    #[test]
    fn zero_quadruple_passes() {
        let q = Quadruple { d: [[0.0; 4]; 4] };
        let (ok, margin) = test_2plus2(&q, Curvature::ZERO, 0.0);
        assert!(ok);
        assert!(margin >= 0.0);
    }

    #[test]
    fn labels_do_not_matter() {
        let q = plane_quad([[0.0, 0.0], [2.0, 0.1], [0.3, 1.7], [1.1, -0.4]]);
        let base13 = test_1plus3(&q, Curvature::new(-1.0).unwrap(), 0.0).1;
        let base22 = test_2plus2(&q, Curvature::new(-1.0).unwrap(), 0.0).1;
        for p in [[1, 0, 2, 3], [3, 2, 1, 0], [2, 3, 0, 1], [0, 3, 1, 2]] {
            let r = q.permuted(p);
            assert_eq!(test_1plus3(&r, Curvature::new(-1.0).unwrap(), 0.0).1, base13);
            assert_abs_diff_eq!(test_2plus2(&r, Curvature::new(-1.0).unwrap(), 0.0).1, base22, epsilon = 1e-12);
        }
    }

    #[test]
    fn tripod_point_side_fails() {
        let t = CatalogSpace::finite(FiniteMetric::tripod(3, 1.0).unwrap());
        // Index 0 is the branch point, 1..=3 the leaves.
        let g = GeodesicPolyline::from_points(&t, vec![vec![2.0], vec![0.0], vec![3.0]]);
        let (ok, margin) = point_side_test(&t, Curvature::ZERO, Kind::Cbb, &[1.0], &g, 1e-9);
        assert!(!ok);
        assert_abs_diff_eq!(margin, 1.0 - 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn planar_point_side_is_tight() {
        let plane = CatalogSpace::model_disk(0.0, 10.0).unwrap();
        let g = plane.geodesic(&[2.0, 0.3], &[3.0, 2.2], 0.05).unwrap();
        let (ok, margin) = point_side_test(&plane, Curvature::ZERO, Kind::Cat, &[1.0, 4.0], &g, 1e-9);
        assert!(ok);
        assert_abs_diff_eq!(margin, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn sampler_is_deterministic() {
        let c = CatalogSpace::circle(2.0 * PI + 0.5).unwrap();
        let a = sample_comparisons(&c, Curvature::ZERO, Kind::Cat, 2000, 5, 1e-9);
        let b = sample_comparisons(&c, Curvature::ZERO, Kind::Cat, 2000, 5, 1e-9);
        assert_eq!(a, b);
        assert!(!a.passed);
        assert!(a.witness.is_some());
    }
}
