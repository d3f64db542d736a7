use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// A metric on `{0, …, n−1}` given by its distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetric {
    matrix: Vec<Vec<f64>>,
}

impl FiniteMetric {
    /// Structural checks only: square, symmetric, zero diagonal, nonnegative.
    /// The triangle inequality is left to [`FiniteMetric::triangle_violation`]
    /// so that non-metrics can still be represented and refuted.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let n = matrix.len();
        if n == 0 {
            return Err(MetricError::InvalidSpace("empty distance matrix".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::InvalidSpace(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(MetricError::InvalidSpace(format!("entry ({i},{j}) = {v}")));
                }
                if i == j && v != 0.0 {
                    return Err(MetricError::InvalidSpace(format!("nonzero diagonal at {i}")));
                }
                if (v - matrix[j][i]).abs() > 1e-12 * v.max(1.0) {
                    return Err(MetricError::InvalidSpace(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(FiniteMetric { matrix })
    }

    /// Like [`FiniteMetric::new`] but also rejects triangle-inequality failures.
    pub fn validated(matrix: Vec<Vec<f64>>, tol: f64) -> Result<Self, MetricError> {
        let m = Self::new(matrix)?;
        if let Some((i, j, k)) = m.triangle_violation(tol) {
            return Err(MetricError::InvalidSpace(format!(
                "triangle inequality fails on ({i},{j},{k})"
            )));
        }
        Ok(m)
    }

    /// Two points at distance `d`.
    pub fn two_points(d: f64) -> Result<Self, MetricError> {
        Self::new(vec![vec![0.0, d], vec![d, 0.0]])
    }

    /// Tripod: a center joined to `legs` leaves by edges of length `leg`.
    pub fn tripod(legs: usize, leg: f64) -> Result<Self, MetricError> {
        let n = legs + 1;
        let mut m = vec![vec![0.0; n]; n];
        for i in 1..n {
            m[0][i] = leg;
            m[i][0] = leg;
            for j in 1..n {
                if i != j {
                    m[i][j] = 2.0 * leg;
                }
            }
        }
        Self::new(m)
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        FiniteMetric {
            matrix: self
                .matrix
                .iter()
                .map(|r| r.iter().map(|v| v * lambda).collect())
                .collect(),
        }
    }

    pub fn max_distance(&self) -> f64 {
        self.matrix.iter().flatten().cloned().fold(0.0, f64::max)
    }

    /// First triple `(i, j, k)` with `d(i,k) > d(i,j) + d(j,k) + tol`.
    pub fn triangle_violation(&self, tol: f64) -> Option<(usize, usize, usize)> {
        let n = self.len();
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    if self.matrix[i][k] > self.matrix[i][j] + self.matrix[j][k] + tol {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    /// Parses the plain-text format: first line `n`, then `n` rows of `n` reals.
    pub fn parse(text: &str) -> Result<Self, MetricError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, first) = lines.next().ok_or(MetricError::Parse {
            line: 1,
            msg: "missing size line".into(),
        })?;
        let n: usize = first.parse().map_err(|_| MetricError::Parse {
            line: ln,
            msg: format!("expected a point count, got {first:?}"),
        })?;
        let mut matrix = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, line) = lines.next().ok_or(MetricError::Parse {
                line: ln + matrix.len() + 1,
                msg: format!("expected {n} rows, found {}", matrix.len()),
            })?;
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let row = row.map_err(|e| MetricError::Parse { line: ln, msg: e.to_string() })?;
            if row.len() != n {
                return Err(MetricError::Parse {
                    line: ln,
                    msg: format!("expected {n} entries, found {}", row.len()),
                });
            }
            matrix.push(row);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(MetricError::Parse { line: ln, msg: "trailing data".into() });
        }
        Self::new(matrix)
    }

    pub fn from_file(path: &Path) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetricError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.len());
        for row in &self.matrix {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(s, "{}", cells.join(" "));
        }
        s
    }
}
