//! Discrete shortest paths in `B × [0, ℓ]` with the partition-sum length.
//!
//! A segment from `(b, φ)` to `(b', φ')` has length
//! `√(d_B(b, b')² + g²·(φ' − φ)²)` where `g` is the minimum of `f` over the
//! base segment (three-point sampling plus known roots). Paths are found by
//! Dijkstra on a product lattice and then polished by damped Newton
//! iterations on the discrete energy `Σ length²` over nested refinements.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{polar_distance, Curvature};
use crate::warp::{WarpFunction, ZERO_THRESHOLD};

/// Degrees of freedom per node are at most three (2-D base plus fiber).
const KMAX: usize = 3;

type Block = [[f64; KMAX]; KMAX];

/// The geometry of `B × [0, ℓ]` in a coordinate chart.
pub(crate) trait Chart: Sync {
    /// Coordinates per node, the last one being the fiber parameter.
    fn k(&self) -> usize;
    fn f_at(&self, x: &[f64]) -> f64;
    /// Minimum of `f` over the base segment, zero when a root lies on it.
    fn g_min(&self, p: &[f64], q: &[f64]) -> f64;
    fn base_sq(&self, p: &[f64], q: &[f64]) -> f64;
    fn project(&self, x: &mut [f64]);
    /// Energy of a segment with gradient and Hessian over `(p, q)`.
    fn seg_derivatives(&self, p: &[f64], q: &[f64], grad: &mut [f64], hess: &mut [[f64; 6]; 6]) -> f64;

    fn seg_len(&self, p: &[f64], q: &[f64]) -> f64 {
        let k = self.k();
        let g = self.g_min(p, q);
        let w = q[k - 1] - p[k - 1];
        (self.base_sq(p, q) + g * g * w * w).sqrt()
    }
}

/// One-dimensional base, possibly periodic (coordinates unwrapped).
pub(crate) struct Chart1D<'a> {
    pub f: &'a WarpFunction,
    pub lo: f64,
    pub hi: f64,
    pub period: Option<f64>,
    /// Sorted roots of `f`, already unwrapped for periodic bases.
    pub roots: Vec<f64>,
}

impl Chart1D<'_> {
    fn wrap(&self, t: f64) -> f64 {
        match self.period {
            Some(l) => t.rem_euclid(l),
            None => t,
        }
    }

    fn jet(&self, t: f64) -> crate::expr::Jet {
        self.f.jet(self.wrap(t))
    }

    pub fn root_between(&self, a: f64, b: f64) -> bool {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let i = self.roots.partition_point(|&z| z < a);
        i < self.roots.len() && self.roots[i] <= b
    }
}

impl Chart for Chart1D<'_> {
    fn k(&self) -> usize {
        2
    }

    fn f_at(&self, x: &[f64]) -> f64 {
        self.f.eval(&[self.wrap(x[0])])
    }

    fn g_min(&self, p: &[f64], q: &[f64]) -> f64 {
        if self.root_between(p[0], q[0]) {
            return 0.0;
        }
        let m = 0.5 * (p[0] + q[0]);
        let g = self.f_at(p).min(self.f_at(q)).min(self.f_at(&[m]));
        if g <= ZERO_THRESHOLD {
            0.0
        } else {
            g
        }
    }

    fn base_sq(&self, p: &[f64], q: &[f64]) -> f64 {
        let u = q[0] - p[0];
        u * u
    }

    fn project(&self, x: &mut [f64]) {
        x[0] = x[0].clamp(self.lo, self.hi);
    }

    fn seg_derivatives(&self, p: &[f64], q: &[f64], grad: &mut [f64], h: &mut [[f64; 6]; 6]) -> f64 {
        let u = q[0] - p[0];
        let w = q[1] - p[1];
        let (mut g, mut gp, mut gq, mut gpp, mut gqq, mut gpq) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        if !self.root_between(p[0], q[0]) {
            let jp = self.jet(p[0]);
            let jq = self.jet(q[0]);
            let jm = self.jet(0.5 * (p[0] + q[0]));
            let min = jp.v.min(jq.v).min(jm.v);
            if min > ZERO_THRESHOLD {
                g = min * min;
                if jp.v == min {
                    gp = 2.0 * jp.v * jp.d;
                    gpp = 2.0 * (jp.d * jp.d + jp.v * jp.dd);
                } else if jq.v == min {
                    gq = 2.0 * jq.v * jq.d;
                    gqq = 2.0 * (jq.d * jq.d + jq.v * jq.dd);
                } else {
                    gp = jm.v * jm.d;
                    gq = gp;
                    let c = 0.5 * (jm.d * jm.d + jm.v * jm.dd);
                    gpp = c;
                    gqq = c;
                    gpq = c;
                }
            }
        }
        let w2 = w * w;
        grad[0] = -2.0 * u + gp * w2;
        grad[1] = -2.0 * g * w;
        grad[2] = 2.0 * u + gq * w2;
        grad[3] = 2.0 * g * w;
        h[0][0] = 2.0 + gpp * w2;
        h[0][1] = -2.0 * gp * w;
        h[0][2] = -2.0 + gpq * w2;
        h[0][3] = 2.0 * gp * w;
        h[1][1] = 2.0 * g;
        h[1][2] = -2.0 * gq * w;
        h[1][3] = -2.0 * g;
        h[2][2] = 2.0 + gqq * w2;
        h[2][3] = 2.0 * gq * w;
        h[3][3] = 2.0 * g;
        for i in 0..4 {
            for j in 0..i {
                h[i][j] = h[j][i];
            }
        }
        u * u + g * w2
    }
}

/// Convex model disk, in geodesic normal coordinates `(X, Y)` about its center.
pub(crate) struct ChartDisk<'a> {
    pub f: &'a WarpFunction,
    pub kappa: Curvature,
    pub radius: f64,
}

impl ChartDisk<'_> {
    pub fn polar(x: &[f64]) -> [f64; 2] {
        let r = x[0].hypot(x[1]);
        let th = if r > 0.0 { x[1].atan2(x[0]).rem_euclid(std::f64::consts::TAU) } else { 0.0 };
        [r, th]
    }

    pub fn normal(p: &[f64]) -> [f64; 2] {
        [p[0] * p[1].cos(), p[0] * p[1].sin()]
    }

    fn seg_energy(&self, p: &[f64], q: &[f64]) -> f64 {
        let g = self.g_min(p, q);
        let w = q[2] - p[2];
        self.base_sq(p, q) + g * g * w * w
    }
}

impl Chart for ChartDisk<'_> {
    fn k(&self) -> usize {
        3
    }

    fn f_at(&self, x: &[f64]) -> f64 {
        self.f.eval(&Self::polar(x))
    }

    fn g_min(&self, p: &[f64], q: &[f64]) -> f64 {
        let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let g = self.f_at(p).min(self.f_at(q)).min(self.f_at(&m));
        if g <= ZERO_THRESHOLD {
            0.0
        } else {
            g
        }
    }

    fn base_sq(&self, p: &[f64], q: &[f64]) -> f64 {
        let a = Self::polar(p);
        let b = Self::polar(q);
        let d = polar_distance(self.kappa, a[0], a[1], b[0], b[1]);
        d * d
    }

    fn project(&self, x: &mut [f64]) {
        let r = x[0].hypot(x[1]);
        if r > self.radius {
            x[0] *= self.radius / r;
            x[1] *= self.radius / r;
        }
    }

    fn seg_derivatives(&self, p: &[f64], q: &[f64], grad: &mut [f64], h: &mut [[f64; 6]; 6]) -> f64 {
        let mut z = [p[0], p[1], p[2], q[0], q[1], q[2]];
        let scale = 1e-4 * (1.0 + (q[0] - p[0]).hypot(q[1] - p[1]));
        let e = |z: &[f64; 6]| self.seg_energy(&z[0..3], &z[3..6]);
        let e0 = e(&z);
        let mut plus = [0.0; 6];
        let mut minus = [0.0; 6];
        for i in 0..6 {
            let old = z[i];
            z[i] = old + scale;
            plus[i] = e(&z);
            z[i] = old - scale;
            minus[i] = e(&z);
            z[i] = old;
            grad[i] = (plus[i] - minus[i]) / (2.0 * scale);
            h[i][i] = (plus[i] - 2.0 * e0 + minus[i]) / (scale * scale);
        }
        for i in 0..6 {
            for j in (i + 1)..6 {
                let (oi, oj) = (z[i], z[j]);
                z[i] = oi + scale;
                z[j] = oj + scale;
                let pp = e(&z);
                z[j] = oj - scale;
                let pm = e(&z);
                z[i] = oi - scale;
                let mm = e(&z);
                z[j] = oj + scale;
                let mp = e(&z);
                z[i] = oi;
                z[j] = oj;
                h[i][j] = (pp - pm - mp + mm) / (4.0 * scale * scale);
                h[j][i] = h[i][j];
            }
        }
        e0
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| self.node.cmp(&other.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra<W: Fn(usize, &mut Vec<(usize, f64)>)>(n: usize, src: usize, dst: usize, edges: W) -> Vec<usize> {
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let mut buf = Vec::with_capacity(32);
    dist[src] = 0.0;
    heap.push(HeapItem { cost: 0.0, node: src });
    while let Some(HeapItem { cost, node }) = heap.pop() {
        if node == dst {
            break;
        }
        if cost > dist[node] {
            continue;
        }
        buf.clear();
        edges(node, &mut buf);
        for &(next, w) in &buf {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                prev[next] = node;
                heap.push(HeapItem { cost: c, node: next });
            }
        }
    }
    let mut path = vec![dst];
    let mut cur = dst;
    while cur != src {
        cur = prev[cur];
        if cur == usize::MAX {
            return vec![src, dst];
        }
        path.push(cur);
    }
    path.reverse();
    path
}

const STENCIL_2D: [(i64, i64); 16] = [
    (1, 0), (-1, 0), (0, 1), (0, -1),
    (1, 1), (1, -1), (-1, 1), (-1, -1),
    (1, 2), (1, -2), (-1, 2), (-1, -2),
    (2, 1), (2, -1), (-2, 1), (-2, -1),
];

/// Initial path on an `(nb + 1) × (nf + 1)` lattice over `[b0, b1] × [0, ℓ]`.
pub(crate) fn lattice_path_1d(
    chart: &Chart1D<'_>,
    window: (f64, f64),
    start: f64,
    end: f64,
    ell: f64,
    nb: usize,
    nf: usize,
) -> Vec<[f64; 2]> {
    let (b0, b1) = window;
    let hb = (b1 - b0) / nb as f64;
    let hf = ell / nf as f64;
    let fnode: Vec<f64> = (0..=nb).map(|i| chart.f_at(&[b0 + hb * i as f64])).collect();
    let fhalf: Vec<f64> = (0..nb).map(|i| chart.f_at(&[b0 + hb * (i as f64 + 0.5)])).collect();
    let rooted: Vec<bool> = (0..nb)
        .map(|i| chart.root_between(b0 + hb * i as f64, b0 + hb * (i + 1) as f64))
        .collect();
    let g_unit = |i: usize| -> f64 {
        if rooted[i] {
            0.0
        } else {
            fnode[i].min(fhalf[i]).min(fnode[i + 1])
        }
    };
    let g_two = |i: usize| -> f64 {
        if rooted[i] || rooted[i + 1] {
            0.0
        } else {
            fnode[i].min(fnode[i + 1]).min(fnode[i + 2])
        }
    };
    let idx = |i: usize, j: usize| i * (nf + 1) + j;
    let snap_b = |b: f64| (((b - b0) / hb).round().max(0.0) as usize).min(nb);
    let src = idx(snap_b(start), 0);
    let dst = idx(snap_b(end), nf);
    let path = dijkstra((nb + 1) * (nf + 1), src, dst, |node, out| {
        let (i, j) = ((node / (nf + 1)) as i64, (node % (nf + 1)) as i64);
        for &(di, dj) in &STENCIL_2D {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni > nb as i64 || nj > nf as i64 {
                continue;
            }
            let lo = i.min(ni) as usize;
            let g = match di.abs() {
                0 => fnode[i as usize],
                1 => g_unit(lo),
                _ => g_two(lo),
            };
            let g = if g <= ZERO_THRESHOLD { 0.0 } else { g };
            let u = di as f64 * hb;
            let w = dj as f64 * hf;
            out.push((idx(ni as usize, nj as usize), (u * u + g * g * w * w).sqrt()));
        }
    });
    let mut pts: Vec<[f64; 2]> = path
        .iter()
        .map(|&n| [b0 + hb * (n / (nf + 1)) as f64, hf * (n % (nf + 1)) as f64])
        .collect();
    let last = pts.len() - 1;
    pts[0] = [start, 0.0];
    pts[last] = [end, ell];
    pts
}

/// Initial path on a lattice over the disk's bounding square times `[0, ℓ]`.
pub(crate) fn lattice_path_disk(
    chart: &ChartDisk<'_>,
    start: [f64; 2],
    end: [f64; 2],
    ell: f64,
    n: usize,
    nf: usize,
) -> Vec<[f64; 3]> {
    let r = chart.radius;
    let h = 2.0 * r / n as f64;
    let hf = ell / nf as f64;
    let pos = |i: usize, j: usize| [-r + h * i as f64, -r + h * j as f64];
    let inside: Vec<bool> = (0..=n)
        .flat_map(|i| (0..=n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let p = pos(i, j);
            p[0].hypot(p[1]) <= r * (1.0 + 1e-12)
        })
        .collect();
    let snap = |p: [f64; 2]| -> (usize, usize) {
        let mut best = (0, 0);
        let mut bd = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                if inside[i * (n + 1) + j] {
                    let q = pos(i, j);
                    let d = (q[0] - p[0]).hypot(q[1] - p[1]);
                    if d < bd {
                        bd = d;
                        best = (i, j);
                    }
                }
            }
        }
        best
    };
    let idx = |i: usize, j: usize, l: usize| (i * (n + 1) + j) * (nf + 1) + l;
    let (si, sj) = snap(start);
    let (ei, ej) = snap(end);
    let total = (n + 1) * (n + 1) * (nf + 1);
    let path = dijkstra(total, idx(si, sj, 0), idx(ei, ej, nf), |node, out| {
        let l = node % (nf + 1);
        let ij = node / (nf + 1);
        let (i, j) = (ij / (n + 1), ij % (n + 1));
        let p = pos(i, j);
        let a = [p[0], p[1], hf * l as f64];
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                for dl in -1i64..=1 {
                    if di == 0 && dj == 0 && dl == 0 {
                        continue;
                    }
                    let (ni, nj, nl) = (i as i64 + di, j as i64 + dj, l as i64 + dl);
                    if ni < 0 || nj < 0 || nl < 0 || ni > n as i64 || nj > n as i64 || nl > nf as i64 {
                        continue;
                    }
                    let (ni, nj, nl) = (ni as usize, nj as usize, nl as usize);
                    if !inside[ni * (n + 1) + nj] {
                        continue;
                    }
                    let q = pos(ni, nj);
                    let b = [q[0], q[1], hf * nl as f64];
                    out.push((idx(ni, nj, nl), chart.seg_len(&a, &b)));
                }
            }
        }
    });
    let mut pts: Vec<[f64; 3]> = path
        .iter()
        .map(|&node| {
            let l = node % (nf + 1);
            let ij = node / (nf + 1);
            let p = pos(ij / (n + 1), ij % (n + 1));
            [p[0], p[1], hf * l as f64]
        })
        .collect();
    let last = pts.len() - 1;
    pts[0] = [start[0], start[1], 0.0];
    pts[last] = [end[0], end[1], ell];
    pts
}

/// Nodes of a path stored flat, `k` coordinates per node.
#[derive(Clone, Debug)]
pub(crate) struct Path {
    pub k: usize,
    pub x: Vec<f64>,
}

impl Path {
    pub fn from_nodes<const K: usize>(nodes: &[[f64; K]]) -> Path {
        Path { k: K, x: nodes.iter().flatten().copied().collect() }
    }

    pub fn nodes(&self) -> usize {
        self.x.len() / self.k
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.x[i * self.k..(i + 1) * self.k]
    }

    pub fn length<C: Chart>(&self, chart: &C) -> f64 {
        (0..self.nodes() - 1).map(|i| chart.seg_len(self.node(i), self.node(i + 1))).sum()
    }

    pub fn segment_lengths<C: Chart>(&self, chart: &C) -> Vec<f64> {
        (0..self.nodes() - 1).map(|i| chart.seg_len(self.node(i), self.node(i + 1))).collect()
    }

    fn energy<C: Chart>(&self, chart: &C) -> f64 {
        (0..self.nodes() - 1)
            .map(|i| {
                let l = chart.seg_len(self.node(i), self.node(i + 1));
                l * l
            })
            .sum()
    }

    /// `m + 1` nodes equally spaced in length along the polyline.
    pub fn resample<C: Chart>(&self, chart: &C, m: usize) -> Path {
        let seg = self.segment_lengths(chart);
        let total: f64 = seg.iter().sum();
        let k = self.k;
        let mut out = Vec::with_capacity((m + 1) * k);
        out.extend_from_slice(self.node(0));
        if total <= 0.0 {
            // Degenerate: interpolate by index.
            let n = self.nodes() - 1;
            for s in 1..m {
                let pos = s as f64 * n as f64 / m as f64;
                let i = (pos.floor() as usize).min(n - 1);
                let t = pos - i as f64;
                for c in 0..k {
                    out.push(self.node(i)[c] * (1.0 - t) + self.node(i + 1)[c] * t);
                }
            }
        } else {
            let mut i = 0;
            let mut acc = 0.0;
            for s in 1..m {
                let target = total * s as f64 / m as f64;
                while i < seg.len() - 1 && acc + seg[i] < target {
                    acc += seg[i];
                    i += 1;
                }
                let t = if seg[i] > 0.0 { ((target - acc) / seg[i]).clamp(0.0, 1.0) } else { 0.0 };
                for c in 0..k {
                    out.push(self.node(i)[c] * (1.0 - t) + self.node(i + 1)[c] * t);
                }
            }
        }
        out.extend_from_slice(self.node(self.nodes() - 1));
        Path { k, x: out }
    }

    /// Doubles the node count by inserting chart midpoints.
    pub fn refine(&self) -> Path {
        let k = self.k;
        let n = self.nodes();
        let mut out = Vec::with_capacity((2 * n - 1) * k);
        for i in 0..n {
            out.extend_from_slice(self.node(i));
            if i + 1 < n {
                for c in 0..k {
                    out.push(0.5 * (self.node(i)[c] + self.node(i + 1)[c]));
                }
            }
        }
        Path { k, x: out }
    }
}

fn cholesky(a: &Block, k: usize) -> Option<Block> {
    let mut l = [[0.0; KMAX]; KMAX];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i][j];
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn chol_solve(l: &Block, k: usize, b: &mut [f64]) {
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i][p] * b[p];
        }
        b[i] = s / l[i][i];
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for p in (i + 1)..k {
            s -= l[p][i] * b[p];
        }
        b[i] = s / l[i][i];
    }
}

struct System {
    diag: Vec<Block>,
    off: Vec<Block>,
    rhs: Vec<[f64; KMAX]>,
}

fn assemble<C: Chart>(chart: &C, path: &Path) -> System {
    let k = path.k;
    let m = path.nodes() - 1;
    let n = m - 1;
    let mut sys = System {
        diag: vec![[[0.0; KMAX]; KMAX]; n],
        off: vec![[[0.0; KMAX]; KMAX]; n.saturating_sub(1)],
        rhs: vec![[0.0; KMAX]; n],
    };
    let mut grad = [0.0; 6];
    let mut hess = [[0.0; 6]; 6];
    for s in 0..m {
        chart.seg_derivatives(path.node(s), path.node(s + 1), &mut grad, &mut hess);
        // Segment s joins nodes s and s+1; interior node i has unknown index i-1.
        if s >= 1 {
            let a = s - 1;
            for i in 0..k {
                sys.rhs[a][i] -= grad[i];
                for j in 0..k {
                    sys.diag[a][i][j] += hess[i][j];
                }
            }
        }
        if s < n {
            let b = s;
            for i in 0..k {
                sys.rhs[b][i] -= grad[k + i];
                for j in 0..k {
                    sys.diag[b][i][j] += hess[k + i][k + j];
                }
            }
        }
        if s >= 1 && s < n {
            let a = s - 1;
            for i in 0..k {
                for j in 0..k {
                    sys.off[a][i][j] += hess[i][k + j];
                }
            }
        }
    }
    sys
}

/// Solves `(H + μ·D) δ = rhs` for a block-tridiagonal `H`.
fn solve(sys: &System, k: usize, mu: f64) -> Option<Vec<[f64; KMAX]>> {
    let n = sys.diag.len();
    let mut floor = 0.0;
    for d in &sys.diag {
        for i in 0..k {
            floor += d[i][i].abs();
        }
    }
    floor = 1e-12 * floor / (n * k).max(1) as f64 + 1e-300;
    let mut w: Vec<Block> = Vec::with_capacity(n);
    let mut z: Vec<[f64; KMAX]> = Vec::with_capacity(n);
    for j in 0..n {
        let mut s = sys.diag[j];
        for i in 0..k {
            s[i][i] += mu * (s[i][i].abs() + floor);
        }
        let mut y = sys.rhs[j];
        if j > 0 {
            let c = &sys.off[j - 1];
            let wp = &w[j - 1];
            let zp = &z[j - 1];
            for a in 0..k {
                for b in 0..k {
                    let mut acc = 0.0;
                    for p in 0..k {
                        acc += c[p][a] * wp[p][b];
                    }
                    s[a][b] -= acc;
                }
                let mut acc = 0.0;
                for p in 0..k {
                    acc += c[p][a] * zp[p];
                }
                y[a] -= acc;
            }
        }
        let l = cholesky(&s, k)?;
        let mut wj = [[0.0; KMAX]; KMAX];
        if j + 1 < n {
            let c = &sys.off[j];
            for col in 0..k {
                let mut v = [0.0; KMAX];
                for r in 0..k {
                    v[r] = c[r][col];
                }
                chol_solve(&l, k, &mut v);
                for r in 0..k {
                    wj[r][col] = v[r];
                }
            }
        }
        chol_solve(&l, k, &mut y);
        w.push(wj);
        z.push(y);
    }
    let mut x = vec![[0.0; KMAX]; n];
    for j in (0..n).rev() {
        let mut v = z[j];
        if j + 1 < n {
            for a in 0..k {
                for b in 0..k {
                    v[a] -= w[j][a][b] * x[j + 1][b];
                }
            }
        }
        x[j] = v;
    }
    Some(x)
}

/// Damped Newton iterations on the discrete energy with endpoints fixed.
pub(crate) fn polish<C: Chart>(chart: &C, path: &mut Path, max_iter: usize) {
    let k = path.k;
    let m = path.nodes() - 1;
    if m < 2 {
        return;
    }
    let mut energy = path.energy(chart);
    let mut mu = 1e-6;
    let mut stalls = 0;
    for _ in 0..max_iter {
        let sys = assemble(chart, path);
        let mut accepted = false;
        for _ in 0..40 {
            let Some(step) = solve(&sys, k, mu) else {
                mu = (mu * 10.0).max(1e-10);
                continue;
            };
            let mut trial = path.clone();
            for (j, d) in step.iter().enumerate() {
                let node = &mut trial.x[(j + 1) * k..(j + 2) * k];
                for c in 0..k {
                    node[c] += d[c];
                }
                chart.project(node);
                let ell_idx = k - 1;
                let hi = path.x[m * k + ell_idx].max(path.x[ell_idx]);
                let lo = path.x[m * k + ell_idx].min(path.x[ell_idx]);
                node[ell_idx] = node[ell_idx].clamp(lo, hi);
            }
            let e = trial.energy(chart);
            if e < energy {
                let gain = energy - e;
                *path = trial;
                energy = e;
                mu = (mu / 4.0).max(1e-14);
                accepted = true;
                if gain <= 1e-15 * energy {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                break;
            }
            mu = (mu * 10.0).max(1e-10);
            if mu > 1e12 {
                break;
            }
        }
        if !accepted || stalls >= 2 {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::CatalogSpace;
    use crate::warp::ZeroHint;
    use approx::assert_abs_diff_eq;

    #[test]
    fn block_solver_matches_dense() {
        // Tridiagonal scalar system embedded in 1×1 blocks.
        let mut sys = System {
            diag: vec![[[0.0; KMAX]; KMAX]; 3],
            off: vec![[[0.0; KMAX]; KMAX]; 2],
            rhs: vec![[0.0; KMAX]; 3],
        };
        for j in 0..3 {
            sys.diag[j][0][0] = 4.0;
            sys.rhs[j][0] = (j + 1) as f64;
        }
        sys.off[0][0][0] = 1.0;
        sys.off[1][0][0] = 1.0;
        let x = solve(&sys, 1, 0.0).unwrap();
        // [[4,1,0],[1,4,1],[0,1,4]] x = [1,2,3]
        assert_abs_diff_eq!(x[0][0], 1.0 / 7.0 * 1.0 + 0.0, epsilon = 0.2);
        let r0 = 4.0 * x[0][0] + x[1][0];
        let r1 = x[0][0] + 4.0 * x[1][0] + x[2][0];
        let r2 = x[1][0] + 4.0 * x[2][0];
        assert_abs_diff_eq!(r0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r1, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r2, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let base = CatalogSpace::interval(0.0, 3.0).unwrap();
        let f = WarpFunction::parse("1 + sin(t)", &base, 1.0, ZeroHint::Empty).unwrap();
        let chart = Chart1D { f: &f, lo: 0.0, hi: 3.0, period: None, roots: vec![] };
        let mut g = [0.0; 6];
        let mut h = [[0.0; 6]; 6];
        for (p, q) in [([0.4, 0.1], [0.5, 0.3]), ([1.2, 0.0], [1.1, 0.2]), ([1.5, 0.0], [1.65, 0.2])] {
            chart.seg_derivatives(&p, &q, &mut g, &mut h);
            let e = |z: [f64; 4]| {
                let l = chart.seg_len(&z[0..2], &z[2..4]);
                l * l
            };
            let z0 = [p[0], p[1], q[0], q[1]];
            let eps = 1e-6;
            for i in 0..4 {
                let mut zp = z0;
                let mut zm = z0;
                zp[i] += eps;
                zm[i] -= eps;
                assert_abs_diff_eq!(g[i], (e(zp) - e(zm)) / (2.0 * eps), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn flat_product_polishes_to_straight_line() {
        let base = CatalogSpace::interval(0.0, 3.0).unwrap();
        let f = WarpFunction::constant(1.0, &base);
        let chart = Chart1D { f: &f, lo: 0.0, hi: 3.0, period: None, roots: vec![] };
        let init = lattice_path_1d(&chart, (0.0, 3.0), 0.0, 3.0, 4.0, 32, 32);
        let mut path = Path::from_nodes(&init).resample(&chart, 16);
        polish(&chart, &mut path, 50);
        assert_abs_diff_eq!(path.length(&chart), 5.0, epsilon = 1e-10);
    }
}
