//! Triple specifications, the condition battery and report formatting.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::comparison::{sample_comparisons_with, ComparisonVerdict, Kind, SamplerOptions};
use crate::constructions::{make_doubled, parse_number, ConstructionError, DoubledBase, SpaceSpec};
use crate::convexity::{kappa_f, sinusoidal_test, sinusoidal_test_on, ConvexityVerdict, KappaFReport, Mode};
use crate::metric::{CatalogSpace, GeodesicPolyline, MetricOracle, Point, Shape};
use crate::model::Curvature;
use crate::warp::{bounded_range, WarpFunction, ZeroHint};
use crate::warped::{EngineOptions, WarpedProduct, WarpedTriple};

/// Slack for spaces whose distances are closed-form.
pub const EXACT_SLACK: f64 = 1e-6;

/// Relative accuracy of the footpoint-derivative estimate of `κ_F`; the
/// fiber is tested at `κ_F` moved by this much in the lenient direction.
pub const KAPPA_F_TOL: f64 = 1e-6;

/// Pool size for sampling a warped product without a closed form.
pub const ENGINE_POOL: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("spec: {0}")]
    Parse(String),
    #[error("spec: {0}")]
    Invalid(String),
}

impl From<ConstructionError> for CertifyError {
    fn from(e: ConstructionError) -> Self {
        CertifyError::Invalid(e.to_string())
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Param {
    Num(f64),
    Text(String),
}

impl Param {
    pub fn value(&self) -> Result<f64, CertifyError> {
        match self {
            Param::Num(v) => Ok(*v),
            Param::Text(s) => parse_number(s).map_err(|e| CertifyError::Parse(e.to_string())),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpaceField {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<Param>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ZerosField {
    /// `"empty"` or `"unknown"`.
    Keyword(String),
    Points(Vec<Vec<Param>>),
    Arcs { arcs: Vec<[Param; 2]> },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WarpField {
    pub expr: String,
    pub lipschitz: Param,
    #[serde(default)]
    pub zeros: Option<ZerosField>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub quadruples: usize,
    pub grid: usize,
    pub geodesics: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { quadruples: 10_000, grid: EngineOptions::default().grid, geodesics: 64 }
    }
}

fn default_tol() -> f64 {
    1e-4
}

/// The input document.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TripleSpec {
    pub side: String,
    pub kappa: Param,
    pub base: SpaceField,
    pub warp: WarpField,
    pub fiber: SpaceField,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

/// A validated specification.
#[derive(Clone, Debug)]
pub struct Certifiable {
    pub side: Kind,
    pub kappa: Curvature,
    pub triple: WarpedTriple,
    pub fiber_spec: SpaceSpec,
    pub budget: Budget,
    pub tol: f64,
    pub seed: u64,
}

impl TripleSpec {
    pub fn from_toml(text: &str) -> Result<Self, CertifyError> {
        toml::from_str(text).map_err(|e| CertifyError::Parse(e.to_string()))
    }

    /// Builds the triple; relative file references resolve against `dir`.
    pub fn resolve(&self, dir: Option<&Path>) -> Result<Certifiable, CertifyError> {
        let side: Kind = self.side.parse().map_err(CertifyError::Parse)?;
        let kappa = Curvature::new(self.kappa.value()?).map_err(|e| CertifyError::Invalid(e.to_string()))?;
        let nums = |ps: &[Param]| ps.iter().map(Param::value).collect::<Result<Vec<f64>, _>>();
        let base_spec = SpaceSpec::from_kind(&self.base.kind, &nums(&self.base.params)?, dir)?;
        let base = base_spec
            .as_catalog()
            .cloned()
            .ok_or_else(|| CertifyError::Invalid(format!("base {base_spec} is not a catalog space")))?;
        let zeros = match &self.warp.zeros {
            None => ZeroHint::Unknown,
            Some(ZerosField::Keyword(k)) => match k.to_ascii_lowercase().as_str() {
                "empty" => ZeroHint::Empty,
                "unknown" => ZeroHint::Unknown,
                other => return Err(CertifyError::Parse(format!("unknown zero-set keyword `{other}`"))),
            },
            Some(ZerosField::Points(ps)) => ZeroHint::Points(ps.iter().map(|p| nums(p)).collect::<Result<_, _>>()?),
            Some(ZerosField::Arcs { arcs }) => ZeroHint::BoundaryArcs(
                arcs.iter().map(|[a, b]| Ok((a.value()?, b.value()?))).collect::<Result<_, CertifyError>>()?,
            ),
        };
        let warp = WarpFunction::parse(&self.warp.expr, &base, self.warp.lipschitz.value()?, zeros)
            .map_err(|e| CertifyError::Invalid(e.to_string()))?;
        let fiber_spec = SpaceSpec::from_kind(&self.fiber.kind, &nums(&self.fiber.params)?, dir)?;
        let fiber = fiber_spec.build()?;
        let triple = WarpedTriple::new(base, warp, fiber).map_err(|e| CertifyError::Invalid(e.to_string()))?;
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(CertifyError::Invalid(format!("tol {} must be positive", self.tol)));
        }
        if self.budget.grid < 8 {
            return Err(CertifyError::Invalid(format!("budget.grid {} is below 8", self.budget.grid)));
        }
        Ok(Certifiable {
            side,
            kappa,
            triple,
            fiber_spec,
            budget: self.budget.clone(),
            tol: self.tol,
            seed: self.seed,
        })
    }
}

/// Parses and resolves a spec file.
pub fn load_spec(path: &Path) -> Result<Certifiable, CertifyError> {
    let text = std::fs::read_to_string(path).map_err(|e| CertifyError::Parse(format!("{}: {e}", path.display())))?;
    TripleSpec::from_toml(&text)?.resolve(path.parent())
}

impl Certifiable {
    pub fn product(&self) -> WarpedProduct {
        let opts = EngineOptions { grid: self.budget.grid, ..EngineOptions::default() };
        WarpedProduct::new(self.triple.clone(), self.tol).with_options(opts)
    }

    /// `C·h` with `C = 4(1+Lip)` and `h` the base extent over the grid size.
    pub fn engine_slack(&self) -> f64 {
        let (lo, hi) = bounded_range(&self.triple.base);
        let extent = match self.triple.base {
            CatalogSpace::Ray | CatalogSpace::Line => 2.0 * crate::metric::UNBOUNDED_EXTENT,
            _ => hi - lo,
        };
        4.0 * (1.0 + self.triple.warp.lipschitz) * extent / self.budget.grid as f64
    }
}

/// One line of the report.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub slack: f64,
    pub detail: String,
}

impl Condition {
    fn comparison(name: &str, v: &ComparisonVerdict, detail: String) -> Self {
        Condition { name: name.into(), passed: v.passed, margin: v.margin, slack: v.slack_used, detail }
    }

    fn convexity(name: &str, v: &ConvexityVerdict) -> Self {
        Condition {
            name: name.into(),
            passed: v.passed,
            margin: -v.worst_violation,
            slack: v.tol,
            detail: format!(
                "classification={} tangential={} geodesics={} skipped={}",
                v.classification, v.tangential, v.geodesics_tested, v.skipped
            ),
        }
    }

    fn failed(name: &str, detail: String) -> Self {
        Condition { name: name.into(), passed: false, margin: f64::NEG_INFINITY, slack: 0.0, detail }
    }

    /// Applies the convention that for `κ > 0` a `CBB^κ` space is not an
    /// interval longer than `ϖ^κ` or a circle longer than `2ϖ^κ`.
    fn with_convention(mut self, shape: Shape, kappa: Curvature) -> Self {
        let w = kappa.varpi();
        let excess = match shape {
            Shape::Interval(l) if w.is_finite() => l - w,
            Shape::Circle(l) if w.is_finite() => l - 2.0 * w,
            _ => return self,
        };
        if excess > 1e-12 * (1.0 + w) {
            self.passed = false;
            self.margin = self.margin.min(-excess);
            self.detail.push_str(&format!(" convention=violated({excess:.9e})"));
        }
        self
    }
}

/// Output of [`certify`].
#[derive(Clone, Debug, PartialEq)]
pub struct CertificationReport {
    pub info: Vec<(String, String)>,
    pub conditions: Vec<Condition>,
    /// The sampled verdict on `W` itself.
    pub total: Condition,
    pub conditions_hold: bool,
    pub consistent: bool,
}

fn fmt_num(x: f64) -> String {
    format!("{x:.9e}")
}

impl CertificationReport {
    /// `0` consistent pass, `1` consistent fail, `2` inconsistent.
    pub fn exit_code(&self) -> i32 {
        match (self.consistent, self.total.passed) {
            (true, true) => 0,
            (true, false) => 1,
            (false, _) => 2,
        }
    }

    /// Line-oriented records:
    ///
    /// ```text
    /// INFO <key>=<value>
    /// CONDITION <name> PASS|FAIL margin=<r> slack=<r>
    /// OVERALL CONSISTENT|INCONSISTENT
    /// ```
    pub fn machine(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.info {
            let _ = writeln!(out, "INFO {k}={v}");
        }
        for c in self.conditions.iter().chain(std::iter::once(&self.total)) {
            let _ = writeln!(
                out,
                "CONDITION {} {} margin={} slack={}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                fmt_num(c.margin),
                fmt_num(c.slack)
            );
        }
        let _ = writeln!(out, "OVERALL {}", if self.consistent { "CONSISTENT" } else { "INCONSISTENT" });
        out
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let w = self.info.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.info {
            let _ = writeln!(out, "{k:>w$}: {v}");
        }
        out.push('\n');
        for c in self.conditions.iter().chain(std::iter::once(&self.total)) {
            let _ = writeln!(
                out,
                "[{}] {:<22} margin {:>16}  slack {:>16}  {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                fmt_num(c.margin),
                fmt_num(c.slack),
                c.detail
            );
        }
        let _ = writeln!(
            out,
            "\nconditions {}, total space {}: {}",
            if self.conditions_hold { "hold" } else { "fail" },
            if self.total.passed { "passes" } else { "fails" },
            if self.consistent { "consistent" } else { "INCONSISTENT" }
        );
        out
    }
}

struct Battery<'a> {
    spec: &'a Certifiable,
    opts: SamplerOptions,
}

impl Battery<'_> {
    fn compare<S: MetricOracle + ?Sized>(&self, space: &S, kappa: Curvature, slack: f64) -> ComparisonVerdict {
        let s = self.spec;
        sample_comparisons_with(space, kappa, s.side, s.budget.quadruples, s.seed, slack, self.opts)
    }

    fn space_condition<S: MetricOracle + ?Sized>(&self, name: &str, space: &S, kappa: Curvature, slack: f64) -> Condition {
        let v = self.compare(space, kappa, slack);
        let c = Condition::comparison(name, &v, format!("kappa={} tested={}", fmt_num(kappa.value()), v.n_tested));
        match self.spec.side {
            Kind::Cbb => c.with_convention(space.shape(), kappa),
            Kind::Cat => c,
        }
    }

    fn mode(&self) -> Mode {
        match self.spec.side {
            Kind::Cat => Mode::Convex,
            Kind::Cbb => Mode::Concave,
        }
    }

    fn convexity_tol(f: &WarpFunction, base: &CatalogSpace) -> f64 {
        let scale = WarpFunction::check_grid(base, 257).iter().map(|p| f.eval(p).abs()).fold(1.0, f64::max);
        1e-8 * scale
    }

    fn base_conditions(&self) -> Vec<Condition> {
        let s = self.spec;
        let (base, f) = (&s.triple.base, &s.triple.warp);
        let side = s.side.to_string().to_lowercase();
        let mode = self.mode();
        let fname = match mode {
            Mode::Convex => "f_convex",
            Mode::Concave => "f_concave",
        };
        let mut out = vec![self.space_condition(&format!("base_{side}"), base, s.kappa, EXACT_SLACK)];
        let tol = Self::convexity_tol(f, base);
        out.push(match sinusoidal_test(f, base, s.kappa, mode, s.budget.geodesics, s.seed, tol) {
            Ok(v) => Condition::convexity(fname, &v),
            Err(e) => Condition::failed(fname, e.to_string()),
        });
        out
    }

    /// Conditions on `B†(f)`, or `None` when the base cannot be doubled.
    fn double_conditions(&self, base_conds: &[Condition]) -> Option<Vec<Condition>> {
        let s = self.spec;
        let (base, f) = (&s.triple.base, &s.triple.warp);
        let (doubled, ext) = match make_doubled(base, f) {
            Ok(d) => d,
            Err(ConstructionError::ZeroSetInterior(b)) => {
                let msg = format!("vanishing set meets the interior of {b}");
                return Some(vec![Condition::failed("double_cbb", msg.clone()), Condition::failed("f_dagger_concave", msg)]);
            }
            Err(_) => return None,
        };
        if doubled.glue.is_empty() {
            let mut out = Vec::new();
            for (c, name) in base_conds.iter().zip(["double_cbb", "f_dagger_concave"]) {
                let mut c = c.clone();
                c.name = name.into();
                c.detail = format!("disjoint copies; {}", c.detail);
                out.push(c);
            }
            return Some(out);
        }
        let tol = Self::convexity_tol(f, base);
        let n = s.budget.geodesics;
        let (space_cond, conv) = match doubled.explicit() {
            Some(e) => (
                self.space_condition("double_cbb", &e, s.kappa, EXACT_SLACK),
                sinusoidal_test_on(&e, |x| ext.eval_unfolded(x), s.kappa, Mode::Concave, n, s.seed, tol),
            ),
            None => (
                self.space_condition("double_cbb", &doubled, s.kappa, EXACT_SLACK),
                sinusoidal_test_on(&doubled, |x| ext.eval(x), s.kappa, Mode::Concave, n, s.seed, tol),
            ),
        };
        let conv = match conv {
            Ok(v) => Condition::convexity("f_dagger_concave", &v),
            Err(e) => Condition::failed("f_dagger_concave", e.to_string()),
        };
        Some(vec![space_cond, conv])
    }
}

fn zero_info(triple: &WarpedTriple, kappa: Curvature, side: Kind) -> (String, String) {
    let zs: Vec<Point> = triple.zero_set().sample(&triple.base, 64);
    match side {
        Kind::Cat => {
            let w = kappa.varpi();
            let mut convex = true;
            if triple.base.dimension() == 1 {
                for (i, a) in zs.iter().enumerate() {
                    for b in &zs[i + 1..] {
                        let d = triple.base.distance(a, b);
                        if d < w && d > 1e-9 {
                            let mid = triple.base.interpolate(a, b, 0.5);
                            if mid.is_none_or(|m| triple.warp.eval(&m) > crate::warp::ZERO_THRESHOLD) {
                                convex = false;
                            }
                        }
                    }
                }
            }
            ("zero_set_convex".into(), if convex { "yes" } else { "no" }.into())
        }
        Kind::Cbb => {
            let on_boundary = match &triple.base {
                CatalogSpace::ModelDisk { radius, .. } => zs.iter().all(|z| (z[0] - radius).abs() <= 1e-9 * (1.0 + radius)),
                b => {
                    let bd = b.boundary_points();
                    zs.iter().all(|z| bd.iter().any(|e| (e[0] - z[0]).abs() <= 1e-9 * (1.0 + e[0].abs())))
                }
            };
            ("zero_set_in_boundary".into(), if on_boundary { "yes" } else { "no" }.into())
        }
    }
}

/// Runs the condition battery and samples `W` itself.
pub fn certify(spec: &Certifiable) -> CertificationReport {
    let w = spec.product();
    let exact = w.has_fast_path();
    let bat = Battery { spec, opts: SamplerOptions::default() };
    let mut info: Vec<(String, String)> = vec![
        ("side".into(), spec.side.to_string()),
        ("kappa".into(), fmt_num(spec.kappa.value())),
        ("triple".into(), spec.triple.to_string()),
        ("seed".into(), spec.seed.to_string()),
        ("quadruples".into(), spec.budget.quadruples.to_string()),
        ("grid".into(), spec.budget.grid.to_string()),
        ("tol".into(), fmt_num(spec.tol)),
        ("closed_form".into(), if exact { "yes" } else { "no" }.into()),
    ];
    let zero = spec.triple.zero_set();
    info.push(("zero_set".into(), if zero.is_empty() { "empty".into() } else { format!("{} point(s) {} arc(s)", zero.points.len(), zero.arcs.len()) }));
    if zero.detected {
        info.push(("zero_set_warning".into(), "located numerically".into()));
    }
    info.push(zero_info(&spec.triple, spec.kappa, spec.side));

    let mut conditions = bat.base_conditions();
    if spec.side == Kind::Cbb {
        match bat.double_conditions(&conditions) {
            Some(c) => conditions.extend(c),
            None => info.push(("omitted".into(), "double_cbb f_dagger_concave (base cannot be doubled)".into())),
        }
    }

    let fiber_name = format!("fiber_{}", spec.side.to_string().to_lowercase());
    match kappa_f(spec.side, &spec.triple, spec.kappa) {
        Ok(k) => {
            push_kappa_info(&mut info, &k);
            let shift = KAPPA_F_TOL * (1.0 + k.kappa_f.abs().min(1e12));
            let tested = match spec.side {
                Kind::Cat => k.kappa_f + shift,
                Kind::Cbb => k.kappa_f - shift,
            };
            info.push(("kappa_F_tested".into(), fmt_num(tested)));
            let kf = Curvature::new(tested.clamp(-1e12, 1e12)).unwrap_or(Curvature::ZERO);
            let slack = if spec.fiber_spec.as_catalog().is_some() { EXACT_SLACK } else { 10.0 * EXACT_SLACK };
            let mut c = bat.space_condition(&fiber_name, spec.triple.fiber.as_ref(), kf, slack);
            c.detail = format!("kappa_F={} {}", fmt_num(k.kappa_f), c.detail);
            if spec.side == Kind::Cbb && k.branch == crate::convexity::Branch::ZEmpty && spec.kappa.value() > 0.0 {
                info.push(("kappa_f_note".into(), "Z empty with kappa > 0".into()));
            }
            conditions.push(c);
        }
        Err(e) => conditions.push(Condition::failed(&fiber_name, e.to_string())),
    }

    let total_name = format!("total_space_{}", spec.side.to_string().to_lowercase());
    let total = if exact {
        bat.space_condition(&total_name, &w, spec.kappa, EXACT_SLACK)
    } else {
        let bat = Battery { spec, opts: SamplerOptions { pool: ENGINE_POOL, ..SamplerOptions::default() } };
        bat.space_condition(&total_name, &w, spec.kappa, spec.engine_slack())
    };
    let conditions_hold = conditions.iter().all(|c| c.passed);
    let consistent = conditions_hold == total.passed;
    CertificationReport { info, conditions, total, conditions_hold, consistent }
}

fn push_kappa_info(info: &mut Vec<(String, String)>, k: &KappaFReport) {
    let branch = match k.branch {
        crate::convexity::Branch::ZEmpty => "Z-empty",
        crate::convexity::Branch::ZNonempty => "Z-nonempty",
    };
    info.push(("kappa_f_branch".into(), branch.into()));
    info.push(("kappa_foot".into(), fmt_num(k.kappa_foot)));
    if k.side == Kind::Cat {
        info.push(("kappa_far".into(), fmt_num(k.kappa_far)));
    }
    info.push(("kappa_F".into(), fmt_num(k.kappa_f)));
    if let (Some(g), Some(d)) = (k.gradient_form, k.gradient_difference) {
        info.push(("kappa_gradient_form".into(), fmt_num(g)));
        info.push(("kappa_form_difference".into(), fmt_num(d)));
    }
    info.push(("kappa_samples".into(), k.samples.to_string()));
}

/// Geodesic dump: `t`, base coordinates, fiber parameter, `v_B`, `v̄_F`, `f`.
pub fn geodesic_tsv(triple: &WarpedTriple, g: &GeodesicPolyline) -> String {
    let mut out = String::new();
    let nb = triple.base.dimension();
    let base_cols: Vec<String> = (0..nb).map(|i| format!("b{i}")).collect();
    let _ = writeln!(out, "t\t{}\tfiber\tv_B\tv_F\tf", base_cols.join("\t"));
    for i in 0..g.len() {
        let b: Point = match &g.base_points {
            Some(bp) => bp[i].clone(),
            None => triple.split(&g.points[i]).0.to_vec(),
        };
        let phi = g.fiber_params.as_ref().map_or(f64::NAN, |fp| fp[i]);
        let cols: Vec<String> = b.iter().map(|v| fmt_num(*v)).collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            fmt_num(g.params[i]),
            cols.join("\t"),
            fmt_num(phi),
            fmt_num(g.speed_base[i]),
            fmt_num(g.speed_fiber[i]),
            fmt_num(triple.warp.eval(&b))
        );
    }
    out
}

/// Machine-readable record of a sampling run.
pub fn sample_record(space: &dyn MetricOracle, kind: Kind, kappa: Curvature, seed: u64, v: &ComparisonVerdict) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "SAMPLE space={} kind={kind} kappa={} seed={seed} tested={}", space.label(), fmt_num(kappa.value()), v.n_tested);
    let _ = writeln!(
        out,
        "RESULT {} margin={} slack={}",
        if v.passed { "PASS" } else { "FAIL" },
        fmt_num(v.margin),
        fmt_num(v.slack_used)
    );
    if let Some(w) = &v.witness {
        for (i, p) in w.points.iter().enumerate() {
            let coords: Vec<String> = p.iter().map(|c| fmt_num(*c)).collect();
            let _ = writeln!(out, "WITNESS x{} {}", i + 1, coords.join(" "));
        }
        for i in 0..w.points.len() {
            for j in (i + 1)..w.points.len() {
                let _ = writeln!(out, "DISTANCE x{} x{} {}", i + 1, j + 1, fmt_num(w.distances[i][j]));
            }
        }
    }
    out
}

/// Sampling slack for a space built from a spec.
pub fn spec_slack(space: &Arc<dyn MetricOracle>) -> f64 {
    space.tol_metric().max(EXACT_SLACK)
}

/// Lifted point of a doubled base, for callers addressing sheets directly.
pub fn doubled_point(x: &[f64], sheet: usize) -> Point {
    DoubledBase::lift(x, sheet)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONE: &str = r#"
side = "CBB"
kappa = 0
seed = 3
[base]
kind = "ray"
[warp]
expr = "t"
lipschitz = 1
zeros = [[0]]
[fiber]
kind = "circle"
params = ["2*pi*0.9"]
[budget]
quadruples = 2000
"#;

    #[test]
    fn parses_and_resolves() {
        let spec = TripleSpec::from_toml(CONE).unwrap();
        assert_eq!(spec.budget.grid, EngineOptions::default().grid);
        let c = spec.resolve(None).unwrap();
        assert_eq!(c.side, Kind::Cbb);
        assert!(c.product().has_fast_path());
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(TripleSpec::from_toml("side = 1").is_err());
        let bad = CONE.replace("kind = \"ray\"", "kind = \"circle(0)\"");
        assert!(TripleSpec::from_toml(&bad).unwrap().resolve(None).is_err());
        let bad = CONE.replace("side = \"CBB\"", "side = \"XYZ\"");
        assert!(TripleSpec::from_toml(&bad).unwrap().resolve(None).is_err());
        let bad = CONE.replace("seed = 3", "seed = 3\nextra = 1");
        assert!(TripleSpec::from_toml(&bad).is_err());
    }

    #[test]
    fn short_circle_cone_is_consistent_cbb() {
        let c = TripleSpec::from_toml(CONE).unwrap().resolve(None).unwrap();
        let r = certify(&c);
        assert!(r.consistent, "{}", r.text());
        assert_eq!(r.exit_code(), 0, "{}", r.text());
        let m = r.machine();
        assert!(m.ends_with("OVERALL CONSISTENT\n"));
        assert_eq!(m, certify(&c).machine());
    }
}
