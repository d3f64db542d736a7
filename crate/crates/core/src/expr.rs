//! Expression trees for warping functions.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' integer)?
//! primary := number | 'pi' | coord | call | '(' expr ')'
//! coord   := 't' | 'x' | 'r' | 'theta'
//! call    := name '(' args ')'
//! ```
//!
//! Calls: `sin cos sinh cosh exp abs` (one argument), `sn(k, e)`,
//! `min(a, b)`, `max(a, b)`, `dist_point(p…)`, `dist_boundary()`,
//! `dist_boundary_arc(θ0, θ1)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{CatalogSpace, MetricOracle};
use crate::model::{cs, polar_distance, sn, Curvature};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("{0}")]
    Binding(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Abs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    /// Base distance to a fixed point.
    DistPoint(Vec<f64>),
    /// Base distance to the boundary.
    DistBoundary,
    /// Distance to the boundary arc `θ ∈ [θ0, θ1]` of a model disk.
    DistBoundaryArc(f64, f64),
    Apply(Func, Box<Expr>),
    /// `sn^κ(e)`.
    Sn(f64, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

/// Value with first and second derivative along a 1-D base.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: f64,
    pub dd: f64,
}

impl Jet {
    fn constant(v: f64) -> Jet {
        Jet { v, d: 0.0, dd: 0.0 }
    }

    /// `g ∘ self` given `g`, `g'`, `g''` at `self.v`.
    fn chain(self, g: f64, g1: f64, g2: f64) -> Jet {
        Jet { v: g, d: g1 * self.d, dd: g2 * self.d * self.d + g1 * self.dd }
    }
}

fn arc_gap(theta: f64, t0: f64, t1: f64) -> f64 {
    // Angular distance from θ to the arc [t0, t1] (taken counter-clockwise).
    let span = (t1 - t0).rem_euclid(2.0 * PI);
    let rel = (theta - t0).rem_euclid(2.0 * PI);
    if rel <= span || (t1 - t0) >= 2.0 * PI {
        0.0
    } else {
        let to_start = 2.0 * PI - rel;
        let to_end = rel - span;
        to_start.min(to_end)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Checks that coordinates and distance terms make sense on `base`.
    pub fn check(&self, base: &CatalogSpace) -> Result<(), ExprError> {
        let dim = base.dimension();
        let bad = |m: String| Err(ExprError::Binding(m));
        match self {
            Expr::Const(_) => Ok(()),
            Expr::Coord(i) => {
                if *i < dim {
                    Ok(())
                } else {
                    bad(format!("coordinate {i} is not available on {base}"))
                }
            }
            Expr::DistPoint(p) => {
                if p.len() != dim {
                    return bad(format!("dist_point needs {dim} coordinates on {base}"));
                }
                base.validate(p).map_err(|e| ExprError::Binding(e.to_string()))
            }
            Expr::DistBoundary => match base {
                CatalogSpace::Interval { .. } | CatalogSpace::Ray | CatalogSpace::ModelDisk { .. } => Ok(()),
                _ => bad(format!("{base} has no boundary")),
            },
            Expr::DistBoundaryArc(..) => match base {
                CatalogSpace::ModelDisk { .. } if base.is_convex_disk() => Ok(()),
                _ => bad(format!("dist_boundary_arc needs a convex model disk, not {base}")),
            },
            Expr::Apply(_, a) | Expr::Sn(_, a) | Expr::Neg(a) | Expr::Pow(a, _) => a.check(base),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => {
                a.check(base)?;
                b.check(base)
            }
        }
    }

    pub fn eval(&self, x: &[f64], base: &CatalogSpace) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Coord(i) => x[*i],
            Expr::DistPoint(p) => base.distance(x, p),
            Expr::DistBoundary => match *base {
                CatalogSpace::Interval { a, b } => (x[0] - a).min(b - x[0]),
                CatalogSpace::Ray => x[0],
                CatalogSpace::ModelDisk { radius, .. } => radius - x[0],
                _ => f64::NAN,
            },
            Expr::DistBoundaryArc(t0, t1) => match *base {
                CatalogSpace::ModelDisk { kappa, radius } => {
                    let k = Curvature::new(kappa).unwrap_or(Curvature::ZERO);
                    let gap = arc_gap(x[1], *t0, *t1);
                    polar_distance(k, x[0], 0.0, radius, gap)
                }
                _ => f64::NAN,
            },
            Expr::Apply(f, a) => {
                let u = a.eval(x, base);
                match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Sinh => u.sinh(),
                    Func::Cosh => u.cosh(),
                    Func::Exp => u.exp(),
                    Func::Abs => u.abs(),
                }
            }
            Expr::Sn(k, a) => sn(Curvature::new(*k).unwrap_or(Curvature::ZERO), a.eval(x, base)),
            Expr::Add(a, b) => a.eval(x, base) + b.eval(x, base),
            Expr::Sub(a, b) => a.eval(x, base) - b.eval(x, base),
            Expr::Mul(a, b) => a.eval(x, base) * b.eval(x, base),
            Expr::Div(a, b) => a.eval(x, base) / b.eval(x, base),
            Expr::Neg(a) => -a.eval(x, base),
            Expr::Pow(a, n) => a.eval(x, base).powi(*n),
            Expr::Min(a, b) => a.eval(x, base).min(b.eval(x, base)),
            Expr::Max(a, b) => a.eval(x, base).max(b.eval(x, base)),
        }
    }

    /// Value and derivatives at `t` on a one-dimensional base.
    pub fn jet(&self, t: f64, base: &CatalogSpace) -> Jet {
        match self {
            Expr::Const(c) => Jet::constant(*c),
            Expr::Coord(_) => Jet { v: t, d: 1.0, dd: 0.0 },
            Expr::DistPoint(p) => match *base {
                CatalogSpace::Circle { length } => {
                    let g = (t - p[0]).rem_euclid(length);
                    if g <= 0.5 * length {
                        Jet { v: g, d: 1.0, dd: 0.0 }
                    } else {
                        Jet { v: length - g, d: -1.0, dd: 0.0 }
                    }
                }
                _ => {
                    let u = t - p[0];
                    Jet { v: u.abs(), d: if u >= 0.0 { 1.0 } else { -1.0 }, dd: 0.0 }
                }
            },
            Expr::DistBoundary => match *base {
                CatalogSpace::Interval { a, b } => {
                    if t - a <= b - t {
                        Jet { v: t - a, d: 1.0, dd: 0.0 }
                    } else {
                        Jet { v: b - t, d: -1.0, dd: 0.0 }
                    }
                }
                CatalogSpace::Ray => Jet { v: t, d: 1.0, dd: 0.0 },
                _ => Jet::constant(f64::NAN),
            },
            Expr::DistBoundaryArc(..) => Jet::constant(f64::NAN),
            Expr::Apply(f, a) => {
                let u = a.jet(t, base);
                match f {
                    Func::Sin => u.chain(u.v.sin(), u.v.cos(), -u.v.sin()),
                    Func::Cos => u.chain(u.v.cos(), -u.v.sin(), -u.v.cos()),
                    Func::Sinh => u.chain(u.v.sinh(), u.v.cosh(), u.v.sinh()),
                    Func::Cosh => u.chain(u.v.cosh(), u.v.sinh(), u.v.cosh()),
                    Func::Exp => {
                        let e = u.v.exp();
                        u.chain(e, e, e)
                    }
                    Func::Abs => {
                        let s = if u.v >= 0.0 { 1.0 } else { -1.0 };
                        u.chain(u.v.abs(), s, 0.0)
                    }
                }
            }
            Expr::Sn(k, a) => {
                let u = a.jet(t, base);
                let kk = Curvature::new(*k).unwrap_or(Curvature::ZERO);
                let s = sn(kk, u.v);
                u.chain(s, cs(kk, u.v), -k * s)
            }
            Expr::Add(a, b) => {
                let (p, q) = (a.jet(t, base), b.jet(t, base));
                Jet { v: p.v + q.v, d: p.d + q.d, dd: p.dd + q.dd }
            }
            Expr::Sub(a, b) => {
                let (p, q) = (a.jet(t, base), b.jet(t, base));
                Jet { v: p.v - q.v, d: p.d - q.d, dd: p.dd - q.dd }
            }
            Expr::Mul(a, b) => {
                let (p, q) = (a.jet(t, base), b.jet(t, base));
                Jet {
                    v: p.v * q.v,
                    d: p.d * q.v + p.v * q.d,
                    dd: p.dd * q.v + 2.0 * p.d * q.d + p.v * q.dd,
                }
            }
            Expr::Div(a, b) => {
                let (u, w) = (a.jet(t, base), b.jet(t, base));
                let q = u.v / w.v;
                let q1 = (u.d - q * w.d) / w.v;
                let q2 = (u.dd - 2.0 * q1 * w.d - q * w.dd) / w.v;
                Jet { v: q, d: q1, dd: q2 }
            }
            Expr::Neg(a) => {
                let u = a.jet(t, base);
                Jet { v: -u.v, d: -u.d, dd: -u.dd }
            }
            Expr::Pow(a, n) => {
                let u = a.jet(t, base);
                let nf = *n as f64;
                let g1 = if *n == 0 { 0.0 } else { nf * u.v.powi(n - 1) };
                let g2 = if *n <= 1 && *n >= 0 { 0.0 } else { nf * (nf - 1.0) * u.v.powi(n - 2) };
                u.chain(u.v.powi(*n), g1, g2)
            }
            Expr::Min(a, b) => {
                let (p, q) = (a.jet(t, base), b.jet(t, base));
                if p.v <= q.v {
                    p
                } else {
                    q
                }
            }
            Expr::Max(a, b) => {
                let (p, q) = (a.jet(t, base), b.jet(t, base));
                if p.v >= q.v {
                    p
                } else {
                    q
                }
            }
        }
    }

    /// Recognizes `a·sn^k(t)` and its special cases `a·t`, `a·sin(t)`,
    /// `a·sinh(t)`; returns `(a, k)`.
    pub fn as_cone_profile(&self) -> Option<(f64, f64)> {
        match self {
            Expr::Coord(0) => Some((1.0, 0.0)),
            Expr::Sn(k, a) if **a == Expr::Coord(0) => Some((1.0, *k)),
            Expr::Apply(Func::Sin, a) if **a == Expr::Coord(0) => Some((1.0, 1.0)),
            Expr::Apply(Func::Sinh, a) if **a == Expr::Coord(0) => Some((1.0, -1.0)),
            Expr::Mul(a, b) => match (&**a, &**b) {
                (Expr::Const(c), e) | (e, Expr::Const(c)) => {
                    e.as_cone_profile().map(|(s, k)| (s * c, k))
                }
                _ => None,
            },
            Expr::Div(a, b) => match &**b {
                Expr::Const(c) if *c != 0.0 => a.as_cone_profile().map(|(s, k)| (s / c, k)),
                _ => None,
            },
            _ => None,
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            let n = self.number()?;
            if n.fract() != 0.0 || n.abs() > 64.0 {
                return Err(self.err("exponent must be a small integer"));
            }
            let n = if neg { -(n as i32) } else { n as i32 };
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = (c == b'+' || c == b'-')
                && self.pos > start
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map_err(|_| ExprError::Syntax {
            pos: start,
            msg: format!("invalid number {text:?}"),
        })
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn args(&mut self) -> Result<Vec<Expr>, ExprError> {
        self.expect(b'(')?;
        let mut out = Vec::new();
        if self.eat(b')') {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(b')') {
                return Ok(out);
            }
            self.expect(b',')?;
        }
    }

    fn const_args(&mut self, name: &str) -> Result<Vec<f64>, ExprError> {
        let pos = self.pos;
        self.args()?
            .into_iter()
            .map(|e| match fold_const(&e) {
                Some(v) => Ok(v),
                None => Err(ExprError::Syntax {
                    pos,
                    msg: format!("arguments of {name} must be constants"),
                }),
            })
            .collect()
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident();
                let unary = |f: Func, p: &mut Self| -> Result<Expr, ExprError> {
                    let mut a = p.args()?;
                    if a.len() != 1 {
                        return Err(p.err("expected one argument"));
                    }
                    Ok(Expr::Apply(f, Box::new(a.remove(0))))
                };
                let binary = |p: &mut Self| -> Result<(Box<Expr>, Box<Expr>), ExprError> {
                    let mut a = p.args()?;
                    if a.len() != 2 {
                        return Err(p.err("expected two arguments"));
                    }
                    let b = a.remove(1);
                    Ok((Box::new(a.remove(0)), Box::new(b)))
                };
                match name.as_str() {
                    "pi" => Ok(Expr::Const(PI)),
                    "t" | "x" | "r" => Ok(Expr::Coord(0)),
                    "theta" => Ok(Expr::Coord(1)),
                    "sin" => unary(Func::Sin, self),
                    "cos" => unary(Func::Cos, self),
                    "sinh" => unary(Func::Sinh, self),
                    "cosh" => unary(Func::Cosh, self),
                    "exp" => unary(Func::Exp, self),
                    "abs" => unary(Func::Abs, self),
                    "sn" => {
                        let (k, e) = binary(self)?;
                        let k = fold_const(&k).ok_or_else(|| self.err("sn curvature must be constant"))?;
                        Ok(Expr::Sn(k, e))
                    }
                    "min" => binary(self).map(|(a, b)| Expr::Min(a, b)),
                    "max" => binary(self).map(|(a, b)| Expr::Max(a, b)),
                    "dist_point" => Ok(Expr::DistPoint(self.const_args("dist_point")?)),
                    "dist_boundary" => {
                        if !self.args()?.is_empty() {
                            return Err(self.err("dist_boundary takes no arguments"));
                        }
                        Ok(Expr::DistBoundary)
                    }
                    "dist_boundary_arc" => {
                        let a = self.const_args("dist_boundary_arc")?;
                        if a.len() != 2 {
                            return Err(self.err("dist_boundary_arc takes two angles"));
                        }
                        Ok(Expr::DistBoundaryArc(a[0], a[1]))
                    }
                    _ => Err(ExprError::Syntax { pos: start, msg: format!("unknown name {name:?}") }),
                }
            }
            Some(c) => Err(self.err(&format!("unexpected character '{}'", c as char))),
        }
    }
}

/// Evaluates a coordinate-free expression.
pub fn fold_const(e: &Expr) -> Option<f64> {
    Some(match e {
        Expr::Const(c) => *c,
        Expr::Neg(a) => -fold_const(a)?,
        Expr::Add(a, b) => fold_const(a)? + fold_const(b)?,
        Expr::Sub(a, b) => fold_const(a)? - fold_const(b)?,
        Expr::Mul(a, b) => fold_const(a)? * fold_const(b)?,
        Expr::Div(a, b) => fold_const(a)? / fold_const(b)?,
        Expr::Pow(a, n) => fold_const(a)?.powi(*n),
        Expr::Apply(..) | Expr::Sn(..) | Expr::Min(..) | Expr::Max(..) => {
            return has_no_coords(e).then(|| e.eval(&[], &CatalogSpace::Point));
        }
        _ => return None,
    })
}

fn has_no_coords(e: &Expr) -> bool {
    match e {
        Expr::Const(_) => true,
        Expr::Coord(_) | Expr::DistPoint(_) | Expr::DistBoundary | Expr::DistBoundaryArc(..) => false,
        Expr::Apply(_, a) | Expr::Sn(_, a) | Expr::Neg(a) | Expr::Pow(a, _) => has_no_coords(a),
        Expr::Add(a, b)
        | Expr::Sub(a, b)
        | Expr::Mul(a, b)
        | Expr::Div(a, b)
        | Expr::Min(a, b)
        | Expr::Max(a, b) => has_no_coords(a) && has_no_coords(b),
    }
}
