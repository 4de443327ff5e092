//! Complex grid functions with L² structure and a closed symbolic algebra
//! of edgewise trigonometric expressions.
//!
//! [`TrigExpression`] stores, per edge, a finite sum
//! `Σ a·cos(ωx) + b·sin(ωx)` whose frequencies are exact half-integers
//! (`ω = n/2` with integer `n ≥ 0`).  The class is closed under addition,
//! scalar multiplication, products (via product-to-sum rewriting),
//! differentiation, and squaring, and supports the exact vertex checks
//! needed by the saturation machinery: frequency comparisons never go
//! through floating point.
//!
//! [`WaveFunction`] and [`RealFunction`] are sampled functions aligned to
//! a [`Grid`], with trapezoidal L² quadrature.

use crate::domain::{BoundaryKind, EndMarker, Grid, MetricDomain};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

/// Errors raised by function-space operations.
#[derive(Debug, Error)]
pub enum FuncError {
    /// Two sampled functions live on different grids.
    #[error("grid mismatch")]
    GridMismatch,
    /// An operation required a real function but got complex samples.
    #[error("function is not real")]
    NotReal,
    /// An operation required orthogonal inputs.
    #[error("functions are not orthogonal: |<f,g>| = {0}")]
    NotOrthogonal(f64),
    /// The expression count does not match the domain's edge count.
    #[error("edge count mismatch: expression has {0}, domain has {1}")]
    EdgeCountMismatch(usize, usize),
}

/// Coefficient magnitudes below this (relative to the largest coefficient)
/// are treated as exact cancellations during canonicalization.
const CANCEL_EPS: f64 = 1e-13;

/// One canonical term `a·cos(ωx) + b·sin(ωx)`; `om_halves` is the
/// frequency in units of `1/2`, so `ω = om_halves/2` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    /// Frequency numerator: `ω = om_halves / 2`, `om_halves ≥ 0`.
    pub om_halves: i64,
    /// Cosine coefficient.
    pub a: f64,
    /// Sine coefficient (zero when `om_halves == 0`).
    pub b: f64,
}

impl TrigTerm {
    /// Frequency as a float.
    pub fn omega(&self) -> f64 {
        self.om_halves as f64 * 0.5
    }
}

/// Edgewise finite trigonometric sum in canonical form: per edge, terms
/// sorted by strictly increasing frequency with no zero terms (except
/// that an all-zero edge has an empty list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigExpression {
    /// One canonical term list per edge.
    pub edges: Vec<Vec<TrigTerm>>,
}

impl TrigExpression {
    /// The zero expression on `num_edges` edges.
    pub fn zero(num_edges: usize) -> Self {
        TrigExpression { edges: vec![Vec::new(); num_edges] }
    }

    /// The constant `c` on every edge.
    pub fn constant(c: f64, num_edges: usize) -> Self {
        let mut expr = Self::zero(num_edges);
        if c != 0.0 {
            for e in &mut expr.edges {
                e.push(TrigTerm { om_halves: 0, a: c, b: 0.0 });
            }
        }
        expr
    }

    /// `coef·cos(ωx)` on a single edge (zero elsewhere); `ω = om_halves/2`.
    pub fn cos(num_edges: usize, edge: usize, om_halves: i64, coef: f64) -> Self {
        let mut expr = Self::zero(num_edges);
        expr.edges[edge].push(TrigTerm { om_halves, a: coef, b: 0.0 });
        expr.canonicalize();
        expr
    }

    /// `coef·sin(ωx)` on a single edge (zero elsewhere); `ω = om_halves/2`.
    pub fn sin(num_edges: usize, edge: usize, om_halves: i64, coef: f64) -> Self {
        let mut expr = Self::zero(num_edges);
        expr.edges[edge].push(TrigTerm { om_halves, a: 0.0, b: coef });
        expr.canonicalize();
        expr
    }

    /// Number of edges the expression lives on.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// True when every edge has an empty term list.
    pub fn is_zero(&self) -> bool {
        self.edges.iter().all(|e| e.is_empty())
    }

    /// Largest frequency (in halves) present on any edge.
    pub fn max_om_halves(&self) -> i64 {
        self.edges
            .iter()
            .flat_map(|e| e.iter().map(|t| t.om_halves))
            .max()
            .unwrap_or(0)
    }

    /// Crude sup-norm bound `Σ (|a| + |b|)`, maximized over edges.
    pub fn sup_bound(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.iter().map(|t| t.a.abs() + t.b.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Restore canonical form: merge duplicate frequencies, sort, drop
    /// exact cancellations, clear `sin(0)`.
    pub fn canonicalize(&mut self) {
        for edge in &mut self.edges {
            let mut merged: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
            for t in edge.iter() {
                let entry = merged.entry(t.om_halves).or_insert((0.0, 0.0));
                entry.0 += t.a;
                entry.1 += t.b;
            }
            let scale = merged
                .values()
                .map(|&(a, b)| a.abs().max(b.abs()))
                .fold(1.0, f64::max);
            edge.clear();
            for (om, (mut a, mut b)) in merged {
                if om == 0 {
                    b = 0.0;
                }
                if a.abs() <= CANCEL_EPS * scale {
                    a = 0.0;
                }
                if b.abs() <= CANCEL_EPS * scale {
                    b = 0.0;
                }
                if a != 0.0 || b != 0.0 {
                    edge.push(TrigTerm { om_halves: om, a, b });
                }
            }
        }
    }

    /// Sum of two expressions on the same edge set.
    pub fn add(&self, other: &TrigExpression) -> TrigExpression {
        assert_eq!(self.num_edges(), other.num_edges(), "edge count mismatch");
        let mut out = self.clone();
        for (e, terms) in other.edges.iter().enumerate() {
            out.edges[e].extend_from_slice(terms);
        }
        out.canonicalize();
        out
    }

    /// Difference `self − other`.
    pub fn sub(&self, other: &TrigExpression) -> TrigExpression {
        self.add(&other.scale(-1.0))
    }

    /// Scalar multiple.
    pub fn scale(&self, s: f64) -> TrigExpression {
        let mut out = self.clone();
        for edge in &mut out.edges {
            for t in edge.iter_mut() {
                t.a *= s;
                t.b *= s;
            }
        }
        out.canonicalize();
        out
    }

    /// Exact derivative `d/dx` (edgewise).
    pub fn derivative(&self) -> TrigExpression {
        let mut out = TrigExpression::zero(self.num_edges());
        for (e, terms) in self.edges.iter().enumerate() {
            for t in terms {
                let w = t.omega();
                // (a cos + b sin)' = -aω sin + bω cos
                out.edges[e].push(TrigTerm { om_halves: t.om_halves, a: t.b * w, b: -t.a * w });
            }
        }
        out.canonicalize();
        out
    }

    /// Evaluate on one edge at parameter `x`.
    pub fn eval_edge(&self, edge: usize, x: f64) -> f64 {
        self.edges[edge]
            .iter()
            .map(|t| {
                let w = t.omega();
                t.a * (w * x).cos() + t.b * (w * x).sin()
            })
            .sum()
    }

    /// Exact value at an edge end: for `x = 0` this is `Σ a`; for
    /// `x = L` with `ωL` an integer multiple of π the trigonometric
    /// factors are resolved symbolically (±1 and 0), avoiding roundoff.
    pub fn end_value(&self, edge: usize, length: f64, end: EndMarker) -> f64 {
        match end {
            EndMarker::Start => self.edges[edge].iter().map(|t| t.a).sum(),
            EndMarker::End => self.edges[edge]
                .iter()
                .map(|t| {
                    let (c, s) = cos_sin_at(t.omega(), length);
                    t.a * c + t.b * s
                })
                .sum(),
        }
    }

    /// Exact outgoing derivative at an edge end per the vertex
    /// conventions: `+p′(0)` at the start, `−p′(L)` at the end.
    pub fn outgoing_derivative(&self, edge: usize, length: f64, end: EndMarker) -> f64 {
        let d = self.derivative();
        match end {
            EndMarker::Start => d.edges[edge].iter().map(|t| t.a).sum(),
            EndMarker::End => -d.edges[edge]
                .iter()
                .map(|t| {
                    let (c, s) = cos_sin_at(t.omega(), length);
                    t.a * c + t.b * s
                })
                .sum::<f64>(),
        }
    }

    /// Sample onto a grid as a [`RealFunction`].
    pub fn evaluate(&self, grid: &Arc<Grid>) -> RealFunction {
        assert_eq!(self.num_edges(), grid.edges.len(), "edge count mismatch");
        let data = grid
            .edges
            .iter()
            .enumerate()
            .map(|(e, blk)| blk.xs.iter().map(|&x| self.eval_edge(e, x)).collect())
            .collect();
        RealFunction { grid: Arc::clone(grid), data }
    }

    /// Exact integral `Σ_j ∫_0^{L_j} p_j(x) dx` over the given edge lengths.
    pub fn integral(&self, lengths: &[f64]) -> f64 {
        assert_eq!(self.num_edges(), lengths.len(), "edge count mismatch");
        let mut total = 0.0;
        for (terms, &len) in self.edges.iter().zip(lengths) {
            for t in terms {
                if t.om_halves == 0 {
                    total += t.a * len;
                } else {
                    let w = t.omega();
                    let (c, s) = cos_sin_at(w, len);
                    total += t.a * s / w + t.b * (1.0 - c) / w;
                }
            }
        }
        total
    }

    /// Canonical text form, one line per edge:
    /// `edge k: a*cos(w x) + b*sin(w x) + ...`.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        for (e, terms) in self.edges.iter().enumerate() {
            let mut parts = Vec::new();
            for t in terms {
                if t.om_halves == 0 {
                    parts.push(format!("{:.12}", t.a));
                } else {
                    let w = t.omega();
                    if t.a != 0.0 {
                        parts.push(format!("{:.12}*cos({} x)", t.a, w));
                    }
                    if t.b != 0.0 {
                        parts.push(format!("{:.12}*sin({} x)", t.b, w));
                    }
                }
            }
            let body = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
            out.push_str(&format!("edge {e}: {body}\n"));
        }
        out
    }

    /// Term-list equality with exact frequencies and coefficients within
    /// `tol`.
    pub fn approx_eq(&self, other: &TrigExpression, tol: f64) -> bool {
        if self.num_edges() != other.num_edges() {
            return false;
        }
        self.sub(other).sup_bound() <= tol
    }
}

/// `cos(ωL)` and `sin(ωL)`, resolved exactly when `ωL` is an integer
/// multiple of π (the commensurate case of the canonical graphs).
fn cos_sin_at(omega: f64, length: f64) -> (f64, f64) {
    let t = omega * length / std::f64::consts::PI;
    let n = t.round();
    if (t - n).abs() < 1e-9 {
        let c = if (n as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        (c, 0.0)
    } else {
        ((omega * length).cos(), (omega * length).sin())
    }
}

/// Exact product via product-to-sum identities; result is canonical.
pub fn trig_mul(p: &TrigExpression, q: &TrigExpression) -> TrigExpression {
    assert_eq!(p.num_edges(), q.num_edges(), "edge count mismatch");
    let mut out = TrigExpression::zero(p.num_edges());
    for e in 0..p.num_edges() {
        for s in &p.edges[e] {
            for t in &q.edges[e] {
                let sum = s.om_halves + t.om_halves;
                let diff = s.om_halves - t.om_halves;
                // cos A cos B = ½cos(A−B) + ½cos(A+B)
                push_cos(&mut out.edges[e], diff, 0.5 * s.a * t.a);
                push_cos(&mut out.edges[e], sum, 0.5 * s.a * t.a);
                // sin A sin B = ½cos(A−B) − ½cos(A+B)
                push_cos(&mut out.edges[e], diff, 0.5 * s.b * t.b);
                push_cos(&mut out.edges[e], sum, -0.5 * s.b * t.b);
                // sin A cos B = ½sin(A−B) + ½sin(A+B)
                push_sin(&mut out.edges[e], diff, 0.5 * s.b * t.a);
                push_sin(&mut out.edges[e], sum, 0.5 * s.b * t.a);
                // cos A sin B = −½sin(A−B) + ½sin(A+B)
                push_sin(&mut out.edges[e], diff, -0.5 * s.a * t.b);
                push_sin(&mut out.edges[e], sum, 0.5 * s.a * t.b);
            }
        }
    }
    out.canonicalize();
    out
}

fn push_cos(terms: &mut Vec<TrigTerm>, om_halves: i64, coef: f64) {
    if coef == 0.0 {
        return;
    }
    // cos is even in the frequency.
    terms.push(TrigTerm { om_halves: om_halves.abs(), a: coef, b: 0.0 });
}

fn push_sin(terms: &mut Vec<TrigTerm>, om_halves: i64, coef: f64) {
    if coef == 0.0 {
        return;
    }
    // sin is odd in the frequency.
    let (om, c) = if om_halves < 0 { (-om_halves, -coef) } else { (om_halves, coef) };
    terms.push(TrigTerm { om_halves: om, a: 0.0, b: c });
}

/// Exact derivative (alias matching the operation vocabulary).
pub fn trig_derivative(p: &TrigExpression) -> TrigExpression {
    p.derivative()
}

/// `(∂ₓ p)²` as an exact trigonometric expression.
pub fn trig_grad_squared(p: &TrigExpression) -> TrigExpression {
    let d = p.derivative();
    trig_mul(&d, &d)
}

/// Exact L² inner product of two expressions over the domain's edges.
pub fn trig_inner_product(p: &TrigExpression, q: &TrigExpression, lengths: &[f64]) -> f64 {
    trig_mul(p, q).integral(lengths)
}

/// Does multiplication by `p` preserve the operator domain?
///
/// True iff (a) `p` is continuous at every vertex (all incident edge-end
/// values agree; on the circle, periodicity of value and derivative), and
/// (b) at every Neumann–Kirchhoff vertex the outgoing derivatives of `p`
/// sum to zero.  Dirichlet vertices impose no extra condition.  All
/// evaluations are symbolic at the edge ends.
pub fn stabilizes_domain(p: &TrigExpression, d: &MetricDomain) -> bool {
    const TOL: f64 = 1e-9;
    match d {
        MetricDomain::Circle { length } => {
            if p.num_edges() != 1 {
                return false;
            }
            let v0 = p.end_value(0, *length, EndMarker::Start);
            let v1 = p.end_value(0, *length, EndMarker::End);
            let d0 = p.outgoing_derivative(0, *length, EndMarker::Start);
            let d1 = p.outgoing_derivative(0, *length, EndMarker::End);
            // Outgoing derivatives are +p′(0) and −p′(L); periodicity of
            // the derivative is exactly their sum vanishing.
            (v0 - v1).abs() <= TOL && (d0 + d1).abs() <= TOL
        }
        MetricDomain::Interval { length, bc_left, bc_right } => {
            if p.num_edges() != 1 {
                return false;
            }
            let mut ok = true;
            if *bc_left == BoundaryKind::NeumannKirchhoff {
                ok &= p.outgoing_derivative(0, *length, EndMarker::Start).abs() <= TOL;
            }
            if *bc_right == BoundaryKind::NeumannKirchhoff {
                ok &= p.outgoing_derivative(0, *length, EndMarker::End).abs() <= TOL;
            }
            ok
        }
        MetricDomain::Graph { edges, vertices } => {
            if p.num_edges() != edges.len() {
                return false;
            }
            for v in vertices {
                let values: Vec<f64> = v
                    .incident
                    .iter()
                    .map(|&(eid, end)| p.end_value(eid, edges[eid].length, end))
                    .collect();
                for w in &values[1..] {
                    if (w - values[0]).abs() > TOL {
                        return false;
                    }
                }
                if v.condition == BoundaryKind::NeumannKirchhoff {
                    let flux: f64 = v
                        .incident
                        .iter()
                        .map(|&(eid, end)| p.outgoing_derivative(eid, edges[eid].length, end))
                        .sum();
                    if flux.abs() > TOL {
                        return false;
                    }
                }
            }
            true
        }
    }
}

/// Complex-valued samples aligned to a grid, one block per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    /// Shared grid.
    pub grid: Arc<Grid>,
    /// Per-edge complex samples matching the grid blocks.
    pub data: Vec<Vec<Complex64>>,
}

/// Real-valued samples aligned to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFunction {
    /// Shared grid.
    pub grid: Arc<Grid>,
    /// Per-edge real samples matching the grid blocks.
    pub data: Vec<Vec<f64>>,
}

impl RealFunction {
    /// Zero function on a grid.
    pub fn zero(grid: &Arc<Grid>) -> Self {
        let data = grid.edges.iter().map(|blk| vec![0.0; blk.n]).collect();
        RealFunction { grid: Arc::clone(grid), data }
    }

    /// Build from a pointwise map of the edge parameter.
    pub fn from_fn(grid: &Arc<Grid>, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let data = grid
            .edges
            .iter()
            .enumerate()
            .map(|(e, blk)| blk.xs.iter().map(|&x| f(e, x)).collect())
            .collect();
        RealFunction { grid: Arc::clone(grid), data }
    }

    /// Promote to a complex [`WaveFunction`].
    pub fn to_wave(&self) -> WaveFunction {
        let data = self
            .data
            .iter()
            .map(|blk| blk.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            .collect();
        WaveFunction { grid: Arc::clone(&self.grid), data }
    }

    /// Pointwise supremum norm.
    pub fn sup_norm(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|blk| blk.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    /// L² norm under trapezoidal quadrature.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for (e, blk) in self.data.iter().enumerate() {
            for (i, v) in blk.iter().enumerate() {
                acc += self.grid.weight(e, i) * v * v;
            }
        }
        acc.sqrt()
    }
}

impl WaveFunction {
    /// Zero function on a grid.
    pub fn zero(grid: &Arc<Grid>) -> Self {
        let data = grid.edges.iter().map(|blk| vec![Complex64::new(0.0, 0.0); blk.n]).collect();
        WaveFunction { grid: Arc::clone(grid), data }
    }

    /// Build from a pointwise map of the edge parameter.
    pub fn from_fn(grid: &Arc<Grid>, mut f: impl FnMut(usize, f64) -> Complex64) -> Self {
        let data = grid
            .edges
            .iter()
            .enumerate()
            .map(|(e, blk)| blk.xs.iter().map(|&x| f(e, x)).collect())
            .collect();
        WaveFunction { grid: Arc::clone(grid), data }
    }

    /// L² norm under trapezoidal quadrature.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for (e, blk) in self.data.iter().enumerate() {
            for (i, v) in blk.iter().enumerate() {
                acc += self.grid.weight(e, i) * v.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Scale by a complex factor in place.
    pub fn scale(&mut self, s: Complex64) {
        for blk in &mut self.data {
            for v in blk.iter_mut() {
                *v *= s;
            }
        }
    }

    /// `self + s·other` (same grid).
    pub fn axpy(&mut self, s: Complex64, other: &WaveFunction) {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    /// Normalize to unit L² norm; returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            self.scale(Complex64::new(1.0 / n, 0.0));
        }
        n
    }

    /// Pointwise modulus as a real function.
    pub fn modulus(&self) -> RealFunction {
        let data = self
            .data
            .iter()
            .map(|blk| blk.iter().map(|v| v.norm()).collect())
            .collect();
        RealFunction { grid: Arc::clone(&self.grid), data }
    }

    /// Largest continuity violation of sampled values across the grid's
    /// logical vertex identifications (used by "conforming" checks).
    pub fn real_part(&self) -> RealFunction {
        let data = self
            .data
            .iter()
            .map(|blk| blk.iter().map(|v| v.re).collect())
            .collect();
        RealFunction { grid: Arc::clone(&self.grid), data }
    }

    /// Maximum imaginary magnitude (for `NotReal` gates).
    pub fn max_imag(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|blk| blk.iter().map(|v| v.im.abs()))
            .fold(0.0, f64::max)
    }
}

/// Conjugate-linear-in-first-argument L² inner product by trapezoidal
/// quadrature, edge by edge.
pub fn inner_product(f: &WaveFunction, g: &WaveFunction) -> Result<Complex64, FuncError> {
    if f.grid.edges.len() != g.grid.edges.len()
        || f.grid
            .edges
            .iter()
            .zip(&g.grid.edges)
            .any(|(a, b)| a.n != b.n)
    {
        return Err(FuncError::GridMismatch);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (e, (fb, gb)) in f.data.iter().zip(&g.data).enumerate() {
        for (i, (x, y)) in fb.iter().zip(gb).enumerate() {
            acc += f.grid.weight(e, i) * x.conj() * y;
        }
    }
    Ok(acc)
}

/// Multiply by `e^{iθ(x)}` pointwise; preserves the modulus exactly.
pub fn apply_phase(f: &WaveFunction, theta: &RealFunction) -> Result<WaveFunction, FuncError> {
    if f.grid.edges.len() != theta.grid.edges.len()
        || f.grid
            .edges
            .iter()
            .zip(&theta.grid.edges)
            .any(|(a, b)| a.n != b.n)
    {
        return Err(FuncError::GridMismatch);
    }
    let data = f
        .data
        .iter()
        .zip(&theta.data)
        .map(|(fb, tb)| {
            fb.iter()
                .zip(tb)
                .map(|(v, &t)| v * Complex64::new(0.0, t).exp())
                .collect()
        })
        .collect();
    Ok(WaveFunction { grid: Arc::clone(&f.grid), data })
}
