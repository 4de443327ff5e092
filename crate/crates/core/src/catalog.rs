//! The analytic eigenfunction catalog: torus, sphere, disk, Hermite, and
//! the two canonical graph families as constructible objects.
//!
//! Entries exist for modulus analysis and as exact references; the
//! sphere/disk/Hermite families are never propagated in time.  Each entry
//! carries its eigenvalue, a closed-form evaluator, and — for the 1-D
//! trigonometric families — exact [`TrigExpression`] data for the real
//! and imaginary parts.  Normalization constants follow the closed
//! formulas where available; the graph families are normalized by their
//! exact L² integrals and the constant recorded.

use crate::domain::{eight_graph, three_branch_graph, Grid, MetricDomain};
use crate::funcspace::{trig_inner_product, TrigExpression, WaveFunction};
use crate::specfun::{bessel_j, bessel_zero, hermite_fn, spherical_harmonic};
use num_complex::Complex64;
use std::sync::Arc;

/// Mode tags for the eight graph spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EightTag {
    /// `λ = 0`, `φ₀ = (1,1)`.
    Ground,
    /// `λ = ((2k+1)/2)²`, `φ = (s_{(2k+1)/2}, −s_{(2k+1)/2})`, `k ≥ 0`.
    Odd(usize),
    /// `λ = k²`, `j ∈ {1,2,3}`: `(c_k,c_k)`, `(s_k,0)`, `(0,s_k)`, `k ≥ 1`.
    Even(usize, usize),
}

/// Mode tags for the three-branch graph spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreeBranchTag {
    /// `λ = 0`, constant.
    Ground,
    /// `λ = (k/2)²`, `j ∈ {1,2,3}`: `(c,c,c)`, `(−s,s,0)`, `(−s,0,s)`.
    Level(usize, usize),
}

/// Family tag with parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `Π_j e^{i s_j n_j x_j} / (2π)^{d/2}`, `λ = Σ n_j²`.
    Torus {
        /// Dimension.
        d: usize,
        /// Mode numbers `n_j ≥ 0`.
        n: Vec<i64>,
        /// Signs `±1` per coordinate.
        s: Vec<i8>,
    },
    /// `Y_l^m(α, β)`, `λ = l(l+1)`.
    Sphere {
        /// Degree `l ≤ 8`.
        l: usize,
        /// Order `|m| ≤ l`.
        m: i64,
    },
    /// `ψ±_{n,k} = J_n(j_{n,k} r) e^{±inθ} / (√π |J_{n+1}(j_{n,k})|)`.
    Disk {
        /// Angular order `n ≥ 1`.
        n: usize,
        /// Radial index `k ≥ 1`.
        k: usize,
        /// Sign of the angular phase.
        sign: i8,
    },
    /// Real disk modes `u_{n,k} ∝ J_n cos(nθ)`, `v_{n,k} ∝ J_n sin(nθ)`.
    DiskReal {
        /// Angular order.
        n: usize,
        /// Radial index.
        k: usize,
        /// `false` for `u` (cosine), `true` for `v` (sine).
        sine: bool,
    },
    /// Product Hermite function `Φ_α`, `λ = 2|α| + d`.
    Hermite {
        /// Multi-index (d = length).
        alpha: Vec<usize>,
    },
    /// Eight-graph eigenfunction.
    EightGraph(EightTag),
    /// Three-branch eigenfunction.
    ThreeBranch(ThreeBranchTag),
}

/// A catalog entry: eigenvalue plus closed-form evaluator.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    /// Family and parameters.
    pub family: Family,
    /// Eigenvalue under the family's operator.
    pub lambda: f64,
    /// Human-readable label.
    pub label: String,
    /// Exact unit-norm trigonometric data `(re, im)` for the 1-D
    /// families (circle d=1 torus, eight graph, three-branch).
    pub trig: Option<(TrigExpression, TrigExpression)>,
    /// Normalization constant applied to the family's raw formula.
    pub norm_const: f64,
}

impl CatalogEntry {
    /// Sample the entry on its family's canonical quadrature; returns
    /// complex samples and matching quadrature weights.  `resolution`
    /// scales the grid density.
    pub fn sample(&self, resolution: usize) -> (Vec<Complex64>, Vec<f64>) {
        match &self.family {
            Family::Torus { d, n, s } => sample_torus(*d, n, s, resolution),
            Family::Sphere { l, m } => sample_sphere(*l, *m, resolution),
            Family::Disk { n, k, sign } => {
                sample_disk(*n, *k, self.norm_const, resolution, DiskAngular::Complex(*sign))
            }
            Family::DiskReal { n, k, sine } => {
                sample_disk(*n, *k, self.norm_const, resolution, DiskAngular::Real(*sine))
            }
            Family::Hermite { alpha } => sample_hermite(alpha, resolution),
            Family::EightGraph(_) | Family::ThreeBranch(_) => {
                let domain = self.domain().expect("graph family has a domain");
                let grid = Arc::new(
                    crate::domain::discretize_nodes(&domain, resolution.max(8)).expect("grid"),
                );
                let wf = self.to_wavefunction(&grid);
                let mut samples = Vec::new();
                for blk in &wf.data {
                    samples.extend_from_slice(blk);
                }
                (samples, grid.weights_flat())
            }
        }
    }

    /// The metric domain for the graph families.
    pub fn domain(&self) -> Option<MetricDomain> {
        match &self.family {
            Family::EightGraph(_) => Some(eight_graph()),
            Family::ThreeBranch(_) => Some(three_branch_graph()),
            Family::Torus { d: 1, .. } => {
                Some(MetricDomain::Circle { length: 2.0 * std::f64::consts::PI })
            }
            _ => None,
        }
    }

    /// Sample the trigonometric data onto a grid (1-D families only).
    pub fn to_wavefunction(&self, grid: &Arc<Grid>) -> WaveFunction {
        let (re, im) = self.trig.as_ref().expect("entry has trig data");
        let re = re.evaluate(grid);
        let im = im.evaluate(grid);
        let data = re
            .data
            .iter()
            .zip(&im.data)
            .map(|(rb, ib)| {
                rb.iter()
                    .zip(ib)
                    .map(|(&r, &i)| Complex64::new(r, i))
                    .collect()
            })
            .collect();
        WaveFunction { grid: Arc::clone(grid), data }
    }
}

/// Quadrature helper: composite Simpson weights on `n` nodes (`n` odd)
/// with spacing `h`.
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd node count");
    let mut w = vec![0.0; n];
    for i in 0..n {
        w[i] = if i == 0 || i + 1 == n {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}

/// Torus mode `Φ^s_n(x) = Π_j e^{i s_j n_j x_j} / (2π)^{d/2}`,
/// `λ = Σ n_j²`.
pub fn torus_mode(d: usize, n: &[i64], s: &[i8]) -> CatalogEntry {
    assert_eq!(n.len(), d);
    assert_eq!(s.len(), d);
    assert!(n.iter().all(|&v| v >= 0), "mode numbers are nonnegative");
    let lambda: f64 = n.iter().map(|&v| (v * v) as f64).sum();
    let norm = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0);
    let trig = if d == 1 {
        // e^{isnx}/√(2π) = (cos(nx) + i s sin(nx))/√(2π)
        let re = TrigExpression::cos(1, 0, 2 * n[0], norm);
        let im = TrigExpression::sin(1, 0, 2 * n[0], norm * s[0] as f64);
        Some((re, im))
    } else {
        None
    };
    CatalogEntry {
        label: format!("torus d={d} n={n:?} s={s:?}"),
        family: Family::Torus { d, n: n.to_vec(), s: s.to_vec() },
        lambda,
        trig,
        norm_const: norm,
    }
}

fn sample_torus(d: usize, n: &[i64], s: &[i8], resolution: usize) -> (Vec<Complex64>, Vec<f64>) {
    assert!(d <= 2, "torus sampling supports d <= 2");
    let tau = 2.0 * std::f64::consts::PI;
    let nn = resolution.max(64);
    let h = tau / nn as f64;
    let norm = tau.powf(-(d as f64) / 2.0);
    if d == 1 {
        let mut samples = Vec::with_capacity(nn);
        for i in 0..nn {
            let x = i as f64 * h;
            samples.push(Complex64::new(0.0, s[0] as f64 * n[0] as f64 * x).exp() * norm);
        }
        (samples, vec![h; nn])
    } else {
        let mut samples = Vec::with_capacity(nn * nn);
        for i in 0..nn {
            for j in 0..nn {
                let (x1, x2) = (i as f64 * h, j as f64 * h);
                let phase = s[0] as f64 * n[0] as f64 * x1 + s[1] as f64 * n[1] as f64 * x2;
                samples.push(Complex64::new(0.0, phase).exp() * norm);
            }
        }
        (samples, vec![h * h; nn * nn])
    }
}

/// Sphere mode `Y_l^m`, `λ = l(l+1)`.
pub fn sphere_mode(l: usize, m: i64) -> CatalogEntry {
    assert!(l <= 8, "sphere modes limited to l <= 8");
    assert!(m.unsigned_abs() as usize <= l);
    CatalogEntry {
        label: format!("sphere Y_{l}^{m}"),
        family: Family::Sphere { l, m },
        lambda: (l * (l + 1)) as f64,
        trig: None,
        norm_const: 1.0,
    }
}

fn sample_sphere(l: usize, m: i64, resolution: usize) -> (Vec<Complex64>, Vec<f64>) {
    // Product quadrature: Simpson in α ∈ [0,π] (weight sin α), uniform
    // trapezoid in β (periodic, hence exact for trigonometric data).
    let na = (2 * resolution.max(256) + 1) | 1;
    let nb = resolution.max(128);
    let ha = std::f64::consts::PI / (na - 1) as f64;
    let hb = 2.0 * std::f64::consts::PI / nb as f64;
    let wa = simpson_weights(na, ha);
    let mut samples = Vec::with_capacity(na * nb);
    let mut weights = Vec::with_capacity(na * nb);
    for i in 0..na {
        let alpha = i as f64 * ha;
        for j in 0..nb {
            let beta = j as f64 * hb;
            samples.push(spherical_harmonic(l, m, alpha, beta));
            weights.push(wa[i] * alpha.sin() * hb);
        }
    }
    (samples, weights)
}

enum DiskAngular {
    Complex(i8),
    Real(bool),
}

/// Complex disk mode `ψ±_{n,k}` with `λ = j²_{n,k}` and the closed-form
/// normalization `1/(√π |J_{n+1}(j_{n,k})|)`.
pub fn disk_mode(n: usize, k: usize, sign: i8) -> CatalogEntry {
    assert!(n >= 1 && k >= 1);
    let j = bessel_zero(n, k).expect("bessel zero in range");
    let norm = 1.0 / (std::f64::consts::PI.sqrt() * bessel_j(n + 1, j).abs());
    CatalogEntry {
        label: format!("disk psi{}_{{{n},{k}}}", if sign >= 0 { "+" } else { "-" }),
        family: Family::Disk { n, k, sign },
        lambda: j * j,
        trig: None,
        norm_const: norm,
    }
}

/// Real disk modes `(u_{n,k}, v_{n,k})` spanning the same eigenspace.
pub fn disk_real_modes(n: usize, k: usize) -> (CatalogEntry, CatalogEntry) {
    assert!(n >= 1 && k >= 1);
    let j = bessel_zero(n, k).expect("bessel zero in range");
    // √2 restores unit norm when e^{inθ} is replaced by cos/sin.
    let norm = std::f64::consts::SQRT_2
        / (std::f64::consts::PI.sqrt() * bessel_j(n + 1, j).abs());
    let mk = |sine: bool| CatalogEntry {
        label: format!("disk {}_{{{n},{k}}}", if sine { "v" } else { "u" }),
        family: Family::DiskReal { n, k, sine },
        lambda: j * j,
        trig: None,
        norm_const: norm,
    };
    (mk(false), mk(true))
}

fn sample_disk(
    n: usize,
    k: usize,
    norm: f64,
    resolution: usize,
    angular: DiskAngular,
) -> (Vec<Complex64>, Vec<f64>) {
    let j = bessel_zero(n, k).expect("bessel zero in range");
    // Simpson in r (integrand J_n(jr)·angular is smooth), trapezoid in θ.
    let nr = (2 * resolution.max(256) + 1) | 1;
    let nt = resolution.max(128);
    let hr = 1.0 / (nr - 1) as f64;
    let ht = 2.0 * std::f64::consts::PI / nt as f64;
    let wr = simpson_weights(nr, hr);
    let mut samples = Vec::with_capacity(nr * nt);
    let mut weights = Vec::with_capacity(nr * nt);
    for i in 0..nr {
        let r = i as f64 * hr;
        let radial = norm * bessel_j(n, j * r);
        for t in 0..nt {
            let theta = t as f64 * ht;
            let val = match angular {
                DiskAngular::Complex(sign) => {
                    radial * Complex64::new(0.0, sign as f64 * n as f64 * theta).exp()
                }
                DiskAngular::Real(false) => Complex64::new(radial * (n as f64 * theta).cos(), 0.0),
                DiskAngular::Real(true) => Complex64::new(radial * (n as f64 * theta).sin(), 0.0),
            };
            samples.push(val);
            // Polar area element r dr dθ.
            weights.push(wr[i] * r * ht);
        }
    }
    (samples, weights)
}

/// Hermite mode `Φ_α(x) = Π_j Φ_{α_j}(x_j)`, `λ = 2|α| + d`.
pub fn hermite_mode(alpha: &[usize]) -> CatalogEntry {
    assert!(!alpha.is_empty());
    let total: usize = alpha.iter().sum();
    assert!(total <= 30, "|alpha| <= 30");
    let d = alpha.len();
    CatalogEntry {
        label: format!("hermite {alpha:?}"),
        family: Family::Hermite { alpha: alpha.to_vec() },
        lambda: (2 * total + d) as f64,
        trig: None,
        norm_const: 1.0,
    }
}

fn sample_hermite(alpha: &[usize], resolution: usize) -> (Vec<Complex64>, Vec<f64>) {
    assert!(alpha.len() == 1, "hermite sampling supports d = 1");
    // [−12, 12] captures Φ_k mass to well below 1e-12 for k ≤ 30.
    let n = (2 * resolution.max(2048) + 1) | 1;
    let h = 24.0 / (n - 1) as f64;
    let w = simpson_weights(n, h);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let x = -12.0 + i as f64 * h;
        samples.push(Complex64::new(hermite_fn(alpha[0], x), 0.0));
    }
    (samples, w)
}

/// Build an eight-graph mode; expressions are exact and normalized to
/// unit L² (the recorded constant makes the paper-form expression
/// recoverable).
pub fn eight_graph_mode(tag: EightTag) -> CatalogEntry {
    let (raw_re, lambda, label): (TrigExpression, f64, String) = match tag {
        EightTag::Ground => (TrigExpression::constant(1.0, 2), 0.0, "eight phi_0".into()),
        EightTag::Odd(k) => {
            let om = (2 * k + 1) as i64; // ω = (2k+1)/2
            let mut e = TrigExpression::sin(2, 0, om, 1.0);
            e = e.add(&TrigExpression::sin(2, 1, om, -1.0));
            (e, (om as f64 / 2.0).powi(2), format!("eight phi_{{{k},o}}"))
        }
        EightTag::Even(k, j) => {
            assert!(k >= 1 && (1..=3).contains(&j));
            let om = 2 * k as i64; // ω = k
            let e = match j {
                1 => TrigExpression::cos(2, 0, om, 1.0)
                    .add(&TrigExpression::cos(2, 1, om, 1.0)),
                2 => TrigExpression::sin(2, 0, om, 1.0),
                _ => TrigExpression::sin(2, 1, om, 1.0),
            };
            (e, (k * k) as f64, format!("eight phi_{{{k},e,{j}}}"))
        }
    };
    normalize_graph_entry(raw_re, lambda, label, Family::EightGraph(tag), &eight_graph())
}

/// Build a three-branch mode (same conventions as [`eight_graph_mode`]).
pub fn three_branch_mode(tag: ThreeBranchTag) -> CatalogEntry {
    let (raw_re, lambda, label): (TrigExpression, f64, String) = match tag {
        ThreeBranchTag::Ground => {
            (TrigExpression::constant(1.0, 3), 0.0, "three-branch phi_0".into())
        }
        ThreeBranchTag::Level(k, j) => {
            assert!(k >= 1 && (1..=3).contains(&j));
            let om = k as i64; // ω = k/2
            let e = match j {
                1 => TrigExpression::cos(3, 0, om, 1.0)
                    .add(&TrigExpression::cos(3, 1, om, 1.0))
                    .add(&TrigExpression::cos(3, 2, om, 1.0)),
                2 => TrigExpression::sin(3, 0, om, -1.0)
                    .add(&TrigExpression::sin(3, 1, om, 1.0)),
                _ => TrigExpression::sin(3, 0, om, -1.0)
                    .add(&TrigExpression::sin(3, 2, om, 1.0)),
            };
            (e, (k as f64 / 2.0).powi(2), format!("three-branch phi_{{{k},{j}}}"))
        }
    };
    normalize_graph_entry(raw_re, lambda, label, Family::ThreeBranch(tag), &three_branch_graph())
}

fn normalize_graph_entry(
    raw: TrigExpression,
    lambda: f64,
    label: String,
    family: Family,
    domain: &MetricDomain,
) -> CatalogEntry {
    let lengths = domain.edge_lengths();
    let norm = trig_inner_product(&raw, &raw, &lengths).sqrt();
    let re = raw.scale(1.0 / norm);
    let im = TrigExpression::zero(re.num_edges());
    CatalogEntry { family, lambda, label, trig: Some((re, im)), norm_const: 1.0 / norm }
}

/// A complex combination `Σ c_j · entry_j` of same-eigenvalue 1-D entries
/// (used to probe eigenspaces); returns exact `(re, im)` expressions.
pub fn combine_trig_entries(
    entries: &[&CatalogEntry],
    coeffs: &[Complex64],
) -> (TrigExpression, TrigExpression) {
    assert_eq!(entries.len(), coeffs.len());
    let ne = entries[0]
        .trig
        .as_ref()
        .expect("combination requires trig data")
        .0
        .num_edges();
    let mut re = TrigExpression::zero(ne);
    let mut im = TrigExpression::zero(ne);
    for (e, c) in entries.iter().zip(coeffs) {
        let (er, ei) = e.trig.as_ref().expect("trig data");
        // (er + i ei)(cr + i ci) = (er·cr − ei·ci) + i(er·ci + ei·cr)
        re = re.add(&er.scale(c.re)).sub(&ei.scale(c.im));
        im = im.add(&er.scale(c.im)).add(&ei.scale(c.re));
    }
    (re, im)
}
