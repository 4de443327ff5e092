//! Trigonometric algebra, L² structure, and the domain-stabilization gate.

use isospec_core::domain::{discretize_nodes, eight_graph, MetricDomain};
use isospec_core::funcspace::{
    apply_phase, inner_product, stabilizes_domain, trig_derivative, trig_grad_squared,
    trig_inner_product, trig_mul, RealFunction, TrigExpression, WaveFunction,
};
use num_complex::Complex64;
use std::sync::Arc;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn circle_grid(n: usize) -> Arc<isospec_core::domain::Grid> {
    Arc::new(discretize_nodes(&MetricDomain::Circle { length: TAU }, n).expect("grid"))
}

fn expi(grid: &Arc<isospec_core::domain::Grid>, k: f64) -> WaveFunction {
    WaveFunction::from_fn(grid, |_, x| Complex64::from_polar(1.0, k * x))
}

// --- inner products -------------------------------------------------------

#[test]
fn inner_product_of_constant_one() {
    let grid = circle_grid(256);
    let one = WaveFunction::from_fn(&grid, |_, _| Complex64::new(1.0, 0.0));
    let ip = inner_product(&one, &one).unwrap();
    assert!((ip.re - TAU).abs() < 1e-12 && ip.im.abs() < 1e-15);
}

#[test]
fn inner_product_of_plane_wave() {
    let grid = circle_grid(256);
    let f = expi(&grid, 1.0);
    let ip = inner_product(&f, &f).unwrap();
    assert!((ip.re - TAU).abs() < 1e-12);
}

#[test]
fn plane_waves_are_orthogonal() {
    let grid = circle_grid(256);
    let f = expi(&grid, 1.0);
    let g = expi(&grid, 2.0);
    let ip = inner_product(&f, &g).unwrap();
    assert!(ip.norm() <= 1e-12, "|<e^ix, e^2ix>| = {:.3e}", ip.norm());
}

// --- products and derivatives ---------------------------------------------

#[test]
fn cos_squared_is_half_plus_half_cos2x() {
    let c = TrigExpression::cos(1, 0, 2, 1.0);
    let p = trig_mul(&c, &c);
    let expected =
        TrigExpression::constant(0.5, 1).add(&TrigExpression::cos(1, 0, 4, 0.5));
    assert!(p.approx_eq(&expected, 1e-15), "got {}", p.to_canonical_string());
}

#[test]
fn cos2x_times_cosx() {
    let p = trig_mul(&TrigExpression::cos(1, 0, 4, 1.0), &TrigExpression::cos(1, 0, 2, 1.0));
    let expected =
        TrigExpression::cos(1, 0, 2, 0.5).add(&TrigExpression::cos(1, 0, 6, 0.5));
    assert!(p.approx_eq(&expected, 1e-15), "got {}", p.to_canonical_string());
}

#[test]
fn sin_half_x_squared() {
    let s = TrigExpression::sin(1, 0, 1, 1.0); // sin(x/2)
    let p = trig_mul(&s, &s);
    let expected =
        TrigExpression::constant(0.5, 1).add(&TrigExpression::cos(1, 0, 2, -0.5));
    assert!(p.approx_eq(&expected, 1e-15), "got {}", p.to_canonical_string());
    // Pointwise agreement on 1000 points.
    for i in 0..1000 {
        let x = TAU * i as f64 / 1000.0;
        let lhs = p.eval_edge(0, x);
        let rhs = (0.5 * x).sin().powi(2);
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn grad_squared_of_sin_x() {
    let g = trig_grad_squared(&TrigExpression::sin(1, 0, 2, 1.0));
    let expected =
        TrigExpression::constant(0.5, 1).add(&TrigExpression::cos(1, 0, 4, 0.5));
    assert!(g.approx_eq(&expected, 1e-15));
}

#[test]
fn grad_squared_of_cos_3x() {
    // (d/dx cos 3x)² = 9 sin²(3x) = 9/2 − 9/2 cos(6x)
    let g = trig_grad_squared(&TrigExpression::cos(1, 0, 6, 1.0));
    let expected =
        TrigExpression::constant(4.5, 1).add(&TrigExpression::cos(1, 0, 12, -4.5));
    assert!(g.approx_eq(&expected, 1e-12));
    for i in 0..1000 {
        let x = TAU * i as f64 / 1000.0;
        assert!((g.eval_edge(0, x) - 9.0 * (3.0 * x).sin().powi(2)).abs() < 1e-10);
    }
}

#[test]
fn grad_squared_of_constant_is_zero() {
    let g = trig_grad_squared(&TrigExpression::constant(3.0, 2));
    assert!(g.is_zero());
}

#[test]
fn derivative_of_sin_is_cos() {
    let d = trig_derivative(&TrigExpression::sin(1, 0, 2, 1.0));
    assert!(d.approx_eq(&TrigExpression::cos(1, 0, 2, 1.0), 1e-15));
    // Half-integer frequency: (sin(x/2))′ = ½cos(x/2), exactly.
    let d = trig_derivative(&TrigExpression::sin(1, 0, 1, 1.0));
    assert!(d.approx_eq(&TrigExpression::cos(1, 0, 1, 0.5), 1e-15));
}

#[test]
fn trig_inner_product_orthogonality() {
    let lengths = [TAU];
    let c1 = TrigExpression::cos(1, 0, 2, 1.0);
    let s1 = TrigExpression::sin(1, 0, 2, 1.0);
    assert!(trig_inner_product(&c1, &s1, &lengths).abs() < 1e-12);
    assert!((trig_inner_product(&c1, &c1, &lengths) - std::f64::consts::PI).abs() < 1e-12);
}

// --- stabilization gate ----------------------------------------------------

#[test]
fn q3_stabilizes_the_eight_graph() {
    // (sin x, 0): vanishes at both loop ends; loop derivative
    // cos 0 − cos 2π = 0.
    let q3 = TrigExpression::sin(2, 0, 2, 1.0);
    assert!(stabilizes_domain(&q3, &eight_graph()));
}

#[test]
fn constants_stabilize_everything() {
    let one2 = TrigExpression::constant(1.0, 2);
    assert!(stabilizes_domain(&one2, &eight_graph()));
    let one1 = TrigExpression::constant(1.0, 1);
    assert!(stabilizes_domain(&one1, &MetricDomain::Circle { length: TAU }));
}

#[test]
fn lone_half_wave_fails_the_gate() {
    // (sin(x/2), 0): both end values vanish, but the loop Kirchhoff sum
    // is ½cos 0 − ½cos π = 1 ≠ 0.
    let bad = TrigExpression::sin(2, 0, 1, 1.0);
    assert!(!stabilizes_domain(&bad, &eight_graph()));
}

#[test]
fn q6_fails_the_gate() {
    // (cos(x/2), cos(x/2)) has end values (1, −1) on each loop —
    // discontinuous at the eight vertex.
    let q6 = TrigExpression::cos(2, 0, 1, 1.0).add(&TrigExpression::cos(2, 1, 1, 1.0));
    assert!(!stabilizes_domain(&q6, &eight_graph()));
}

#[test]
fn stabilizing_sums_stabilize() {
    // Kirchhoff sums are linear: sums of stabilizing expressions stabilize.
    let g = eight_graph();
    let q2 = TrigExpression::cos(2, 0, 2, 1.0).add(&TrigExpression::cos(2, 1, 2, 1.0));
    let q3 = TrigExpression::sin(2, 0, 2, 1.0);
    assert!(stabilizes_domain(&q2, &g));
    assert!(stabilizes_domain(&q3, &g));
    assert!(stabilizes_domain(&q2.add(&q3), &g));
    assert!(stabilizes_domain(&q2.scale(-2.5), &g));
}

// --- sampling, modulus, phase ----------------------------------------------

#[test]
fn modulus_of_plane_wave_is_constant() {
    let grid = circle_grid(128);
    let f = expi(&grid, 3.0);
    let m = f.modulus();
    for &v in &m.data[0] {
        assert!((v - 1.0).abs() < 1e-14);
    }
}

#[test]
fn apply_zero_phase_is_identity() {
    let grid = circle_grid(128);
    let f = expi(&grid, 2.0);
    let theta = RealFunction::zero(&grid);
    let g = apply_phase(&f, &theta).unwrap();
    for (a, b) in f.data[0].iter().zip(&g.data[0]) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn apply_phase_preserves_modulus_and_norm() {
    let grid = circle_grid(256);
    let f = expi(&grid, 1.0);
    let theta = RealFunction::from_fn(&grid, |_, x| (3.0 * x).sin() + 0.7);
    let g = apply_phase(&f, &theta).unwrap();
    let (mf, mg) = (f.modulus(), g.modulus());
    let dev = mf.data[0]
        .iter()
        .zip(&mg.data[0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(dev <= 1e-14);
    assert!((f.norm() - g.norm()).abs() <= 1e-14);
}

#[test]
fn evaluate_matches_pointwise() {
    let grid = circle_grid(200);
    let p = TrigExpression::cos(1, 0, 4, 0.3).add(&TrigExpression::sin(1, 0, 2, -1.2));
    let f = p.evaluate(&grid);
    for (i, &x) in grid.edges[0].xs.iter().enumerate() {
        let exact = 0.3 * (2.0 * x).cos() - 1.2 * x.sin();
        assert!((f.data[0][i] - exact).abs() < 1e-13);
    }
}

#[test]
fn grid_mismatch_is_reported() {
    let f = expi(&circle_grid(128), 1.0);
    let g = expi(&circle_grid(256), 1.0);
    assert!(inner_product(&f, &g).is_err());
}
