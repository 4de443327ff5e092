//! The analytic eigenfunction catalog: closed forms, normalization, and
//! the torus/eight-graph combination identity.

use isospec_core::catalog::{
    combine_trig_entries, disk_mode, disk_real_modes, eight_graph_mode, hermite_mode,
    sphere_mode, three_branch_mode, torus_mode, CatalogEntry, EightTag, ThreeBranchTag,
};
use isospec_core::domain::discretize_nodes;
use isospec_core::specfun::{bessel_j, bessel_zero};
use isospec_core::spectral::eigen_residual;
use num_complex::Complex64;
use std::sync::Arc;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn sampled_norm(entry: &CatalogEntry, resolution: usize) -> f64 {
    let (samples, weights) = entry.sample(resolution);
    samples
        .iter()
        .zip(&weights)
        .map(|(z, &w)| z.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

// --- torus -----------------------------------------------------------------

#[test]
fn torus_mode_d1() {
    let e = torus_mode(1, &[2], &[1]);
    assert_eq!(e.lambda, 4.0);
    // Samples equal e^{2ix}/√(2π) on the canonical circle quadrature.
    let (samples, weights) = e.sample(512);
    let n = samples.len();
    let norm = 1.0 / TAU.sqrt();
    for (i, z) in samples.iter().enumerate() {
        let x = TAU * i as f64 / n as f64;
        let exact = Complex64::from_polar(norm, 2.0 * x);
        assert!((z - exact).norm() < 1e-12);
    }
    let total: f64 = weights.iter().sum();
    assert!((total - TAU).abs() < 1e-10);
}

#[test]
fn torus_mode_d2_mixed_signs() {
    let e = torus_mode(2, &[1, 1], &[1, -1]);
    assert_eq!(e.lambda, 2.0);
    assert!((sampled_norm(&e, 128) - 1.0).abs() < 1e-6);
}

#[test]
fn torus_zero_mode_is_constant() {
    let e = torus_mode(1, &[0], &[1]);
    assert_eq!(e.lambda, 0.0);
    let (samples, _) = e.sample(64);
    for z in &samples {
        assert!((z - samples[0]).norm() < 1e-15);
    }
}

// --- disk -------------------------------------------------------------------

#[test]
fn disk_pair_shares_modulus_pointwise() {
    let p = disk_mode(1, 1, 1);
    let m = disk_mode(1, 1, -1);
    let (sp, _) = p.sample(64);
    let (sm, _) = m.sample(64);
    assert!(sp.len() >= 10_000);
    for (a, b) in sp.iter().zip(&sm) {
        assert!((a.norm() - b.norm()).abs() <= 1e-12);
    }
}

#[test]
fn disk_mode_is_dirichlet_at_the_boundary() {
    // The radial factor vanishes at r = 1: J_1(j_{1,1}) = 0.
    let j11 = bessel_zero(1, 1).unwrap();
    assert!(bessel_j(1, j11).abs() < 1e-10);
    let e = disk_mode(1, 1, 1);
    assert_eq!(e.lambda, j11 * j11);
}

#[test]
fn disk_mode_is_normalized() {
    for (n, k) in [(1, 1), (2, 1), (1, 2), (3, 3)] {
        let e = disk_mode(n, k, 1);
        let nrm = sampled_norm(&e, 128);
        assert!((nrm - 1.0).abs() < 1e-6, "({n},{k}): ‖ψ‖ = {nrm}");
    }
}

#[test]
fn real_disk_modes_combine_into_the_complex_pair() {
    // (u + iv)/√2 = ψ⁺ pointwise.
    let (u, v) = disk_real_modes(1, 1);
    let p = disk_mode(1, 1, 1);
    let (su, _) = u.sample(64);
    let (sv, _) = v.sample(64);
    let (sp, _) = p.sample(64);
    for ((a, b), c) in su.iter().zip(&sv).zip(&sp) {
        let combo = (a + Complex64::new(0.0, 1.0) * b) / 2f64.sqrt();
        assert!((combo - c).norm() < 1e-12);
    }
}

// --- sphere and Hermite -------------------------------------------------------

#[test]
fn sphere_eigenvalues() {
    assert_eq!(sphere_mode(1, 0).lambda, 2.0);
    assert_eq!(sphere_mode(2, -1).lambda, 6.0);
    assert!((sampled_norm(&sphere_mode(2, 1), 256) - 1.0).abs() < 1e-6);
}

#[test]
fn hermite_eigenvalues() {
    assert_eq!(hermite_mode(&[0]).lambda, 1.0);
    assert_eq!(hermite_mode(&[3]).lambda, 7.0);
    // d = 2, α = (1,1): λ = 2|α| + d = 6.
    assert_eq!(hermite_mode(&[1, 1]).lambda, 6.0);
    assert!((sampled_norm(&hermite_mode(&[4]), 2048) - 1.0).abs() < 1e-6);
}

// --- graph families ------------------------------------------------------------

#[test]
fn eight_odd_zero_mode() {
    let e = eight_graph_mode(EightTag::Odd(0));
    assert_eq!(e.lambda, 0.25);
    let (re, im) = e.trig.as_ref().unwrap();
    assert!(im.is_zero());
    // (sin(x/2), −sin(x/2)) up to the recorded normalization.
    let raw = re.scale(1.0 / e.norm_const);
    for i in 0..50 {
        let x = TAU * i as f64 / 50.0;
        assert!((raw.eval_edge(0, x) - (0.5 * x).sin()).abs() < 1e-12);
        assert!((raw.eval_edge(1, x) + (0.5 * x).sin()).abs() < 1e-12);
    }
}

#[test]
fn eight_even_modes() {
    let e = eight_graph_mode(EightTag::Even(1, 2));
    assert_eq!(e.lambda, 1.0);
    let raw = e.trig.as_ref().unwrap().0.scale(1.0 / e.norm_const);
    for i in 0..50 {
        let x = TAU * i as f64 / 50.0;
        assert!((raw.eval_edge(0, x) - x.sin()).abs() < 1e-12);
        assert!(raw.eval_edge(1, x).abs() < 1e-15);
    }
}

#[test]
fn three_branch_level_one() {
    let e = three_branch_mode(ThreeBranchTag::Level(1, 1));
    assert_eq!(e.lambda, 0.25);
    let raw = e.trig.as_ref().unwrap().0.scale(1.0 / e.norm_const);
    for edge in 0..3 {
        for i in 0..20 {
            let x = TAU * i as f64 / 20.0;
            assert!((raw.eval_edge(edge, x) - (0.5 * x).cos()).abs() < 1e-12);
        }
    }
}

#[test]
fn graph_entries_are_normalized_with_small_residual() {
    let mut entries: Vec<CatalogEntry> = vec![eight_graph_mode(EightTag::Ground)];
    for k in 0..=4 {
        entries.push(eight_graph_mode(EightTag::Odd(k)));
    }
    for k in 1..=4 {
        for j in 1..=3 {
            entries.push(eight_graph_mode(EightTag::Even(k, j)));
        }
    }
    entries.push(three_branch_mode(ThreeBranchTag::Ground));
    for k in 1..=4 {
        for j in 1..=3 {
            entries.push(three_branch_mode(ThreeBranchTag::Level(k, j)));
        }
    }
    for e in &entries {
        let nrm = sampled_norm(e, 1024);
        assert!((nrm - 1.0).abs() < 1e-6, "{}: ‖φ‖ = {nrm}", e.label);
        let domain = e.domain().unwrap();
        let grid = Arc::new(discretize_nodes(&domain, 4096).unwrap());
        let wf = e.to_wavefunction(&grid);
        let r = eigen_residual(&wf, None, e.lambda);
        assert!(r <= 1e-4 * (1.0 + e.lambda), "{}: residual {r:.3e}", e.label);
    }
}

#[test]
fn combination_identity_reproduces_the_plane_wave() {
    // φ_{k,e,1} + iφ_{k,e,2} + iφ_{k,e,3} ∝ (e^{ikx}, e^{ikx}) exactly,
    // after undoing the unit-norm constants.
    for k in 1..=4usize {
        let e1 = eight_graph_mode(EightTag::Even(k, 1));
        let e2 = eight_graph_mode(EightTag::Even(k, 2));
        let e3 = eight_graph_mode(EightTag::Even(k, 3));
        let coeffs = [
            Complex64::new(1.0 / e1.norm_const, 0.0),
            Complex64::new(0.0, 1.0 / e2.norm_const),
            Complex64::new(0.0, 1.0 / e3.norm_const),
        ];
        let (re, im) = combine_trig_entries(&[&e1, &e2, &e3], &coeffs);
        for edge in 0..2 {
            for i in 0..100 {
                let x = TAU * i as f64 / 100.0;
                let got = Complex64::new(re.eval_edge(edge, x), im.eval_edge(edge, x));
                let want = Complex64::from_polar(1.0, k as f64 * x);
                assert!((got - want).norm() <= 1e-12, "k={k} edge={edge} x={x}");
            }
        }
    }
}
