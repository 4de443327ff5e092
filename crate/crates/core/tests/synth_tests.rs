//! Schedule synthesis: pulses for combos, cone-term conjugation segments,
//! and end-to-end phase/transition experiments on the circle.

use isospec_core::domain::{discretize_nodes, Grid, MetricDomain};
use isospec_core::funcspace::{RealFunction, WaveFunction};
use isospec_core::propagator::PropagatorContext;
use isospec_core::saturation::{
    cert_combo, cert_cone, cert_validate, circle_generators, derive_circle, CertNode, CertPair,
    CircleMode, ConeTerm,
};
use isospec_core::synth::{
    compile, pulse_for_phase, run_phase_experiment, run_transition_experiment, ControlSchedule,
    Segment, SynthError, SynthesisParams,
};
use num_complex::Complex64;
use std::sync::Arc;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn circle_grid(n: usize) -> Arc<Grid> {
    Arc::new(discretize_nodes(&MetricDomain::Circle { length: TAU }, n).expect("grid"))
}

fn circle_ctx(nodes: usize, modes: usize) -> PropagatorContext {
    let domain = MetricDomain::Circle { length: TAU };
    let grid = circle_grid(nodes);
    PropagatorContext::analytic(&domain, &grid, modes).expect("context")
}

/// Hand-built depth-1 certificate for `½cos2x = ½·1 − (∂ₓ cos x)²`
/// over `{1, cos x, sin x}`.
fn half_cos2x_pair() -> CertPair {
    let gens = circle_generators();
    let base = cert_combo(&gens, &[0.5, 0.0, 0.0]);
    let pos = cert_cone(
        base,
        vec![ConeTerm {
            alpha: 1.0,
            psi_pos: Arc::new(cert_combo(&gens, &[0.0, 1.0, 0.0])),
            psi_neg: Arc::new(cert_combo(&gens, &[0.0, -1.0, 0.0])),
        }],
    );
    // −½cos2x = −3/2·1 + (1 − (∂ₓ sin x)²) + (1 − (∂ₓ cos x)²) … simpler:
    // −½cos2x = ½·1 − (∂ₓ sin x)², since (∂ₓ sin x)² = cos²x = ½ + ½cos2x.
    let neg = cert_cone(
        cert_combo(&gens, &[0.5, 0.0, 0.0]),
        vec![ConeTerm {
            alpha: 1.0,
            psi_pos: Arc::new(cert_combo(&gens, &[0.0, 0.0, 1.0])),
            psi_neg: Arc::new(cert_combo(&gens, &[0.0, 0.0, -1.0])),
        }],
    );
    CertPair { pos, neg }
}

#[test]
fn hand_built_cone_certificate_validates() {
    let gens = circle_generators();
    let pair = half_cos2x_pair();
    for cert in [&pair.pos, &pair.neg] {
        let report = cert_validate(cert, &gens, &gens.domain);
        assert!(report.valid, "{:?}", report.first_failure);
        assert_eq!(cert.depth, 1);
    }
    // The cached expression really is ±½cos2x.
    let grid = circle_grid(256);
    let vals = pair.pos.expr.evaluate(&grid);
    for (i, &v) in vals.data[0].iter().enumerate() {
        let x = i as f64 * grid.edges[0].h;
        assert!((v - 0.5 * (2.0 * x).cos()).abs() <= 1e-12);
    }
}

#[test]
fn pulse_for_phase_negates_the_coefficients() {
    let gens = circle_generators();
    let cert = cert_combo(&gens, &[0.3, -1.2, 0.7]);
    let schedule = pulse_for_phase(&cert, 1e-3).unwrap();
    assert_eq!(schedule.segments.len(), 1);
    let Segment::Pulse { duration, u } = &schedule.segments[0] else {
        panic!("expected a pulse segment");
    };
    assert_eq!(*duration, 1e-3);
    assert_eq!(u, &vec![-0.3, 1.2, -0.7]);
}

#[test]
fn pulse_for_phase_rejects_cone_nodes() {
    let pair = half_cos2x_pair();
    assert!(matches!(
        pulse_for_phase(&pair.pos, 1e-3),
        Err(SynthError::NotInGeneratorSpan)
    ));
}

#[test]
fn combo_compiles_to_a_single_pulse() {
    let gens = circle_generators();
    let cert = cert_combo(&gens, &[1.0, 0.5, 0.0]);
    let schedule = compile(&cert, &SynthesisParams::default());
    assert_eq!(schedule.segments.len(), 1);
    assert!(matches!(schedule.segments[0], Segment::Pulse { .. }));
}

#[test]
fn zero_combo_compiles_to_a_free_flight() {
    let gens = circle_generators();
    let cert = cert_combo(&gens, &[0.0, 0.0, 0.0]);
    let schedule = compile(&cert, &SynthesisParams::default());
    assert_eq!(schedule.segments.len(), 1);
    assert!(matches!(schedule.segments[0], Segment::Free { .. }));
}

#[test]
fn one_sided_cone_term_emits_four_segments() {
    // base pulse + (phase, free flight, phase) for the single cone term,
    // with the amplitude cap lifted so conjugation phases stay pulses.
    let pair = half_cos2x_pair();
    let params = SynthesisParams {
        symmetric_conjugation: false,
        max_pulse_amplitude: f64::INFINITY,
        ..SynthesisParams::default()
    };
    let schedule = compile(&pair.pos, &params);
    assert_eq!(schedule.segments.len(), 4);
    assert!(matches!(schedule.segments[0], Segment::Pulse { .. }));
    assert!(matches!(schedule.segments[1], Segment::Pulse { .. }));
    assert!(matches!(schedule.segments[2], Segment::Free { .. }));
    assert!(matches!(schedule.segments[3], Segment::Pulse { .. }));
}

#[test]
fn symmetric_cone_term_emits_six_segments_with_phase_caps() {
    // Default amplitude cap 8 < γ^{−1/2} ≈ 31.6: conjugation phases are
    // emitted as exact Phase segments.
    let pair = half_cos2x_pair();
    let schedule = compile(&pair.pos, &SynthesisParams::default());
    assert_eq!(schedule.segments.len(), 6);
    assert!(matches!(schedule.segments[0], Segment::Pulse { .. }));
    for i in [1, 3, 5] {
        assert!(matches!(schedule.segments[i], Segment::Phase { .. }), "segment {i}");
    }
    for i in [2, 4] {
        assert!(matches!(schedule.segments[i], Segment::Free { .. }), "segment {i}");
    }
}

#[test]
fn phase_segments_carry_no_duration() {
    let pair = half_cos2x_pair();
    let params = SynthesisParams::default();
    let schedule = compile(&pair.pos, &params);
    // One pulse of δ plus two free half-flights of γ/2.
    let expected = params.delta + params.gamma;
    assert!((schedule.total_duration() - expected).abs() <= 1e-15);
}

#[test]
fn concat_is_associative_and_duration_additive() {
    let gens = circle_generators();
    let a = compile(&cert_combo(&gens, &[1.0, 0.0, 0.0]), &SynthesisParams::default());
    let b = compile(&half_cos2x_pair().pos, &SynthesisParams::default());
    let c = compile(&cert_combo(&gens, &[0.0, 2.0, 0.0]), &SynthesisParams::default());
    let left = a.clone().concat(b.clone()).concat(c.clone());
    let right = a.clone().concat(b.clone().concat(c.clone()));
    assert_eq!(
        serde_json::to_string(&left).unwrap(),
        serde_json::to_string(&right).unwrap()
    );
    let total = a.total_duration() + b.total_duration() + c.total_duration();
    assert!((left.total_duration() - total).abs() <= 1e-15);
}

#[test]
fn compilation_is_deterministic() {
    let pair = derive_circle(CircleMode::Cos(4)).unwrap();
    let params = SynthesisParams::default();
    let s1 = serde_json::to_string(&compile(&pair.pos, &params)).unwrap();
    let s2 = serde_json::to_string(&compile(&pair.pos, &params)).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn zero_phase_experiment_is_exact_on_the_ground_state() {
    let gens = circle_generators();
    let ctx = circle_ctx(256, 32);
    let mut psi = WaveFunction::from_fn(&ctx.grid, |_, _| Complex64::new(1.0, 0.0));
    psi.normalize();
    let phi = RealFunction::zero(&ctx.grid);
    let cert = cert_combo(&gens, &[0.0, 0.0, 0.0]);
    let report =
        run_phase_experiment(&ctx, &psi, &phi, &cert, &SynthesisParams::default(), &gens).unwrap();
    assert!(report.error <= 1e-9, "error {}", report.error);
    assert!(report.cert_residual <= 1e-12);
    assert_eq!(report.n_segments, 1);
}

#[test]
fn combo_phase_experiment_realizes_cos_x() {
    let gens = circle_generators();
    let ctx = circle_ctx(256, 64);
    let mut psi = WaveFunction::from_fn(&ctx.grid, |_, x| Complex64::from_polar(1.0, x));
    psi.normalize();
    let phi = RealFunction::from_fn(&ctx.grid, |_, x| x.cos());
    let cert = cert_combo(&gens, &[0.0, 1.0, 0.0]);
    let report =
        run_phase_experiment(&ctx, &psi, &phi, &cert, &SynthesisParams::default(), &gens).unwrap();
    assert!(report.cert_residual <= 1e-12);
    assert!(report.error < 0.05, "error {}", report.error);
}

#[test]
fn cone_phase_experiment_realizes_half_cos_2x() {
    let gens = circle_generators();
    // Conjugation phases have amplitude γ^{−1/2} ≈ 31.6 and scatter the
    // state across ~45 harmonics; keep enough modes to capture it.
    let ctx = circle_ctx(512, 301);
    let mut psi = WaveFunction::from_fn(&ctx.grid, |_, _| Complex64::new(1.0, 0.0));
    psi.normalize();
    let phi = RealFunction::from_fn(&ctx.grid, |_, x| 0.5 * (2.0 * x).cos());
    let pair = half_cos2x_pair();
    // Exact Phase segments for everything (δ → 0 idealization) so only
    // the conjugation error γ remains.
    let params = SynthesisParams { max_pulse_amplitude: 0.0, ..SynthesisParams::default() };
    let report = run_phase_experiment(&ctx, &psi, &phi, &pair.pos, &params, &gens).unwrap();
    assert!(report.cert_residual <= 1e-12);
    assert!(report.error < 0.05, "error {}", report.error);
}

#[test]
fn cone_error_shrinks_with_gamma() {
    let gens = circle_generators();
    let ctx = circle_ctx(512, 301);
    let mut psi = WaveFunction::from_fn(&ctx.grid, |_, _| Complex64::new(1.0, 0.0));
    psi.normalize();
    let phi = RealFunction::from_fn(&ctx.grid, |_, x| 0.5 * (2.0 * x).cos());
    let pair = half_cos2x_pair();
    let mut errs = Vec::new();
    for gamma in [1e-2, 1e-3] {
        let params = SynthesisParams {
            gamma,
            max_pulse_amplitude: 0.0,
            ..SynthesisParams::default()
        };
        let report = run_phase_experiment(&ctx, &psi, &phi, &pair.pos, &params, &gens).unwrap();
        errs.push(report.error);
    }
    assert!(errs[1] < errs[0], "errors {errs:?}");
}

#[test]
fn transition_to_itself_has_unit_fidelity() {
    let gens = circle_generators();
    let ctx = circle_ctx(256, 64);
    let mut psi = WaveFunction::from_fn(&ctx.grid, |_, x| Complex64::from_polar(1.0, x));
    psi.normalize();
    let basis: Vec<CertPair> = (1..=3)
        .flat_map(|k| {
            [derive_circle(CircleMode::Cos(k)).unwrap(), derive_circle(CircleMode::Sin(k)).unwrap()]
        })
        .collect();
    let params = SynthesisParams { max_pulse_amplitude: 0.0, ..SynthesisParams::default() };
    let report =
        run_transition_experiment(&ctx, &psi, &psi.clone(), &basis, &params, &gens).unwrap();
    assert!(report.fidelity >= 1.0 - 1e-6, "fidelity {}", report.fidelity);
    assert!(report.phase_residual <= 1e-6);
    assert!(report.modulus_deviation <= 1e-12);
}

#[test]
fn transition_between_conjugate_plane_waves() {
    // e^{ix} → e^{−ix}: Δθ = −2x winds; the finite trig basis leaves a
    // Gibbs residual but still transfers most of the population.
    let gens = circle_generators();
    let ctx = circle_ctx(1024, 601);
    let mut source = WaveFunction::from_fn(&ctx.grid, |_, x| Complex64::from_polar(1.0, x));
    source.normalize();
    let mut dest = WaveFunction::from_fn(&ctx.grid, |_, x| Complex64::from_polar(1.0, -x));
    dest.normalize();
    let basis: Vec<CertPair> = (1..=12)
        .flat_map(|k| {
            [derive_circle(CircleMode::Cos(k)).unwrap(), derive_circle(CircleMode::Sin(k)).unwrap()]
        })
        .collect();
    let params = SynthesisParams {
        delta: 1e-4,
        gamma: 1e-4,
        max_pulse_amplitude: 0.0,
        ..SynthesisParams::default()
    };
    let report =
        run_transition_experiment(&ctx, &source, &dest, &basis, &params, &gens).unwrap();
    assert!(report.fidelity > 0.7, "fidelity {}", report.fidelity);
    assert!(report.phase_residual < 0.6, "phase residual {}", report.phase_residual);
}

#[test]
fn transition_rejects_mismatched_moduli() {
    let gens = circle_generators();
    let ctx = circle_ctx(256, 32);
    let mut source = WaveFunction::from_fn(&ctx.grid, |_, _| Complex64::new(1.0, 0.0));
    source.normalize();
    let mut dest = WaveFunction::from_fn(&ctx.grid, |_, x| Complex64::new(x.cos(), 0.0));
    dest.normalize();
    assert!(matches!(
        run_transition_experiment(&ctx, &source, &dest, &[], &SynthesisParams::default(), &gens),
        Err(SynthError::ModulusMismatch(_))
    ));
}

#[test]
fn schedules_round_trip_through_json() {
    let pair = derive_circle(CircleMode::Sin(3)).unwrap();
    let schedule = compile(&pair.pos, &SynthesisParams::default());
    let json = serde_json::to_string(&schedule).unwrap();
    let back: ControlSchedule = serde_json::from_str(&json).unwrap();
    assert_eq!(json, serde_json::to_string(&back).unwrap());
    assert_eq!(schedule.segments.len(), back.segments.len());
}

#[test]
fn cert_node_shapes_survive_compile_inputs() {
    // compile() never mutates its input; the certificate stays valid.
    let gens = circle_generators();
    let pair = half_cos2x_pair();
    let _ = compile(&pair.pos, &SynthesisParams::default());
    assert!(matches!(pair.pos.node, CertNode::ConeSum { .. }));
    let report = cert_validate(&pair.pos, &gens, &gens.domain);
    assert!(report.valid);
}
