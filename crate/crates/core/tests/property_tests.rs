//! Randomized invariants: exact trig algebra against pointwise sampling,
//! unitarity of phase application, closure of the stabilization gate,
//! and schedule concatenation.

use isospec_core::domain::{discretize_nodes, Grid, MetricDomain};
use isospec_core::funcspace::{apply_phase, stabilizes_domain, trig_mul, TrigExpression, WaveFunction};
use isospec_core::saturation::circle_generators;
use isospec_core::synth::{ControlSchedule, Segment};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn circle_grid(n: usize) -> Arc<Grid> {
    Arc::new(discretize_nodes(&MetricDomain::Circle { length: TAU }, n).expect("grid"))
}

/// A random circle trig expression: a handful of cos/sin terms with
/// integer frequencies (half-integer frequencies fail the circle's
/// periodicity gate, so integer terms keep every sample a stabilizer).
fn arb_trig() -> impl Strategy<Value = TrigExpression> {
    prop::collection::vec((0u8..=1, 0i64..=6, -2.0f64..2.0), 1..5).prop_map(|terms| {
        let mut expr = TrigExpression::zero(1);
        for (kind, k, amp) in terms {
            let t = if kind == 0 {
                TrigExpression::cos(1, 0, 2 * k, amp)
            } else {
                TrigExpression::sin(1, 0, 2 * k, amp)
            };
            expr = expr.add(&t);
        }
        expr
    })
}

fn eval_on(expr: &TrigExpression, grid: &Arc<Grid>) -> Vec<f64> {
    expr.evaluate(grid).data.concat()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trig_mul_commutes_and_matches_pointwise(a in arb_trig(), b in arb_trig()) {
        let grid = circle_grid(128);
        let ab = trig_mul(&a, &b);
        let ba = trig_mul(&b, &a);
        let va = eval_on(&a, &grid);
        let vb = eval_on(&b, &grid);
        let vab = eval_on(&ab, &grid);
        let vba = eval_on(&ba, &grid);
        for i in 0..va.len() {
            prop_assert!((vab[i] - va[i] * vb[i]).abs() <= 1e-10);
            prop_assert!((vab[i] - vba[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn add_and_scale_are_linear_pointwise(a in arb_trig(), b in arb_trig(), s in -3.0f64..3.0) {
        let grid = circle_grid(64);
        let lhs = eval_on(&a.add(&b).scale(s), &grid);
        let va = eval_on(&a, &grid);
        let vb = eval_on(&b, &grid);
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - s * (va[i] + vb[i])).abs() <= 1e-10);
        }
    }

    #[test]
    fn derivative_matches_finite_differences(a in arb_trig()) {
        let grid = circle_grid(1024);
        let d = eval_on(&a.derivative(), &grid);
        let v = eval_on(&a, &grid);
        let h = grid.edges[0].h;
        let n = v.len();
        for i in 0..n {
            let fd = (v[(i + 1) % n] - v[(i + n - 1) % n]) / (2.0 * h);
            // Central differences are O(h²) with a |f‴| constant ≤ amp·k³.
            prop_assert!((d[i] - fd).abs() <= 1e-2, "node {i}: {} vs {}", d[i], fd);
        }
    }

    #[test]
    fn phase_application_preserves_the_norm(phase in arb_trig(), k in -3i64..=3) {
        let grid = circle_grid(128);
        let mut psi = WaveFunction::from_fn(&grid, |_, x| Complex64::from_polar(1.0, k as f64 * x));
        psi.normalize();
        let th = phase.evaluate(&grid);
        let out = apply_phase(&psi, &th).unwrap();
        prop_assert!((out.norm() - 1.0).abs() <= 1e-12);
        // Moduli are untouched pointwise.
        for (ob, pb) in out.data.iter().zip(&psi.data) {
            for (o, p) in ob.iter().zip(pb) {
                prop_assert!((o.norm() - p.norm()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn stabilizers_are_closed_under_combination(a in arb_trig(), b in arb_trig(), s in -3.0f64..3.0) {
        let domain = MetricDomain::Circle { length: TAU };
        prop_assert!(stabilizes_domain(&a, &domain));
        prop_assert!(stabilizes_domain(&a.add(&b), &domain));
        prop_assert!(stabilizes_domain(&a.scale(s), &domain));
    }

    #[test]
    fn generator_combos_stabilize_the_eight_graph(
        c in prop::collection::vec(-2.0f64..2.0, 5)
    ) {
        // Q₁…Q₅ pass the vertex conditions, and so does any combination;
        // Q₆ is the deliberate exception (vertex-discontinuous) and
        // breaks any combination it enters with nonzero weight.
        let gens = isospec_core::saturation::eight_generators();
        let mut expr = TrigExpression::zero(2);
        for (q, &ci) in gens.generators.iter().take(5).zip(&c) {
            expr = expr.add(&q.scale(ci));
        }
        prop_assert!(stabilizes_domain(&expr, &gens.domain));
        let with_q6 = expr.add(&gens.generators[5].scale(1.0));
        prop_assert!(!stabilizes_domain(&with_q6, &gens.domain));
    }

    #[test]
    fn schedule_concat_is_associative(
        na in 0usize..4, nb in 0usize..4, nc in 0usize..4,
        d in 1e-4f64..1e-2,
    ) {
        let mk = |n: usize, off: f64| ControlSchedule {
            segments: (0..n)
                .map(|i| Segment::Free { duration: d + off * i as f64 })
                .collect(),
        };
        let (a, b, c) = (mk(na, 1e-5), mk(nb, 2e-5), mk(nc, 3e-5));
        let left = a.clone().concat(b.clone()).concat(c.clone());
        let right = a.clone().concat(b.clone().concat(c.clone()));
        prop_assert_eq!(
            serde_json::to_string(&left).unwrap(),
            serde_json::to_string(&right).unwrap()
        );
        prop_assert_eq!(left.segments.len(), na + nb + nc);
        let total = a.total_duration() + b.total_duration() + c.total_duration();
        prop_assert!((left.total_duration() - total).abs() <= 1e-12);
    }

    #[test]
    fn circle_generator_combos_round_trip_scaling(s in 0.1f64..4.0) {
        use isospec_core::saturation::{cert_combo, cert_scale};
        let gens = circle_generators();
        let c = cert_combo(&gens, &[0.5, -1.0, 2.0]);
        let back = cert_scale(&cert_scale(&c, s), 1.0 / s);
        let grid = circle_grid(64);
        let va = eval_on(&c.expr, &grid);
        let vb = eval_on(&back.expr, &grid);
        for i in 0..va.len() {
            prop_assert!((va[i] - vb[i]).abs() <= 1e-10);
        }
    }
}
