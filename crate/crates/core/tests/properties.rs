mod common;

use proptest::prelude::*;

use safecurrent::safety_filter::FilterCoefficients;
use safecurrent::{closed_form_filter, Vec2};

#[test]
fn eigen_inequality_sweep() {
    assert_eq!(common::eigen_inequality_violations(10_000, 1), 0);
}

#[test]
fn safe_gain_certificate_sweep() {
    assert_eq!(common::certificate_failures(100, 2), 0);
}

#[test]
fn basis_margin_sweep() {
    assert_eq!(common::basis_margin_violations(10_000, 3), 0);
}

#[test]
fn filter_matches_grid_oracle() {
    assert_eq!(common::filter_oracle_mismatches(10_000, 4), 0);
}

#[test]
fn safe_linear_action_lies_in_filter_interval() {
    assert_eq!(common::safe_action_infeasible(100_000, 5), 0);
}

#[test]
fn rk4_converges_under_step_halving() {
    let err = common::rk4_halving_error();
    assert!(err <= 1e-8, "final-state change {err:e}");
}

fn coefficients() -> impl Strategy<Value = FilterCoefficients> {
    (-3.0..3.0f64, -5.0..5.0f64, -3.0..3.0f64, -5.0..5.0f64).prop_map(|(a_cbf, b_cbf, a_clf, b_clf)| {
        FilterCoefficients {
            a_cbf,
            b_cbf,
            a_clf,
            b_clf,
        }
    })
}

proptest! {
    #[test]
    fn filter_is_idempotent(c in coefficients(), u in -10.0..10.0f64) {
        let once = closed_form_filter(u, &c);
        let twice = closed_form_filter(once.u_bar, &c);
        prop_assert!((twice.u_bar - once.u_bar).abs() <= 1e-12 * once.u_bar.abs().max(1.0));
    }

    #[test]
    fn filter_output_satisfies_barrier(c in coefficients(), u in -10.0..10.0f64) {
        prop_assume!(c.a_cbf != 0.0);
        let s = closed_form_filter(u, &c);
        prop_assert!(c.cbf_satisfied(s.u_bar, 1e-12));
        if !s.infeasible_relaxed {
            prop_assert!(c.clf_satisfied(s.u_bar, 1e-12));
        }
    }

    #[test]
    fn filter_is_minimal(c in coefficients(), u in -10.0..10.0f64, probe in -10.0..10.0f64) {
        let s = closed_form_filter(u, &c);
        prop_assume!(!s.infeasible_relaxed);
        let feasible = c.a_cbf * probe >= c.b_cbf && c.a_clf * probe <= c.b_clf;
        if feasible {
            prop_assert!((s.u_bar - u).abs() <= (probe - u).abs() + 1e-12);
        }
    }

    #[test]
    fn feasible_nominal_passes_unchanged(c in coefficients(), u in -10.0..10.0f64) {
        prop_assume!(c.a_cbf * u >= c.b_cbf && c.a_clf * u <= c.b_clf);
        let s = closed_form_filter(u, &c);
        prop_assert_eq!(s.u_bar, u);
        prop_assert!(!s.active);
    }

    #[test]
    fn barrier_is_symmetric_in_angle(r in 0.0..6.0f64, a in 0.0..6.3f64, b in 0.0..6.3f64) {
        let cfg = safecurrent::BarrierConfig::new(5.0, 1000.0).unwrap();
        let h1 = safecurrent::safety_filter::barrier_h(&(Vec2::new(a.cos(), a.sin()) * r), &cfg);
        let h2 = safecurrent::safety_filter::barrier_h(&(Vec2::new(b.cos(), b.sin()) * r), &cfg);
        prop_assert!((h1 - h2).abs() <= 1e-12);
    }
}
