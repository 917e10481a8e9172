//! Randomised oracle sweeps shared by the property tests and the acceptance target.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use safecurrent::controllers::{check_eigen_inequality, orthonormal_basis_margin, synthesize_safe_gain};
use safecurrent::safety_filter::FilterCoefficients;
use safecurrent::{
    closed_form_filter, feedback_law, filter_coefficients, simulate, ControllerKind, ControllerSuite,
    Inverter, LinearPlant, Mat2, PlantParams, SimConfig, Vec2,
};

pub fn table1() -> Inverter {
    Inverter::new(PlantParams::default()).unwrap()
}

pub fn suite(inv: &Inverter) -> ControllerSuite {
    ControllerSuite::synthesize(inv, &SimConfig::for_params(&inv.params), 1000.0).unwrap()
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn rotation(theta: f64) -> Mat2 {
    Mat2::new(theta.cos(), -theta.sin(), theta.sin(), theta.cos())
}

fn unit(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

/// Number of eigen-inequality instances on which the inequality fails or a valid
/// instance is rejected.
pub fn eigen_inequality_violations(n: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut bad = 0;
    for _ in 0..n {
        let lambda = rng.random_range(0.01..100.0);
        let w = rng.random_range(-50.0..50.0);
        let s = lambda + 4.0 * w * w / lambda + rng.random_range(0.0..50.0);
        // rows are (ŷ, ŷ⊥) coordinates: Mᵀŷ = λŷ
        let local = Mat2::new(lambda, 0.0, 2.0 * w, s);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let r = rotation(theta);
        let m = r * local * r.transpose();
        let y = unit(theta) * rng.random_range(0.0..10.0);
        let z = unit(rng.random_range(0.0..std::f64::consts::TAU))
            * (y.norm() + rng.random_range(0.0..10.0));
        match check_eigen_inequality(&m, &y, &z) {
            Ok(true) => {}
            _ => bad += 1,
        }
    }
    bad
}

/// Random `(A, B, x*)` with `A + Aᵀ ≺ 0` and `x*` a steady state; counts
/// plants for which no certified gain is produced.
pub fn certificate_failures(n: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut bad = 0;
    for _ in 0..n {
        let r = rotation(rng.random_range(0.0..std::f64::consts::TAU));
        let s = r
            * Mat2::new(-rng.random_range(0.1..1000.0), 0.0, 0.0, -rng.random_range(0.1..1000.0))
            * r.transpose();
        let w = rng.random_range(-1000.0..1000.0);
        let a = s + Mat2::new(0.0, w, -w, 0.0);
        let b = unit(rng.random_range(0.0..std::f64::consts::TAU)) * rng.random_range(0.1..1e5);
        let plant = LinearPlant::from_matrices(a, b);
        let u_star = rng.random_range(0.01..1.0);
        let x_star = -(a.try_inverse().unwrap() * b) * u_star;
        match synthesize_safe_gain(&plant, &x_star) {
            Ok(cert) if cert.verify(&plant, &x_star) && cert.lambda < 0.0 => {}
            _ => bad += 1,
        }
    }
    bad
}

/// Instances with `‖ζ‖ ≥ ‖γ‖` whose basis margin is negative.
pub fn basis_margin_violations(n: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut bad = 0;
    for _ in 0..n {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let w1 = unit(theta);
        let w2 = unit(theta + std::f64::consts::FRAC_PI_2);
        let gamma = unit(rng.random_range(0.0..std::f64::consts::TAU)) * rng.random_range(0.0..10.0);
        let zeta = unit(rng.random_range(0.0..std::f64::consts::TAU))
            * (gamma.norm() + rng.random_range(0.0..10.0));
        if orthonormal_basis_margin(&w1, &w2, &zeta, &gamma) < -1e-12 * zeta.norm_squared().max(1.0) {
            bad += 1;
        }
    }
    bad
}

/// Feasible input closest to `u_nom` on a uniform grid spanning `u_nom`
/// and every finite constraint breakpoint. Falls back to the barrier alone
/// when no grid point meets both constraints.
fn grid_projection(u_nom: f64, c: &FilterCoefficients, points: usize) -> (f64, f64) {
    let mut lo = u_nom;
    let mut hi = u_nom;
    for (a, b) in [(c.a_cbf, c.b_cbf), (c.a_clf, c.b_clf)] {
        if a != 0.0 {
            lo = lo.min(b / a);
            hi = hi.max(b / a);
        }
    }
    let (lo, hi) = (lo - 1.0, hi + 1.0);
    let step = (hi - lo) / (points - 1) as f64;
    let scan = |ok: &dyn Fn(f64) -> bool| {
        (0..points)
            .map(|i| lo + i as f64 * step)
            .filter(|&u| ok(u))
            .min_by(|a, b| (a - u_nom).abs().total_cmp(&(b - u_nom).abs()))
    };
    let both = |u: f64| c.a_cbf * u >= c.b_cbf && c.a_clf * u <= c.b_clf;
    let cbf = |u: f64| c.a_cbf * u >= c.b_cbf;
    let u = scan(&both).or_else(|| scan(&cbf)).unwrap_or(u_nom);
    (u, step)
}

/// Disagreements between the closed-form filter and the grid oracle,
/// beyond one grid step.
pub fn filter_oracle_mismatches(n: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut bad = 0;
    for _ in 0..n {
        let c = FilterCoefficients {
            a_cbf: rng.random_range(-2.0..2.0),
            b_cbf: rng.random_range(-5.0..5.0),
            a_clf: rng.random_range(-2.0..2.0),
            b_clf: rng.random_range(-5.0..5.0),
        };
        let u_nom = rng.random_range(-5.0..5.0);
        let (oracle, step) = grid_projection(u_nom, &c, 20_001);
        if (oracle - closed_form_filter(u_nom, &c).u_bar).abs() > step {
            bad += 1;
        }
    }
    bad
}

/// Random states in the safe disk whose safe-linear action falls outside the
/// filter interval or whose filter step is relaxed.
pub fn safe_action_infeasible(n: usize, seed: u64) -> usize {
    let inv = table1();
    let suite = suite(&inv);
    let reference = inv.linear_reference(inv.current_limit()).unwrap();
    let mut rng = rng(seed);
    let mut bad = 0;
    for _ in 0..n {
        let r = inv.current_limit() * rng.random::<f64>().sqrt();
        let x = unit(rng.random_range(0.0..std::f64::consts::TAU)) * r;
        let c = filter_coefficients(&x, &reference.x_star, &inv.linear, &suite.barrier);
        let u = feedback_law(&suite.safe.gain, &reference, &x);
        let inside = c.cbf_satisfied(u, 1e-9) && c.clf_satisfied(u, 1e-9);
        let step = closed_form_filter(u, &c);
        if !inside || step.infeasible_relaxed {
            bad += 1;
        }
    }
    bad
}

/// Largest final-state change when the step is halved, over a few runs.
pub fn rk4_halving_error() -> f64 {
    let inv = table1();
    let suite = suite(&inv);
    let reference = inv.linear_reference(inv.current_limit()).unwrap();
    let coarse = SimConfig::for_params(&inv.params);
    let fine = SimConfig {
        dt: coarse.dt / 2.0,
        ..coarse
    };
    let mut worst: f64 = 0.0;
    for x0 in [Vec2::new(0.0, 0.0), Vec2::new(-3.0, -4.0), Vec2::new(2.0, -1.0)] {
        for kind in ControllerKind::ALL {
            let law = suite.law(kind);
            let a = simulate(&inv, &law, x0, &reference, &coarse).unwrap();
            let b = simulate(&inv, &law, x0, &reference, &fine).unwrap();
            worst = worst.max((a.final_state() - b.final_state()).norm());
        }
    }
    worst
}
