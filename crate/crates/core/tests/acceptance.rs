//! One line per acceptance criterion, then a single verdict.

mod common;

use std::time::Instant;

use safecurrent::experiments::{boundary_sweep, nonlinear_compare, random_sweep};
use safecurrent::{
    lqr_gain, synthesize_safe_gain, ControllerKind, ExperimentConfig, LqrWeights, PlantKind,
};

struct Verdicts(Vec<(u8, bool)>);

impl Verdicts {
    fn record(&mut self, id: u8, name: &str, pass: bool, detail: String) {
        println!("criterion {id} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push((id, pass));
    }
}

fn within_pct(value: f64, target: f64, pct: f64) -> bool {
    (value - target).abs() <= pct / 100.0 * target.abs()
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

#[test]
fn acceptance() {
    let inv = common::table1();
    let mut v = Verdicts(Vec::new());

    let start = Instant::now();
    let lqr = lqr_gain(&inv.linear, &LqrWeights::for_params(&inv.params)).unwrap();
    let x_star = inv.linear_reference(inv.current_limit()).unwrap().x_star;
    let safe = synthesize_safe_gain(&inv.linear, &x_star).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let [l0, l1] = lqr.gain.entries();
    let [s0, s1] = safe.gain.entries();
    let pass = (round4(l0) - 0.0009).abs() <= 5e-5
        && (round4(l1) - 0.0099).abs() <= 5e-5
        && (s0 + 0.0111).abs() <= 1e-3
        && (s1 - 0.0111).abs() <= 1e-3
        && elapsed < 1.0;
    v.record(
        1,
        "gains",
        pass,
        format!("K_lqr=[{l0:.6}, {l1:.6}] K_safe=[{s0:.6}, {s1:.6}] in {elapsed:.3} s"),
    );

    let suite = common::suite(&inv);
    let cfg = ExperimentConfig::for_inverter(&inv);
    let boundary = boundary_sweep(&inv, &suite, &cfg, None).unwrap();
    let agg = |r: &safecurrent::ExperimentReport, k| r.aggregate(k, PlantKind::Linear).unwrap().clone();
    let (b_lqr, b_safe, b_cbf) = (
        agg(&boundary, ControllerKind::Lqr),
        agg(&boundary, ControllerKind::SafeK),
        agg(&boundary, ControllerKind::Cbf),
    );
    v.record(
        2,
        "boundary mean costs",
        within_pct(b_safe.mean_cost, 82.22, 2.0)
            && within_pct(b_cbf.mean_cost, 59.16, 2.0)
            && within_pct(b_lqr.mean_cost, 58.57, 2.0),
        format!(
            "K={:.3} (82.22) CBF={:.3} (59.16) LQR={:.3} (58.57)",
            b_safe.mean_cost, b_cbf.mean_cost, b_lqr.mean_cost
        ),
    );

    let random = random_sweep(&inv, &suite, &cfg, None).unwrap();
    let (r_lqr, r_safe, r_cbf) = (
        agg(&random, ControllerKind::Lqr),
        agg(&random, ControllerKind::SafeK),
        agg(&random, ControllerKind::Cbf),
    );
    v.record(
        3,
        "unsafe counts",
        b_lqr.unsafe_count == 100
            && b_cbf.unsafe_count == 0
            && b_safe.unsafe_count == 0
            && r_lqr.unsafe_count > 0
            && r_cbf.unsafe_count == 0
            && r_safe.unsafe_count == 0,
        format!(
            "boundary LQR/CBF/K={}/{}/{} random(n={}, seed={}) LQR/CBF/K={}/{}/{}",
            b_lqr.unsafe_count,
            b_cbf.unsafe_count,
            b_safe.unsafe_count,
            cfg.n,
            cfg.seed,
            r_lqr.unsafe_count,
            r_cbf.unsafe_count,
            r_safe.unsafe_count
        ),
    );

    let lqr_costs: Vec<f64> = random.records_for(ControllerKind::Lqr, PlantKind::Linear).map(|r| r.cost).collect();
    let cbf_costs: Vec<f64> = random.records_for(ControllerKind::Cbf, PlantKind::Linear).map(|r| r.cost).collect();
    let worst = lqr_costs
        .iter()
        .zip(&cbf_costs)
        .map(|(l, c)| l - c)
        .fold(f64::NEG_INFINITY, f64::max);
    v.record(
        4,
        "CBF cost never below LQR",
        lqr_costs.len() == cbf_costs.len() && worst <= 1e-9,
        format!("max(cost_lqr - cost_cbf)={worst:.3e} over {} cases", cbf_costs.len()),
    );

    let nl = nonlinear_compare(&inv, &suite, &cfg, None).unwrap();
    let nl_over = nl.aggregate(ControllerKind::Cbf, PlantKind::Nonlinear).unwrap().max_overshoot;
    let lin_over = nl.aggregate(ControllerKind::Cbf, PlantKind::Linear).unwrap().max_overshoot;
    v.record(
        5,
        "nonlinear overshoot",
        nl_over > 0.0 && nl_over <= 0.005 && lin_over <= 1e-4,
        format!("nonlinear {:.4}% of I_max (≤ 0.5%), linear {lin_over:.2e}", 100.0 * nl_over),
    );

    let start = Instant::now();
    let counts = [
        common::eigen_inequality_violations(10_000, 1),
        common::certificate_failures(100, 2),
        common::filter_oracle_mismatches(10_000, 4),
        common::safe_action_infeasible(100_000, 5),
    ];
    let rk4 = common::rk4_halving_error();
    let elapsed = start.elapsed().as_secs_f64();
    v.record(
        6,
        "property suites",
        counts.iter().all(|&c| c == 0) && rk4 <= 1e-8 && elapsed < 10.0,
        format!("violations {counts:?}, rk4 halving {rk4:.2e} A, {elapsed:.2} s"),
    );

    let lin = inv.linear_reference(inv.current_limit()).unwrap().x_star;
    let nonlin = inv.nonlinear_reference(inv.current_limit()).unwrap().x_star;
    v.record(
        7,
        "references",
        (lin[0] - 3.56).abs() <= 0.01
            && (lin[1] - 3.51).abs() <= 0.01
            && (nonlin[0] - 3.42).abs() <= 0.01
            && (nonlin[1] - 3.64).abs() <= 0.01,
        format!(
            "linear ({:.4}, {:.4}) nonlinear ({:.4}, {:.4})",
            lin[0], lin[1], nonlin[0], nonlin[1]
        ),
    );

    let failed: Vec<u8> = v.0.iter().filter(|(_, p)| !p).map(|(id, _)| *id).collect();
    println!("acceptance: {}/{} passed", v.0.len() - failed.len(), v.0.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
