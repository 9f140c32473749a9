//! Exported LP files are re-read by the HiGHS LP-file reader, an independent
//! parser, and must describe the same model with the same optimum.

mod common;

use common::reread;
use vcopt::optimizer::{build_model, export_lp, solve_exact, Budget, FlowLayout, Problem};
use vcopt::topo::canonical_parking_lot;
use vcopt::{Demand, Scenario, SplitLimit, TrafficMode};

fn check(mbps: f64, scenario: Scenario, splits: SplitLimit, mode: TrafficMode, layout: FlowLayout) {
    let t = canonical_parking_lot();
    let s = t.lookup("v01").unwrap();
    let p = Problem::new(
        vec![Demand::from_mbps(s, mbps).unwrap()],
        scenario,
        splits,
        mode,
    );
    let m = build_model(&t, &p, layout).unwrap();
    let r = reread(&export_lp(&m));
    assert_eq!(r.cols, m.vars.len());
    assert_eq!(r.rows, m.rows.len());
    let direct = solve_exact(&m, Budget::default()).unwrap();
    assert!(
        (r.objective - direct.solver_objective).abs() <= 1e-6 * direct.solver_objective,
        "{mbps} Mb/s {scenario}: file {} vs direct {}",
        r.objective,
        direct.solver_objective
    );
}

#[test]
fn exported_models_reread_with_the_same_optimum() {
    check(
        2.0,
        Scenario::VEC,
        SplitLimit::Unlimited,
        TrafficMode::Ft,
        FlowLayout::PerSource,
    );
    check(
        5.5,
        Scenario::VEC,
        SplitLimit::AtMost(1),
        TrafficMode::Ft,
        FlowLayout::PerSource,
    );
    check(
        8.0,
        Scenario::VE,
        SplitLimit::Unlimited,
        TrafficMode::Pt,
        FlowLayout::PerSource,
    );
    check(
        4.0,
        Scenario::V,
        SplitLimit::AtMost(3),
        TrafficMode::Ft,
        FlowLayout::PerCommodity,
    );
}
