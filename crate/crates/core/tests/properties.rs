//! Invariants of the exact solver and the heuristic on random small car parks.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use vcopt::heuristic::{self, allocate_demand, Allocation, AllocationState};
use vcopt::optimizer::{solve, Budget, Problem, SolveResult, OPTIMALITY_GAP};
use vcopt::power::Assignment;
use vcopt::topo::Interface;
use vcopt::{Demand, NodeId, Scenario, SplitLimit, Topology, TrafficMode};

fn exact(t: &Topology, p: &Problem) -> SolveResult {
    solve(t, p, Budget::default()).unwrap()
}

fn with(p: &Problem, scenario: Scenario, splits: SplitLimit, mode: TrafficMode) -> Problem {
    Problem::new(p.demands.clone(), scenario, splits, mode)
}

/// `a` is no worse than `b` up to the optimality gap; infeasible counts as +inf.
fn no_worse(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y * (1.0 + 2.0 * OPTIMALITY_GAP),
    }
}

/// Every destination commodity of every plan leaves the source and arrives at
/// its destination with the exact mode traffic, and is conserved elsewhere.
fn assert_conservation(t: &Topology, p: &Problem, a: &Assignment, skip: &[usize]) {
    for (k, plan) in a.plans.iter().enumerate() {
        if skip.contains(&k) {
            continue;
        }
        let dem = &p.demands[k];
        for (&d, w) in &plan.placements {
            let want = p.mode.traffic_to(dem, *w);
            let flows = plan.flows.get(&d).cloned().unwrap_or_default();
            let mut net: BTreeMap<NodeId, f64> = BTreeMap::new();
            for (&arc, &f) in &flows {
                let l = t.arc(arc);
                *net.entry(l.from).or_default() += f;
                *net.entry(l.to).or_default() -= f;
            }
            let tol = 1e-9 * dem.traffic_bps;
            for n in t.node_ids() {
                let expected = if n == dem.source {
                    want
                } else if n == d {
                    -want
                } else {
                    0.0
                };
                let got = net.get(&n).copied().unwrap_or(0.0);
                assert!(
                    (got - expected).abs() <= tol,
                    "demand {k} to {}: node {} net outflow {got} expected {expected}",
                    t.node(d).id,
                    t.node(n).id
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn combined_scenario_dominates(seed in any::<u64>()) {
        let inst = common::small_instance(seed);
        let (t, p) = (&inst.topology, &inst.problem);
        let tp = |s| exact(t, &with(p, s, p.splits, p.mode)).tp();
        let vec = tp(Scenario::VEC);
        for s in [Scenario::V, Scenario::VE, Scenario::C] {
            prop_assert!(no_worse(vec, tp(s)), "VEC {:?} vs {s} {:?}", vec, tp(s));
        }
    }

    #[test]
    fn proportional_traffic_never_costs_more(seed in any::<u64>()) {
        let inst = common::small_instance(seed);
        let (t, p) = (&inst.topology, &inst.problem);
        let ft = exact(t, &with(p, p.scenario, p.splits, TrafficMode::Ft)).tp();
        let pt = exact(t, &with(p, p.scenario, p.splits, TrafficMode::Pt)).tp();
        prop_assert!(no_worse(pt, ft), "PT {:?} FT {:?}", pt, ft);
    }

    #[test]
    fn looser_split_limits_never_cost_more(seed in any::<u64>()) {
        let inst = common::small_instance(seed);
        let (t, p) = (&inst.topology, &inst.problem);
        let limits = [SplitLimit::AtMost(1), SplitLimit::AtMost(2), SplitLimit::AtMost(3), SplitLimit::Unlimited];
        let tps: Vec<Option<f64>> = limits.iter().map(|&s| exact(t, &with(p, p.scenario, s, p.mode)).tp()).collect();
        for w in tps.windows(2) {
            prop_assert!(no_worse(w[1], w[0]), "{:?}", tps);
        }
    }

    #[test]
    fn flows_are_conserved(seed in any::<u64>()) {
        let inst = common::small_instance(seed);
        let (t, p) = (&inst.topology, &inst.problem);
        let r = exact(t, p);
        if let Some(a) = &r.assignment {
            assert_conservation(t, p, a, &[]);
        }
        let h = heuristic::run(t, p).unwrap();
        assert_conservation(t, p, &h.assignment, &h.blocked);
    }

    #[test]
    fn heuristic_never_beats_the_optimum(seed in any::<u64>()) {
        let inst = common::small_instance(seed);
        let (t, p) = (&inst.topology, &inst.problem);
        let h = heuristic::run(t, p).unwrap();
        prop_assert!(h.check(t, p).is_feasible(), "{}", h.check(t, p));
        for k in &h.blocked {
            prop_assert!(h.assignment.plans[*k].is_empty());
        }
        if h.all_served() {
            let r = exact(t, p);
            let opt = r.tp();
            prop_assert!(opt.is_some(), "heuristic served an instance the solver finds infeasible");
            prop_assert!(h.power.tp >= opt.unwrap() * (1.0 - OPTIMALITY_GAP), "{} < {:?}", h.power.tp, opt);
            for plan in &h.assignment.plans {
                prop_assert!(p.splits.allows(plan.splits()));
            }
        }
    }

    #[test]
    fn residuals_account_for_every_allocation(seed in any::<u64>()) {
        let inst = common::small_instance(seed);
        let (t, p) = (&inst.topology, &inst.problem);
        let mut st = AllocationState::new(t, p.demands.len());
        let fresh = st.clone();
        let mut trace = Vec::new();
        for (k, d) in p.demands.iter().enumerate() {
            allocate_demand(t, &mut st, k, d, p.scenario, p.splits, p.mode, &mut trace);
        }
        let a = Assignment { plans: st.plans.clone() };
        let used = a.node_mips(t);
        for n in t.node_ids() {
            let i = n.index();
            if !fresh.residual_proc[i].is_finite() {
                continue;
            }
            prop_assert!(st.residual_proc[i] >= -1e-9);
            prop_assert!((st.residual_proc[i] + used[i] - fresh.residual_proc[i]).abs() <= 1e-6);
        }
        let flows = a.arc_flows(t);
        let mut iface_used: BTreeMap<(NodeId, Interface), f64> = BTreeMap::new();
        for arc in t.arc_ids() {
            let l = t.arc(arc);
            for n in [l.from, l.to] {
                if let Some(i) = t.interface(n, l.medium) {
                    *iface_used.entry((n, i)).or_default() += flows[arc.index()];
                }
            }
        }
        for (key, &cap) in &fresh.residual_iface {
            let left = st.residual_iface[key];
            prop_assert!(left >= -1e-6 * cap.max(1.0));
            let used = iface_used.get(key).copied().unwrap_or(0.0);
            prop_assert!((left + used - cap).abs() <= 1e-6 * cap.max(1.0));
        }
    }

    #[test]
    fn blocked_demand_leaves_no_footprint(seed in any::<u64>(), gbps in 1.0f64..3.0) {
        let inst = common::small_instance(seed);
        let (t, p) = (&inst.topology, &inst.problem);
        let mut st = AllocationState::new(t, p.demands.len() + 1);
        let mut trace = Vec::new();
        for (k, d) in p.demands.iter().enumerate() {
            allocate_demand(t, &mut st, k, d, p.scenario, p.splits, p.mode, &mut trace);
        }
        let before = st.clone();
        // More traffic than every radio of the source can carry together.
        let huge = Demand::new(p.demands[0].source, gbps * 1e9, 1000.0).unwrap();
        let k = p.demands.len();
        let out = allocate_demand(t, &mut st, k, &huge, p.scenario, p.splits, p.mode, &mut trace);
        prop_assert_eq!(out, Allocation::Blocked);
        let bits = |s: &AllocationState| {
            (
                s.residual_proc.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                s.residual_iface.iter().map(|(k, x)| (*k, x.to_bits())).collect::<Vec<_>>(),
            )
        };
        prop_assert_eq!(bits(&st), bits(&before));
        prop_assert!(st == before);
    }

    #[test]
    fn heuristic_is_deterministic(seed in any::<u64>()) {
        let inst = common::small_instance(seed);
        let (t, p) = (&inst.topology, &inst.problem);
        let a = heuristic::run(t, p).unwrap();
        let b = heuristic::run(t, p).unwrap();
        prop_assert_eq!(a.assignment, b.assignment);
        prop_assert_eq!(a.trace, b.trace);
        prop_assert_eq!(a.power.tp.to_bits(), b.power.tp.to_bits());
    }
}
