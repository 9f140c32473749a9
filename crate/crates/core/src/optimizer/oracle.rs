//! Exhaustive reference solver for small instances.
//!
//! Enumerates destination subsets per demand and, for each, every on/off
//! pattern of the networking devices that could carry traffic. With selections
//! and device states fixed the remaining problem is a linear program (placement
//! plus capacitated multi-sink flow), solved with an independent simplex code.
//! Lower bounds from cheap relaxations skip configurations that cannot win.

use std::collections::{BTreeMap, BTreeSet};

use minilp::{ComparisonOp, OptimizationDirection};

use super::decode::decompose;
use super::exact::{SolveResult, SolveStatus};
use super::model::{Problem, MIN_PLACEMENT_MIPS};
use crate::error::{Error, Result};
use crate::power::{arc_cost, evaluate, processing_efficiency, Assignment};
use crate::topo::{ArcId, Interface, NodeId, NodeKind, Topology};
use crate::TrafficMode;

pub const ORACLE_MAX_CANDIDATES: usize = 8;
pub const ORACLE_MAX_DEMANDS: usize = 2;

/// A device whose idle power is paid once it carries any traffic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Gate {
    Net(NodeId),
    Onu(NodeId),
}

fn gate_of(t: &Topology, n: NodeId, a: ArcId) -> Option<Gate> {
    match t.node(n).kind {
        NodeKind::CloudServer => None,
        NodeKind::EdgeNode if !t.arc(a).medium.is_wireless() => Some(Gate::Onu(n)),
        _ => Some(Gate::Net(n)),
    }
}

fn gate_idle(t: &Topology, g: Gate) -> f64 {
    match g {
        Gate::Net(n) => {
            let p = &t.node(n).params;
            p.pue * p.net_idle_charged
        }
        Gate::Onu(n) => {
            let p = &t.node(n).params;
            p.pue * p.onu_idle.unwrap_or(0.0)
        }
    }
}

struct LpOutcome {
    cost: f64,
    placements: Vec<BTreeMap<NodeId, f64>>,
    /// Per demand, arc flows in Mb/s.
    flows: Vec<BTreeMap<ArcId, f64>>,
}

struct Oracle<'a> {
    t: &'a Topology,
    p: &'a Problem,
    /// Objective weight of each arc, W per Mb/s.
    arc_w: Vec<f64>,
    /// Processing weight of each node, W per MIPS.
    proc_w: Vec<f64>,
    lps: u64,
}

impl Oracle<'_> {
    /// Best placement and routing for fixed destination sets using only arcs
    /// whose gated endpoints are open. `None` if infeasible.
    fn solve_lp(&mut self, dests: &[Vec<NodeId>], open: &BTreeSet<Gate>) -> Option<LpOutcome> {
        self.lps += 1;
        let t = self.t;
        let mut lp = minilp::Problem::new(OptimizationDirection::Minimize);
        let mut om: Vec<Vec<(NodeId, minilp::Variable)>> = Vec::new();
        let mut x: Vec<Vec<(ArcId, minilp::Variable)>> = Vec::new();
        for (k, dem) in self.p.demands.iter().enumerate() {
            let vars = dests[k]
                .iter()
                .map(|&d| {
                    let hi = dem.mips.min(t.node(d).params.proc_capacity);
                    (
                        d,
                        lp.add_var(self.proc_w[d.index()], (MIN_PLACEMENT_MIPS, hi)),
                    )
                })
                .collect();
            om.push(vars);
            let s = dem.source;
            let usable = |a: ArcId| {
                let arc = t.arc(a);
                arc.to != s
                    && t.node(arc.from).kind != NodeKind::CloudServer
                    && [arc.from, arc.to]
                        .into_iter()
                        .all(|n| gate_of(t, n, a).is_none_or(|g| open.contains(&g)))
            };
            let arcs = t
                .arc_ids()
                .filter(|&a| usable(a))
                .map(|a| (a, lp.add_var(self.arc_w[a.index()], (0.0, f64::INFINITY))))
                .collect();
            x.push(arcs);
        }

        for (k, dem) in self.p.demands.iter().enumerate() {
            let v = dem.traffic_bps / 1e6;
            // service
            lp.add_constraint(
                om[k].iter().map(|&(_, var)| (var, 1.0)).collect::<Vec<_>>(),
                ComparisonOp::Eq,
                dem.mips,
            );
            // conservation: outflow - inflow - supply + demand = 0
            for n in t.node_ids() {
                let mut terms: Vec<(minilp::Variable, f64)> = Vec::new();
                let mut rhs = 0.0;
                for &(a, var) in &x[k] {
                    let arc = t.arc(a);
                    if arc.from == n {
                        terms.push((var, 1.0));
                    }
                    if arc.to == n {
                        terms.push((var, -1.0));
                    }
                }
                let sinks: Vec<(NodeId, minilp::Variable)> = if n == dem.source {
                    om[k].clone()
                } else {
                    om[k].iter().copied().filter(|&(d, _)| d == n).collect()
                };
                let sign = if n == dem.source { 1.0 } else { -1.0 };
                for (_, var) in sinks {
                    match self.p.mode {
                        TrafficMode::Ft => rhs += sign * v,
                        TrafficMode::Pt => terms.push((var, -sign * v / dem.mips)),
                    }
                }
                if terms.is_empty() {
                    if rhs.abs() > 0.0 {
                        return None;
                    }
                    continue;
                }
                lp.add_constraint(terms, ComparisonOp::Eq, rhs);
            }
        }

        // shared processing capacity
        let mut by_node: BTreeMap<NodeId, Vec<(minilp::Variable, f64)>> = BTreeMap::new();
        for vars in &om {
            for &(d, var) in vars {
                by_node.entry(d).or_default().push((var, 1.0));
            }
        }
        for (d, terms) in by_node {
            if terms.len() > 1 {
                lp.add_constraint(terms, ComparisonOp::Le, t.node(d).params.proc_capacity);
            }
        }

        // interface rates, both directions counted
        let mut iface: BTreeMap<(NodeId, Interface), Vec<(minilp::Variable, f64)>> =
            BTreeMap::new();
        for arcs in &x {
            for &(a, var) in arcs {
                let arc = t.arc(a);
                for n in [arc.from, arc.to] {
                    if let Some(i) = t.interface(n, arc.medium) {
                        iface.entry((n, i)).or_default().push((var, 1.0));
                    }
                }
            }
        }
        for ((n, i), terms) in iface {
            let cap = t.interface_capacity(n, i);
            if cap.is_finite() {
                lp.add_constraint(terms, ComparisonOp::Le, cap / 1e6);
            }
        }

        let sol = lp.solve().ok()?;
        Some(LpOutcome {
            cost: sol.objective(),
            placements: om
                .iter()
                .map(|vars| vars.iter().map(|&(d, var)| (d, sol[var])).collect())
                .collect(),
            flows: x
                .iter()
                .map(|arcs| arcs.iter().map(|&(a, var)| (a, sol[var])).collect())
                .collect(),
        })
    }
}

/// Index subsets of `0..n` with 1 to `max` members.
fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n))
        .filter(|m| (m.count_ones() as usize) <= max)
        .map(|m| (0..n).filter(|&i| m & (1 << i) != 0).collect())
        .collect()
}

/// Exhaustive optimum of `problem`, for at most [`ORACLE_MAX_DEMANDS`] demands
/// with at most [`ORACLE_MAX_CANDIDATES`] admissible destinations each.
pub fn brute_force_oracle(t: &Topology, problem: &Problem) -> Result<SolveResult> {
    problem.validate(t)?;
    let k_count = problem.demands.len();
    if k_count > ORACLE_MAX_DEMANDS {
        return Err(Error::OracleEnvelope(format!(
            "{k_count} demands (max {ORACLE_MAX_DEMANDS})"
        )));
    }
    let candidates: Vec<Vec<NodeId>> = (0..k_count).map(|k| problem.candidates(t, k)).collect();
    for c in &candidates {
        if c.len() > ORACLE_MAX_CANDIDATES {
            return Err(Error::OracleEnvelope(format!(
                "{} candidate destinations (max {ORACLE_MAX_CANDIDATES})",
                c.len()
            )));
        }
    }

    let mut o = Oracle {
        t,
        p: problem,
        arc_w: t.arc_ids().map(|a| arc_cost(t, a) * 1e6).collect(),
        proc_w: t
            .node_ids()
            .map(|n| {
                let node = t.node(n);
                if node.params.proc_capacity > 0.0 {
                    node.params.pue * processing_efficiency(node).unwrap_or(0.0)
                } else {
                    0.0
                }
            })
            .collect(),
        lps: 0,
    };
    let server = t.cloud_server();
    let wired: Vec<NodeId> = t
        .node_ids()
        .filter(|&n| t.node(n).kind.is_wired_tier())
        .collect();

    // Destination sets per demand that can hold the demand at all.
    let per_demand: Vec<Vec<Vec<NodeId>>> = (0..k_count)
        .map(|k| {
            let dem = &problem.demands[k];
            let c = &candidates[k];
            subsets(c.len(), problem.splits.bound(c.len()))
                .into_iter()
                .map(|ix| ix.into_iter().map(|i| c[i]).collect::<Vec<_>>())
                .filter(|ds| {
                    let room: f64 = ds
                        .iter()
                        .map(|&d| dem.mips.min(t.node(d).params.proc_capacity))
                        .sum();
                    room >= dem.mips && ds.len() as f64 * MIN_PLACEMENT_MIPS <= dem.mips
                })
                .collect()
        })
        .collect();
    let mut combos: Vec<Vec<Vec<NodeId>>> = vec![Vec::new()];
    for options in &per_demand {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |ds| {
                    let mut next = prefix.clone();
                    next.push(ds.clone());
                    next
                })
            })
            .collect();
    }

    struct Scored {
        dests: Vec<Vec<NodeId>>,
        forced: BTreeSet<Gate>,
        fixed: f64,
        bound: f64,
    }
    let mut scored: Vec<Scored> = combos
        .into_iter()
        .map(|dests| {
            let used: BTreeSet<NodeId> = dests.iter().flatten().copied().collect();
            let mut forced = BTreeSet::new();
            for (k, ds) in dests.iter().enumerate() {
                forced.insert(Gate::Net(problem.demands[k].source));
                for &d in ds {
                    if t.node(d).kind == NodeKind::Vehicle {
                        forced.insert(Gate::Net(d));
                    }
                }
            }
            if used.contains(&server) {
                forced.extend(wired.iter().map(|&n| Gate::Net(n)));
            }
            let proc_idle: f64 = used
                .iter()
                .map(|&d| t.node(d).params.pue * t.node(d).params.proc_idle)
                .sum();
            let fixed = proc_idle + forced.iter().map(|&g| gate_idle(t, g)).sum::<f64>();
            let proc_floor: f64 = dests
                .iter()
                .zip(&problem.demands)
                .map(|(ds, dem)| {
                    let w: Vec<f64> = ds.iter().map(|d| o.proc_w[d.index()]).collect();
                    let cheapest = w.iter().copied().fold(f64::INFINITY, f64::min);
                    w.iter().sum::<f64>() * MIN_PLACEMENT_MIPS
                        + (dem.mips - ds.len() as f64 * MIN_PLACEMENT_MIPS) * cheapest
                })
                .sum();
            Scored {
                dests,
                forced,
                fixed,
                bound: fixed + proc_floor,
            }
        })
        .collect();
    scored.sort_by(|a, b| a.bound.total_cmp(&b.bound));

    let mut best: Option<(f64, Vec<Vec<NodeId>>, LpOutcome)> = None;
    let best_cost = |b: &Option<(f64, _, _)>| b.as_ref().map_or(f64::INFINITY, |b| b.0);
    for combo in scored {
        if combo.bound >= best_cost(&best) {
            break;
        }
        let uses_cloud = combo.dests.iter().flatten().any(|&d| d == server);
        let mut optional: Vec<Gate> = Vec::new();
        for n in t.node_ids() {
            let kind = t.node(n).kind;
            let mut gates = match kind {
                NodeKind::Vehicle => vec![Gate::Net(n)],
                NodeKind::EdgeNode => vec![Gate::Net(n), Gate::Onu(n)],
                // Without a cloud destination only the OLT can usefully relay;
                // flow further up the chain could only come back down.
                NodeKind::Olt if !uses_cloud => vec![Gate::Net(n)],
                _ => vec![],
            };
            gates.retain(|g| !combo.forced.contains(g));
            optional.extend(gates);
        }
        let mut open: BTreeSet<Gate> = combo.forced.clone();
        open.extend(optional.iter().copied());
        let Some(relaxed) = o.solve_lp(&combo.dests, &open) else {
            continue;
        };
        if combo.fixed + relaxed.cost >= best_cost(&best) {
            continue;
        }

        let idle: Vec<f64> = optional.iter().map(|&g| gate_idle(t, g)).collect();
        let mut masks: Vec<(f64, u32)> = (0u32..(1 << optional.len()))
            .map(|m| {
                let cost: f64 = (0..optional.len())
                    .filter(|&i| m & (1 << i) != 0)
                    .map(|i| idle[i])
                    .sum();
                (cost, m)
            })
            .collect();
        masks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (gate_cost, mask) in masks {
            if combo.fixed + gate_cost + relaxed.cost >= best_cost(&best) {
                break;
            }
            let mut open = combo.forced.clone();
            open.extend(
                (0..optional.len())
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| optional[i]),
            );
            let Some(out) = o.solve_lp(&combo.dests, &open) else {
                continue;
            };
            let total = combo.fixed + gate_cost + out.cost;
            if total < best_cost(&best) {
                best = Some((total, combo.dests.clone(), out));
            }
        }
    }

    let Some((objective, _, lp)) = best else {
        return Ok(SolveResult::infeasible(o.lps));
    };
    let mut assignment = Assignment::with_demands(k_count);
    for (k, dem) in problem.demands.iter().enumerate() {
        let plan = &mut assignment.plans[k];
        plan.placements = lp.placements[k].clone();
        let sinks: Vec<(NodeId, f64)> = lp.placements[k]
            .iter()
            .map(|(&d, &w)| (d, problem.mode.traffic_to(dem, w) / 1e6))
            .collect();
        let paths = decompose(t, dem.source, lp.flows[k].clone(), &sinks);
        for (&d, &w) in &lp.placements[k] {
            let exact = problem.mode.traffic_to(dem, w);
            let got: f64 = paths.iter().filter(|p| p.0 == d).map(|p| p.2).sum();
            for (_, arcs, amount) in paths.iter().filter(|p| p.0 == d) {
                plan.add_route_flow(d, arcs, amount / got * exact);
            }
        }
    }
    let power = evaluate(t, &assignment)?;
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        assignment: Some(assignment),
        objective,
        solver_objective: objective,
        lower_bound: objective,
        nodes: o.lps,
        power: Some(power),
        values: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{Demand, Scenario, SplitLimit};
    use crate::topo::car_park;

    fn small() -> Topology {
        car_park(&[(0.0, 0.0), (4.0, 0.0), (0.0, 6.0)], &[(-20.0, -20.0)]).unwrap()
    }

    #[test]
    fn subset_listing() {
        assert_eq!(subsets(3, 3).len(), 7);
        assert_eq!(subsets(3, 1), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn single_destination_equals_direct_evaluation() {
        let t = small();
        let s = t.lookup("v01").unwrap();
        let p = Problem::new(
            vec![Demand::from_mbps(s, 2.0).unwrap()],
            Scenario::C,
            SplitLimit::Unlimited,
            TrafficMode::Ft,
        );
        let r = brute_force_oracle(&t, &p).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let tp = r.power.unwrap().tp;
        assert!(
            (tp - r.objective).abs() <= 1e-9 * tp,
            "{tp} vs {}",
            r.objective
        );
    }

    #[test]
    fn oversized_demand_is_infeasible() {
        let t = small();
        let s = t.lookup("v01").unwrap();
        let p = Problem::new(
            vec![Demand::new(s, 1e6, 1e9).unwrap()],
            Scenario::V,
            SplitLimit::Unlimited,
            TrafficMode::Ft,
        );
        assert_eq!(
            brute_force_oracle(&t, &p).unwrap().status,
            SolveStatus::Infeasible
        );
    }

    #[test]
    fn envelope_is_enforced() {
        let t = crate::topo::canonical_parking_lot();
        let s = t.lookup("v01").unwrap();
        let p = Problem::new(
            vec![Demand::from_mbps(s, 2.0).unwrap()],
            Scenario::VEC,
            SplitLimit::Unlimited,
            TrafficMode::Ft,
        );
        assert!(matches!(
            brute_force_oracle(&t, &p),
            Err(Error::OracleEnvelope(_))
        ));
    }
}
