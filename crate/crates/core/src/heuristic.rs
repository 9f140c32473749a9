//! Real-time sequential allocator.
//!
//! Demands are served one at a time in descending processing order. For each
//! demand the admissible destinations are scored, walked in order and packed,
//! with traffic routed over minimum-hop routes that still have capacity. A route
//! that does not fit loses its saturated link; after two passes over the list a
//! demand that is still not fully served is blocked and its partial allocation
//! is released.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::demand::{Demand, Scenario, SplitLimit, TrafficMode};
use crate::error::Result;
use crate::optimizer::model::{arc_allowed, Problem};
use crate::power::{
    arc_cost, check_feasibility, evaluate, processing_efficiency, Assignment, FeasibilityReport,
    Plan, PowerBreakdown, MIPS_TOL,
};
use crate::topo::all_min_hop_routes;
use crate::topo::{ArcId, Interface, NodeId, NodeKind, Route, Topology};

/// Passes over the candidate list before a demand is blocked.
pub const TRIALS: u8 = 2;
const ROUTE_ENUMERATION_CAP: usize = 512;

/// One entry of the sorted candidate list; all terms are PUE-weighted W.
///
/// The terms price serving the whole residual demand with `copies` nodes like
/// the destination: route power per copy (FT) or for the proportional traffic
/// (PT), processing of the residual volume, and the idle power each copy and
/// its route switch on.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateScore {
    pub destination: NodeId,
    /// Traffic-dependent power of the route to the destination.
    pub npower: f64,
    /// Load-dependent processing power of the share the destination would take.
    pub prpower: f64,
    /// Idle power newly switched on by using the destination and its route.
    pub idle: f64,
    /// `npower + prpower + idle`.
    pub score: f64,
    /// MIPS the destination would take.
    pub fill: f64,
    /// Nodes like the destination needed for the residual demand.
    pub copies: usize,
    /// Residual processing capacity, MIPS.
    pub capacity: f64,
}

/// A device whose idle power is paid once it is in use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Gate {
    Net(NodeId),
    Onu(NodeId),
    Proc(NodeId),
}

/// Residual resources and the allocation built so far.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationState {
    /// Residual processing capacity per node, MIPS.
    pub residual_proc: Vec<f64>,
    /// Residual rate per capped interface, bit/s (both directions share it).
    pub residual_iface: BTreeMap<(NodeId, Interface), f64>,
    /// Devices already paying idle power.
    active: BTreeSet<Gate>,
    /// Links taken out of the valid set for the demand in progress.
    pub removed: BTreeSet<ArcId>,
    /// Current pass over the candidate list, 1-based; 0 between demands.
    pub trial: u8,
    /// Committed plans, in demand order.
    pub plans: Vec<Plan>,
}

impl AllocationState {
    pub fn new(t: &Topology, demands: usize) -> AllocationState {
        let residual_iface = t
            .interfaces()
            .into_iter()
            .map(|(n, i)| ((n, i), t.interface_capacity(n, i)))
            .filter(|(_, c)| c.is_finite())
            .collect();
        AllocationState {
            residual_proc: t.nodes().iter().map(|n| n.params.proc_capacity).collect(),
            residual_iface,
            active: BTreeSet::new(),
            removed: BTreeSet::new(),
            trial: 0,
            plans: vec![Plan::default(); demands],
        }
    }

    fn gate(t: &Topology, n: NodeId, a: ArcId) -> Option<Gate> {
        match t.node(n).kind {
            NodeKind::CloudServer => None,
            NodeKind::EdgeNode if !t.arc(a).medium.is_wireless() => Some(Gate::Onu(n)),
            _ => Some(Gate::Net(n)),
        }
    }

    fn gate_idle(t: &Topology, g: Gate) -> f64 {
        let p = |n: NodeId| &t.node(n).params;
        match g {
            Gate::Net(n) => p(n).pue * p(n).net_idle_charged,
            Gate::Onu(n) => p(n).pue * p(n).onu_idle.unwrap_or(0.0),
            Gate::Proc(n) => p(n).pue * p(n).proc_idle,
        }
    }

    /// Idle power switched on by routing over `route` and processing at its end.
    fn new_idle(&self, t: &Topology, route: &Route) -> f64 {
        let mut gates = BTreeSet::from([Gate::Proc(route.target())]);
        for &a in &route.arcs {
            let arc = t.arc(a);
            gates.extend(
                [arc.from, arc.to]
                    .into_iter()
                    .filter_map(|n| Self::gate(t, n, a)),
            );
        }
        gates
            .into_iter()
            .filter(|g| !self.active.contains(g))
            .map(|g| Self::gate_idle(t, g))
            .sum()
    }

    /// First arc of `route` whose endpoint interfaces cannot take `bps` more.
    fn bottleneck(&self, t: &Topology, route: &Route, bps: f64) -> Option<ArcId> {
        route.arcs.iter().copied().find(|&a| {
            let arc = t.arc(a);
            [arc.from, arc.to].into_iter().any(|n| {
                t.interface(n, arc.medium)
                    .and_then(|i| self.residual_iface.get(&(n, i)))
                    .is_some_and(|&r| r < bps)
            })
        })
    }

    fn commit(
        &mut self,
        t: &Topology,
        k: usize,
        route: Option<&Route>,
        d: NodeId,
        mips: f64,
        bps: f64,
    ) {
        self.residual_proc[d.index()] -= mips;
        let plan = &mut self.plans[k];
        *plan.placements.entry(d).or_insert(0.0) += mips;
        self.active.insert(Gate::Proc(d));
        if let Some(route) = route {
            plan.add_route_flow(d, &route.arcs, bps);
            for &a in &route.arcs {
                let arc = t.arc(a);
                for n in [arc.from, arc.to] {
                    if let Some(i) = t.interface(n, arc.medium) {
                        if let Some(r) = self.residual_iface.get_mut(&(n, i)) {
                            *r -= bps;
                        }
                    }
                    if let Some(g) = Self::gate(t, n, a) {
                        self.active.insert(g);
                    }
                }
            }
        }
    }
}

/// One line of the per-demand decision log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TraceEvent {
    Start {
        demand: usize,
        source: String,
        mips: f64,
        traffic_bps: f64,
    },
    Sorted {
        demand: usize,
        trial: u8,
        by_capacity: bool,
        order: Vec<(String, f64)>,
    },
    SplitScreened {
        demand: usize,
        destination: String,
        needed: usize,
    },
    NoRoute {
        demand: usize,
        destination: String,
    },
    LinkRemoved {
        demand: usize,
        destination: String,
        from: String,
        to: String,
    },
    Placed {
        demand: usize,
        destination: String,
        mips: f64,
        route: Vec<String>,
    },
    TrialExhausted {
        demand: usize,
        trial: u8,
        remaining_mips: f64,
    },
    Served {
        demand: usize,
        splits: usize,
    },
    Blocked {
        demand: usize,
    },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Start {
                demand,
                source,
                mips,
                traffic_bps,
            } => {
                write!(
                    f,
                    "demand {demand}: start source={source} mips={mips} traffic_bps={traffic_bps}"
                )
            }
            TraceEvent::Sorted {
                demand,
                trial,
                by_capacity,
                order,
            } => {
                let key = if *by_capacity {
                    "capacity-desc"
                } else {
                    "score-asc"
                };
                write!(f, "demand {demand}: trial {trial} order ({key})")?;
                for (d, v) in order {
                    write!(f, " {d}={v:.6}")?;
                }
                Ok(())
            }
            TraceEvent::SplitScreened {
                demand,
                destination,
                needed,
            } => {
                write!(
                    f,
                    "demand {demand}: skip {destination} (needs {needed} more destinations)"
                )
            }
            TraceEvent::NoRoute {
                demand,
                destination,
            } => {
                write!(f, "demand {demand}: skip {destination} (no valid route)")
            }
            TraceEvent::LinkRemoved {
                demand,
                destination,
                from,
                to,
            } => {
                write!(
                    f,
                    "demand {demand}: removed saturated link {from}->{to} towards {destination}"
                )
            }
            TraceEvent::Placed {
                demand,
                destination,
                mips,
                route,
            } => {
                write!(
                    f,
                    "demand {demand}: place {mips} MIPS at {destination} via {}",
                    route.join(">")
                )
            }
            TraceEvent::TrialExhausted {
                demand,
                trial,
                remaining_mips,
            } => {
                write!(
                    f,
                    "demand {demand}: trial {trial} exhausted, {remaining_mips} MIPS left"
                )
            }
            TraceEvent::Served { demand, splits } => {
                write!(f, "demand {demand}: served on {splits} destination(s)")
            }
            TraceEvent::Blocked { demand } => {
                write!(f, "demand {demand}: blocked, resources released")
            }
        }
    }
}

/// Outcome of one demand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Allocation {
    Served { splits: usize },
    Blocked,
}

/// Whole-run result.
#[derive(Clone, Debug)]
pub struct HeuristicOutcome {
    /// One plan per demand in input order; blocked demands have empty plans.
    pub assignment: Assignment,
    /// Indices of blocked demands, ascending.
    pub blocked: Vec<usize>,
    pub power: PowerBreakdown,
    pub trace: Vec<TraceEvent>,
}

impl HeuristicOutcome {
    pub fn all_served(&self) -> bool {
        self.blocked.is_empty()
    }

    /// Feasibility of the served demands against the model constraints.
    pub fn check(&self, t: &Topology, p: &Problem) -> FeasibilityReport {
        let served: Vec<usize> = (0..p.demands.len())
            .filter(|k| !self.blocked.contains(k))
            .collect();
        let a = Assignment {
            plans: served
                .iter()
                .map(|&k| self.assignment.plans[k].clone())
                .collect(),
        };
        let demands: Vec<Demand> = served.iter().map(|&k| p.demands[k].clone()).collect();
        check_feasibility(t, &a, &demands, p.splits, p.mode)
    }
}

/// Lowest per-bit energy among the minimum-hop routes, then lexicographic.
fn best_route(t: &Topology, s: NodeId, d: NodeId, removed: &BTreeSet<ArcId>) -> Option<Route> {
    let routes = all_min_hop_routes(
        t,
        s,
        d,
        |a| arc_allowed(t, s, a) && !removed.contains(&a),
        ROUTE_ENUMERATION_CAP,
    );
    let energy = |r: &Route| r.arcs.iter().map(|&a| arc_cost(t, a)).sum::<f64>();
    let mut best: Option<(f64, Route)> = None;
    for r in routes {
        let e = energy(&r);
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, r));
        }
    }
    best.map(|(_, r)| r)
}

/// Minimum-hop route to `d` that can carry `bps`. Saturated links met on the
/// way are removed from the valid set for the rest of the demand.
fn fitting_route(
    t: &Topology,
    state: &mut AllocationState,
    s: NodeId,
    d: NodeId,
    bps: f64,
    k: usize,
    trace: &mut Vec<TraceEvent>,
) -> Option<Route> {
    loop {
        let route = best_route(t, s, d, &state.removed)?;
        let Some(a) = state.bottleneck(t, &route, bps) else {
            return Some(route);
        };
        state.removed.insert(a);
        trace.push(TraceEvent::LinkRemoved {
            demand: k,
            destination: t.node(d).id.clone(),
            from: t.node(t.arc(a).from).id.clone(),
            to: t.node(t.arc(a).to).id.clone(),
        });
    }
}

fn admissible(t: &Topology, scenario: Scenario, s: NodeId, d: NodeId) -> bool {
    let node = t.node(d);
    d != s && scenario.admits(node.kind) && node.params.proc_capacity > 0.0
}

/// Scores every admissible destination that still has capacity for `residual`
/// MIPS of `demand`, sorted in the order they will be tried.
pub fn score_candidates(
    t: &Topology,
    state: &AllocationState,
    demand: &Demand,
    residual: f64,
    scenario: Scenario,
    mode: TrafficMode,
) -> Vec<CandidateScore> {
    let s = demand.source;
    let mut out = Vec::new();
    for d in t.node_ids() {
        let capacity = state.residual_proc[d.index()];
        if !admissible(t, scenario, s, d) || capacity <= MIPS_TOL {
            continue;
        }
        let Some(route) = best_route(t, s, d, &state.removed) else {
            continue;
        };
        let node = t.node(d);
        let fill = residual.min(capacity);
        let copies = nodes_needed(residual, node.params.proc_capacity);
        let per_bit: f64 = route.arcs.iter().map(|&a| arc_cost(t, a)).sum();
        let npower = match mode {
            TrafficMode::Ft => per_bit * demand.traffic_bps * copies as f64,
            TrafficMode::Pt => per_bit * mode.traffic_to(demand, residual),
        };
        let prpower = node.params.pue * processing_efficiency(node).unwrap_or(0.0) * residual;
        let idle = state.new_idle(t, &route) * copies as f64;
        out.push(CandidateScore {
            destination: d,
            npower,
            prpower,
            idle,
            score: npower + prpower + idle,
            fill,
            copies,
            capacity,
        });
    }
    if by_capacity(t, demand) {
        out.sort_by(|a, b| {
            b.capacity
                .total_cmp(&a.capacity)
                .then(t.id_rank(a.destination).cmp(&t.id_rank(b.destination)))
        });
    } else {
        out.sort_by(|a, b| {
            a.score
                .total_cmp(&b.score)
                .then(t.id_rank(a.destination).cmp(&t.id_rank(b.destination)))
        });
    }
    out
}

/// Nodes of capacity `capacity` needed to process `mips`, at least one.
fn nodes_needed(mips: f64, capacity: f64) -> usize {
    ((mips - MIPS_TOL) / capacity).ceil().max(1.0) as usize
}

/// Whether the candidate list is ordered by descending capacity: the demand's
/// traffic exceeds what the source can push over DSRC.
fn by_capacity(t: &Topology, demand: &Demand) -> bool {
    demand.traffic_bps > t.interface_capacity(demand.source, Interface::Dsrc)
}

/// Serves demand `k` on top of `state`, or leaves `state` untouched if it
/// cannot be fully served within [`TRIALS`] passes.
#[allow(clippy::too_many_arguments)]
pub fn allocate_demand(
    t: &Topology,
    state: &mut AllocationState,
    k: usize,
    demand: &Demand,
    scenario: Scenario,
    splits: SplitLimit,
    mode: TrafficMode,
    trace: &mut Vec<TraceEvent>,
) -> Allocation {
    let name = |n: NodeId| t.node(n).id.clone();
    let snapshot = state.clone();
    let s = demand.source;
    let mut residual = demand.mips;
    let mut used: BTreeSet<NodeId> = BTreeSet::new();
    state.removed.clear();
    trace.push(TraceEvent::Start {
        demand: k,
        source: name(s),
        mips: demand.mips,
        traffic_bps: demand.traffic_bps,
    });

    for trial in 1..=TRIALS {
        state.trial = trial;
        let cap_order = by_capacity(t, demand);
        let mut tried: BTreeSet<NodeId> = BTreeSet::new();
        // Scores depend on the residual demand, so the untried candidates are
        // re-sorted after every placement.
        while residual > MIPS_TOL {
            let list: Vec<CandidateScore> =
                score_candidates(t, state, demand, residual, scenario, mode)
                    .into_iter()
                    .filter(|c| !tried.contains(&c.destination))
                    .collect();
            let Some(cand) = list.first() else {
                break;
            };
            trace.push(TraceEvent::Sorted {
                demand: k,
                trial,
                by_capacity: cap_order,
                order: list
                    .iter()
                    .map(|c| {
                        (
                            name(c.destination),
                            if cap_order { c.capacity } else { c.score },
                        )
                    })
                    .collect(),
            });
            let d = cand.destination;
            tried.insert(d);
            let capacity = state.residual_proc[d.index()];
            if !used.contains(&d) {
                let needed = nodes_needed(residual, t.node(d).params.proc_capacity);
                if !splits.allows(used.len() + needed) {
                    trace.push(TraceEvent::SplitScreened {
                        demand: k,
                        destination: name(d),
                        needed,
                    });
                    continue;
                }
            }
            let fill = residual.min(capacity);
            // Under FT a destination already fed with the full traffic needs no more.
            let bps = match mode {
                TrafficMode::Ft if used.contains(&d) => 0.0,
                _ => mode.traffic_to(demand, fill),
            };
            let route = if bps > 0.0 {
                match fitting_route(t, state, s, d, bps, k, trace) {
                    Some(route) => Some(route),
                    None => {
                        trace.push(TraceEvent::NoRoute {
                            demand: k,
                            destination: name(d),
                        });
                        continue;
                    }
                }
            } else {
                None
            };
            state.commit(t, k, route.as_ref(), d, fill, bps);
            residual -= fill;
            used.insert(d);
            trace.push(TraceEvent::Placed {
                demand: k,
                destination: name(d),
                mips: fill,
                route: route.map_or_else(Vec::new, |r| r.nodes.iter().map(|&n| name(n)).collect()),
            });
        }
        if residual <= MIPS_TOL {
            // Absorb rounding so the placements sum to the demand exactly.
            if residual != 0.0 {
                if let Some(w) = state.plans[k].placements.values_mut().last() {
                    *w += residual;
                }
            }
            state.removed.clear();
            state.trial = 0;
            trace.push(TraceEvent::Served {
                demand: k,
                splits: used.len(),
            });
            return Allocation::Served { splits: used.len() };
        }
        trace.push(TraceEvent::TrialExhausted {
            demand: k,
            trial,
            remaining_mips: residual,
        });
    }

    *state = snapshot;
    trace.push(TraceEvent::Blocked { demand: k });
    Allocation::Blocked
}

/// Serves all demands in descending processing order (ties by input order) and
/// prices the result with the power evaluator.
pub fn run(t: &Topology, problem: &Problem) -> Result<HeuristicOutcome> {
    problem.validate(t)?;
    let n = problem.demands.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        problem.demands[b]
            .mips
            .total_cmp(&problem.demands[a].mips)
            .then(a.cmp(&b))
    });
    let mut state = AllocationState::new(t, n);
    let mut trace = Vec::new();
    let mut blocked = Vec::new();
    for k in order {
        let outcome = allocate_demand(
            t,
            &mut state,
            k,
            &problem.demands[k],
            problem.scenario,
            problem.splits,
            problem.mode,
            &mut trace,
        );
        if outcome == Allocation::Blocked {
            blocked.push(k);
        }
    }
    blocked.sort_unstable();
    let assignment = Assignment { plans: state.plans };
    let power = evaluate(t, &assignment)?;
    Ok(HeuristicOutcome {
        assignment,
        blocked,
        power,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::{canonical_parking_lot, car_park};

    fn problem(t: &Topology, mbps: f64, scenario: Scenario) -> Problem {
        let s = t.lookup("v01").unwrap();
        Problem::new(
            vec![Demand::from_mbps(s, mbps).unwrap()],
            scenario,
            SplitLimit::Unlimited,
            TrafficMode::Ft,
        )
    }

    #[test]
    fn score_is_the_sum_of_its_terms() {
        let t = canonical_parking_lot();
        let p = problem(&t, 4.0, Scenario::VEC);
        let st = AllocationState::new(&t, 1);
        let list = score_candidates(&t, &st, &p.demands[0], 8000.0, p.scenario, p.mode);
        assert_eq!(list.len(), 20);
        for c in &list {
            assert_eq!(c.score, c.npower + c.prpower + c.idle);
        }
        assert!(list.windows(2).all(|w| w[0].score <= w[1].score));
    }

    #[test]
    fn nearer_vehicle_ranks_first() {
        // v02 and v03 differ only in their distance to the source.
        let t = car_park(&[(0.0, 0.0), (3.0, 0.0), (9.0, 0.0)], &[(0.0, -40.0)]).unwrap();
        let p = problem(&t, 1.0, Scenario::V);
        let st = AllocationState::new(&t, 1);
        let list = score_candidates(&t, &st, &p.demands[0], 2000.0, p.scenario, p.mode);
        let ids: Vec<&str> = list
            .iter()
            .map(|c| t.node(c.destination).id.as_str())
            .collect();
        assert_eq!(ids, ["v02", "v03"]);
    }

    #[test]
    fn edge_outranks_vehicles_for_a_large_demand() {
        let t = canonical_parking_lot();
        let p = problem(&t, 4.0, Scenario::VE);
        let st = AllocationState::new(&t, 1);
        let list = score_candidates(&t, &st, &p.demands[0], 8000.0, p.scenario, p.mode);
        assert_eq!(t.node(list[0].destination).kind, NodeKind::EdgeNode);
        let v02 = list
            .iter()
            .find(|c| t.node(c.destination).id == "v02")
            .unwrap();
        assert_eq!((v02.copies, v02.fill), (3, 3200.0));
    }

    #[test]
    fn traffic_beyond_dsrc_puts_the_cloud_first() {
        let t = canonical_parking_lot();
        let p = problem(&t, 30.0, Scenario::VEC);
        let st = AllocationState::new(&t, 1);
        let list = score_candidates(&t, &st, &p.demands[0], 60_000.0, p.scenario, p.mode);
        assert_eq!(list[0].destination, t.cloud_server());
        let out = run(&t, &p).unwrap();
        assert!(out.all_served());
        let dests: Vec<_> = out.assignment.plans[0].destinations().collect();
        assert_eq!(dests, vec![t.cloud_server()]);
    }

    #[test]
    fn small_demand_fits_one_destination() {
        let t = canonical_parking_lot();
        let out = run(&t, &problem(&t, 1.0, Scenario::VEC)).unwrap();
        assert_eq!(out.assignment.plans[0].splits(), 1);
        assert_eq!(
            out.assignment.plans[0].flows.values().next().unwrap().len(),
            1
        );
    }

    #[test]
    fn oversized_demand_is_blocked_without_footprint() {
        let t = canonical_parking_lot();
        let s = t.lookup("v01").unwrap();
        let d = Demand::new(s, 1e6, 1e6).unwrap();
        let mut st = AllocationState::new(&t, 1);
        let before = st.clone();
        let mut trace = Vec::new();
        let out = allocate_demand(
            &t,
            &mut st,
            0,
            &d,
            Scenario::VE,
            SplitLimit::Unlimited,
            TrafficMode::Ft,
            &mut trace,
        );
        assert_eq!(out, Allocation::Blocked);
        assert_eq!(st, before);
        assert!(matches!(
            trace.last(),
            Some(TraceEvent::Blocked { demand: 0 })
        ));
    }

    #[test]
    fn split_limit_is_respected() {
        let t = canonical_parking_lot();
        let mut p = problem(&t, 5.5, Scenario::VEC);
        for s in 1..=3 {
            p.splits = SplitLimit::AtMost(s);
            let out = run(&t, &p).unwrap();
            assert!(out.all_served());
            assert!(out.assignment.plans[0].splits() <= s as usize);
            assert!(out.check(&t, &p).is_feasible(), "{}", out.check(&t, &p));
        }
    }

    #[test]
    fn saturated_link_is_removed_and_logged() {
        // FT traffic of 10 Mb/s to every vehicle: the source's 27 Mb/s DSRC
        // budget fits two destinations, the third route must be dropped.
        let t = canonical_parking_lot();
        let p = problem(&t, 10.0, Scenario::V);
        let out = run(&t, &p).unwrap();
        assert!(out
            .trace
            .iter()
            .any(|e| matches!(e, TraceEvent::LinkRemoved { .. })));
        let lines: Vec<String> = out.trace.iter().map(|e| e.to_string()).collect();
        assert!(lines[0].starts_with("demand 0: start source=v01"));
    }
}
