//! Turning model variable values into an [`Assignment`].

use std::collections::{BTreeMap, VecDeque};

use super::model::{FlowLayout, ModelInstance};
use crate::power::{Assignment, Plan};
use crate::topo::{min_hop_routes, ArcId, NodeId, Topology};

/// Builds the assignment encoded by `values` (one per model variable).
///
/// Selections are rounded, placements of a demand are corrected so they sum to
/// its processing volume exactly, and link flows are decomposed into paths and
/// rescaled so each destination receives exactly the traffic its mode requires.
pub fn decode(m: &ModelInstance, values: &[f64]) -> Assignment {
    let t = m.topology;
    let ix = &m.index;
    let mut out = Assignment::with_demands(m.problem.demands.len());
    for (k, dem) in m.problem.demands.iter().enumerate() {
        let plan = &mut out.plans[k];
        let mut selected = Vec::new();
        for &d in &m.candidates[k] {
            if values[ix.alpha[&(k, d)].0] > 0.5 {
                selected.push((d, values[ix.om[&(k, d)].0].max(0.0)));
            }
        }
        if selected.is_empty() {
            continue;
        }
        let total: f64 = selected.iter().map(|&(_, w)| w).sum();
        let slack = |d: NodeId, w: f64| t.node(d).params.proc_capacity - w;
        let (fix, _) = selected
            .iter()
            .enumerate()
            .max_by(|a, b| slack(a.1 .0, a.1 .1).total_cmp(&slack(b.1 .0, b.1 .1)))
            .map(|(i, &(d, w))| (i, slack(d, w)))
            .expect("non-empty");
        selected[fix].1 += dem.mips - total;
        for &(d, w) in &selected {
            plan.placements.insert(d, w);
        }

        // Per-destination path flows in Mb/s.
        let s = dem.source;
        let mut paths: Vec<(NodeId, Vec<ArcId>, f64)> = Vec::new();
        match m.layout {
            FlowLayout::PerCommodity => {
                for &(d, _) in &selected {
                    let flow: BTreeMap<ArcId, f64> = ix
                        .lam
                        .range((k, Some(d), ArcId(0))..=(k, Some(d), ArcId(u32::MAX)))
                        .map(|(&(_, _, a), &v)| (a, values[v.0]))
                        .collect();
                    let want = values[ix.f[&(k, d)].0];
                    paths.extend(decompose(t, s, flow, &[(d, want)]));
                }
            }
            FlowLayout::PerSource => {
                let flow: BTreeMap<ArcId, f64> = ix
                    .lam
                    .range((k, None, ArcId(0))..=(k, None, ArcId(u32::MAX)))
                    .map(|(&(_, _, a), &v)| (a, values[v.0]))
                    .collect();
                let sinks: Vec<(NodeId, f64)> = selected
                    .iter()
                    .map(|&(d, _)| (d, values[ix.f[&(k, d)].0]))
                    .collect();
                paths.extend(decompose(t, s, flow, &sinks));
            }
        }

        for &(d, w) in &selected {
            let exact = m.problem.mode.traffic_to(dem, w);
            let mine: Vec<&(NodeId, Vec<ArcId>, f64)> = paths.iter().filter(|p| p.0 == d).collect();
            let got: f64 = mine.iter().map(|p| p.2).sum();
            if got > 0.0 {
                for p in mine {
                    plan.add_route_flow(d, &p.1, p.2 / got * exact);
                }
            } else if let Some(r) = min_hop_routes(t, s, d, &Default::default(), 1).first() {
                plan.add_route_flow(d, &r.arcs, exact);
            }
        }
        prune_zero_flows(plan);
    }
    out
}

fn prune_zero_flows(plan: &mut Plan) {
    for f in plan.flows.values_mut() {
        f.retain(|_, v| *v > 0.0);
    }
    plan.flows.retain(|_, f| !f.is_empty());
}

/// Splits a single-source flow into paths towards the given sinks, each sink
/// receiving up to its demand. Cycles and numerical residue are discarded.
pub(crate) fn decompose(
    t: &Topology,
    s: NodeId,
    mut flow: BTreeMap<ArcId, f64>,
    sinks: &[(NodeId, f64)],
) -> Vec<(NodeId, Vec<ArcId>, f64)> {
    let scale: f64 = sinks.iter().map(|&(_, v)| v.abs()).sum::<f64>().max(1.0);
    let eps = 1e-9 * scale;
    let mut out = Vec::new();
    for &(d, want) in sinks {
        let mut left = want;
        while left > eps {
            let Some(path) = positive_path(t, s, d, &flow, eps) else {
                break;
            };
            let amount = path.iter().map(|a| flow[a]).fold(left, f64::min);
            for a in &path {
                *flow.get_mut(a).unwrap() -= amount;
            }
            left -= amount;
            out.push((d, path, amount));
        }
    }
    out
}

fn positive_path(
    t: &Topology,
    s: NodeId,
    d: NodeId,
    flow: &BTreeMap<ArcId, f64>,
    eps: f64,
) -> Option<Vec<ArcId>> {
    let mut via: Vec<Option<ArcId>> = vec![None; t.len()];
    let mut seen = vec![false; t.len()];
    seen[s.index()] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(n) = queue.pop_front() {
        if n == d {
            let mut arcs = Vec::new();
            let mut cur = d;
            while cur != s {
                let a = via[cur.index()].expect("bfs tree");
                arcs.push(a);
                cur = t.arc(a).from;
            }
            arcs.reverse();
            return Some(arcs);
        }
        for &a in t.out_arcs(n) {
            let m = t.arc(a).to;
            if !seen[m.index()] && flow.get(&a).is_some_and(|&v| v > eps) {
                seen[m.index()] = true;
                via[m.index()] = Some(a);
                queue.push_back(m);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::canonical_parking_lot;

    #[test]
    fn decomposition_splits_a_branching_flow() {
        let t = canonical_parking_lot();
        let id = |s: &str| t.lookup(s).unwrap();
        let (v1, v2, v3) = (id("v01"), id("v02"), id("v03"));
        let a12 = t.find_arc(v1, v2).unwrap();
        let a23 = t.find_arc(v2, v3).unwrap();
        let a13 = t.find_arc(v1, v3).unwrap();
        // 3 units to v02 of which 1 continues to v03, plus 1 direct to v03;
        // a 2-3-2 cycle of 0.5 rides on top.
        let a32 = t.find_arc(v3, v2).unwrap();
        let flow = BTreeMap::from([(a12, 3.0), (a23, 1.5), (a32, 0.5), (a13, 1.0)]);
        let paths = decompose(&t, v1, flow, &[(v2, 2.0), (v3, 2.0)]);
        let to = |d: NodeId| paths.iter().filter(|p| p.0 == d).map(|p| p.2).sum::<f64>();
        assert!((to(v2) - 2.0).abs() < 1e-12);
        assert!((to(v3) - 2.0).abs() < 1e-12);
        for (_, arcs, _) in &paths {
            assert_eq!(t.arc(arcs[0]).from, v1);
        }
    }
}
