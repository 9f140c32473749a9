use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{ArcId, NodeId, Topology};

/// A simple directed path.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Route {
    pub nodes: Vec<NodeId>,
    pub arcs: Vec<ArcId>,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.arcs.len()
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("route has nodes")
    }

    fn key(&self, t: &Topology) -> (usize, Vec<u32>) {
        (
            self.hops(),
            self.nodes.iter().map(|&n| t.id_rank(n)).collect(),
        )
    }
}

/// Simple paths from `s` to `d` that avoid the `excluded` arcs, in ascending hop
/// count with ties broken by the lexicographic order of their node ids. At most
/// `limit` routes are produced (k-shortest simple paths).
pub fn min_hop_routes(
    t: &Topology,
    s: NodeId,
    d: NodeId,
    excluded: &BTreeSet<ArcId>,
    limit: usize,
) -> Vec<Route> {
    if s == d || limit == 0 {
        return Vec::new();
    }
    let no_nodes = vec![false; t.len()];
    let Some(first) = best_path(t, s, d, &no_nodes, excluded) else {
        return Vec::new();
    };

    let mut accepted: Vec<Route> = vec![first];
    let mut candidates: BTreeMap<(usize, Vec<u32>), Route> = BTreeMap::new();
    while accepted.len() < limit {
        let prev = accepted.last().expect("non-empty").clone();
        for i in 0..prev.hops() {
            let spur = prev.nodes[i];
            let root_nodes = &prev.nodes[..=i];

            let mut banned_arcs = excluded.clone();
            for p in &accepted {
                if p.nodes.len() > i + 1 && p.nodes[..=i] == *root_nodes {
                    banned_arcs.insert(p.arcs[i]);
                }
            }
            let mut banned_nodes = vec![false; t.len()];
            for &n in &root_nodes[..i] {
                banned_nodes[n.index()] = true;
            }

            if let Some(tail) = best_path(t, spur, d, &banned_nodes, &banned_arcs) {
                let mut nodes = root_nodes.to_vec();
                nodes.extend_from_slice(&tail.nodes[1..]);
                let mut arcs = prev.arcs[..i].to_vec();
                arcs.extend_from_slice(&tail.arcs);
                let route = Route { nodes, arcs };
                let key = route.key(t);
                if !accepted.iter().any(|r| r.nodes == route.nodes) {
                    candidates.entry(key).or_insert(route);
                }
            }
        }
        match candidates.pop_first() {
            Some((_, r)) => accepted.push(r),
            None => break,
        }
    }
    accepted
}

/// Every route from `s` to `d` with the minimum hop count over arcs for which
/// `usable` holds, in lexicographic node-id order. Enumeration stops after `cap`
/// routes.
pub(crate) fn all_min_hop_routes(
    t: &Topology,
    s: NodeId,
    d: NodeId,
    usable: impl Fn(ArcId) -> bool,
    cap: usize,
) -> Vec<Route> {
    let dist = hops_to(t, d, &vec![false; t.len()], &usable);
    if s == d || dist[s.index()] == usize::MAX {
        return Vec::new();
    }

    let mut out = Vec::new();
    let mut nodes = vec![s];
    let mut arcs = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn walk(
        t: &Topology,
        d: NodeId,
        dist: &[usize],
        usable: &dyn Fn(ArcId) -> bool,
        cap: usize,
        nodes: &mut Vec<NodeId>,
        arcs: &mut Vec<ArcId>,
        out: &mut Vec<Route>,
    ) {
        if out.len() >= cap {
            return;
        }
        let cur = *nodes.last().unwrap();
        if cur == d {
            out.push(Route {
                nodes: nodes.clone(),
                arcs: arcs.clone(),
            });
            return;
        }
        let mut next: Vec<ArcId> = t
            .out_arcs(cur)
            .iter()
            .copied()
            .filter(|&a| usable(a) && dist[t.arc(a).to.index()] + 1 == dist[cur.index()])
            .collect();
        next.sort_by_key(|&a| t.id_rank(t.arc(a).to));
        for a in next {
            nodes.push(t.arc(a).to);
            arcs.push(a);
            walk(t, d, dist, usable, cap, nodes, arcs, out);
            nodes.pop();
            arcs.pop();
        }
    }
    walk(t, d, &dist, &usable, cap, &mut nodes, &mut arcs, &mut out);
    out
}

/// Reverse BFS hop distances to `d`, never passing through banned nodes.
fn hops_to(
    t: &Topology,
    d: NodeId,
    banned_nodes: &[bool],
    usable: &dyn Fn(ArcId) -> bool,
) -> Vec<usize> {
    let mut dist = vec![usize::MAX; t.len()];
    dist[d.index()] = 0;
    let mut queue = VecDeque::from([d]);
    while let Some(n) = queue.pop_front() {
        for &a in t.in_arcs(n) {
            let m = t.arc(a).from;
            if usable(a) && !banned_nodes[m.index()] && dist[m.index()] == usize::MAX {
                dist[m.index()] = dist[n.index()] + 1;
                queue.push_back(m);
            }
        }
    }
    dist
}

/// Fewest-hop path, lexicographically smallest among equals.
fn best_path(
    t: &Topology,
    s: NodeId,
    d: NodeId,
    banned_nodes: &[bool],
    banned_arcs: &BTreeSet<ArcId>,
) -> Option<Route> {
    let usable = |a: ArcId| !banned_arcs.contains(&a);
    let dist = hops_to(t, d, banned_nodes, &usable);
    if dist[s.index()] == usize::MAX {
        return None;
    }
    let mut nodes = vec![s];
    let mut arcs = Vec::new();
    let mut cur = s;
    while cur != d {
        let step = t
            .out_arcs(cur)
            .iter()
            .copied()
            .filter(|&a| {
                let m = t.arc(a).to;
                usable(a)
                    && !banned_nodes[m.index()]
                    && dist[m.index()] != usize::MAX
                    && dist[m.index()] + 1 == dist[cur.index()]
            })
            .min_by_key(|&a| t.id_rank(t.arc(a).to))?;
        cur = t.arc(step).to;
        nodes.push(cur);
        arcs.push(step);
    }
    Some(Route { nodes, arcs })
}
