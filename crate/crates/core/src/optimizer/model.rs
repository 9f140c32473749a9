//! Mixed-integer linear model of the placement problem.
//!
//! Units inside the model: traffic in Mb/s, processing in MIPS, power in W.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::demand::{Demand, Scenario, SplitLimit, TrafficMode};
use crate::error::{Error, Result};
use crate::power::{arc_cost, processing_efficiency};
use crate::topo::{ArcId, Interface, Medium, NodeId, NodeKind, Topology};

/// Lower bound on the traffic of a node marked as carrying traffic, Mb/s.
pub const ACTIVE_TRAFFIC_MBPS: f64 = 1e-6;
/// Lower bound on the placement of a selected destination, MIPS.
pub const MIN_PLACEMENT_MIPS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    /// Objective coefficient, W per unit.
    pub cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    /// Constraint number of the formulation (12 to 31).
    pub tag: u8,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// How link flows are indexed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowLayout {
    /// One flow per (source, destination) commodity and arc.
    PerCommodity,
    /// One flow per source and arc; the destinations act as sinks. Same optimum,
    /// far fewer columns.
    PerSource,
}

/// Inputs shared by every solver.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub demands: Vec<Demand>,
    pub scenario: Scenario,
    pub splits: SplitLimit,
    pub mode: TrafficMode,
}

impl Problem {
    pub fn new(
        demands: Vec<Demand>,
        scenario: Scenario,
        splits: SplitLimit,
        mode: TrafficMode,
    ) -> Problem {
        Problem {
            demands,
            scenario,
            splits,
            mode,
        }
    }

    pub fn validate(&self, t: &Topology) -> Result<()> {
        if self.demands.is_empty() {
            return Err(Error::Model("empty demand set".into()));
        }
        self.splits.validate()?;
        let mut sources = BTreeSet::new();
        for d in &self.demands {
            if d.source.index() >= t.len() {
                return Err(Error::Model(format!("unknown source node #{}", d.source.0)));
            }
            let node = t.node(d.source);
            if node.kind != NodeKind::Vehicle {
                return Err(Error::Model(format!(
                    "demand source `{}` is not a vehicle",
                    node.id
                )));
            }
            if !sources.insert(d.source) {
                return Err(Error::Model(format!(
                    "two demands share source `{}`",
                    node.id
                )));
            }
        }
        Ok(())
    }

    /// Admissible destinations of demand `k`, in node-id order.
    pub fn candidates(&self, t: &Topology, k: usize) -> Vec<NodeId> {
        let s = self.demands[k].source;
        let mut out: Vec<NodeId> = t
            .node_ids()
            .filter(|&n| {
                let node = t.node(n);
                n != s && self.scenario.admits(node.kind) && node.params.proc_capacity > 0.0
            })
            .collect();
        out.sort_by_key(|&n| t.id_rank(n));
        out
    }
}

/// Arcs a commodity of source `s` may use: none into the source, none out of the
/// cloud server (it only receives).
pub(crate) fn arc_allowed(t: &Topology, s: NodeId, a: ArcId) -> bool {
    let arc = t.arc(a);
    arc.to != s && t.node(arc.from).kind != NodeKind::CloudServer
}

#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct ModelIndex {
    pub om: BTreeMap<(usize, NodeId), VarId>,
    pub alpha: BTreeMap<(usize, NodeId), VarId>,
    pub f: BTreeMap<(usize, NodeId), VarId>,
    /// Keyed by demand, destination (per-commodity layout only) and arc.
    pub lam: BTreeMap<(usize, Option<NodeId>, ArcId), VarId>,
    pub q: Vec<VarId>,
    pub bnet: BTreeMap<NodeId, VarId>,
    pub bpr: BTreeMap<NodeId, VarId>,
    pub bonu: BTreeMap<NodeId, VarId>,
}

/// A built instance: variables, tagged constraints and the decoding index.
#[derive(Clone, Debug)]
pub struct ModelInstance<'t> {
    pub topology: &'t Topology,
    pub problem: Problem,
    pub layout: FlowLayout,
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    /// Admissible destinations per demand.
    pub candidates: Vec<Vec<NodeId>>,
    pub(crate) index: ModelIndex,
}

impl<'t> ModelInstance<'t> {
    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn alpha_vars(&self, k: usize) -> impl Iterator<Item = (NodeId, VarId)> + '_ {
        self.index
            .alpha
            .range((k, NodeId(0))..=(k, NodeId(u32::MAX)))
            .map(|(&(_, d), &v)| (d, v))
    }

    /// Rows and bounds that `values` violate by more than `tol` (absolute,
    /// scaled by the row's largest term), as `(name, tag, activity, rhs)`.
    /// Bound and integrality violations carry tag 0.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<(String, u8, f64, f64)> {
        let mut out = Vec::new();
        for (v, &x) in self.vars.iter().zip(values) {
            let integral = v.kind == VarKind::Continuous || (x - x.round()).abs() <= tol;
            if x < v.lower - tol || x > v.upper + tol || !integral {
                out.push((
                    v.name.clone(),
                    0,
                    x,
                    if x < v.lower { v.lower } else { v.upper },
                ));
            }
        }
        for r in &self.rows {
            let mut activity = 0.0;
            let mut scale = r.rhs.abs().max(1.0);
            for &(v, c) in &r.terms {
                activity += c * values[v.0];
                scale = scale.max((c * values[v.0]).abs());
            }
            let slack = tol * scale;
            let bad = match r.sense {
                Sense::Le => activity > r.rhs + slack,
                Sense::Ge => activity < r.rhs - slack,
                Sense::Eq => (activity - r.rhs).abs() > slack,
            };
            if bad {
                out.push((r.name.clone(), r.tag, activity, r.rhs));
            }
        }
        out
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn rows_tagged(&self, tag: u8) -> impl Iterator<Item = &Row> + '_ {
        self.rows.iter().filter(move |r| r.tag == tag)
    }
}

struct Builder {
    names: Vec<String>,
    vars: Vec<Variable>,
    rows: Vec<Row>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind, upper: f64, cost: f64) -> VarId {
        self.vars.push(Variable {
            name,
            kind,
            lower: 0.0,
            upper,
            cost,
        });
        VarId(self.vars.len() - 1)
    }

    fn row(&mut self, name: String, tag: u8, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row {
            name,
            tag,
            terms,
            sense,
            rhs,
        });
    }

    fn n(&self, n: NodeId) -> &str {
        &self.names[n.index()]
    }
}

/// Node id made safe for LP identifiers.
fn lp_name(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Nodes that every path from `s` to `d` must visit (including both ends),
/// excluding the cloud server.
fn separators(t: &Topology, s: NodeId, d: NodeId) -> Vec<NodeId> {
    let reaches = |skip: Option<NodeId>| {
        let mut seen = vec![false; t.len()];
        let mut queue = VecDeque::from([s]);
        seen[s.index()] = true;
        while let Some(n) = queue.pop_front() {
            if n == d {
                return true;
            }
            for &a in t.out_arcs(n) {
                let m = t.arc(a).to;
                if !arc_allowed(t, s, a) || Some(m) == skip || seen[m.index()] {
                    continue;
                }
                seen[m.index()] = true;
                queue.push_back(m);
            }
        }
        false
    };
    let mut out = vec![s];
    for n in t.node_ids() {
        if n != s && n != d && !reaches(Some(n)) {
            out.push(n);
        }
    }
    out.push(d);
    out.retain(|&n| t.node(n).kind != NodeKind::CloudServer);
    out
}

/// Builds the model of `problem` on `t`.
pub fn build_model<'t>(
    t: &'t Topology,
    problem: &Problem,
    layout: FlowLayout,
) -> Result<ModelInstance<'t>> {
    problem.validate(t)?;
    let names: Vec<String> = t.nodes().iter().map(|n| lp_name(&n.id)).collect();
    if names.iter().collect::<BTreeSet<_>>().len() != names.len() {
        return Err(Error::Model("node ids collide once made LP-safe".into()));
    }
    let mut b = Builder {
        names,
        vars: Vec::new(),
        rows: Vec::new(),
    };
    let mut ix = ModelIndex::default();
    let server = t.cloud_server();
    let candidates: Vec<Vec<NodeId>> = (0..problem.demands.len())
        .map(|k| problem.candidates(t, k))
        .collect();
    let mbps = |bps: f64| bps / 1e6;

    // Placement, selection and traffic variables.
    for (k, dem) in problem.demands.iter().enumerate() {
        let s = dem.source;
        for &d in &candidates[k] {
            let node = t.node(d);
            let cost = node.params.pue * processing_efficiency(node)?;
            let name = format!("om_{}_{}", b.n(s), b.n(d));
            let v = b.var(
                name,
                VarKind::Continuous,
                dem.mips.min(node.params.proc_capacity),
                cost,
            );
            ix.om.insert((k, d), v);
        }
        for &d in &candidates[k] {
            let name = format!("a_{}_{}", b.n(s), b.n(d));
            let v = b.var(name, VarKind::Binary, 1.0, 0.0);
            ix.alpha.insert((k, d), v);
        }
        for &d in &candidates[k] {
            let name = format!("f_{}_{}", b.n(s), b.n(d));
            let v = b.var(name, VarKind::Continuous, mbps(dem.traffic_bps), 0.0);
            ix.f.insert((k, d), v);
        }
        let name = format!("q_{}", b.n(s));
        let v = b.var(name, VarKind::Continuous, f64::INFINITY, 0.0);
        ix.q.push(v);
    }

    // Link flows, W per Mb/s.
    let arc_w: Vec<f64> = t.arc_ids().map(|a| arc_cost(t, a) * 1e6).collect();
    for (k, dem) in problem.demands.iter().enumerate() {
        let s = dem.source;
        let dests: Vec<Option<NodeId>> = match layout {
            FlowLayout::PerCommodity => candidates[k].iter().map(|&d| Some(d)).collect(),
            FlowLayout::PerSource => vec![None],
        };
        for d in dests {
            for a in t.arc_ids() {
                if !arc_allowed(t, s, a) || d.is_some_and(|d| t.arc(a).from == d) {
                    continue;
                }
                let arc = t.arc(a);
                let name = match d {
                    Some(d) => format!(
                        "lam_{}_{}_{}_{}",
                        b.n(s),
                        b.n(d),
                        b.n(arc.from),
                        b.n(arc.to)
                    ),
                    None => format!("lam_{}_{}_{}", b.n(s), b.n(arc.from), b.n(arc.to)),
                };
                let v = b.var(name, VarKind::Continuous, f64::INFINITY, arc_w[a.index()]);
                ix.lam.insert((k, d, a), v);
            }
        }
    }

    // Activation binaries.
    let proc_nodes: BTreeSet<NodeId> = candidates.iter().flatten().copied().collect();
    for n in t.node_ids() {
        let node = t.node(n);
        let pue = node.params.pue;
        if node.kind != NodeKind::CloudServer {
            let name = format!("bnet_{}", b.n(n));
            let v = b.var(
                name,
                VarKind::Binary,
                1.0,
                pue * node.params.net_idle_charged,
            );
            ix.bnet.insert(n, v);
        }
    }
    for &n in &proc_nodes {
        let node = t.node(n);
        let name = format!("bpr_{}", b.n(n));
        let v = b.var(
            name,
            VarKind::Binary,
            1.0,
            node.params.pue * node.params.proc_idle,
        );
        ix.bpr.insert(n, v);
    }
    for n in t.nodes_of_kind(NodeKind::EdgeNode) {
        let node = t.node(n);
        let name = format!("bonu_{}", b.n(n));
        let v = b.var(
            name,
            VarKind::Binary,
            1.0,
            node.params.pue * node.params.onu_idle.unwrap_or(0.0),
        );
        ix.bonu.insert(n, v);
    }

    // (12) full service away from the source.
    for (k, dem) in problem.demands.iter().enumerate() {
        let terms = candidates[k]
            .iter()
            .map(|&d| (ix.om[&(k, d)], 1.0))
            .collect();
        let name = format!("c12_{}", b.n(dem.source));
        b.row(name, 12, terms, Sense::Eq, dem.mips);
    }

    // (13) processing capacity.
    for &d in &proc_nodes {
        let terms: Vec<_> = (0..problem.demands.len())
            .filter_map(|k| ix.om.get(&(k, d)).map(|&v| (v, 1.0)))
            .collect();
        let name = format!("c13_{}", b.n(d));
        b.row(name, 13, terms, Sense::Le, t.node(d).params.proc_capacity);
    }

    // (14)-(16) / (31) selection and traffic coupling.
    for (k, dem) in problem.demands.iter().enumerate() {
        let s = dem.source;
        for &d in &candidates[k] {
            let (om, a, f) = (ix.om[&(k, d)], ix.alpha[&(k, d)], ix.f[&(k, d)]);
            let pair = format!("{}_{}", b.n(s), b.n(d));
            b.row(
                format!("c14_{pair}"),
                14,
                vec![(om, 1.0), (a, -MIN_PLACEMENT_MIPS)],
                Sense::Ge,
                0.0,
            );
            let big_a = dem.mips.min(t.node(d).params.proc_capacity);
            b.row(
                format!("c15_{pair}"),
                15,
                vec![(om, 1.0), (a, -big_a)],
                Sense::Le,
                0.0,
            );
            match problem.mode {
                TrafficMode::Ft => {
                    let terms = vec![(f, 1.0), (a, -mbps(dem.traffic_bps))];
                    b.row(format!("c16_{pair}"), 16, terms, Sense::Eq, 0.0);
                }
                TrafficMode::Pt => {
                    let terms = vec![(f, 1.0), (om, -mbps(dem.traffic_bps) / dem.mips)];
                    b.row(format!("c31_{pair}"), 31, terms, Sense::Eq, 0.0);
                }
            }
        }
    }

    // (17) flow conservation.
    for (k, dem) in problem.demands.iter().enumerate() {
        let s = dem.source;
        let dests: Vec<Option<NodeId>> = match layout {
            FlowLayout::PerCommodity => candidates[k].iter().map(|&d| Some(d)).collect(),
            FlowLayout::PerSource => vec![None],
        };
        for d in dests {
            for n in t.node_ids() {
                let mut terms = Vec::new();
                for &a in t.out_arcs(n) {
                    if let Some(&v) = ix.lam.get(&(k, d, a)) {
                        terms.push((v, 1.0));
                    }
                }
                for &a in t.in_arcs(n) {
                    if let Some(&v) = ix.lam.get(&(k, d, a)) {
                        terms.push((v, -1.0));
                    }
                }
                match d {
                    Some(d) => {
                        if n == s {
                            terms.push((ix.f[&(k, d)], -1.0));
                        } else if n == d {
                            terms.push((ix.f[&(k, d)], 1.0));
                        }
                    }
                    None => {
                        if n == s {
                            for &c in &candidates[k] {
                                terms.push((ix.f[&(k, c)], -1.0));
                            }
                        } else if let Some(&f) = ix.f.get(&(k, n)) {
                            terms.push((f, 1.0));
                        }
                    }
                }
                if terms.is_empty() {
                    continue;
                }
                let name = match d {
                    Some(d) => format!("c17_{}_{}_{}", b.n(s), b.n(d), b.n(n)),
                    None => format!("c17_{}_{}", b.n(s), b.n(n)),
                };
                b.row(name, 17, terms, Sense::Eq, 0.0);
            }
        }
    }

    // Flow columns touching a node, grouped by interface.
    let mut lam_by_arc: Vec<Vec<VarId>> = vec![Vec::new(); t.arcs().len()];
    for (&(_, _, a), &v) in &ix.lam {
        lam_by_arc[a.index()].push(v);
    }
    let lam_at = |n: NodeId, pick: &dyn Fn(ArcId) -> bool| -> Vec<(VarId, f64)> {
        let mut terms = Vec::new();
        for arcs in [t.out_arcs(n), t.in_arcs(n)] {
            for &a in arcs {
                if pick(a) {
                    terms.extend(lam_by_arc[a.index()].iter().map(|&v| (v, 1.0)));
                }
            }
        }
        terms.sort_by_key(|t| t.0);
        terms
    };

    // (18)-(22) interface rates.
    for (n, iface) in t.interfaces() {
        let cap = t.interface_capacity(n, iface);
        if !cap.is_finite() {
            continue;
        }
        let terms = lam_at(n, &|a| t.interface(n, t.arc(a).medium) == Some(iface));
        let tag = match iface {
            Interface::Wired => 18,
            Interface::Dsrc => 19,
            Interface::VehicleWifi => 20,
            Interface::EdgeWireless => 21,
            Interface::Onu => 22,
        };
        let name = format!("c{tag}_{}", b.n(n));
        b.row(name, tag, terms, Sense::Le, mbps(cap));
    }

    // (23)-(24) split limit.
    for (k, dem) in problem.demands.iter().enumerate() {
        let s = dem.source;
        let mut terms = vec![(ix.q[k], 1.0)];
        terms.extend(candidates[k].iter().map(|&d| (ix.alpha[&(k, d)], -1.0)));
        b.row(format!("c23_{}", b.n(s)), 23, terms, Sense::Eq, 0.0);
        let bound = problem.splits.bound(candidates[k].len()) as f64;
        b.row(
            format!("c24_{}", b.n(s)),
            24,
            vec![(ix.q[k], 1.0)],
            Sense::Le,
            bound,
        );
    }

    // (25)-(26) networking and (29)-(30) ONU activation. The traffic bound of
    // a node is the smaller of its interface budgets and twice the traffic
    // that could ever be sent.
    let sendable: f64 = problem
        .demands
        .iter()
        .enumerate()
        .map(|(k, d)| match problem.mode {
            TrafficMode::Ft => mbps(d.traffic_bps) * candidates[k].len() as f64,
            TrafficMode::Pt => mbps(d.traffic_bps),
        })
        .sum();
    for n in t.node_ids() {
        let kind = t.node(n).kind;
        if kind == NodeKind::CloudServer {
            continue;
        }
        let groups: Vec<(Medium, bool)> = match kind {
            NodeKind::EdgeNode => vec![(Medium::Wifi, false), (Medium::Fiber, true)],
            _ => vec![(Medium::Dsrc, false)],
        };
        for (medium, onu) in groups {
            let pick = |a: ArcId| {
                let m = t.arc(a).medium;
                if kind == NodeKind::EdgeNode {
                    m.is_wireless() == medium.is_wireless()
                } else {
                    true
                }
            };
            let terms = lam_at(n, &pick);
            let ifaces: BTreeSet<Interface> = t
                .out_arcs(n)
                .iter()
                .filter(|&&a| pick(a))
                .filter_map(|&a| t.interface(n, t.arc(a).medium))
                .collect();
            let cap: f64 = ifaces
                .iter()
                .map(|&i| mbps(t.interface_capacity(n, i)))
                .sum();
            let big_m = cap.min(2.0 * sendable);
            let (beta, lo_tag, hi_tag, label) = if onu {
                (ix.bonu[&n], 29, 30, "onu")
            } else {
                (ix.bnet[&n], 25, 26, "net")
            };
            if terms.is_empty() {
                b.row(
                    format!("c{hi_tag}_{label}_{}", b.n(n)),
                    hi_tag,
                    vec![(beta, 1.0)],
                    Sense::Le,
                    0.0,
                );
                continue;
            }
            let mut lo = terms.clone();
            lo.push((beta, -ACTIVE_TRAFFIC_MBPS));
            b.row(format!("c{lo_tag}_{}", b.n(n)), lo_tag, lo, Sense::Ge, 0.0);
            let mut hi = terms;
            hi.push((beta, -big_m));
            b.row(format!("c{hi_tag}_{}", b.n(n)), hi_tag, hi, Sense::Le, 0.0);
        }
    }

    // (27)-(28) processing activation.
    for &d in &proc_nodes {
        let terms: Vec<_> = (0..problem.demands.len())
            .filter_map(|k| ix.om.get(&(k, d)).map(|&v| (v, 1.0)))
            .collect();
        let beta = ix.bpr[&d];
        let mut hi = terms.clone();
        hi.push((beta, -t.node(d).params.proc_capacity));
        b.row(format!("c27_{}", b.n(d)), 27, hi, Sense::Le, 0.0);
        let mut lo = terms;
        lo.push((beta, -MIN_PLACEMENT_MIPS));
        b.row(format!("c28_{}", b.n(d)), 28, lo, Sense::Ge, 0.0);
    }

    // Valid cuts: a selected destination is processing, and every node that
    // separates the source from it carries traffic.
    for (k, dem) in problem.demands.iter().enumerate() {
        let s = dem.source;
        for &d in &candidates[k] {
            let a = ix.alpha[&(k, d)];
            let pair = format!("{}_{}", b.n(s), b.n(d));
            b.row(
                format!("cut27_{pair}"),
                27,
                vec![(a, 1.0), (ix.bpr[&d], -1.0)],
                Sense::Le,
                0.0,
            );
            for n in separators(t, s, d) {
                let mut terms = vec![(a, 1.0), (ix.bnet[&n], -1.0)];
                if let Some(&onu) = ix.bonu.get(&n) {
                    terms.push((onu, -1.0));
                }
                let name = format!("cut25_{pair}_{}", b.n(n));
                b.row(name, 25, terms, Sense::Le, 0.0);
            }
        }
    }
    debug_assert!(server.index() < t.len());

    Ok(ModelInstance {
        topology: t,
        problem: problem.clone(),
        layout,
        vars: b.vars,
        rows: b.rows,
        candidates,
        index: ix,
    })
}
