//! Power model of the architecture and the feasibility checker.
//!
//! Every node draws `PUE_n * (WN_n + WP_n)`: networking power `WN_n` made of an
//! idle charge while the node carries traffic plus per-bit transmit / receive
//! energy, and processing power `WP_n` made of an idle charge while the node hosts
//! a placement plus a per-MIPS load term.
//!
//! Traffic is in bit/s, processing in MIPS and power in watts throughout.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::demand::{Demand, SplitLimit, TrafficMode};
use crate::error::{Error, Result};
use crate::topo::{ArcId, Interface, Layer, Link, Medium, Node, NodeId, NodeKind, Topology};

/// Placements at or below this many MIPS count as absent.
pub const MIPS_TOL: f64 = 1e-6;
/// Flows at or below this many bit/s count as absent.
pub const TRAFFIC_TOL_BPS: f64 = 1.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Load-proportional networking energy of a wired device port, J/bit. Edge
/// nodes report their ONU.
pub fn energy_per_bit(node: &Node) -> Result<f64> {
    let p = &node.params;
    let (max, idle, rate) = match node.kind {
        NodeKind::EdgeNode => (
            p.onu_max.unwrap_or(0.0),
            p.onu_idle.unwrap_or(0.0),
            p.onu_rate.unwrap_or(0.0),
        ),
        k if k.is_wired_tier() => (p.net_max, p.net_idle, p.node_rate.unwrap_or(0.0)),
        k => {
            return Err(Error::Domain(format!(
                "{k} `{}` has no wired energy per bit",
                node.id
            )))
        }
    };
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("`{}` has zero rate", node.id)));
    }
    Ok((max - idle) / rate)
}

fn radio_of(t: &Topology, n: NodeId, arc: &Link) -> Result<(f64, f64)> {
    if !arc.medium.is_wireless() {
        return Err(Error::Domain(format!(
            "link `{}`-`{}` is wired",
            t.node(arc.from).id,
            t.node(arc.to).id
        )));
    }
    t.node(n)
        .params
        .radio(arc.medium)
        .ok_or_else(|| Error::Domain(format!("`{}` has no {:?} radio", t.node(n).id, arc.medium)))
}

/// Transmit energy of a wireless arc, J/bit: `TX / B + eps * D^2` of the sender.
pub fn wireless_tx_energy(t: &Topology, arc: &Link) -> Result<f64> {
    let (tx_w, _) = radio_of(t, arc.from, arc)?;
    let eps = t.node(arc.from).params.amp_factor;
    Ok(tx_w / arc.rate_bps + eps * arc.distance_m * arc.distance_m)
}

/// Receive energy of a wireless arc, J/bit: receiver sensitivity (W) over rate.
pub fn wireless_rx_energy(t: &Topology, arc: &Link) -> Result<f64> {
    let (_, rx_dbm) = radio_of(t, arc.to, arc)?;
    Ok(dbm_to_watts(rx_dbm) / arc.rate_bps)
}

/// Load-proportional processing power, W/MIPS.
pub fn processing_efficiency(node: &Node) -> Result<f64> {
    let p = &node.params;
    if !(p.proc_capacity > 0.0) {
        return Err(Error::Domain(format!(
            "`{}` has no processing capacity",
            node.id
        )));
    }
    Ok((p.proc_max - p.proc_idle) / p.proc_capacity)
}

/// Per-bit energy of one directed arc, split by the side that pays it (before PUE).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcEnergy {
    pub sender: f64,
    pub receiver: f64,
}

/// Wireless arcs charge transmission to the sender and reception to the receiver.
/// On fibre, edge ONUs pay for traffic in both directions and wired devices for
/// the traffic entering them; the cloud server pays nothing.
pub fn arc_energy(t: &Topology, a: ArcId) -> ArcEnergy {
    let arc = t.arc(a);
    if arc.medium.is_wireless() {
        return ArcEnergy {
            sender: wireless_tx_energy(t, arc).expect("validated wireless arc"),
            receiver: wireless_rx_energy(t, arc).expect("validated wireless arc"),
        };
    }
    let (from, to) = (t.node(arc.from), t.node(arc.to));
    let sender = if from.kind == NodeKind::EdgeNode {
        energy_per_bit(from).expect("validated edge")
    } else {
        0.0
    };
    let receiver = if to.kind == NodeKind::EdgeNode || to.kind.is_wired_tier() {
        energy_per_bit(to).expect("validated wired device")
    } else {
        0.0
    };
    ArcEnergy { sender, receiver }
}

/// PUE-weighted energy of one bit on arc `a`, J/bit.
pub fn arc_cost(t: &Topology, a: ArcId) -> f64 {
    let e = arc_energy(t, a);
    let arc = t.arc(a);
    t.node(arc.from).params.pue * e.sender + t.node(arc.to).params.pue * e.receiver
}

/// Idle charges a node incurs, before PUE.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdleCharges {
    /// Networking idle (OBU, access point or attributed wired idle).
    pub net: f64,
    /// Edge ONU idle.
    pub onu: f64,
    pub proc: f64,
}

pub fn idle_charges(node: &Node) -> IdleCharges {
    IdleCharges {
        net: node.params.net_idle_charged,
        onu: node.params.onu_idle.unwrap_or(0.0),
        proc: node.params.proc_idle,
    }
}

/// Placements and routed flows of one demand.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Plan {
    /// Processing placed at each destination, MIPS.
    pub placements: BTreeMap<NodeId, f64>,
    /// Flow per arc of the commodity heading to each destination, bit/s.
    pub flows: BTreeMap<NodeId, BTreeMap<ArcId, f64>>,
}

impl Plan {
    pub fn is_empty(&self) -> bool {
        self.placements.values().all(|&w| w <= MIPS_TOL)
    }

    /// Selected destinations (`alpha_sd = 1`).
    pub fn destinations(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.placements
            .iter()
            .filter(|(_, &w)| w > MIPS_TOL)
            .map(|(&d, _)| d)
    }

    /// Number of selected destinations (`Q_s`).
    pub fn splits(&self) -> usize {
        self.destinations().count()
    }

    /// Net outflow of the commodity towards `d` at node `n`.
    pub fn net_outflow(&self, t: &Topology, d: NodeId, n: NodeId) -> f64 {
        let Some(f) = self.flows.get(&d) else {
            return 0.0;
        };
        let out: f64 = t.out_arcs(n).iter().filter_map(|a| f.get(a)).sum();
        let inn: f64 = t.in_arcs(n).iter().filter_map(|a| f.get(a)).sum();
        out - inn
    }

    /// Adds `amount` bit/s along a route for the commodity towards `d`.
    pub fn add_route_flow(&mut self, d: NodeId, arcs: &[ArcId], amount: f64) {
        let f = self.flows.entry(d).or_default();
        for &a in arcs {
            *f.entry(a).or_insert(0.0) += amount;
        }
    }
}

/// A complete solution: one [`Plan`] per demand, in demand order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    pub plans: Vec<Plan>,
}

/// Which nodes pay idle charges.
#[derive(Clone, Debug, PartialEq)]
pub struct Activation {
    /// `beta^NET`: vehicles and wired devices carrying any traffic, edges using
    /// their access point.
    pub net: Vec<bool>,
    /// `beta^PR`: nodes hosting any placement.
    pub proc: Vec<bool>,
    /// `beta^ONU`: edges exchanging traffic with the OLT.
    pub onu: Vec<bool>,
}

/// MIPS placed per processing layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LayerMips {
    pub vehicles: f64,
    pub edge: f64,
    pub cloud: f64,
}

impl Assignment {
    pub fn with_demands(n: usize) -> Assignment {
        Assignment {
            plans: vec![Plan::default(); n],
        }
    }

    /// Plans of `other` appended after those of `self`.
    pub fn union(mut self, other: Assignment) -> Assignment {
        self.plans.extend(other.plans);
        self
    }

    /// Total flow per arc over all commodities.
    pub fn arc_flows(&self, t: &Topology) -> Vec<f64> {
        let mut out = vec![0.0; t.arcs().len()];
        for plan in &self.plans {
            for f in plan.flows.values() {
                for (&a, &v) in f {
                    out[a.index()] += v;
                }
            }
        }
        out
    }

    /// Total placement per node over all demands.
    pub fn node_mips(&self, t: &Topology) -> Vec<f64> {
        let mut out = vec![0.0; t.len()];
        for plan in &self.plans {
            for (&d, &w) in &plan.placements {
                out[d.index()] += w;
            }
        }
        out
    }

    pub fn layer_mips(&self, t: &Topology) -> LayerMips {
        let mut out = LayerMips::default();
        for (i, w) in self.node_mips(t).into_iter().enumerate() {
            match t.node(NodeId(i as u32)).kind.layer() {
                Some(Layer::Vehicular) => out.vehicles += w,
                Some(Layer::Edge) => out.edge += w,
                Some(Layer::Cloud) => out.cloud += w,
                None => {}
            }
        }
        out
    }

    pub fn activation(&self, t: &Topology) -> Activation {
        activation_from(t, &self.arc_flows(t), &self.node_mips(t))
    }
}

fn activation_from(t: &Topology, flows: &[f64], mips: &[f64]) -> Activation {
    let n = t.len();
    let mut wireless = vec![0.0; n];
    let mut fiber = vec![0.0; n];
    for a in t.arc_ids() {
        let arc = t.arc(a);
        let v = flows[a.index()];
        let bucket = if arc.medium.is_wireless() {
            &mut wireless
        } else {
            &mut fiber
        };
        bucket[arc.from.index()] += v;
        bucket[arc.to.index()] += v;
    }
    let mut act = Activation {
        net: vec![false; n],
        proc: vec![false; n],
        onu: vec![false; n],
    };
    for id in t.node_ids() {
        let i = id.index();
        let kind = t.node(id).kind;
        act.proc[i] = mips[i] > MIPS_TOL;
        match kind {
            NodeKind::EdgeNode => {
                act.net[i] = wireless[i] > TRAFFIC_TOL_BPS;
                act.onu[i] = fiber[i] > TRAFFIC_TOL_BPS;
            }
            NodeKind::CloudServer => {}
            _ => act.net[i] = wireless[i] + fiber[i] > TRAFFIC_TOL_BPS,
        }
    }
    act
}

/// Processing power of a node hosting `mips` in total, W before PUE.
pub fn node_processing_power(node: &Node, mips: f64) -> Result<f64> {
    if mips <= MIPS_TOL {
        return Ok(0.0);
    }
    if mips > node.params.proc_capacity + MIPS_TOL {
        return Err(Error::Domain(format!(
            "`{}` hosts {mips} MIPS above its capacity {}",
            node.id, node.params.proc_capacity
        )));
    }
    Ok(node.params.proc_idle + mips * processing_efficiency(node)?)
}

/// Networking power of node `n` given the total flow on every arc, W before PUE.
pub fn node_networking_power(t: &Topology, n: NodeId, arc_flows: &[f64]) -> Result<f64> {
    let node = t.node(n);
    if node.kind == NodeKind::CloudServer {
        return Ok(0.0);
    }
    let mut load: BTreeMap<Interface, f64> = BTreeMap::new();
    let mut wireless = 0.0;
    let mut fiber = 0.0;
    let mut traffic_w = 0.0;
    for (arcs, outgoing) in [(t.out_arcs(n), true), (t.in_arcs(n), false)] {
        for &a in arcs {
            let v = arc_flows[a.index()];
            if v == 0.0 {
                continue;
            }
            let arc = t.arc(a);
            if let Some(iface) = t.interface(n, arc.medium) {
                *load.entry(iface).or_insert(0.0) += v;
            }
            if arc.medium == Medium::Fiber {
                fiber += v;
            } else {
                wireless += v;
            }
            let e = arc_energy(t, a);
            traffic_w += v * if outgoing { e.sender } else { e.receiver };
        }
    }
    for (iface, v) in load {
        let cap = t.interface_capacity(n, iface);
        if v > cap + TRAFFIC_TOL_BPS {
            return Err(Error::Domain(format!(
                "`{}` {iface:?} interface carries {v} bit/s above its rate {cap}",
                node.id
            )));
        }
    }
    let idle = idle_charges(node);
    let idle_w = match node.kind {
        NodeKind::EdgeNode => {
            let ap = if wireless > TRAFFIC_TOL_BPS {
                idle.net
            } else {
                0.0
            };
            let onu = if fiber > TRAFFIC_TOL_BPS {
                idle.onu
            } else {
                0.0
            };
            ap + onu
        }
        _ if wireless + fiber > TRAFFIC_TOL_BPS => idle.net,
        _ => 0.0,
    };
    Ok(idle_w + traffic_w)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodePower {
    pub node: String,
    pub kind: NodeKind,
    /// `WN_n`, before PUE.
    pub net_w: f64,
    /// `WP_n`, before PUE.
    pub proc_w: f64,
    /// `PUE_n * (WN_n + WP_n)`.
    pub total_w: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PowerBreakdown {
    /// Nodes drawing any power, in topology order.
    pub nodes: Vec<NodePower>,
    pub tp: f64,
    /// PUE-weighted networking share of `tp`.
    pub tp_net: f64,
    /// PUE-weighted processing share of `tp`.
    pub tp_proc: f64,
}

/// Power drawn by an assignment. Only node-level limits are checked here; use
/// [`total_power`] to reject assignments that break any constraint.
pub fn evaluate(t: &Topology, a: &Assignment) -> Result<PowerBreakdown> {
    let flows = a.arc_flows(t);
    let mips = a.node_mips(t);
    let mut out = PowerBreakdown::default();
    for n in t.node_ids() {
        let node = t.node(n);
        let net_w = node_networking_power(t, n, &flows)?;
        let proc_w = node_processing_power(node, mips[n.index()])?;
        if net_w == 0.0 && proc_w == 0.0 {
            continue;
        }
        let pue = node.params.pue;
        out.tp_net += pue * net_w;
        out.tp_proc += pue * proc_w;
        out.nodes.push(NodePower {
            node: node.id.clone(),
            kind: node.kind,
            net_w,
            proc_w,
            total_w: pue * (net_w + proc_w),
        });
    }
    out.tp = out.nodes.iter().map(|p| p.total_w).sum();
    Ok(out)
}

/// Power of a feasible assignment; an infeasible one yields
/// [`Error::Infeasible`] with the list of violations.
pub fn total_power(
    t: &Topology,
    a: &Assignment,
    demands: &[Demand],
    splits: SplitLimit,
    mode: TrafficMode,
) -> Result<PowerBreakdown> {
    let report = check_feasibility(t, a, demands, splits, mode);
    if !report.is_feasible() {
        return Err(Error::Infeasible(report));
    }
    evaluate(t, a)
}

/// One broken model constraint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    /// Constraint number of the formulation (12 to 31).
    pub constraint: u8,
    pub subject: String,
    /// Amount by which the constraint is exceeded, in its native unit.
    pub magnitude: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, constraint: u8) -> bool {
        self.violations.iter().any(|v| v.constraint == constraint)
    }

    fn push(&mut self, constraint: u8, subject: String, magnitude: f64) {
        self.violations.push(Violation {
            constraint,
            subject,
            magnitude,
        });
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("feasible");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "({}) {} by {:.6}", v.constraint, v.subject, v.magnitude)?;
        }
        Ok(())
    }
}

/// Checks service, capacity, traffic coupling, conservation, interface rates and
/// the split limit.
pub fn check_feasibility(
    t: &Topology,
    a: &Assignment,
    demands: &[Demand],
    splits: SplitLimit,
    mode: TrafficMode,
) -> FeasibilityReport {
    let mut r = FeasibilityReport::default();
    if a.plans.len() != demands.len() {
        r.push(
            12,
            format!("{} plans for {} demands", a.plans.len(), demands.len()),
            (a.plans.len() as f64 - demands.len() as f64).abs(),
        );
        return r;
    }
    let name = |n: NodeId| t.node(n).id.as_str();

    for (k, (plan, dem)) in a.plans.iter().zip(demands).enumerate() {
        let s = dem.source;
        let served: f64 = plan.placements.values().sum();
        if (served - dem.mips).abs() > MIPS_TOL {
            r.push(
                12,
                format!("demand {k} served {served} of {} MIPS", dem.mips),
                (served - dem.mips).abs(),
            );
        }
        for (&d, &w) in &plan.placements {
            if w < -MIPS_TOL {
                r.push(
                    12,
                    format!("demand {k} negative placement at `{}`", name(d)),
                    -w,
                );
            }
            if d == s && w > MIPS_TOL {
                r.push(
                    12,
                    format!("demand {k} processed locally at `{}`", name(d)),
                    w,
                );
            }
        }
        let q = plan.splits();
        if !splits.allows(q) {
            let limit = splits.bound(usize::MAX) as f64;
            r.push(
                24,
                format!("demand {k} uses {q} destinations (limit {splits})"),
                q as f64 - limit,
            );
        }

        let mut dests: Vec<NodeId> = plan.placements.keys().copied().collect();
        dests.extend(plan.flows.keys().copied());
        dests.sort();
        dests.dedup();
        for d in dests {
            let w = plan.placements.get(&d).copied().unwrap_or(0.0);
            let selected = w > MIPS_TOL;
            if let Some(f) = plan.flows.get(&d) {
                for (&arc, &v) in f {
                    if v < -TRAFFIC_TOL_BPS {
                        r.push(17, format!("demand {k} negative flow on arc {}", arc.0), -v);
                    }
                }
            }
            let sent = plan.net_outflow(t, d, s);
            let expected = if selected {
                mode.traffic_to(dem, w)
            } else {
                0.0
            };
            if !selected && sent.abs() > TRAFFIC_TOL_BPS {
                r.push(
                    15,
                    format!("demand {k} sends {sent} bit/s to unselected `{}`", name(d)),
                    sent.abs(),
                );
            } else if (sent - expected).abs() > TRAFFIC_TOL_BPS {
                let tag = match mode {
                    TrafficMode::Ft => 16,
                    TrafficMode::Pt => 31,
                };
                r.push(
                    tag,
                    format!(
                        "demand {k} sends {sent} bit/s to `{}`, expected {expected}",
                        name(d)
                    ),
                    (sent - expected).abs(),
                );
            }
            if d == s {
                continue;
            }
            for n in t.node_ids() {
                let net = plan.net_outflow(t, d, n);
                let want = if n == s {
                    sent
                } else if n == d {
                    -sent
                } else {
                    0.0
                };
                if (net - want).abs() > TRAFFIC_TOL_BPS {
                    r.push(
                        17,
                        format!("demand {k} to `{}` unbalanced at `{}`", name(d), name(n)),
                        (net - want).abs(),
                    );
                }
            }
        }
    }

    for (n, w) in a.node_mips(t).into_iter().enumerate() {
        let node = &t.nodes()[n];
        if w > node.params.proc_capacity + MIPS_TOL {
            r.push(
                13,
                format!("`{}` hosts {w} MIPS", node.id),
                w - node.params.proc_capacity,
            );
        }
    }

    let flows = a.arc_flows(t);
    let mut load: BTreeMap<(NodeId, Interface), f64> = BTreeMap::new();
    for arc_id in t.arc_ids() {
        let v = flows[arc_id.index()];
        if v == 0.0 {
            continue;
        }
        let arc = t.arc(arc_id);
        for n in [arc.from, arc.to] {
            if let Some(iface) = t.interface(n, arc.medium) {
                *load.entry((n, iface)).or_insert(0.0) += v;
            }
        }
    }
    for ((n, iface), v) in load {
        let cap = t.interface_capacity(n, iface);
        if v > cap + TRAFFIC_TOL_BPS {
            let tag = match iface {
                Interface::Wired => 18,
                Interface::Dsrc => 19,
                Interface::VehicleWifi => 20,
                Interface::EdgeWireless => 21,
                Interface::Onu => 22,
            };
            r.push(
                tag,
                format!("`{}` {iface:?} carries {v} bit/s (rate {cap})", name(n)),
                v - cap,
            );
        }
    }
    r
}
