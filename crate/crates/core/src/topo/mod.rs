//! Typed network graph of the three-layer vehicular / edge / cloud architecture.
//!
//! A [`Topology`] is built from a node list and a list of undirected links; every
//! link is mirrored into two directed arcs so neighbour sets are symmetric by
//! construction. Rates are in bit/s, distances in metres, powers in watts and
//! processing capacities in MIPS.

mod canonical;
pub mod catalog;
mod file;
mod generate;
mod routes;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use canonical::{canonical_parking_lot, CANONICAL_SOURCE, CLUSTER_SIZE};
pub use file::{load_topology, parse_topology, save_topology, topology_to_json, TopologyFile};
pub use generate::car_park;
pub(crate) use routes::all_min_hop_routes;
pub use routes::{min_hop_routes, Route};

/// Index of a node inside its [`Topology`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Index of a directed arc inside its [`Topology`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcId(pub u32);

impl ArcId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Vehicle,
    EdgeNode,
    Olt,
    AggSwitch,
    AggRouter,
    CoreRouter,
    CloudRouter,
    CloudSwitch,
    CloudServer,
}

impl NodeKind {
    pub const ALL: [NodeKind; 9] = [
        NodeKind::Vehicle,
        NodeKind::EdgeNode,
        NodeKind::Olt,
        NodeKind::AggSwitch,
        NodeKind::AggRouter,
        NodeKind::CoreRouter,
        NodeKind::CloudRouter,
        NodeKind::CloudSwitch,
        NodeKind::CloudServer,
    ];

    /// Devices on the fibre chain between the edge ONUs and the cloud server.
    pub fn is_wired_tier(self) -> bool {
        matches!(
            self,
            NodeKind::Olt
                | NodeKind::AggSwitch
                | NodeKind::AggRouter
                | NodeKind::CoreRouter
                | NodeKind::CloudRouter
                | NodeKind::CloudSwitch
        )
    }

    pub fn is_wireless(self) -> bool {
        matches!(self, NodeKind::Vehicle | NodeKind::EdgeNode)
    }

    /// Processing layer, for kinds that may host processing.
    pub fn layer(self) -> Option<Layer> {
        match self {
            NodeKind::Vehicle => Some(Layer::Vehicular),
            NodeKind::EdgeNode => Some(Layer::Edge),
            NodeKind::CloudServer => Some(Layer::Cloud),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Vehicle => "vehicle",
            NodeKind::EdgeNode => "edge_node",
            NodeKind::Olt => "olt",
            NodeKind::AggSwitch => "agg_switch",
            NodeKind::AggRouter => "agg_router",
            NodeKind::CoreRouter => "core_router",
            NodeKind::CloudRouter => "cloud_router",
            NodeKind::CloudSwitch => "cloud_switch",
            NodeKind::CloudServer => "cloud_server",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Vehicular,
    Edge,
    Cloud,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Medium {
    Dsrc,
    Wifi,
    Fiber,
}

impl Medium {
    pub fn is_wireless(self) -> bool {
        !matches!(self, Medium::Fiber)
    }
}

/// Rate-capped communication interface of a node. Each interface carries an
/// "incoming plus outgoing" budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Interface {
    /// Vehicle V2V radio, capped by the node rate.
    Dsrc,
    /// Vehicle-to-edge radio, capped by the vehicle WiFi rate.
    VehicleWifi,
    /// Edge access point towards vehicles and other edges.
    EdgeWireless,
    /// Edge optical network unit towards the OLT.
    Onu,
    /// Port budget of an OLT / metro / core / cloud-side device.
    Wired,
}

/// Parameter set of one node. Fields that only apply to some kinds are optional.
///
/// `net_idle` is the full device idle power; `net_idle_charged` is the share charged
/// to this application when the device is active (equal to `net_idle` except for the
/// shared wired tiers).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeParams {
    pub proc_capacity: f64,
    pub proc_max: f64,
    pub proc_idle: f64,
    pub net_max: f64,
    pub net_idle: f64,
    pub net_idle_charged: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wifi_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onu_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onu_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onu_idle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsrc_tx_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsrc_rx_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wifi_tx_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wifi_rx_dbm: Option<f64>,
    pub amp_factor: f64,
    pub pue: f64,
}

impl NodeParams {
    /// Transmit power and receiver sensitivity of the radio used on `medium`.
    pub fn radio(&self, medium: Medium) -> Option<(f64, f64)> {
        match medium {
            Medium::Dsrc => self.dsrc_tx_w.zip(self.dsrc_rx_dbm),
            Medium::Wifi => self.wifi_tx_w.zip(self.wifi_rx_dbm),
            Medium::Fiber => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub params: NodeParams,
    pub position: Option<(f64, f64)>,
}

/// A directed communication link.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub medium: Medium,
    pub distance_m: f64,
    pub rate_bps: f64,
}

impl Link {
    pub fn reversed(&self) -> Link {
        Link {
            from: self.to,
            to: self.from,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    /// Undirected links in declaration order; arc `2k` is link `k` as declared and
    /// arc `2k+1` its reverse.
    links: Vec<Link>,
    arcs: Vec<Link>,
    out_arcs: Vec<Vec<ArcId>>,
    in_arcs: Vec<Vec<ArcId>>,
    index: HashMap<String, NodeId>,
    id_rank: Vec<u32>,
}

impl Topology {
    /// Builds and validates a topology from nodes and undirected links.
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Topology> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.id.is_empty() {
                return Err(Error::Validation(format!("node #{i} has an empty id")));
            }
            if index.insert(node.id.clone(), NodeId(i as u32)).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate node id `{}`",
                    node.id
                )));
            }
        }

        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| nodes[a].id.cmp(&nodes[b].id));
        let mut id_rank = vec![0u32; nodes.len()];
        for (rank, &i) in order.iter().enumerate() {
            id_rank[i] = rank as u32;
        }

        let mut arcs = Vec::with_capacity(links.len() * 2);
        let mut out_arcs = vec![Vec::new(); nodes.len()];
        let mut in_arcs = vec![Vec::new(); nodes.len()];
        for link in &links {
            for arc in [link.clone(), link.reversed()] {
                let id = ArcId(arcs.len() as u32);
                if arc.from.index() >= nodes.len() || arc.to.index() >= nodes.len() {
                    return Err(Error::Validation("link endpoint out of range".into()));
                }
                out_arcs[arc.from.index()].push(id);
                in_arcs[arc.to.index()].push(id);
                arcs.push(arc);
            }
        }

        let topo = Topology {
            nodes,
            links,
            arcs,
            out_arcs,
            in_arcs,
            index,
            id_rank,
        };
        topo.validate()?;
        Ok(topo)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Undirected links as declared.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Directed arcs (every link in both directions).
    pub fn arcs(&self) -> &[Link] {
        &self.arcs
    }

    pub fn arc(&self, id: ArcId) -> &Link {
        &self.arcs[id.index()]
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = ArcId> + '_ {
        (0..self.arcs.len() as u32).map(ArcId)
    }

    pub fn out_arcs(&self, n: NodeId) -> &[ArcId] {
        &self.out_arcs[n.index()]
    }

    pub fn in_arcs(&self, n: NodeId) -> &[ArcId] {
        &self.in_arcs[n.index()]
    }

    pub fn find_arc(&self, from: NodeId, to: NodeId) -> Option<ArcId> {
        self.out_arcs(from)
            .iter()
            .copied()
            .find(|&a| self.arc(a).to == to)
    }

    /// Neighbour set `Nm_n`, sorted by node id.
    pub fn neighbors(&self, n: NodeId) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.out_arcs(n).iter().map(|&a| self.arc(a).to).collect();
        v.sort_by_key(|&m| self.id_rank(m));
        v.dedup();
        v
    }

    pub fn lookup(&self, id: &str) -> Result<NodeId> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    /// Position of the node id in lexicographic order of all ids.
    pub fn id_rank(&self, n: NodeId) -> u32 {
        self.id_rank[n.index()]
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(move |&n| self.node(n).kind == kind)
    }

    pub fn cloud_server(&self) -> NodeId {
        self.nodes_of_kind(NodeKind::CloudServer)
            .next()
            .expect("validated topology has a cloud server")
    }

    /// Total processing capacity of the vehicle and edge layers.
    pub fn distributed_capacity(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Vehicle | NodeKind::EdgeNode))
            .map(|n| n.params.proc_capacity)
            .sum()
    }

    /// Interface of `n` used by an arc of the given medium, `None` for the cloud
    /// server (which only receives and has no modelled port budget).
    pub fn interface(&self, n: NodeId, medium: Medium) -> Option<Interface> {
        match (self.node(n).kind, medium) {
            (NodeKind::Vehicle, Medium::Dsrc) => Some(Interface::Dsrc),
            (NodeKind::Vehicle, Medium::Wifi) => Some(Interface::VehicleWifi),
            (NodeKind::EdgeNode, Medium::Wifi) => Some(Interface::EdgeWireless),
            (NodeKind::EdgeNode, Medium::Fiber) => Some(Interface::Onu),
            (k, Medium::Fiber) if k.is_wired_tier() => Some(Interface::Wired),
            _ => None,
        }
    }

    /// Incoming-plus-outgoing rate budget of an interface, bit/s.
    pub fn interface_capacity(&self, n: NodeId, iface: Interface) -> f64 {
        let p = &self.node(n).params;
        let cap = match iface {
            Interface::Dsrc | Interface::EdgeWireless | Interface::Wired => p.node_rate,
            Interface::VehicleWifi => p.wifi_rate,
            Interface::Onu => p.onu_rate,
        };
        cap.unwrap_or(f64::INFINITY)
    }

    /// All rate-capped interfaces present in the topology, in a stable order.
    pub fn interfaces(&self) -> Vec<(NodeId, Interface)> {
        let mut set = BTreeSet::new();
        for arc in &self.arcs {
            for n in [arc.from, arc.to] {
                if let Some(i) = self.interface(n, arc.medium) {
                    set.insert((n, i));
                }
            }
        }
        set.into_iter().collect()
    }

    fn validate(&self) -> Result<()> {
        for node in &self.nodes {
            validate_params(node)?;
        }

        let servers = self.nodes_of_kind(NodeKind::CloudServer).count();
        if servers != 1 {
            return Err(Error::Validation(format!(
                "expected exactly one cloud_server, found {servers}"
            )));
        }

        let mut seen = BTreeSet::new();
        for link in &self.links {
            let (a, b) = (self.node(link.from), self.node(link.to));
            if link.from == link.to {
                return Err(Error::Validation(format!("self-loop on `{}`", a.id)));
            }
            let key = (link.from.min(link.to), link.from.max(link.to));
            if !seen.insert(key) {
                return Err(Error::Validation(format!(
                    "duplicate link between `{}` and `{}`",
                    a.id, b.id
                )));
            }
            let ok = match link.medium {
                Medium::Dsrc => a.kind == NodeKind::Vehicle && b.kind == NodeKind::Vehicle,
                Medium::Wifi => {
                    let kinds = [a.kind, b.kind];
                    kinds.contains(&NodeKind::EdgeNode)
                        && kinds
                            .iter()
                            .all(|k| matches!(k, NodeKind::Vehicle | NodeKind::EdgeNode))
                }
                Medium::Fiber => {
                    let wired = |k: NodeKind| k.is_wired_tier() || k == NodeKind::CloudServer;
                    (a.kind == NodeKind::EdgeNode && b.kind == NodeKind::Olt)
                        || (b.kind == NodeKind::EdgeNode && a.kind == NodeKind::Olt)
                        || (wired(a.kind) && wired(b.kind))
                }
            };
            if !ok {
                return Err(Error::Validation(format!(
                    "{:?} link not allowed between {} `{}` and {} `{}`",
                    link.medium, a.kind, a.id, b.kind, b.id
                )));
            }
            if !(link.rate_bps > 0.0 && link.rate_bps.is_finite()) {
                return Err(Error::Validation(format!(
                    "link `{}`-`{}` needs a positive rate",
                    a.id, b.id
                )));
            }
            if link.medium.is_wireless() && !(link.distance_m > 0.0) {
                return Err(Error::Validation(format!(
                    "wireless link `{}`-`{}` needs a positive distance",
                    a.id, b.id
                )));
            }
            if !(link.distance_m >= 0.0 && link.distance_m.is_finite()) {
                return Err(Error::Validation(format!(
                    "link `{}`-`{}` has an invalid distance",
                    a.id, b.id
                )));
            }
        }

        // Every OLT must reach the cloud server over fibre.
        let server = self.cloud_server();
        let olts: Vec<NodeId> = self.nodes_of_kind(NodeKind::Olt).collect();
        if olts.is_empty() {
            return Err(Error::Validation("no OLT in topology".into()));
        }
        for olt in olts {
            if !self.fiber_reaches(olt, server) {
                return Err(Error::Validation(format!(
                    "wired chain from `{}` does not reach the cloud server",
                    self.node(olt).id
                )));
            }
        }
        Ok(())
    }

    fn fiber_reaches(&self, from: NodeId, to: NodeId) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        seen[from.index()] = true;
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            for &a in self.out_arcs(n) {
                let arc = self.arc(a);
                if arc.medium == Medium::Fiber
                    && self.node(arc.to).kind != NodeKind::EdgeNode
                    && !seen[arc.to.index()]
                {
                    seen[arc.to.index()] = true;
                    stack.push(arc.to);
                }
            }
        }
        false
    }
}

fn validate_params(node: &Node) -> Result<()> {
    let p = &node.params;
    let err = |msg: String| Err(Error::Validation(format!("node `{}`: {msg}", node.id)));
    let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;

    for (name, v) in [
        ("proc_capacity", p.proc_capacity),
        ("proc_max", p.proc_max),
        ("proc_idle", p.proc_idle),
        ("net_max", p.net_max),
        ("net_idle", p.net_idle),
        ("net_idle_charged", p.net_idle_charged),
        ("amp_factor", p.amp_factor),
    ] {
        if !finite_nonneg(v) {
            return err(format!("{name} must be a finite non-negative number"));
        }
    }
    if p.proc_max < p.proc_idle {
        return err("proc_max must be >= proc_idle".into());
    }
    if p.net_max < p.net_idle {
        return err("net_max must be >= net_idle".into());
    }
    if p.net_idle_charged > p.net_idle {
        return err("net_idle_charged must not exceed net_idle".into());
    }
    if !(p.pue >= 1.0 && p.pue.is_finite()) {
        return err("pue must be >= 1".into());
    }
    for (name, v) in [
        ("node_rate", p.node_rate),
        ("wifi_rate", p.wifi_rate),
        ("onu_rate", p.onu_rate),
    ] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return err(format!("{name} must be positive"));
            }
        }
    }
    for (name, v) in [
        ("onu_max", p.onu_max),
        ("onu_idle", p.onu_idle),
        ("dsrc_tx_w", p.dsrc_tx_w),
        ("wifi_tx_w", p.wifi_tx_w),
    ] {
        if let Some(v) = v {
            if !finite_nonneg(v) {
                return err(format!("{name} must be a finite non-negative number"));
            }
        }
    }
    if let (Some(max), Some(idle)) = (p.onu_max, p.onu_idle) {
        if max < idle {
            return err("onu_max must be >= onu_idle".into());
        }
    }

    let require = |name: &str, v: Option<f64>| -> Result<()> {
        if v.is_none() {
            Err(Error::Validation(format!(
                "node `{}`: {} requires `{name}`",
                node.id, node.kind
            )))
        } else {
            Ok(())
        }
    };
    match node.kind {
        NodeKind::Vehicle => {
            require("node_rate", p.node_rate)?;
            require("wifi_rate", p.wifi_rate)?;
            require("dsrc_tx_w", p.dsrc_tx_w)?;
            require("dsrc_rx_dbm", p.dsrc_rx_dbm)?;
            require("wifi_tx_w", p.wifi_tx_w)?;
            require("wifi_rx_dbm", p.wifi_rx_dbm)?;
        }
        NodeKind::EdgeNode => {
            require("node_rate", p.node_rate)?;
            require("onu_rate", p.onu_rate)?;
            require("onu_max", p.onu_max)?;
            require("onu_idle", p.onu_idle)?;
            require("wifi_tx_w", p.wifi_tx_w)?;
            require("wifi_rx_dbm", p.wifi_rx_dbm)?;
        }
        NodeKind::CloudServer => {
            if !(p.proc_capacity > 0.0) {
                return err("cloud_server needs a positive processing capacity".into());
            }
        }
        k => {
            debug_assert!(k.is_wired_tier());
            require("node_rate", p.node_rate)?;
            if p.proc_capacity != 0.0 {
                return err("wired network devices have no processing capacity".into());
            }
        }
    }
    Ok(())
}
