//! Car parks of arbitrary layout built from catalog parameters.

use super::catalog::{self, WIRED_CHAIN};
use super::{Link, Medium, Node, NodeId, NodeKind, Topology};
use crate::error::{Error, Result};

/// A car park with vehicles and edge nodes at the given positions (m). Every
/// vehicle pair is DSRC-linked, each vehicle joins the WiFi of its nearest edge
/// node (lowest index on ties), edge nodes are WiFi-meshed and all edge nodes
/// feed one OLT and the wired chain to the cloud server.
pub fn car_park(vehicles: &[(f64, f64)], edges: &[(f64, f64)]) -> Result<Topology> {
    if vehicles.is_empty() || edges.is_empty() {
        return Err(Error::Validation(
            "a car park needs vehicles and edge nodes".into(),
        ));
    }
    let mut nodes = Vec::new();
    let place = |id: String, kind: NodeKind, position: Option<(f64, f64)>| Node {
        id,
        kind,
        params: catalog::defaults(kind),
        position,
    };
    for (i, &p) in vehicles.iter().enumerate() {
        nodes.push(place(format!("v{:02}", i + 1), NodeKind::Vehicle, Some(p)));
    }
    for (i, &p) in edges.iter().enumerate() {
        nodes.push(place(format!("e{}", i + 1), NodeKind::EdgeNode, Some(p)));
    }
    for (kind, id) in WIRED_CHAIN {
        nodes.push(place(id.to_string(), kind, None));
    }

    let nv = vehicles.len();
    let ne = edges.len();
    let dist = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    let link = |a: usize, b: usize, medium: Medium| {
        let distance_m = match medium {
            Medium::Fiber => 0.0,
            _ => dist(nodes[a].position.unwrap(), nodes[b].position.unwrap()),
        };
        Link {
            from: NodeId(a as u32),
            to: NodeId(b as u32),
            medium,
            distance_m,
            rate_bps: catalog::link_rate(medium, &nodes[a].params, &nodes[b].params),
        }
    };

    let mut links = Vec::new();
    for i in 0..nv {
        for j in (i + 1)..nv {
            links.push(link(i, j, Medium::Dsrc));
        }
    }
    for (i, &p) in vehicles.iter().enumerate() {
        let nearest = (0..ne)
            .min_by(|&a, &b| dist(p, edges[a]).total_cmp(&dist(p, edges[b])))
            .expect("edges present");
        links.push(link(i, nv + nearest, Medium::Wifi));
    }
    for a in 0..ne {
        for b in (a + 1)..ne {
            links.push(link(nv + a, nv + b, Medium::Wifi));
        }
    }
    let olt = nv + ne;
    for e in 0..ne {
        links.push(link(nv + e, olt, Medium::Fiber));
    }
    for k in 0..WIRED_CHAIN.len() - 1 {
        links.push(link(olt + k, olt + k + 1, Medium::Fiber));
    }
    Topology::new(nodes, links)
}
