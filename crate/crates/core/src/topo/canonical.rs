//! The reference car park: 16 parked vehicles in four vehicular clouds of four,
//! one edge node per cloud outside the lot, one OLT and a single wired chain to
//! the cloud server.

use super::catalog::{self, WIRED_CHAIN};
use super::{Link, Medium, Node, NodeId, NodeKind, Topology};

/// Vehicles per vehicular cloud.
pub const CLUSTER_SIZE: usize = 4;

/// Default demand source for single-demand studies: the outer corner vehicle of
/// the first vehicular cloud.
pub const CANONICAL_SOURCE: &str = "v01";

// Bay columns / rows inside the 45 m x 45 m lot. Adjacent cars are 2 m apart
// side by side and 4.8 m apart front to back; the four clouds are separated by
// driving aisles. Pairwise distances span [2, 23.43] m.
const COLUMNS: [f64; 4] = [15.0, 17.0, 28.0, 30.0];
const ROWS: [f64; 4] = [13.5, 18.3, 26.7, 31.5];

// Edge node of the lower-left cloud, on the lot diagonal, placed so that its
// mean distance to the four vehicles it controls is 30 m. The others mirror it.
const EDGE_OFFSET: (f64, f64) = (-5.0115, -5.4347);
const LOT_SIDE: f64 = 45.0;

fn vehicle_positions() -> Vec<(f64, f64)> {
    // Cloud k covers a 2x2 block of bays.
    let blocks = [(0, 0), (2, 0), (0, 2), (2, 2)];
    let mut out = Vec::with_capacity(16);
    for (cx, cy) in blocks {
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            out.push((COLUMNS[cx + dx], ROWS[cy + dy]));
        }
    }
    out
}

fn edge_positions() -> [(f64, f64); 4] {
    let (x, y) = EDGE_OFFSET;
    let (fx, fy) = (LOT_SIDE - x, LOT_SIDE - y);
    [(x, y), (fx, y), (x, fy), (fx, fy)]
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Builds the reference parking-lot topology with catalog parameters.
pub fn canonical_parking_lot() -> Topology {
    let mut nodes = Vec::new();
    for (i, pos) in vehicle_positions().into_iter().enumerate() {
        nodes.push(Node {
            id: format!("v{:02}", i + 1),
            kind: NodeKind::Vehicle,
            params: catalog::defaults(NodeKind::Vehicle),
            position: Some(pos),
        });
    }
    for (i, pos) in edge_positions().into_iter().enumerate() {
        nodes.push(Node {
            id: format!("e{}", i + 1),
            kind: NodeKind::EdgeNode,
            params: catalog::defaults(NodeKind::EdgeNode),
            position: Some(pos),
        });
    }
    for (kind, id) in WIRED_CHAIN {
        nodes.push(Node {
            id: id.to_string(),
            kind,
            params: catalog::defaults(kind),
            position: None,
        });
    }

    let vehicles = 16;
    let edge = |k: usize| NodeId((vehicles + k) as u32);
    let chain = |k: usize| NodeId((vehicles + 4 + k) as u32);
    let pos = |n: NodeId| {
        nodes[n.index()]
            .position
            .expect("wireless nodes are placed")
    };
    let wireless = |a: NodeId, b: NodeId, medium: Medium| Link {
        from: a,
        to: b,
        medium,
        distance_m: dist(pos(a), pos(b)),
        rate_bps: catalog::link_rate(medium, &nodes[a.index()].params, &nodes[b.index()].params),
    };

    let mut links = Vec::new();
    for i in 0..vehicles {
        for j in (i + 1)..vehicles {
            links.push(wireless(NodeId(i as u32), NodeId(j as u32), Medium::Dsrc));
        }
    }
    for i in 0..vehicles {
        links.push(wireless(
            NodeId(i as u32),
            edge(i / CLUSTER_SIZE),
            Medium::Wifi,
        ));
    }
    for a in 0..4 {
        for b in (a + 1)..4 {
            links.push(wireless(edge(a), edge(b), Medium::Wifi));
        }
    }
    let fiber = |a: NodeId, b: NodeId| Link {
        from: a,
        to: b,
        medium: Medium::Fiber,
        distance_m: 0.0,
        rate_bps: catalog::link_rate(
            Medium::Fiber,
            &nodes[a.index()].params,
            &nodes[b.index()].params,
        ),
    };
    for e in 0..4 {
        links.push(fiber(edge(e), chain(0)));
    }
    for k in 0..WIRED_CHAIN.len() - 1 {
        links.push(fiber(chain(k), chain(k + 1)));
    }

    Topology::new(nodes, links).expect("reference topology is valid")
}
