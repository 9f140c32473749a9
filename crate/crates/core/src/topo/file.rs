//! JSON topology files.
//!
//! ```json
//! {
//!   "nodes": [{"id": "v01", "kind": "vehicle", "x": 15.0, "y": 13.5,
//!              "params": {"proc_capacity": 2400}}],
//!   "links": [{"from": "v01", "to": "e1", "medium": "wifi",
//!              "distance_m": 30.0, "rate_bps": 150000000}]
//! }
//! ```
//!
//! `params` overrides catalog defaults field by field. Each undirected link is
//! listed once. `distance_m` may be omitted when both endpoints have positions,
//! and `rate_bps` when the catalog rate for the medium applies.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{catalog, Link, Medium, Node, NodeKind, NodeParams, Topology};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub nodes: Vec<NodeEntry>,
    pub links: Vec<LinkEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub from: String,
    pub to: String,
    pub medium: Medium,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_bps: Option<f64>,
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_topology(&text)
}

pub fn parse_topology(text: &str) -> Result<Topology> {
    let file: TopologyFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("topology: {e}")))?;
    file.into_topology()
}

pub fn save_topology(t: &Topology, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, topology_to_json(t)).map_err(|e| Error::io(path, e))
}

pub fn topology_to_json(t: &Topology) -> String {
    let mut s =
        serde_json::to_string_pretty(&TopologyFile::from_topology(t)).expect("topology serializes");
    s.push('\n');
    s
}

impl TopologyFile {
    pub fn into_topology(self) -> Result<Topology> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for entry in &self.nodes {
            let params = apply_overrides(entry.kind, &entry.params)
                .map_err(|e| Error::Parse(format!("node `{}`: {e}", entry.id)))?;
            let position = match (entry.x, entry.y) {
                (Some(x), Some(y)) => Some((x, y)),
                (None, None) => None,
                _ => {
                    return Err(Error::Parse(format!(
                        "node `{}`: x and y must be given together",
                        entry.id
                    )))
                }
            };
            nodes.push(Node {
                id: entry.id.clone(),
                kind: entry.kind,
                params,
                position,
            });
        }

        let id_of = |name: &str| {
            nodes
                .iter()
                .position(|n| n.id == name)
                .map(|i| super::NodeId(i as u32))
                .ok_or_else(|| Error::Parse(format!("link references unknown node `{name}`")))
        };
        let mut links = Vec::with_capacity(self.links.len());
        for entry in &self.links {
            let from = id_of(&entry.from)?;
            let to = id_of(&entry.to)?;
            let (a, b) = (&nodes[from.index()], &nodes[to.index()]);
            let distance_m = match (entry.distance_m, entry.medium) {
                (Some(d), _) => d,
                (None, Medium::Fiber) => 0.0,
                (None, _) => match (a.position, b.position) {
                    (Some(p), Some(q)) => (p.0 - q.0).hypot(p.1 - q.1),
                    _ => {
                        return Err(Error::Parse(format!(
                            "link `{}`-`{}`: field `distance_m` required without node positions",
                            entry.from, entry.to
                        )))
                    }
                },
            };
            let rate_bps = entry
                .rate_bps
                .unwrap_or_else(|| catalog::link_rate(entry.medium, &a.params, &b.params));
            links.push(Link {
                from,
                to,
                medium: entry.medium,
                distance_m,
                rate_bps,
            });
        }
        Topology::new(nodes, links)
    }

    pub fn from_topology(t: &Topology) -> TopologyFile {
        let nodes = t
            .nodes()
            .iter()
            .map(|n| NodeEntry {
                id: n.id.clone(),
                kind: n.kind,
                x: n.position.map(|p| p.0),
                y: n.position.map(|p| p.1),
                params: diff_from_defaults(n.kind, &n.params),
            })
            .collect();
        let links = t
            .links()
            .iter()
            .map(|l| LinkEntry {
                from: t.node(l.from).id.clone(),
                to: t.node(l.to).id.clone(),
                medium: l.medium,
                distance_m: Some(l.distance_m),
                rate_bps: Some(l.rate_bps),
            })
            .collect();
        TopologyFile { nodes, links }
    }
}

fn params_object(p: &NodeParams) -> serde_json::Map<String, Value> {
    match serde_json::to_value(p).expect("params serialize") {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn apply_overrides(
    kind: NodeKind,
    overrides: &BTreeMap<String, Value>,
) -> std::result::Result<NodeParams, String> {
    let mut obj = params_object(&catalog::defaults(kind));
    for (k, v) in overrides {
        obj.insert(k.clone(), v.clone());
    }
    serde_json::from_value(Value::Object(obj)).map_err(|e| format!("params: {e}"))
}

fn diff_from_defaults(kind: NodeKind, p: &NodeParams) -> BTreeMap<String, Value> {
    let base = params_object(&catalog::defaults(kind));
    let actual = params_object(p);
    let mut out = BTreeMap::new();
    for (k, v) in &actual {
        if base.get(k) != Some(v) {
            out.insert(k.clone(), v.clone());
        }
    }
    for k in base.keys() {
        if !actual.contains_key(k) {
            out.insert(k.clone(), Value::Null);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::canonical_parking_lot;

    const MINIMAL: &str = r#"{
      "nodes": [
        {"id": "a", "kind": "vehicle", "x": 0, "y": 0},
        {"id": "b", "kind": "vehicle", "x": 3, "y": 4},
        {"id": "e", "kind": "edge_node", "x": 0, "y": 30},
        {"id": "olt", "kind": "olt"},
        {"id": "sw", "kind": "agg_switch"},
        {"id": "ar", "kind": "agg_router"},
        {"id": "cr", "kind": "core_router"},
        {"id": "dr", "kind": "cloud_router"},
        {"id": "ds", "kind": "cloud_switch"},
        {"id": "cloud", "kind": "cloud_server"}
      ],
      "links": [
        {"from": "a", "to": "b", "medium": "dsrc"},
        {"from": "a", "to": "e", "medium": "wifi"},
        {"from": "b", "to": "e", "medium": "wifi"},
        {"from": "e", "to": "olt", "medium": "fiber"},
        {"from": "olt", "to": "sw", "medium": "fiber"},
        {"from": "sw", "to": "ar", "medium": "fiber"},
        {"from": "ar", "to": "cr", "medium": "fiber"},
        {"from": "cr", "to": "dr", "medium": "fiber"},
        {"from": "dr", "to": "ds", "medium": "fiber"},
        {"from": "ds", "to": "cloud", "medium": "fiber"}
      ]
    }"#;

    #[test]
    fn minimal_file_loads() {
        let t = parse_topology(MINIMAL).unwrap();
        assert_eq!(t.len(), 10);
        let ab = t
            .find_arc(t.lookup("a").unwrap(), t.lookup("b").unwrap())
            .unwrap();
        assert_eq!(t.arc(ab).distance_m, 5.0);
        assert_eq!(t.arc(ab).rate_bps, 27e6);
        let eo = t
            .find_arc(t.lookup("e").unwrap(), t.lookup("olt").unwrap())
            .unwrap();
        assert_eq!(t.arc(eo).rate_bps, 10e9);
    }

    #[test]
    fn processing_max_below_idle_is_rejected() {
        let text = MINIMAL.replace(
            r#"{"id": "a", "kind": "vehicle", "x": 0, "y": 0}"#,
            r#"{"id": "a", "kind": "vehicle", "x": 0, "y": 0, "params": {"proc_max": 1.0}}"#,
        );
        let err = parse_topology(&text).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        assert!(err.to_string().contains("proc_max"));
    }

    #[test]
    fn unknown_param_names_the_field() {
        let text = MINIMAL.replace(
            r#"{"id": "a", "kind": "vehicle", "x": 0, "y": 0}"#,
            r#"{"id": "a", "kind": "vehicle", "x": 0, "y": 0, "params": {"cpu": 1.0}}"#,
        );
        let err = parse_topology(&text).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("cpu"), "{err}");
    }

    #[test]
    fn missing_kind_names_the_field() {
        let err = parse_topology(r#"{"nodes": [{"id": "a"}], "links": []}"#).unwrap_err();
        assert!(err.to_string().contains("kind"), "{err}");
    }

    #[test]
    fn canonical_round_trip_is_identity() {
        let t = canonical_parking_lot();
        let back = parse_topology(&topology_to_json(&t)).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn overrides_survive_round_trip() {
        let t = canonical_parking_lot();
        let mut nodes = t.nodes().to_vec();
        nodes[3].params.proc_capacity = 1234.5;
        nodes[3].params.dsrc_rx_dbm = Some(-80.5);
        let t = Topology::new(nodes, t.links().to_vec()).unwrap();
        let json = topology_to_json(&t);
        assert!(json.contains("1234.5"));
        assert_eq!(parse_topology(&json).unwrap(), t);
    }
}
