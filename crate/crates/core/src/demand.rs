//! Processing demands and the problem knobs shared by the exact solver, the
//! heuristic and the experiment sweeps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topo::{catalog, NodeId, NodeKind, Topology};

/// A processing request generated by one vehicle.
#[derive(Clone, Debug, PartialEq)]
pub struct Demand {
    pub source: NodeId,
    /// V_s, bit/s.
    pub traffic_bps: f64,
    /// U_s, MIPS.
    pub mips: f64,
}

impl Demand {
    pub fn new(source: NodeId, traffic_bps: f64, mips: f64) -> Result<Demand> {
        if !(traffic_bps > 0.0 && traffic_bps.is_finite()) {
            return Err(Error::Model(format!(
                "demand traffic must be positive, got {traffic_bps}"
            )));
        }
        if !(mips > 0.0 && mips.is_finite()) {
            return Err(Error::Model(format!(
                "demand processing must be positive, got {mips}"
            )));
        }
        Ok(Demand {
            source,
            traffic_bps,
            mips,
        })
    }

    /// Traffic in Mb/s with the default processing coupling.
    pub fn from_mbps(source: NodeId, mbps: f64) -> Result<Demand> {
        Demand::new(source, mbps * 1e6, mbps * catalog::MIPS_PER_MBPS)
    }

    pub fn traffic_mbps(&self) -> f64 {
        self.traffic_bps / 1e6
    }
}

/// Demand as written in demand files, with the source named by id.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandEntry {
    pub source: String,
    pub traffic_mbps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mips: Option<f64>,
}

impl DemandEntry {
    pub fn resolve(&self, t: &Topology) -> Result<Demand> {
        let source = t.lookup(&self.source)?;
        if t.node(source).kind != NodeKind::Vehicle {
            return Err(Error::Model(format!(
                "demand source `{}` is not a vehicle",
                self.source
            )));
        }
        let mips = self
            .mips
            .unwrap_or(self.traffic_mbps * catalog::MIPS_PER_MBPS);
        Demand::new(source, self.traffic_mbps * 1e6, mips)
    }
}

/// Parses a JSON array of [`DemandEntry`] records.
pub fn parse_demands(t: &Topology, text: &str) -> Result<Vec<Demand>> {
    let entries: Vec<DemandEntry> =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("demands: {e}")))?;
    entries.iter().map(|e| e.resolve(t)).collect()
}

/// Which processing layers may host placements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "V", alias = "v")]
    V,
    #[serde(rename = "VE", alias = "ve")]
    VE,
    #[serde(rename = "C", alias = "c")]
    C,
    #[serde(rename = "VEC", alias = "vec")]
    VEC,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::V, Scenario::VE, Scenario::C, Scenario::VEC];

    pub fn admits(self, kind: NodeKind) -> bool {
        match kind {
            NodeKind::Vehicle => matches!(self, Scenario::V | Scenario::VE | Scenario::VEC),
            NodeKind::EdgeNode => matches!(self, Scenario::VE | Scenario::VEC),
            NodeKind::CloudServer => matches!(self, Scenario::C | Scenario::VEC),
            _ => false,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::V => "V",
            Scenario::VE => "VE",
            Scenario::C => "C",
            Scenario::VEC => "VEC",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Scenario> {
        match s.to_ascii_lowercase().as_str() {
            "v" => Ok(Scenario::V),
            "ve" => Ok(Scenario::VE),
            "c" => Ok(Scenario::C),
            "vec" => Ok(Scenario::VEC),
            _ => Err(Error::Parse(format!(
                "unknown scenario `{s}` (v, ve, c, vec)"
            ))),
        }
    }
}

/// How demand traffic reaches the processing destinations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrafficMode {
    /// Every destination receives the full demand traffic.
    #[serde(rename = "FT", alias = "ft")]
    Ft,
    /// Each destination receives traffic proportional to its processing share.
    #[serde(rename = "PT", alias = "pt")]
    Pt,
}

impl TrafficMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrafficMode::Ft => "FT",
            TrafficMode::Pt => "PT",
        }
    }

    /// Traffic sent to a destination that processes `placed` MIPS of `d`.
    pub fn traffic_to(self, d: &Demand, placed: f64) -> f64 {
        match self {
            TrafficMode::Ft => d.traffic_bps,
            TrafficMode::Pt => d.traffic_bps * placed / d.mips,
        }
    }
}

impl fmt::Display for TrafficMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrafficMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<TrafficMode> {
        match s.to_ascii_lowercase().as_str() {
            "ft" => Ok(TrafficMode::Ft),
            "pt" => Ok(TrafficMode::Pt),
            _ => Err(Error::Parse(format!("unknown traffic mode `{s}` (ft, pt)"))),
        }
    }
}

/// Maximum number of processing destinations per demand.
///
/// Serialized as a count or the string `"unlimited"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "SplitRepr", into = "SplitRepr")]
pub enum SplitLimit {
    Unlimited,
    AtMost(u32),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SplitRepr {
    Count(u32),
    Word(String),
}

impl TryFrom<SplitRepr> for SplitLimit {
    type Error = Error;
    fn try_from(r: SplitRepr) -> Result<SplitLimit> {
        match r {
            SplitRepr::Count(n) => {
                let limit = SplitLimit::AtMost(n);
                limit.validate()?;
                Ok(limit)
            }
            SplitRepr::Word(w) => w.parse(),
        }
    }
}

impl From<SplitLimit> for SplitRepr {
    fn from(s: SplitLimit) -> SplitRepr {
        match s {
            SplitLimit::Unlimited => SplitRepr::Word("unlimited".into()),
            SplitLimit::AtMost(n) => SplitRepr::Count(n),
        }
    }
}

impl SplitLimit {
    pub fn allows(self, q: usize) -> bool {
        match self {
            SplitLimit::Unlimited => true,
            SplitLimit::AtMost(s) => q <= s as usize,
        }
    }

    /// The limit as a count, with `Unlimited` mapped to `candidates`.
    pub fn bound(self, candidates: usize) -> usize {
        match self {
            SplitLimit::Unlimited => candidates,
            SplitLimit::AtMost(s) => (s as usize).min(candidates),
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            SplitLimit::AtMost(0) => Err(Error::Model("split limit must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SplitLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitLimit::Unlimited => f.write_str("unlimited"),
            SplitLimit::AtMost(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for SplitLimit {
    type Err = Error;
    fn from_str(s: &str) -> Result<SplitLimit> {
        if s.eq_ignore_ascii_case("unlimited") || s == "inf" {
            return Ok(SplitLimit::Unlimited);
        }
        let n: u32 = s
            .parse()
            .map_err(|_| Error::Parse(format!("split limit `{s}` is not a count")))?;
        let limit = SplitLimit::AtMost(n);
        limit.validate()?;
        Ok(limit)
    }
}
