//! Experiment sweeps: demand size, split limit, traffic mode and multi-demand
//! suites, savings against cloud-only processing, and exact-vs-heuristic gaps.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::{Demand, Scenario, SplitLimit, TrafficMode};
use crate::error::{Error, Result};
use crate::heuristic;
use crate::optimizer::{solve, Budget, Problem, SolveStatus};
use crate::power::{Assignment, PowerBreakdown};
use crate::topo::{Medium, NodeId, NodeKind, Topology, CANONICAL_SOURCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    DemandSize,
    SplitLimit,
    TrafficMode,
    MultiDemand,
    HeuristicGap,
}

/// Engines a sweep runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineSet {
    #[default]
    Milp,
    Heuristic,
    Both,
}

impl EngineSet {
    fn milp(self) -> bool {
        self != EngineSet::Heuristic
    }

    fn heuristic(self) -> bool {
        self != EngineSet::Milp
    }
}

/// Engine that produced a result row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Milp,
    Heuristic,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Milp => "milp",
            Engine::Heuristic => "heuristic",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-demand size class of the multi-demand suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Low,
    #[serde(alias = "med")]
    Medium,
    High,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Low, Profile::Medium, Profile::High];

    pub fn traffic_mbps(self) -> f64 {
        match self {
            Profile::Low => 1.0,
            Profile::Medium => 3.0,
            Profile::High => 5.0,
        }
    }

    pub fn mips(self) -> f64 {
        match self {
            Profile::Low => 2000.0,
            Profile::Medium => 6000.0,
            Profile::High => 10000.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Low => "low",
            Profile::Medium => "medium",
            Profile::High => "high",
        }
    }
}

/// Demand points of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandGrid {
    /// One demand from the sweep source per value, Mb/s with the default
    /// processing coupling.
    Mbps(Vec<f64>),
    /// `count` demands of one profile, sources spread round-robin over the
    /// vehicular clouds.
    Counts {
        counts: Vec<usize>,
        profile: Profile,
    },
}

impl DemandGrid {
    fn len(&self) -> usize {
        match self {
            DemandGrid::Mbps(v) => v.len(),
            DemandGrid::Counts { counts, .. } => counts.len(),
        }
    }
}

fn default_splits() -> Vec<SplitLimit> {
    vec![SplitLimit::Unlimited]
}

fn default_modes() -> Vec<TrafficMode> {
    vec![TrafficMode::Ft]
}

fn default_source() -> String {
    CANONICAL_SOURCE.to_string()
}

/// A sweep definition, stored as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub scenarios: Vec<Scenario>,
    pub grid: DemandGrid,
    #[serde(default = "default_splits")]
    pub splits: Vec<SplitLimit>,
    #[serde(default = "default_modes")]
    pub modes: Vec<TrafficMode>,
    #[serde(default)]
    pub engine: EngineSet,
    /// Generating vehicle of single-demand grids.
    #[serde(default = "default_source")]
    pub source: String,
    /// Per-solve time limit for the exact engine, seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit_s: Option<f64>,
}

const FIGURE_GRID: [f64; 11] = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 30.0];
const SPLIT_GRID: [f64; 7] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.5, 5.5];

impl SweepSpec {
    fn base(kind: SweepKind, scenarios: &[Scenario], grid: DemandGrid) -> SweepSpec {
        SweepSpec {
            kind,
            scenarios: scenarios.to_vec(),
            grid,
            splits: default_splits(),
            modes: default_modes(),
            engine: EngineSet::Milp,
            source: default_source(),
            time_limit_s: None,
        }
    }

    /// Single demand of 2 to 30 Mb/s under every scenario, FT.
    pub fn demand_size() -> SweepSpec {
        SweepSpec::base(
            SweepKind::DemandSize,
            &Scenario::ALL,
            DemandGrid::Mbps(FIGURE_GRID.to_vec()),
        )
    }

    /// Split limits 1 to 4 and unlimited over small demands, VEC.
    pub fn split_limit() -> SweepSpec {
        SweepSpec {
            splits: vec![
                SplitLimit::AtMost(1),
                SplitLimit::AtMost(2),
                SplitLimit::AtMost(3),
                SplitLimit::AtMost(4),
                SplitLimit::Unlimited,
            ],
            ..SweepSpec::base(
                SweepKind::SplitLimit,
                &[Scenario::VEC, Scenario::C],
                DemandGrid::Mbps(SPLIT_GRID.to_vec()),
            )
        }
    }

    /// The demand-size grid under both traffic modes.
    pub fn traffic_mode() -> SweepSpec {
        SweepSpec {
            modes: vec![TrafficMode::Ft, TrafficMode::Pt],
            ..SweepSpec::base(
                SweepKind::TrafficMode,
                &Scenario::ALL,
                DemandGrid::Mbps(FIGURE_GRID.to_vec()),
            )
        }
    }

    /// 1 to 10 demands of one profile under every scenario.
    pub fn multi_demand(profile: Profile) -> SweepSpec {
        SweepSpec::base(
            SweepKind::MultiDemand,
            &Scenario::ALL,
            DemandGrid::Counts {
                counts: (1..=10).collect(),
                profile,
            },
        )
    }

    /// Exact solver against the heuristic on the demand-size grid, VEC.
    pub fn heuristic_gap() -> SweepSpec {
        SweepSpec {
            engine: EngineSet::Both,
            ..SweepSpec::base(
                SweepKind::HeuristicGap,
                &[Scenario::VEC],
                DemandGrid::Mbps(FIGURE_GRID.to_vec()),
            )
        }
    }

    /// Exact solver against the heuristic for 1 to 10 demands of one profile, VEC.
    pub fn heuristic_gap_multi(profile: Profile) -> SweepSpec {
        SweepSpec {
            engine: EngineSet::Both,
            ..SweepSpec::base(
                SweepKind::HeuristicGap,
                &[Scenario::VEC],
                DemandGrid::Counts {
                    counts: (1..=10).collect(),
                    profile,
                },
            )
        }
    }

    pub fn parse(text: &str) -> Result<SweepSpec> {
        let spec: SweepSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SweepSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SweepSpec::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Model(format!("sweep spec: {m}")));
        if self.grid.len() == 0 {
            return bad("demand grid is empty");
        }
        if self.scenarios.is_empty() || self.splits.is_empty() || self.modes.is_empty() {
            return bad("scenarios, splits and modes must be non-empty");
        }
        for s in &self.splits {
            s.validate()?;
        }
        match (&self.grid, self.kind) {
            (
                DemandGrid::Counts { .. },
                SweepKind::DemandSize | SweepKind::SplitLimit | SweepKind::TrafficMode,
            ) => return bad("this sweep kind takes a Mb/s grid"),
            (DemandGrid::Mbps(_), SweepKind::MultiDemand) => {
                return bad("multi-demand sweeps take a count grid")
            }
            (DemandGrid::Mbps(v), _) if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) => {
                return bad("demand sizes must be positive")
            }
            (DemandGrid::Counts { counts, .. }, _) if counts.contains(&0) => {
                return bad("demand counts must be positive")
            }
            _ => {}
        }
        if self.kind == SweepKind::HeuristicGap && self.engine != EngineSet::Both {
            return bad("heuristic gap sweeps run both engines");
        }
        if self.time_limit_s.is_some_and(|s| !(s > 0.0)) {
            return bad("time limit must be positive");
        }
        Ok(())
    }

    fn budget(&self) -> Budget {
        self.time_limit_s.map(Budget::seconds).unwrap_or_default()
    }
}

/// Vehicles grouped by the edge node they reach over WiFi, groups ordered by
/// edge id and members by vehicle id. Vehicles without an edge form a last group.
pub fn vehicular_clouds(t: &Topology) -> Vec<Vec<NodeId>> {
    let mut groups: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
    let mut vehicles: Vec<NodeId> = t.nodes_of_kind(NodeKind::Vehicle).collect();
    vehicles.sort_by_key(|&v| t.id_rank(v));
    for v in vehicles {
        let edge = t
            .out_arcs(v)
            .iter()
            .map(|&a| t.arc(a))
            .filter(|l| l.medium == Medium::Wifi && t.node(l.to).kind == NodeKind::EdgeNode)
            .map(|l| t.id_rank(l.to))
            .min();
        groups.entry(edge.unwrap_or(u32::MAX)).or_default().push(v);
    }
    groups.into_values().collect()
}

/// `count` sources taken round-robin over the vehicular clouds.
pub fn round_robin_sources(t: &Topology, count: usize) -> Result<Vec<NodeId>> {
    let clouds = vehicular_clouds(t);
    let total: usize = clouds.iter().map(Vec::len).sum();
    if count > total {
        return Err(Error::Model(format!(
            "{count} demands requested but only {total} vehicles exist"
        )));
    }
    let mut out = Vec::with_capacity(count);
    let mut round = 0;
    while out.len() < count {
        for c in &clouds {
            if out.len() < count {
                if let Some(&v) = c.get(round) {
                    out.push(v);
                }
            }
        }
        round += 1;
    }
    Ok(out)
}

/// One demand configuration of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub label: String,
    pub demands: Vec<Demand>,
}

impl GridPoint {
    pub fn traffic_mbps(&self) -> f64 {
        self.demands.iter().map(Demand::traffic_mbps).sum()
    }

    pub fn mips(&self) -> f64 {
        self.demands.iter().map(|d| d.mips).sum()
    }
}

/// Demand configurations of `spec` in grid order.
pub fn grid_points(t: &Topology, spec: &SweepSpec) -> Result<Vec<GridPoint>> {
    match &spec.grid {
        DemandGrid::Mbps(values) => {
            let s = t.lookup(&spec.source)?;
            if t.node(s).kind != NodeKind::Vehicle {
                return Err(Error::Model(format!(
                    "sweep source `{}` is not a vehicle",
                    spec.source
                )));
            }
            values
                .iter()
                .map(|&v| {
                    Ok(GridPoint {
                        label: format!("{v}mbps"),
                        demands: vec![Demand::from_mbps(s, v)?],
                    })
                })
                .collect()
        }
        DemandGrid::Counts { counts, profile } => counts
            .iter()
            .map(|&n| {
                let demands = round_robin_sources(t, n)?
                    .into_iter()
                    .map(|s| Demand::new(s, profile.traffic_mbps() * 1e6, profile.mips()))
                    .collect::<Result<_>>()?;
                Ok(GridPoint {
                    label: format!("{n}x{}", profile.as_str()),
                    demands,
                })
            })
            .collect(),
    }
}

/// How a row's engine ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    /// Exact optimum.
    Optimal,
    /// Exact engine stopped by its time limit with a feasible incumbent.
    Incumbent,
    /// Heuristic served every demand.
    Served,
    /// No feasible placement exists.
    Infeasible,
    /// Heuristic blocked at least one demand.
    Blocked,
    /// Exact engine stopped by its time limit without a feasible solution.
    Unsolved,
}

impl PointStatus {
    pub fn is_feasible(self) -> bool {
        matches!(
            self,
            PointStatus::Optimal | PointStatus::Incumbent | PointStatus::Served
        )
    }
}

/// One result row: a grid point under one scenario, mode, split limit and engine.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: Scenario,
    pub engine: Engine,
    pub mode: TrafficMode,
    pub splits: SplitLimit,
    pub demand: String,
    pub demand_mbps: f64,
    pub demand_mips: f64,
    pub status: PointStatus,
    pub tp_w: Option<f64>,
    pub net_w: Option<f64>,
    pub proc_w: Option<f64>,
    pub mips_vehicles: Option<f64>,
    pub mips_edge: Option<f64>,
    pub mips_cloud: Option<f64>,
    /// Savings against exact cloud-only processing of the same point, percent.
    pub savings_pct: Option<f64>,
    /// Heuristic rows: excess over the exact optimum, integer percent.
    pub gap_pct: Option<i64>,
}

impl SweepRow {
    pub fn is_blocked(&self) -> bool {
        !self.status.is_feasible()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn rows_for(
        &self,
        scenario: Scenario,
        engine: Engine,
    ) -> impl Iterator<Item = &SweepRow> + '_ {
        self.rows
            .iter()
            .filter(move |r| r.scenario == scenario && r.engine == engine)
    }
}

/// Savings of `tp` against the cloud-only baseline, percent to one decimal.
pub fn savings_pct(baseline: f64, tp: f64) -> Option<f64> {
    (baseline > 0.0).then(|| (1000.0 * (baseline - tp) / baseline).round() / 10.0)
}

/// Excess of the heuristic over the exact optimum, integer percent.
pub fn gap_pct(milp: f64, heuristic: f64) -> Option<i64> {
    (milp > 0.0).then(|| (100.0 * (heuristic - milp) / milp).round() as i64)
}

struct Outcome {
    status: PointStatus,
    power: Option<PowerBreakdown>,
    assignment: Option<Assignment>,
}

fn exact(t: &Topology, p: &Problem, budget: Budget) -> Result<Outcome> {
    match solve(t, p, budget) {
        Ok(r) => Ok(Outcome {
            status: match r.status {
                SolveStatus::Optimal => PointStatus::Optimal,
                SolveStatus::IncumbentWithBound => PointStatus::Incumbent,
                SolveStatus::Infeasible => PointStatus::Infeasible,
            },
            power: r.power,
            assignment: r.assignment,
        }),
        Err(Error::Solver(msg)) if budget.time_limit.is_some() => {
            log::warn!("exact solve unresolved: {msg}");
            Ok(Outcome {
                status: PointStatus::Unsolved,
                power: None,
                assignment: None,
            })
        }
        Err(e) => Err(e),
    }
}

fn heuristic_outcome(t: &Topology, p: &Problem) -> Result<Outcome> {
    let h = heuristic::run(t, p)?;
    Ok(if h.all_served() {
        Outcome {
            status: PointStatus::Served,
            power: Some(h.power),
            assignment: Some(h.assignment),
        }
    } else {
        Outcome {
            status: PointStatus::Blocked,
            power: None,
            assignment: None,
        }
    })
}

fn row(
    t: &Topology,
    point: &GridPoint,
    p: &Problem,
    engine: Engine,
    o: &Outcome,
    baseline: Option<f64>,
) -> SweepRow {
    let feasible = o.status.is_feasible();
    let power = o.power.as_ref().filter(|_| feasible);
    let layers = o
        .assignment
        .as_ref()
        .filter(|_| feasible)
        .map(|a| a.layer_mips(t));
    SweepRow {
        scenario: p.scenario,
        engine,
        mode: p.mode,
        splits: p.splits,
        demand: point.label.clone(),
        demand_mbps: point.traffic_mbps(),
        demand_mips: point.mips(),
        status: o.status,
        tp_w: power.map(|b| b.tp),
        net_w: power.map(|b| b.tp_net),
        proc_w: power.map(|b| b.tp_proc),
        mips_vehicles: layers.map(|l| l.vehicles),
        mips_edge: layers.map(|l| l.edge),
        mips_cloud: layers.map(|l| l.cloud),
        savings_pct: match (baseline, power) {
            (Some(c), Some(b)) => savings_pct(c, b.tp),
            _ => None,
        },
        gap_pct: None,
    }
}

fn run_group(
    t: &Topology,
    spec: &SweepSpec,
    point: &GridPoint,
    mode: TrafficMode,
    splits: SplitLimit,
) -> Result<Vec<SweepRow>> {
    let budget = spec.budget();
    let problem = |scenario| Problem::new(point.demands.clone(), scenario, splits, mode);
    let cloud = exact(t, &problem(Scenario::C), budget)?;
    let baseline = cloud
        .power
        .as_ref()
        .filter(|_| cloud.status.is_feasible())
        .map(|b| b.tp);
    let mut rows = Vec::new();
    for &scenario in &spec.scenarios {
        let p = problem(scenario);
        let mut milp_tp = None;
        if spec.engine.milp() {
            let o = if scenario == Scenario::C {
                &cloud
            } else {
                &exact(t, &p, budget)?
            };
            let r = row(t, point, &p, Engine::Milp, o, baseline);
            milp_tp = r.tp_w;
            rows.push(r);
        }
        if spec.engine.heuristic() {
            let o = heuristic_outcome(t, &p)?;
            let mut r = row(t, point, &p, Engine::Heuristic, &o, baseline);
            r.gap_pct = match (milp_tp, r.tp_w) {
                (Some(m), Some(h)) => gap_pct(m, h),
                _ => None,
            };
            rows.push(r);
        }
    }
    Ok(rows)
}

/// Evaluates every grid point of `spec` with the requested engines. Points are
/// independent and run concurrently on `threads` workers (all cores when
/// `None`); rows come out in grid, mode, split-limit, scenario, engine order
/// regardless of the thread count. Infeasible and blocked points are flagged,
/// not errors.
pub fn run_sweep(t: &Topology, spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let points = grid_points(t, spec)?;
    let mut groups = Vec::new();
    for point in &points {
        for &mode in &spec.modes {
            for &splits in &spec.splits {
                groups.push((point, mode, splits));
            }
        }
    }
    let work = || -> Result<Vec<SweepRow>> {
        let per_group: Vec<Vec<SweepRow>> = groups
            .par_iter()
            .map(|&(point, mode, splits)| run_group(t, spec, point, mode, splits))
            .collect::<Result<_>>()?;
        Ok(per_group.into_iter().flatten().collect())
    };
    let rows = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Model(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
    })
}

/// Gap of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapEntry {
    pub scenario: Scenario,
    pub mode: TrafficMode,
    pub splits: SplitLimit,
    pub demand: String,
    pub milp_w: Option<f64>,
    pub heuristic_w: Option<f64>,
    /// `None` when either engine found no feasible placement.
    pub gap_pct: Option<i64>,
}

/// Range of gaps over one scenario / mode / split-limit suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapSummary {
    pub scenario: Scenario,
    pub mode: TrafficMode,
    pub splits: SplitLimit,
    pub min_pct: Option<i64>,
    pub max_pct: Option<i64>,
    pub compared: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapTable {
    pub entries: Vec<GapEntry>,
    pub suites: Vec<GapSummary>,
}

/// Pairs the exact and heuristic rows of a sweep point by point.
pub fn gap_report(sweep: &SweepResult) -> Result<GapTable> {
    let has = |e: Engine| sweep.rows.iter().any(|r| r.engine == e);
    if !has(Engine::Milp) || !has(Engine::Heuristic) {
        return Err(Error::Model(
            "gap report needs exact and heuristic rows".into(),
        ));
    }
    let key = |r: &SweepRow| (r.scenario, r.mode, r.splits, r.demand.clone());
    let milp: BTreeMap<_, &SweepRow> = sweep
        .rows
        .iter()
        .filter(|r| r.engine == Engine::Milp)
        .map(|r| (key(r), r))
        .collect();
    let mut entries = Vec::new();
    for h in sweep.rows.iter().filter(|r| r.engine == Engine::Heuristic) {
        let m = milp
            .get(&key(h))
            .ok_or_else(|| Error::Model(format!("no exact row for {} {}", h.scenario, h.demand)))?;
        entries.push(GapEntry {
            scenario: h.scenario,
            mode: h.mode,
            splits: h.splits,
            demand: h.demand.clone(),
            milp_w: m.tp_w,
            heuristic_w: h.tp_w,
            gap_pct: match (m.tp_w, h.tp_w) {
                (Some(a), Some(b)) => gap_pct(a, b),
                _ => None,
            },
        });
    }
    let mut suites: Vec<GapSummary> = Vec::new();
    for e in &entries {
        let i = match suites
            .iter()
            .position(|s| (s.scenario, s.mode, s.splits) == (e.scenario, e.mode, e.splits))
        {
            Some(i) => i,
            None => {
                suites.push(GapSummary {
                    scenario: e.scenario,
                    mode: e.mode,
                    splits: e.splits,
                    min_pct: None,
                    max_pct: None,
                    compared: 0,
                });
                suites.len() - 1
            }
        };
        if let Some(g) = e.gap_pct {
            let s = &mut suites[i];
            s.min_pct = Some(s.min_pct.map_or(g, |m| m.min(g)));
            s.max_pct = Some(s.max_pct.map_or(g, |m| m.max(g)));
            s.compared += 1;
        }
    }
    Ok(GapTable { entries, suites })
}

impl fmt::Display for GapTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        let g = |x: Option<i64>| x.map_or("-".to_string(), |v| v.to_string());
        writeln!(
            f,
            "{:<8} {:<4} {:<9} {:<12} {:>12} {:>12} {:>6}",
            "scenario", "mode", "S", "demand", "milp_w", "heuristic_w", "gap_%"
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "{:<8} {:<4} {:<9} {:<12} {:>12} {:>12} {:>6}",
                e.scenario.as_str(),
                e.mode.as_str(),
                e.splits.to_string(),
                e.demand,
                w(e.milp_w),
                w(e.heuristic_w),
                g(e.gap_pct)
            )?;
        }
        for s in &self.suites {
            writeln!(
                f,
                "suite {} {} S={}: gap {}..{}% over {} points",
                s.scenario,
                s.mode,
                s.splits,
                g(s.min_pct),
                g(s.max_pct),
                s.compared
            )?;
        }
        Ok(())
    }
}

/// Output format of result files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            _ => Err(Error::Parse(format!(
                "unknown output format `{s}` (csv, text)"
            ))),
        }
    }
}

/// Column order of result files.
pub const CSV_COLUMNS: [&str; 15] = [
    "scenario",
    "engine",
    "mode",
    "S",
    "demand_mbps",
    "demand_mips",
    "tp_w",
    "net_w",
    "proc_w",
    "mips_vehicles",
    "mips_edge",
    "mips_cloud",
    "savings_pct",
    "blocked",
    "gap_pct",
];

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn csv_record(r: &SweepRow) -> [String; 15] {
    [
        r.scenario.as_str().to_string(),
        r.engine.as_str().to_string(),
        r.mode.as_str().to_string(),
        r.splits.to_string(),
        r.demand_mbps.to_string(),
        r.demand_mips.to_string(),
        opt(r.tp_w),
        opt(r.net_w),
        opt(r.proc_w),
        opt(r.mips_vehicles),
        opt(r.mips_edge),
        opt(r.mips_cloud),
        r.savings_pct
            .map_or_else(String::new, |v| format!("{v:.1}")),
        r.is_blocked().to_string(),
        r.gap_pct.map_or_else(String::new, |v| v.to_string()),
    ]
}

/// Writes `result` to `out`. CSV carries full precision; text reports watts
/// to three decimals.
pub fn write_results(result: &SweepResult, out: impl Write, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for r in &result.rows {
                w.write_record(csv_record(r))?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        Format::Text => {
            let mut out = out;
            let io = |e| Error::Csv(csv::Error::from(e));
            let w3 = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
            let w0 = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.0}"));
            writeln!(
                out,
                "{:<8} {:<9} {:<4} {:<9} {:<12} {:>12} {:>12} {:>12} {:>9} {:>9} {:>9} {:>9} {:<10} {:>6}",
                "scenario",
                "engine",
                "mode",
                "S",
                "demand",
                "tp_w",
                "net_w",
                "proc_w",
                "mips_v",
                "mips_e",
                "mips_c",
                "savings%",
                "status",
                "gap%"
            )
            .map_err(io)?;
            for r in &result.rows {
                writeln!(
                    out,
                    "{:<8} {:<9} {:<4} {:<9} {:<12} {:>12} {:>12} {:>12} {:>9} {:>9} {:>9} {:>9} {:<10} {:>6}",
                    r.scenario.as_str(),
                    r.engine.as_str(),
                    r.mode.as_str(),
                    r.splits.to_string(),
                    r.demand,
                    w3(r.tp_w),
                    w3(r.net_w),
                    w3(r.proc_w),
                    w0(r.mips_vehicles),
                    w0(r.mips_edge),
                    w0(r.mips_cloud),
                    r.savings_pct.map_or("-".to_string(), |v| format!("{v:.1}")),
                    serde_json::to_value(r.status)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                    r.gap_pct.map_or("-".to_string(), |v| v.to_string())
                )
                .map_err(io)?;
            }
        }
    }
    Ok(())
}

/// Writes `result` to the file at `path`.
pub fn emit_results(result: &SweepResult, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_results(result, std::io::BufWriter::new(file), format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::{canonical_parking_lot, CLUSTER_SIZE};

    #[test]
    fn profiles_use_the_default_coupling() {
        for p in Profile::ALL {
            assert_eq!(p.mips(), 2000.0 * p.traffic_mbps());
        }
    }

    #[test]
    fn sources_rotate_over_the_clouds() {
        let t = canonical_parking_lot();
        let ids: Vec<String> = round_robin_sources(&t, 6)
            .unwrap()
            .into_iter()
            .map(|v| t.node(v).id.clone())
            .collect();
        assert_eq!(ids, ["v01", "v05", "v09", "v13", "v02", "v06"]);
        assert_eq!(vehicular_clouds(&t).len(), 16 / CLUSTER_SIZE);
        assert!(round_robin_sources(&t, 17).is_err());
    }

    #[test]
    fn grid_labels_and_totals() {
        let t = canonical_parking_lot();
        let pts = grid_points(&t, &SweepSpec::multi_demand(Profile::Medium)).unwrap();
        assert_eq!(pts.len(), 10);
        assert_eq!(pts[2].label, "3xmedium");
        assert_eq!((pts[2].traffic_mbps(), pts[2].mips()), (9.0, 18000.0));
    }

    #[test]
    fn spec_validation() {
        assert!(SweepSpec::demand_size().validate().is_ok());
        let mut s = SweepSpec::heuristic_gap();
        s.engine = EngineSet::Milp;
        assert!(s.validate().is_err());
        let mut s = SweepSpec::demand_size();
        s.grid = DemandGrid::Mbps(vec![]);
        assert!(s.validate().is_err());
        let mut s = SweepSpec::demand_size();
        s.grid = DemandGrid::Counts {
            counts: vec![1],
            profile: Profile::Low,
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = SweepSpec::split_limit();
        assert_eq!(SweepSpec::parse(&s.to_json()).unwrap(), s);
        let text = r#"{"kind": "multi_demand", "scenarios": ["vec"],
                       "grid": {"counts": {"counts": [2], "profile": "med"}}}"#;
        let s = SweepSpec::parse(text).unwrap();
        assert_eq!(s.splits, [SplitLimit::Unlimited]);
        assert_eq!(s.engine, EngineSet::Milp);
    }

    #[test]
    fn percent_rounding() {
        assert_eq!(savings_pct(100.0, 13.66), Some(86.3));
        assert_eq!(savings_pct(100.0, 100.0), Some(0.0));
        assert_eq!(savings_pct(0.0, 1.0), None);
        assert_eq!(gap_pct(100.0, 122.6), Some(23));
        assert_eq!(gap_pct(100.0, 100.0), Some(0));
    }

    #[test]
    fn gap_report_needs_both_engines() {
        let r = SweepResult {
            spec: SweepSpec::demand_size(),
            rows: vec![],
        };
        assert!(gap_report(&r).is_err());
    }
}
