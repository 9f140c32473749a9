//! Fixtures shared by the benchmarks.

use vcopt::optimizer::Problem;
use vcopt::topo::{canonical_parking_lot, CANONICAL_SOURCE};
use vcopt::{Demand, Scenario, SplitLimit, Topology, TrafficMode};

/// The reference car park.
pub fn car_park() -> Topology {
    canonical_parking_lot()
}

/// One FT demand of `mbps` from the reference source.
pub fn single_demand(t: &Topology, mbps: f64, scenario: Scenario) -> Problem {
    let s = t.lookup(CANONICAL_SOURCE).expect("reference source");
    Problem::new(
        vec![Demand::from_mbps(s, mbps).expect("positive demand")],
        scenario,
        SplitLimit::Unlimited,
        TrafficMode::Ft,
    )
}
