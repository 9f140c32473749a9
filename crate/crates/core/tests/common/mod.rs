//! Random small instances shared by the integration tests.
#![allow(dead_code)]

use std::ffi::CString;

use highs_sys::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcopt::optimizer::Problem;
use vcopt::topo::car_park;
use vcopt::{Demand, NodeId, Scenario, SplitLimit, Topology, TrafficMode};

pub struct Instance {
    pub topology: Topology,
    pub problem: Problem,
}

/// A car park of 2 to 5 vehicles and 1 or 2 edge nodes with one or two
/// demands; at most 7 admissible destinations per demand.
pub fn small_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.gen_range(2..=5);
    let ne = rng.gen_range(1..=2);
    let vehicles: Vec<(f64, f64)> = (0..nv)
        .map(|_| (rng.gen_range(0.0..30.0), rng.gen_range(0.0..30.0)))
        .collect();
    let edges: Vec<(f64, f64)> = (0..ne)
        .map(|i| if i == 0 { (-10.0, -10.0) } else { (40.0, 40.0) })
        .map(|(x, y): (f64, f64)| (x + rng.gen_range(-5.0..5.0), y + rng.gen_range(-5.0..5.0)))
        .collect();
    let topology = car_park(&vehicles, &edges).unwrap();

    let k = if nv >= 3 { rng.gen_range(1..=2) } else { 1 };
    let mut sources: Vec<usize> = (0..nv).collect();
    sources.shuffle(&mut rng);
    let demands = sources[..k]
        .iter()
        .map(|&v| {
            let mbps = rng.gen_range(0.2..6.0);
            let mips = if rng.gen_bool(0.5) {
                mbps * 2000.0
            } else {
                rng.gen_range(300.0..12_000.0)
            };
            Demand::new(NodeId(v as u32), mbps * 1e6, mips).unwrap()
        })
        .collect();
    let scenario = *Scenario::ALL.choose(&mut rng).unwrap();
    let splits = *[
        SplitLimit::AtMost(1),
        SplitLimit::AtMost(2),
        SplitLimit::AtMost(3),
        SplitLimit::Unlimited,
    ]
    .choose(&mut rng)
    .unwrap();
    let mode = if rng.gen_bool(0.5) {
        TrafficMode::Ft
    } else {
        TrafficMode::Pt
    };
    Instance {
        topology,
        problem: Problem::new(demands, scenario, splits, mode),
    }
}

pub struct Reread {
    pub cols: usize,
    pub rows: usize,
    pub objective: f64,
}

/// Reads LP text back with the HiGHS file reader and solves it.
pub fn reread(text: &str) -> Reread {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.lp");
    std::fs::write(&path, text).unwrap();
    let file = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let h = Highs_create();
        let quiet = CString::new("output_flag").unwrap();
        Highs_setBoolOptionValue(h, quiet.as_ptr(), 0);
        let threads = CString::new("threads").unwrap();
        Highs_setIntOptionValue(h, threads.as_ptr(), 1);
        let gap = CString::new("mip_rel_gap").unwrap();
        Highs_setDoubleOptionValue(h, gap.as_ptr(), 1e-7);
        assert_eq!(Highs_readModel(h, file.as_ptr()), 0, "LP file rejected");
        let cols = Highs_getNumCol(h) as usize;
        let rows = Highs_getNumRow(h) as usize;
        assert_eq!(Highs_run(h), 0);
        let objective = Highs_getObjectiveValue(h);
        Highs_destroy(h);
        Reread {
            cols,
            rows,
            objective,
        }
    }
}
