//! Exact solution of a built instance with the HiGHS branch-and-cut solver.

use std::time::Duration;

use highs::{HighsModelStatus, RowProblem};
use serde::Serialize;

use super::decode::decode;
use super::model::{build_model, FlowLayout, ModelInstance, Problem, Sense, VarKind};
use crate::error::{Error, Result};
use crate::power::{check_feasibility, evaluate, Assignment, PowerBreakdown};
use crate::topo::Topology;

/// Relative optimality gap at which a solve counts as proven optimal.
pub const OPTIMALITY_GAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Stopped by the budget with a feasible assignment and a valid bound.
    IncumbentWithBound,
}

/// Solver effort limits.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Budget {
    pub time_limit: Option<Duration>,
}

impl Budget {
    pub fn seconds(s: f64) -> Budget {
        Budget {
            time_limit: Some(Duration::from_secs_f64(s)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    /// Total power of `assignment` as computed by the power evaluator, W.
    pub objective: f64,
    /// Objective reported by the search itself, W.
    pub solver_objective: f64,
    pub lower_bound: f64,
    /// Branch-and-bound nodes (or enumerated configurations for the oracle).
    pub nodes: u64,
    pub power: Option<PowerBreakdown>,
    /// Raw model variable values of the exact solver, in model order.
    pub values: Option<Vec<f64>>,
}

impl SolveResult {
    pub fn infeasible(nodes: u64) -> SolveResult {
        SolveResult {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective: f64::INFINITY,
            solver_objective: f64::INFINITY,
            lower_bound: f64::INFINITY,
            nodes,
            power: None,
            values: None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status != SolveStatus::Infeasible
    }

    /// Total power, or `None` when infeasible.
    pub fn tp(&self) -> Option<f64> {
        self.is_feasible().then_some(self.objective)
    }
}

/// Builds and solves `problem` with the compact per-source flow layout.
pub fn solve(t: &Topology, problem: &Problem, budget: Budget) -> Result<SolveResult> {
    let m = build_model(t, problem, FlowLayout::PerSource)?;
    solve_exact(&m, budget)
}

/// Solves `m` to proven optimality (relative gap [`OPTIMALITY_GAP`]) unless the
/// budget runs out first. Single-threaded with a fixed seed, so results do not
/// depend on the machine's core count.
pub fn solve_exact(m: &ModelInstance, budget: Budget) -> Result<SolveResult> {
    let mut pb = RowProblem::default();
    let cols: Vec<_> = m
        .vars
        .iter()
        .map(|v| {
            let cost = if v.cost.abs() < 1e-12 { 0.0 } else { v.cost };
            match v.kind {
                VarKind::Binary => pb.add_integer_column(cost, 0.0..=1.0),
                VarKind::Continuous if v.upper.is_finite() => {
                    pb.add_column(cost, v.lower..=v.upper)
                }
                VarKind::Continuous => pb.add_column(cost, v.lower..),
            }
        })
        .collect();
    for r in &m.rows {
        let terms: Vec<_> = r.terms.iter().map(|&(v, c)| (cols[v.0], c)).collect();
        match r.sense {
            Sense::Le => pb.add_row(..=r.rhs, &terms),
            Sense::Ge => pb.add_row(r.rhs.., &terms),
            Sense::Eq => pb.add_row(r.rhs..=r.rhs, &terms),
        }
    }

    let mut model = pb.optimise(highs::Sense::Minimise);
    model.make_quiet();
    model.set_option("threads", 1);
    model.set_option("random_seed", 0);
    model.set_option("mip_rel_gap", OPTIMALITY_GAP / 10.0);
    model.set_option("mip_abs_gap", 1e-9);
    if let Some(limit) = budget.time_limit {
        model.set_option("time_limit", limit.as_secs_f64());
    }
    let solved = model
        .try_solve()
        .map_err(|s| Error::Solver(format!("HiGHS run failed: {s:?}")))?;

    let nodes = solved
        .int_info_value(c"mip_node_count")
        .map(|n| n.max(0) as u64)
        .unwrap_or(0);
    let status = solved.status();
    let (status, values) = match status {
        HighsModelStatus::Infeasible => return Ok(SolveResult::infeasible(nodes)),
        HighsModelStatus::Optimal => (
            SolveStatus::Optimal,
            solved.get_solution().columns().to_vec(),
        ),
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ReachedSolutionLimit
        | HighsModelStatus::ReachedInterrupt => {
            let values = solved.get_solution().columns().to_vec();
            let has_incumbent = solved.objective_value().is_finite()
                && values.len() == m.vars.len()
                && m.binaries().any(|b| values[b.0] > 0.5);
            if !has_incumbent {
                return Err(Error::Solver(format!(
                    "budget exhausted without a feasible solution ({status:?})"
                )));
            }
            (SolveStatus::IncumbentWithBound, values)
        }
        other => return Err(Error::Solver(format!("HiGHS ended with status {other:?}"))),
    };
    let solver_objective = solved.objective_value();
    let lower_bound = solved
        .double_info_value(c"mip_dual_bound")
        .unwrap_or(solver_objective);

    let assignment = decode(m, &values);
    let p = &m.problem;
    let report = check_feasibility(m.topology, &assignment, &p.demands, p.splits, p.mode);
    if !report.is_feasible() {
        return Err(Error::Solver(format!(
            "decoded solution is infeasible: {report}"
        )));
    }
    let power = evaluate(m.topology, &assignment)?;
    Ok(SolveResult {
        status,
        objective: power.tp,
        solver_objective,
        lower_bound,
        nodes,
        assignment: Some(assignment),
        power: Some(power),
        values: Some(values),
    })
}
