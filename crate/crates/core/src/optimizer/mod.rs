//! Exact placement: model construction, LP export, the HiGHS-backed solver and
//! an independent brute-force oracle for small instances.

mod decode;
mod exact;
pub mod lp;
pub mod model;
mod oracle;

pub use decode::decode;
pub use exact::{solve, solve_exact, Budget, SolveResult, SolveStatus, OPTIMALITY_GAP};
pub use lp::{export_lp, format_solution, parse_solution};
pub use model::{build_model, FlowLayout, ModelInstance, Problem};
pub use oracle::{brute_force_oracle, ORACLE_MAX_CANDIDATES, ORACLE_MAX_DEMANDS};
