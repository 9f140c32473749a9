//! `vcopt`: solve, heuristic, sweep, LP export and validation workflows.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vcopt::demand::parse_demands;
use vcopt::experiments::{
    gap_report, run_sweep, write_results, Engine, EngineSet, Format, SweepSpec,
};
use vcopt::heuristic::{self, HeuristicOutcome};
use vcopt::optimizer::{
    brute_force_oracle, build_model, decode, export_lp, format_solution, parse_solution, solve,
    Budget, FlowLayout, Problem, SolveResult,
};
use vcopt::power::{check_feasibility, evaluate, PowerBreakdown};
use vcopt::topo::{canonical_parking_lot, load_topology, CANONICAL_SOURCE};
use vcopt::{Assignment, Demand, Error, Scenario, SplitLimit, Topology, TrafficMode};

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "vcopt",
    version,
    about = "Power-minimizing placement over vehicular, edge and cloud processing"
)]
struct Cli {
    /// Topology file (JSON); the built-in car park when omitted.
    #[arg(long, global = true, env = "VCOPT_TOPOLOGY")]
    topology: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Reserved; every engine is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file instead of standard output.
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,

    /// Print the heuristic decision trace and solver details.
    #[arg(long, short = 'v', global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal placement with the exact solver.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Exact engine: the branch-and-cut solver or the brute-force oracle.
        #[arg(long, value_enum, default_value_t = ExactEngine::Milp)]
        engine: ExactEngine,
        /// Per-solve time limit, seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Also write the raw variable values (name = value lines).
        #[arg(long)]
        solution_out: Option<PathBuf>,
    },
    /// Placement with the real-time heuristic.
    Heuristic {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Run a sweep definition file.
    Sweep {
        /// Sweep definition (JSON).
        spec: PathBuf,
        /// Override the engines of the definition.
        #[arg(long, value_enum)]
        engine: Option<SweepEngine>,
        /// Print the exact-vs-heuristic gap table instead of the rows.
        #[arg(long)]
        gaps: bool,
    },
    /// Write the model as LP text.
    ExportLp {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Index flows per (source, destination) instead of per source.
        #[arg(long)]
        per_commodity: bool,
    },
    /// Check a topology file, or an imported solution against the model.
    Validate {
        /// Solution file with `name = value` lines for the model variables.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Layout the solution was written for.
        #[arg(long)]
        per_commodity: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExactEngine {
    Milp,
    Oracle,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepEngine {
    Milp,
    Heuristic,
    Both,
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// Demand file (JSON array of {source, traffic_mbps, mips?}).
    #[arg(long, conflicts_with = "demand")]
    demands: Option<PathBuf>,
    /// Single demand, e.g. `2mbps`; processing defaults to 2000 MIPS per Mb/s.
    #[arg(long)]
    demand: Option<String>,
    /// Processing volume of `--demand`, MIPS.
    #[arg(long, requires = "demand")]
    mips: Option<f64>,
    /// Generating vehicle of `--demand`.
    #[arg(long, default_value = CANONICAL_SOURCE)]
    source: String,
    #[arg(long, default_value = "vec")]
    scenario: Scenario,
    /// Split limit: a count or `unlimited`.
    #[arg(long, default_value = "unlimited")]
    splits: SplitLimit,
    #[arg(long, default_value = "ft")]
    mode: TrafficMode,
}

impl ProblemArgs {
    fn given(&self) -> bool {
        self.demands.is_some() || self.demand.is_some()
    }

    fn problem(&self, t: &Topology) -> vcopt::Result<Problem> {
        let demands = match (&self.demands, &self.demand) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
                parse_demands(t, &text)?
            }
            (None, Some(d)) => {
                let mbps = parse_mbps(d)?;
                let s = t.lookup(&self.source)?;
                let demand = match self.mips {
                    Some(mips) => Demand::new(s, mbps * 1e6, mips)?,
                    None => Demand::from_mbps(s, mbps)?,
                };
                vec![demand]
            }
            (None, None) => return Err(Error::Parse("give --demand or --demands".into())),
        };
        let p = Problem::new(demands, self.scenario, self.splits, self.mode);
        p.validate(t)?;
        Ok(p)
    }
}

fn parse_mbps(s: &str) -> vcopt::Result<f64> {
    let lower = s.trim().to_ascii_lowercase();
    let number = lower.strip_suffix("mbps").unwrap_or(&lower).trim();
    number
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("demand `{s}` is not a rate such as `2mbps`")))
}

fn io_error(path: &Path, e: io::Error) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

/// Failure of a command, mapped to an exit code.
enum Failure {
    Infeasible(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver(_) => EXIT_SOLVER,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn topology(cli: &Cli) -> vcopt::Result<Topology> {
    match &cli.topology {
        Some(path) => load_topology(path),
        None => Ok(canonical_parking_lot()),
    }
}

fn emit(cli: &Cli, text: &str) -> vcopt::Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Parse(format!("stdout: {e}"))),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let t = topology(cli)?;
    match &cli.command {
        Command::Solve {
            problem,
            engine,
            time_limit,
            solution_out,
        } => {
            let p = problem.problem(&t)?;
            if *engine == ExactEngine::Oracle && solution_out.is_some() {
                return Err(
                    Error::Parse("the oracle has no model variables to write".into()).into(),
                );
            }
            let budget = time_limit.map(Budget::seconds).unwrap_or_default();
            let r = match engine {
                ExactEngine::Milp => solve(&t, &p, budget)?,
                ExactEngine::Oracle => brute_force_oracle(&t, &p)?,
            };
            if let (Some(path), Some(values)) = (solution_out, &r.values) {
                let m = build_model(&t, &p, FlowLayout::PerSource)?;
                fs::write(path, format_solution(&m, values)).map_err(|e| io_error(path, e))?;
            }
            let Some(a) = &r.assignment else {
                return Err(Failure::Infeasible(
                    "no placement satisfies the constraints".into(),
                ));
            };
            let power = r.power.as_ref().expect("feasible results are priced");
            emit(cli, &report(cli, &t, &p, a, power, Some(&r), None))?;
        }
        Command::Heuristic { problem } => {
            let p = problem.problem(&t)?;
            let h = heuristic::run(&t, &p)?;
            emit(
                cli,
                &report(cli, &t, &p, &h.assignment, &h.power, None, Some(&h)),
            )?;
            if !h.all_served() {
                return Err(Failure::Infeasible(format!(
                    "blocked demands {:?}",
                    h.blocked
                )));
            }
        }
        Command::Sweep { spec, engine, gaps } => {
            let mut spec = SweepSpec::load(spec)?;
            if let Some(e) = engine {
                spec.engine = match e {
                    SweepEngine::Milp => EngineSet::Milp,
                    SweepEngine::Heuristic => EngineSet::Heuristic,
                    SweepEngine::Both => EngineSet::Both,
                };
                spec.validate()?;
            }
            let result = run_sweep(&t, &spec, cli.threads)?;
            let text = if *gaps {
                gap_report(&result)?.to_string()
            } else {
                let format = match cli.format {
                    OutputFormat::Text => Format::Text,
                    OutputFormat::Csv => Format::Csv,
                };
                let mut buf = Vec::new();
                write_results(&result, &mut buf, format)?;
                String::from_utf8(buf).expect("results are UTF-8")
            };
            emit(cli, &text)?;
            if cli.verbose {
                let exact = result
                    .rows
                    .iter()
                    .filter(|r| r.engine == Engine::Milp)
                    .count();
                eprintln!("{} rows ({exact} exact)", result.rows.len());
            }
        }
        Command::ExportLp {
            problem,
            per_commodity,
        } => {
            let p = problem.problem(&t)?;
            let m = build_model(&t, &p, layout(*per_commodity))?;
            emit(cli, &export_lp(&m))?;
        }
        Command::Validate {
            solution,
            problem,
            per_commodity,
        } => match solution {
            None => {
                let p = if problem.given() {
                    Some(problem.problem(&t)?)
                } else {
                    None
                };
                let mut text = format!(
                    "topology ok: {} nodes, {} links, distributed capacity {} MIPS\n",
                    t.len(),
                    t.links().len(),
                    t.distributed_capacity()
                );
                if let Some(p) = p {
                    for k in 0..p.demands.len() {
                        text += &format!(
                            "demand {k}: {} candidate destinations\n",
                            p.candidates(&t, k).len()
                        );
                    }
                }
                emit(cli, &text)?;
            }
            Some(path) => {
                let p = problem.problem(&t)?;
                let m = build_model(&t, &p, layout(*per_commodity))?;
                let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
                let values = parse_solution(&m, &text)?;
                let violated = m.violations(&values, 1e-6);
                let a = decode(&m, &values);
                let feasibility = check_feasibility(&t, &a, &p.demands, p.splits, p.mode);
                let mut out = String::new();
                for (name, tag, activity, rhs) in &violated {
                    out += &format!("violated {name} (constraint {tag}): {activity} vs {rhs}\n");
                }
                if violated.is_empty() && feasibility.is_feasible() {
                    let power = evaluate(&t, &a)?;
                    out += &format!("solution ok: tp_w {:.3}\n", power.tp);
                    emit(cli, &out)?;
                } else {
                    if !feasibility.is_feasible() {
                        out += &format!("{feasibility}\n");
                    }
                    emit(cli, &out)?;
                    return Err(Failure::Infeasible(
                        "the solution violates the model".into(),
                    ));
                }
            }
        },
    }
    Ok(())
}

fn layout(per_commodity: bool) -> FlowLayout {
    if per_commodity {
        FlowLayout::PerCommodity
    } else {
        FlowLayout::PerSource
    }
}

fn report(
    cli: &Cli,
    t: &Topology,
    p: &Problem,
    a: &Assignment,
    power: &PowerBreakdown,
    exact: Option<&SolveResult>,
    heur: Option<&HeuristicOutcome>,
) -> String {
    match cli.format {
        OutputFormat::Csv => placements_csv(t, a),
        OutputFormat::Text => {
            let mut out = String::new();
            if let Some(r) = exact {
                out += &format!("status: {:?}\n", r.status);
                if cli.verbose {
                    out += &format!("lower_bound_w: {:.3}\nnodes: {}\n", r.lower_bound, r.nodes);
                }
            }
            if let Some(h) = heur {
                let served = p.demands.len() - h.blocked.len();
                out += &format!("served: {served} of {}\n", p.demands.len());
                if !h.blocked.is_empty() {
                    out += &format!("blocked: {:?}\n", h.blocked);
                }
            }
            out += &format!(
                "tp_w: {:.3}\nnet_w: {:.3}\nproc_w: {:.3}\n",
                power.tp, power.tp_net, power.tp_proc
            );
            for (k, plan) in a.plans.iter().enumerate() {
                let d = &p.demands[k];
                out += &format!(
                    "demand {k}: source {} traffic {} Mb/s processing {} MIPS\n",
                    t.node(d.source).id,
                    d.traffic_mbps(),
                    d.mips
                );
                for (&n, &w) in &plan.placements {
                    out += &format!("  place {} MIPS at {}\n", w, t.node(n).id);
                }
                for (&n, flows) in &plan.flows {
                    for (&arc, &bps) in flows {
                        let l = t.arc(arc);
                        out += &format!(
                            "  flow to {}: {} -> {} {} Mb/s\n",
                            t.node(n).id,
                            t.node(l.from).id,
                            t.node(l.to).id,
                            bps / 1e6
                        );
                    }
                }
            }
            out += "active nodes:\n";
            for n in power.nodes.iter().filter(|n| n.total_w > 0.0) {
                out += &format!(
                    "  {:<14} net_w {:>9.3} proc_w {:>9.3}\n",
                    n.node, n.net_w, n.proc_w
                );
            }
            if let (Some(h), true) = (heur, cli.verbose) {
                out += "trace:\n";
                for e in &h.trace {
                    out += &format!("  {e}\n");
                }
            }
            out
        }
    }
}

fn placements_csv(t: &Topology, a: &Assignment) -> String {
    let mut out = String::from("demand,node,mips\n");
    for (k, plan) in a.plans.iter().enumerate() {
        for (&n, &w) in &plan.placements {
            out += &format!("{k},{},{w}\n", t.node(n).id);
        }
    }
    out
}
