//! Command-line front end for the bargaining-network solver.
//!
//! Exit status: 0 success, 1 verification failure or no stable outcome,
//! 2 usage or input error, 3 internal invariant failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use udbargain::bp::{self, BpOptions};
use udbargain::instance::{
    generate_random_bipartite, generate_ring, parse_instance, parse_outcome, write_instance,
    write_outcome, BipartiteParams, RingParams,
};
use udbargain::oracle::{Oracle, DEFAULT_EDGE_CAP};
use udbargain::rebalance::{slow_progress_demo, Step1Backend, Termination};
use udbargain::verify::verify;
use udbargain::{
    Exec, Instance, InstanceError, Outcome, ParseError, SolveConfig, SolveError, SolveStatus,
    DEFAULT_TOL_EQ,
};

#[derive(Parser)]
#[command(name = "udbargain", version, about = "Approximate unequal-division solutions for bargaining networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find an ε-UD solution, or report that no stable outcome exists.
    Solve(SolveArgs),
    /// Check an outcome for stability and ε-correct division.
    Verify(VerifyArgs),
    /// Write a generated instance.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Run max-product message passing from the zero state.
    Bp(BpArgs),
    /// Report the gap between the best and second-best matchings.
    Gap(GapArgs),
    /// Exact UD check of an outcome.
    Check(CheckArgs),
    /// Rebalance the ring's unstable outcome and measure how slowly it recovers.
    DemoSlow(DemoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Oracle,
    Bp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stop {
    Residual,
    Fixed,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, value_enum, default_value_t = Backend::Oracle)]
    backend: Backend,
    #[arg(long, value_enum, default_value_t = Stop::Residual)]
    termination: Stop,
    /// Cap on rebalancing steps.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Cap on message-passing steps for the bp backend.
    #[arg(long)]
    bp_max_iters: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EDGE_CAP)]
    edge_cap: usize,
    /// Write `t,residual` per rebalancing step.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the outcome here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    outcome: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_TOL_EQ)]
    tol: f64,
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// Ring with an unstable outcome that is within ε' of correct division.
    Ring(RingArgs),
    /// Seeded random bipartite instance.
    Bipartite(BipartiteArgs),
}

#[derive(Args)]
struct RingArgs {
    /// Number of 8-node blocks.
    #[arg(long = "N", conflicts_with = "nodes", required_unless_present = "nodes")]
    blocks: Option<usize>,
    /// Total node count; the remainder after the ring becomes padding.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Also write the ring's unstable outcome.
    #[arg(long)]
    outcome: Option<PathBuf>,
    /// Write the balanced all-W/2 outcome instead.
    #[arg(long, requires = "outcome")]
    balanced: bool,
}

#[derive(Args)]
struct BipartiteArgs {
    #[arg(long, default_value_t = 4)]
    left: usize,
    #[arg(long, default_value_t = 4)]
    right: usize,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 1.0)]
    max_weight: f64,
    #[arg(long, default_value_t = 0.2)]
    r_min: f64,
    #[arg(long, default_value_t = 0.8)]
    r_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Args)]
struct BpArgs {
    instance: PathBuf,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = bp::DEFAULT_DELTA)]
    delta: f64,
}

#[derive(Args)]
struct GapArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EDGE_CAP)]
    edge_cap: usize,
}

#[derive(Args)]
struct CheckArgs {
    instance: PathBuf,
    outcome: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL_EQ)]
    tol: f64,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long = "N")]
    blocks: usize,
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
}

enum Failure {
    Rejected(String),
    Usage(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Rejected(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

type Run = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Run {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Run {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Outcomes that parse but break the allocation rules are rejections, not
/// usage errors.
fn load_outcome(path: &Path, inst: &Instance) -> Result<Outcome, Failure> {
    parse_outcome(&read(path)?, inst).map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        match e {
            ParseError::Invalid {
                source:
                    InstanceError::MatchedSum { .. }
                    | InstanceError::UnmatchedEarns { .. }
                    | InstanceError::EarningOutOfRange { .. },
                ..
            } => Failure::Rejected(msg),
            _ => Failure::Usage(msg),
        }
    })
}

fn solve_failure(e: SolveError) -> Failure {
    match e {
        SolveError::BadKappa(_) | SolveError::BadEpsilon(_) | SolveError::Oracle(_) => {
            Failure::Usage(e.to_string())
        }
        SolveError::IterationCap(_) => Failure::Rejected(e.to_string()),
        _ => Failure::Internal(e.to_string()),
    }
}

fn cmd_solve(a: SolveArgs) -> Run {
    let cfg = SolveConfig {
        kappa: a.kappa,
        epsilon: a.epsilon,
        termination: match a.termination {
            Stop::Residual => Termination::Residual,
            Stop::Fixed => Termination::FixedHorizon,
        },
        max_iters: a.max_iters,
        step1_backend: match a.backend {
            Backend::Oracle => Step1Backend::Oracle,
            Backend::Bp => Step1Backend::Bp,
        },
        oracle_edge_cap: a.edge_cap,
        bp_max_iters: a.bp_max_iters,
        exec: if a.sequential { Exec::Sequential } else { Exec::Parallel },
        ..SolveConfig::default()
    };
    cfg.validate().map_err(solve_failure)?;
    let inst = load_instance(&a.instance)?;
    let res = udbargain::solve(&inst, &cfg).map_err(solve_failure)?;

    let mut text = String::new();
    let _ = writeln!(text, "# status {}", res.status);
    let c = &res.certificates;
    if let Some(w) = c.matching_weight {
        let _ = writeln!(text, "# matching_weight {w}");
    }
    if let Some(v) = c.lp_value {
        let _ = writeln!(text, "# lp_value {v}");
    }
    if let Some(v) = c.dual_value {
        let _ = writeln!(text, "# dual_value {v}");
    }
    if let Some(n) = c.bp_iterations {
        let _ = writeln!(text, "# step1_iterations {n}");
    }
    if let Some(out) = &res.outcome {
        let _ = writeln!(text, "# step2_iterations {}", res.iterations_step2);
        let _ = writeln!(text, "# residual {}", res.trace.last().copied().unwrap_or(0.0));
        text.push_str(&write_outcome(&inst, out));
    }
    emit(a.output.as_deref(), &text)?;
    if let Some(path) = &a.trace {
        let mut csv = String::from("t,residual\n");
        for (t, r) in res.trace.iter().enumerate() {
            let _ = writeln!(csv, "{t},{r}");
        }
        write(path, &csv)?;
    }
    match res.status {
        SolveStatus::Solved => Ok(()),
        SolveStatus::Unstable => Err(Failure::Rejected(
            "UNSTABLE: the fractional matching LP beats every matching, so no stable outcome exists".into(),
        )),
        SolveStatus::Step1Inconclusive => Err(Failure::Rejected(
            "STEP1_INCONCLUSIVE: message passing did not settle on a stable matching; try --backend oracle".into(),
        )),
    }
}

fn cmd_verify(a: VerifyArgs) -> Run {
    if !(a.epsilon >= 0.0 && a.tol >= 0.0) {
        return Err(Failure::Usage("--epsilon and --tol must be non-negative".into()));
    }
    let inst = load_instance(&a.instance)?;
    let out = load_outcome(&a.outcome, &inst)?;
    let report = verify(&inst, &out, a.tol);
    let mut text = String::new();
    for &(id, d) in &report.stability_violations {
        let e = inst.edge(id);
        let _ = writeln!(text, "violation {} {} {d}", e.u + 1, e.v + 1);
    }
    for &(node, offer) in &report.unmatched_offers {
        let _ = writeln!(text, "offer {} {offer}", node + 1);
    }
    for &(id, r) in &report.division_residuals {
        let e = inst.edge(id);
        let _ = writeln!(text, "residual {} {} {r}", e.u + 1, e.v + 1);
    }
    let _ = writeln!(text, "max_deficit {}", report.max_deficit);
    let _ = writeln!(text, "max_residual {}", report.max_residual);
    let ok = report.is_eps_ud(a.epsilon);
    let _ = writeln!(text, "stable {}", yes_no(report.is_stable()));
    let _ = writeln!(text, "eps_ud {}", yes_no(ok));
    print!("{text}");
    if ok {
        Ok(())
    } else {
        Err(Failure::Rejected("outcome is not an ε-UD solution".into()))
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_generate(g: GenerateCommand) -> Run {
    match g {
        GenerateCommand::Ring(a) => {
            let params = match (a.blocks, a.nodes) {
                (Some(blocks), _) => RingParams::new(blocks, a.r),
                (None, Some(nodes)) => RingParams::for_node_count(nodes, a.r),
                (None, None) => unreachable!("clap requires one of --N and --nodes"),
            };
            let ring = generate_ring(params).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut text = String::new();
            let _ = writeln!(text, "# weight {}", ring.weight);
            let _ = writeln!(text, "# eps_prime {}", ring.eps_prime);
            let bad = ring.instance.edge(ring.bad_edge);
            let _ = writeln!(text, "# bad_edge {} {}", bad.u + 1, bad.v + 1);
            text.push_str(&write_instance(&ring.instance));
            emit(a.instance.as_deref(), &text)?;
            if let Some(path) = &a.outcome {
                let out = if a.balanced {
                    ring.balanced_outcome()
                } else {
                    ring.bad_outcome.clone()
                };
                write(path, &write_outcome(&ring.instance, &out))?;
            }
            Ok(())
        }
        GenerateCommand::Bipartite(a) => {
            let inst = generate_random_bipartite(&BipartiteParams {
                n_left: a.left,
                n_right: a.right,
                density: a.density,
                max_weight: a.max_weight,
                r_min: a.r_min,
                r_max: a.r_max,
                seed: a.seed,
            })
            .map_err(|e| Failure::Usage(e.to_string()))?;
            emit(a.instance.as_deref(), &write_instance(&inst))
        }
    }
}

fn cmd_bp(a: BpArgs) -> Run {
    if !(a.delta >= 0.0) {
        return Err(Failure::Usage("--delta must be non-negative".into()));
    }
    let inst = load_instance(&a.instance)?;
    let opts = BpOptions {
        max_iters: a.max_iters.unwrap_or_else(|| bp::heuristic_max_iters(&inst)),
        delta: a.delta,
        exec: Exec::default(),
    };
    let res = bp::run_bp_mwm(&inst, &opts);
    let mut text = String::new();
    let verdict = match res {
        Ok(res) => {
            let _ = writeln!(text, "converged {}", yes_no(res.converged));
            let _ = writeln!(text, "iterations {}", res.iterations);
            if let (Some(m), Some(y)) = (&res.matching, &res.dual) {
                let _ = writeln!(text, "weight {}", m.weight(&inst));
                let _ = writeln!(text, "dual_value {}", y.iter().sum::<f64>());
                for (u, v) in m.pairs(&inst) {
                    let _ = writeln!(text, "match {} {}", u + 1, v + 1);
                }
                for (i, v) in y.iter().enumerate() {
                    let _ = writeln!(text, "dual {} {v}", i + 1);
                }
                Ok(())
            } else {
                Err(Failure::Rejected(format!(
                    "no fixed point within {} steps",
                    opts.max_iters
                )))
            }
        }
        Err(e) => {
            let _ = writeln!(text, "converged yes");
            Err(Failure::Rejected(format!("fixed point gives no matching: {e}")))
        }
    };
    print!("{text}");
    verdict
}

fn cmd_gap(a: GapArgs) -> Run {
    let inst = load_instance(&a.instance)?;
    let oracle = Oracle {
        edge_cap: a.edge_cap,
        ..Oracle::default()
    };
    let gap = oracle.lp_gap(&inst).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("best_matching_weight {}", gap.best_matching_weight);
    println!("second_best_corner_weight {}", gap.second_best_corner_weight);
    println!("g {}", gap.g);
    println!("unique {}", yes_no(gap.unique));
    println!("polytope_gap {}", gap.polytope_gap);
    Ok(())
}

fn cmd_check(a: CheckArgs) -> Run {
    if !(a.tol >= 0.0) {
        return Err(Failure::Usage("--tol must be non-negative".into()));
    }
    let inst = load_instance(&a.instance)?;
    let out = load_outcome(&a.outcome, &inst)?;
    let ok = Oracle::default().exact_ud_check(&inst, &out, a.tol);
    println!("exact_ud {}", yes_no(ok));
    if ok {
        Ok(())
    } else {
        Err(Failure::Rejected("outcome is not a UD solution".into()))
    }
}

fn cmd_demo(a: DemoArgs) -> Run {
    let ring = generate_ring(RingParams::new(a.blocks, a.r)).map_err(|e| Failure::Usage(e.to_string()))?;
    let report = slow_progress_demo(&ring, a.kappa, a.max_iters).map_err(solve_failure)?;
    let bad = ring.instance.edge(ring.bad_edge);
    println!("# WARNING: this run starts rebalancing from an UNSTABLE outcome on purpose.");
    println!("# It reproduces the slow-progress negative result and is not a solver call.");
    println!("nodes {}", ring.instance.node_count());
    println!("weight {}", ring.weight);
    println!("eps_prime {}", report.eps_prime);
    println!("bad_edge {} {}", bad.u + 1, bad.v + 1);
    println!("initial_deficit {}", report.bad_edge_deficits[0]);
    println!("max_step_change {}", report.max_step_change());
    println!("lower_bound {}", report.lower_bound);
    match report.first_half_stable {
        Some(t) => println!("first_half_stable {t}"),
        None => println!("first_half_stable none within {}", a.max_iters),
    }
    if report.max_step_change() > report.eps_prime + DEFAULT_TOL_EQ {
        return Err(Failure::Internal("a step moved more than eps'".into()));
    }
    if report.first_half_stable.is_some_and(|t| (t as u64) < report.lower_bound) {
        return Err(Failure::Internal("bad edge recovered faster than the lower bound".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Generate(g) => cmd_generate(g),
        Command::Bp(a) => cmd_bp(a),
        Command::Gap(a) => cmd_gap(a),
        Command::Check(a) => cmd_check(a),
        Command::DemoSlow(a) => cmd_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Rejected(msg) | Failure::Usage(msg) | Failure::Internal(msg)) = &f;
            eprintln!("{msg}");
            ExitCode::from(f.code())
        }
    }
}
