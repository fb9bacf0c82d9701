//! Command-line surface: case generation, solving, oracle validation, and
//! Monte-Carlo simulation.
//!
//! Exit codes: 0 on success (convergence or commitment fixed point),
//! 2 when an iteration or resource cap was hit (a report is still written
//! when one exists), 1 on input errors.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rucs::driver::{self, Mode, RunConfig, SolveReport, Termination};
use rucs::eval::{oracle_worst_case, simulate_policy, Policy, SimulationRun};
use rucs::fmt::sig;
use rucs::gen::{generate, GenSpec};
use rucs::model::{load_case, UncertaintySet};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "rucs", about = "Multistage robust unit commitment solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random feasible case file (deterministic per seed).
    Gen(GenArgs),
    /// Solve a case in one of the modes and write report artifacts.
    Solve(SolveArgs),
    /// Exact worst-case dispatch cost for a solved commitment.
    Oracle(OracleArgs),
    /// Monte-Carlo sequential-dispatch evaluation of a solved policy.
    Simulate(SimArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 5)]
    buses: usize,
    #[arg(long, default_value_t = 3)]
    gens: usize,
    #[arg(long, default_value_t = 1)]
    storages: usize,
    #[arg(long, default_value_t = 6)]
    lines: usize,
    #[arg(long, default_value_t = 1)]
    renewables: usize,
    #[arg(long, default_value_t = 3)]
    loads: usize,
    #[arg(long, default_value_t = 3)]
    stages: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output case file.
    #[arg(long, default_value = "case.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Case file (JSON).
    case: PathBuf,
    /// Run configuration (TOML); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.json, trace.csv and pools.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    case: PathBuf,
    /// Report whose commitment is evaluated.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    path_cap: Option<usize>,
}

#[derive(Args)]
struct SimArgs {
    case: PathBuf,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-path CSV output.
    #[arg(long, default_value = "simulation.csv")]
    out: PathBuf,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "radp" => Ok(Mode::Radp),
        "rddp" => Ok(Mode::Rddp),
        "rfr" => Ok(Mode::Rfr),
        other => Err(format!("unknown mode '{other}' (radp|rddp|rfr)")),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            classify(&err)
        }
    };
    std::process::exit(code);
}

/// Resource/cap failures exit 2, input failures 1.
fn classify(err: &anyhow::Error) -> i32 {
    if let Some(e) = err.downcast_ref::<rucs::Error>() {
        match e {
            rucs::Error::Resource(_) => return 2,
            rucs::Error::Solver(rucs::lpsolve::SolverError::NodeLimit { .. }) => return 2,
            _ => return 1,
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<i32> {
    let spec = GenSpec {
        buses: args.buses,
        gens: args.gens,
        storages: args.storages,
        lines: args.lines,
        renewables: args.renewables,
        loads: args.loads,
        stages: args.stages,
        seed: args.seed,
    };
    let case = generate(&spec);
    let text = serde_json::to_string_pretty(&case)?;
    std::fs::write(&args.out, text.as_bytes())
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<i32> {
    let case = load_case(&args.case)?;
    let mut config = load_config(args.config.as_deref())?;
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(eps) = args.epsilon {
        config.epsilon = eps;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let set = UncertaintySet::from_case(&case);
    let report = driver::run(&case, &set, &config)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let report_path = args.out_dir.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    std::fs::write(
        args.out_dir.join("trace.csv"),
        trace_csv(&report),
    )?;
    std::fs::write(
        args.out_dir.join("pools.json"),
        serde_json::to_string_pretty(&report.pools)?,
    )?;

    println!(
        "mode={:?} objective={} outer={} termination={:?}",
        report.mode,
        sig(report.objective_uc),
        report.outer_iterations,
        report.termination
    );
    println!("report: {}", report_path.display());
    Ok(match report.termination {
        Termination::MaxIterations => 2,
        _ => 0,
    })
}

fn trace_csv(report: &SolveReport) -> String {
    let mut s = String::from("m1,m2,lower,upper,gap,seconds\n");
    for tr in &report.traces {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            tr.outer,
            tr.inner,
            sig(tr.lower),
            sig(tr.upper),
            sig(tr.gap),
            sig(tr.seconds)
        ));
    }
    s
}

fn read_report(path: &Path) -> anyhow::Result<SolveReport> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report: SolveReport = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(report)
}

fn cmd_oracle(args: OracleArgs) -> anyhow::Result<i32> {
    let case = load_case(&args.case)?;
    let report = read_report(&args.report)?;
    let set = UncertaintySet::from_case(&case);
    let penalty = case.penalty_cost(report.config.penalty_multiplier);
    let cap = args.path_cap.unwrap_or(report.config.oracle_path_cap);
    let value = oracle_worst_case(&case, &report.x, &set, penalty, cap, &report.config.solver)?;
    println!("oracle_worst_case={}", sig(value));
    Ok(0)
}

fn cmd_simulate(args: SimArgs) -> anyhow::Result<i32> {
    let case = load_case(&args.case)?;
    let report = read_report(&args.report)?;
    let set = UncertaintySet::from_case(&case);
    let penalty = case.penalty_cost(report.config.penalty_multiplier);
    let n_paths = args.paths.unwrap_or(report.config.paths);
    let seed = args.seed.unwrap_or(report.config.seed);

    let policy = match report.mode {
        Mode::Rfr => Policy::Envelope {
            x: &report.x,
            envelope: &report.envelope,
        },
        _ => Policy::CutPools {
            x: &report.x,
            pools: &report.pools,
        },
    };
    let run = simulate_policy(&case, &set, &policy, n_paths, seed, penalty, &report.config.solver)?;
    std::fs::write(&args.out, simulation_csv(&run))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "paths={} mean_cost={} max_cost={} slack_activations={}",
        run.outcomes.len(),
        sig(run.mean_cost),
        sig(run.max_cost),
        run.total_slack_activations
    );
    if run.total_slack_activations > 0 {
        eprintln!(
            "warning: {} slack activations (robustness violations)",
            run.total_slack_activations
        );
    }
    Ok(0)
}

fn simulation_csv(run: &SimulationRun) -> String {
    let mut s = String::from("seed,path_id,cost,slack_count\n");
    for o in &run.outcomes {
        s.push_str(&format!(
            "{},{},{},{}\n",
            run.seed,
            o.path_id,
            sig(o.cost),
            o.slack_activations
        ));
    }
    s.push_str(&format!(
        "summary,mean,{},{}\n",
        sig(run.mean_cost),
        run.total_slack_activations
    ));
    s.push_str(&format!("summary,max,{},\n", sig(run.max_cost)));
    s
}
