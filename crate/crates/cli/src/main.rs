//! `anfj`: run ANFJ programs concretely, analyze them, and compare analysis policies.
//!
//! Exit status is 0 on success, 1 on input errors (unreadable file, parse or
//! elaboration failure, bad flags, a stuck concrete run) and 2 when a budget runs
//! out (analysis budgets, or fuel for `run`).

use anfj_core::concrete::{inject, run, Outcome, DEFAULT_FUEL};
use anfj_core::domain::{Mode, Policy};
use anfj_core::dsg::{analyze, AnalysisError, Budget};
use anfj_core::export::{to_dot, to_json};
use anfj_core::metrics::{compare, report};
use anfj_core::syntax::{load, LabeledProgram};
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Stated in every text report so the numbers are read the same way.
const AVERAGING_NOTE: &str =
    "# averages: value sets unioned per address over all node stores; empty addresses excluded";

#[derive(Parser)]
#[command(name = "anfj", version, about = "Concrete interpreter and pushdown exception-flow analyzer for ANFJ")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program on the concrete machine.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Print one JSON record per machine state before the outcome.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Build the graph for one policy and report its precision metrics.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Write the graph as Graphviz to this path.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
        /// Write the graph as JSON to this path.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Analyze under two policies and print both reports with their ratios.
    Compare {
        file: PathBuf,
        /// Policy A, e.g. `k=0,gc=on,mode=pushdown`.
        #[arg(long)]
        a: Policy,
        /// Policy B, e.g. `k=1,mode=finite`.
        #[arg(long)]
        b: Policy,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        matches!(s, Switch::On)
    }
}

#[derive(Args)]
struct PolicyArgs {
    /// Call-string depth of abstract times.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Qualify frame pointers and objects by the receiver's allocation site.
    #[arg(long)]
    obj_sens: bool,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    gc: Switch,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    liveness: Switch,
    #[arg(long, default_value = "pushdown")]
    mode: Mode,
    /// Keep one store per graph node, or one store shared by all nodes.
    #[arg(long, value_enum, default_value_t = StoreKind::PerNode)]
    store: StoreKind,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StoreKind {
    PerNode,
    Global,
}

impl PolicyArgs {
    fn policy(&self) -> Policy {
        Policy {
            k: self.k,
            obj_sens: self.obj_sens,
            gc: self.gc.into(),
            liveness: self.liveness.into(),
            mode: self.mode,
            global_store: self.store == StoreKind::Global,
        }
    }
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    budget_nodes: Option<usize>,
    #[arg(long)]
    budget_edges: Option<usize>,
    #[arg(long)]
    budget_seconds: Option<f64>,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        let d = Budget::default();
        Budget {
            nodes: self.budget_nodes.unwrap_or(d.nodes),
            edges: self.budget_edges.unwrap_or(d.edges),
            seconds: self.budget_seconds.unwrap_or(d.seconds),
        }
    }
}

enum Failure {
    Input(anyhow::Error),
    Budget(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::Budget(e.to_string())
    }
}

fn read_program(path: &Path) -> anyhow::Result<LabeledProgram> {
    let src = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    load(&src).with_context(|| format!("{} is not a valid program", path.display()))
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_run(file: &Path, fuel: usize, trace: bool, format: OutputFormat) -> Result<(), Failure> {
    let lp = read_program(file)?;
    let (outcome, states) = run(&lp, inject(&lp), fuel);
    if trace {
        for (i, s) in states.iter().enumerate() {
            let rec = json!({ "step": i, "label": s.label, "fp": s.fp.to_string(), "kontDepth": s.kont.depth() });
            println!("{rec}");
        }
    }
    let (kind, value) = match &outcome {
        Outcome::Halted(v) => ("halted", Some(v)),
        Outcome::Uncaught(v) => ("uncaught", Some(v)),
        Outcome::Stuck(..) => ("stuck", None),
        Outcome::FuelExhausted(_) => ("fuel", None),
    };
    match format {
        OutputFormat::Text => println!("{outcome} after {} states", states.len()),
        OutputFormat::Json => {
            let doc = json!({
                "outcome": kind,
                "class": value.map(|v| v.class.clone()),
                "value": value.map(|v| v.to_string()),
                "steps": states.len(),
            });
            println!("{doc}");
        }
    }
    match outcome {
        Outcome::Stuck(_, why) => Err(Failure::Input(anyhow!("machine stuck: {why}"))),
        Outcome::FuelExhausted(_) => Err(Failure::Budget(format!("fuel of {fuel} steps exhausted"))),
        _ => Ok(()),
    }
}

fn cmd_analyze(
    file: &Path,
    policy: &Policy,
    dot: Option<&Path>,
    json_out: Option<&Path>,
    budget: &Budget,
    format: OutputFormat,
) -> Result<(), Failure> {
    let lp = read_program(file)?;
    let started = Instant::now();
    let dsg = analyze(&lp, policy, budget)?;
    let elapsed = started.elapsed();
    if let Some(p) = dot {
        write_file(p, &to_dot(&dsg, Some(&lp)))?;
    }
    if let Some(p) = json_out {
        write_file(p, &to_json(&dsg))?;
    }
    let rep = report(&dsg, &lp);
    match format {
        OutputFormat::Text => {
            println!("{AVERAGING_NOTE}");
            print!("{rep}");
            println!("time          {:.3} s", elapsed.as_secs_f64());
        }
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&rep).context("serialising report")?),
    }
    Ok(())
}

fn cmd_compare(file: &Path, a: &Policy, b: &Policy, budget: &Budget, format: OutputFormat) -> Result<(), Failure> {
    let lp = read_program(file)?;
    let cmp = compare(&lp, a, b, budget).map_err(|e| Failure::Budget(e.to_string()))?;
    match format {
        OutputFormat::Text => {
            println!("{AVERAGING_NOTE}");
            print!("{cmp}");
        }
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&cmp).context("serialising comparison")?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run { file, fuel, trace, format } => cmd_run(file, *fuel, *trace, *format),
        Command::Analyze { file, policy, dot, json, budget, format } => {
            cmd_analyze(file, &policy.policy(), dot.as_deref(), json.as_deref(), &budget.budget(), *format)
        }
        Command::Compare { file, a, b, budget, format } => cmd_compare(file, a, b, &budget.budget(), *format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
