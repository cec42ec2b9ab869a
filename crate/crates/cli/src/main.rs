//! `qvctl`: power flow, Q-V sensitivity and voltage-control runs from the
//! command line.

mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qvctl_core::caseio::{write_sensitivity_csv, write_trace_csv, CaseSource};
use qvctl_core::cases::{BundledCase, Scenario};
use qvctl_core::controller::{compare_ovc_svc, run_method, ControlConfig, EvaluationMode, Method, Outcome};
use qvctl_core::netmodel::{apply_disturbance, set_flat_setpoints, BusId, Network};
use qvctl_core::powerflow::{solve_newton, NEWTON_MAX_ITER};
use qvctl_core::sensitivity::{build_model_with, SlackMode};

use render::Format;

#[derive(Parser, Debug)]
#[command(
    name = "qvctl",
    version,
    about = "Optimal voltage control via Q-V sensitivities"
)]
struct Cli {
    /// Directory searched for case files given by name.
    #[arg(long, global = true, env = "QVCTL_DATA_DIR")]
    data_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one method on one case.
    Run(RunArgs),
    /// Run the bundled IEEE scenarios (OVC traces and the OVC/SVC comparison).
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Case file (.m or .json), or a bundled case name: case9, case14, case30.
    #[arg(long)]
    case: String,

    /// Reactive load change as BUS:MVAR, positive inductive. Repeatable.
    #[arg(long = "disturb", value_name = "BUS:MVAR", value_parser = parse_disturbance, allow_hyphen_values = true)]
    disturbances: Vec<(BusId, f64)>,

    #[arg(long, value_enum, default_value_t = MethodArg::Ovc)]
    method: MethodArg,

    /// Set every generator voltage set-point to this value before running.
    #[arg(long, value_name = "PU")]
    flat_setpoints: Option<f64>,

    #[command(flatten)]
    control: ControlArgs,

    #[arg(long, value_enum, default_value_t = Format::Table)]
    output: Format,

    /// Also write the per-iteration voltage trace as CSV (ovc/svc only).
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// Scenarios run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    #[command(flatten)]
    control: ControlArgs,

    #[arg(long, value_enum, default_value_t = Format::Table)]
    output: Format,
}

#[derive(Args, Debug, Clone)]
struct ControlArgs {
    #[arg(long, default_value_t = 1.0)]
    v_ref: f64,
    #[arg(long, default_value_t = 0.9)]
    v_min: f64,
    #[arg(long, default_value_t = 1.1)]
    v_max: f64,
    #[arg(long, default_value_t = 20)]
    max_iterations: usize,
    /// Update load voltages from the linear model instead of re-solving.
    #[arg(long)]
    linear: bool,
    /// Do not clamp set-points to [v-min, v-max].
    #[arg(long)]
    no_clamp: bool,
    #[arg(long, default_value_t = 1e-8)]
    pf_tolerance: f64,
    /// Keep the slack magnitude fixed instead of using it as a control.
    #[arg(long)]
    slack_reference: bool,
}

impl ControlArgs {
    fn config(&self) -> Result<ControlConfig> {
        let cfg = ControlConfig {
            v_ref: self.v_ref,
            v_min: self.v_min,
            v_max: self.v_max,
            max_iterations: self.max_iterations,
            evaluation_mode: if self.linear {
                EvaluationMode::Linear
            } else {
                EvaluationMode::PowerFlow
            },
            clamp_pv: !self.no_clamp,
            pf_tolerance: self.pf_tolerance,
            slack_mode: if self.slack_reference {
                SlackMode::Reference
            } else {
                SlackMode::Control
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ovc,
    Svc,
    Compare,
    Solve,
    Sens,
}

fn parse_disturbance(s: &str) -> Result<(BusId, f64), String> {
    let (bus, mvar) = s
        .split_once(':')
        .ok_or_else(|| format!("expected BUS:MVAR, got `{s}`"))?;
    let bus: BusId = bus.trim().parse().map_err(|_| format!("bad bus id `{bus}`"))?;
    let mvar: f64 = mvar
        .trim()
        .parse()
        .map_err(|_| format!("bad MVAr value `{mvar}`"))?;
    if !mvar.is_finite() {
        return Err(format!("MVAr value must be finite, got `{mvar}`"));
    }
    Ok((bus, mvar))
}

/// Exit status for a finished control run.
fn outcome_status(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Resolved => 0,
        Outcome::IterationCapHit | Outcome::Oscillating => 2,
        Outcome::Infeasible => 3,
    }
}

/// Worst of several statuses: infeasible over non-converging over success.
fn worst_status(codes: impl IntoIterator<Item = u8>) -> u8 {
    codes
        .into_iter()
        .max_by_key(|&c| match c {
            3 => 2,
            2 => 1,
            _ => 0,
        })
        .unwrap_or(0)
}

fn load_case(name: &str, data_dir: Option<&Path>) -> Result<Network> {
    let direct = PathBuf::from(name);
    let mut candidates = vec![direct.clone()];
    if let Some(dir) = data_dir {
        candidates.push(dir.join(name));
        candidates.push(dir.join(format!("{name}.m")));
    }
    if let Some(path) = candidates.iter().find(|p| p.is_file()) {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed = CaseSource::detect(Some(path), text)
            .parse()
            .with_context(|| format!("parsing {}", path.display()))?;
        for w in &parsed.warnings {
            eprintln!("warning: {}: {w}", path.display());
        }
        return Ok(parsed.network);
    }
    if let Some(case) = BundledCase::from_name(name) {
        return Ok(case.network());
    }
    bail!("case file not found: {}", direct.display())
}

fn prepare(args: &RunArgs, data_dir: Option<&Path>) -> Result<Network> {
    let mut net = load_case(&args.case, data_dir)?;
    if let Some(v) = args.flat_setpoints {
        net = set_flat_setpoints(&net, v)?;
    }
    for &(bus, dq) in &args.disturbances {
        net = apply_disturbance(&net, bus, dq).with_context(|| format!("disturbance {bus}:{dq}"))?;
    }
    Ok(net)
}

fn run(args: &RunArgs, data_dir: Option<&Path>) -> Result<(String, u8)> {
    let net = prepare(args, data_dir)?;
    let cfg = args.control.config()?;
    if args.trace.is_some() && !matches!(args.method, MethodArg::Ovc | MethodArg::Svc) {
        bail!("--trace applies to the ovc and svc methods only");
    }
    match args.method {
        MethodArg::Solve => {
            let sol = solve_newton(&net, cfg.pf_tolerance, NEWTON_MAX_ITER).context("power flow")?;
            Ok((render::solution(&net, &sol, args.output)?, 0))
        }
        MethodArg::Sens => {
            let model = build_model_with(&net, cfg.slack_mode)?;
            let out = match args.output {
                Format::Json => render::sensitivity_json(&model)?,
                Format::Table | Format::Csv => write_sensitivity_csv(&model),
            };
            Ok((out, 0))
        }
        MethodArg::Ovc | MethodArg::Svc => {
            let method = if args.method == MethodArg::Ovc {
                Method::Ovc
            } else {
                Method::Svc
            };
            let trace = run_method(&net, &cfg, method)?;
            if let Some(path) = &args.trace {
                fs::write(path, write_trace_csv(&trace))
                    .with_context(|| format!("writing trace {}", path.display()))?;
            }
            Ok((
                render::trace(&args.case, &trace, args.output)?,
                outcome_status(trace.outcome),
            ))
        }
        MethodArg::Compare => {
            let cmp = compare_ovc_svc(&net, &cfg)?;
            Ok((render::comparison(&[(args.case.as_str(), &cmp)], args.output)?, 0))
        }
    }
}

fn reproduce(args: &ReproduceArgs) -> Result<(String, u8)> {
    let cfg = args.control.config()?;
    let scenarios = Scenario::all();
    let jobs = args.jobs.max(1);
    let work = |s: &Scenario| -> Result<_> {
        let net = s.network();
        let trace = run_method(&net, &cfg, Method::Ovc).with_context(|| format!("scenario {}", s.name))?;
        let cmp = compare_ovc_svc(&net, &cfg).with_context(|| format!("scenario {}", s.name))?;
        Ok((trace, cmp))
    };
    let mut results = Vec::with_capacity(scenarios.len());
    for chunk in scenarios.chunks(jobs) {
        let batch: Vec<Result<_>> = thread::scope(|scope| {
            let handles: Vec<_> = chunk.iter().map(|s| scope.spawn(|| work(s))).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("worker panicked"))))
                .collect()
        });
        for r in batch {
            results.push(r?);
        }
    }

    let status = worst_status(results.iter().map(|(t, _)| outcome_status(t.outcome)));
    let runs: Vec<_> = scenarios
        .iter()
        .zip(&results)
        .map(|(s, (t, c))| (s.name, t, c))
        .collect();
    Ok((render::reproduction(&runs, args.output)?, status))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let data_dir = cli.data_dir.as_deref();
    let result = match &cli.command {
        Command::Run(args) => run(args, data_dir),
        Command::Reproduce(args) => reproduce(args),
    };
    match result {
        Ok((out, status)) => {
            print!("{out}");
            ExitCode::from(status)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
