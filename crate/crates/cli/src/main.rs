//! `hetsched` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 internal
//! contract violation (including bench cells that failed).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hetsched::bench::{run_bench, summarize, summary_table, write_outputs, BenchPlan};
use hetsched::engine::{Simulation, EVENT_LOG_HEADER};
use hetsched::workload::{generate_workload, read_workload_csv, write_workload_csv};
use hetsched::{
    compute_report, paper_preset, parse_config, write_report, EnergyLedger, ReportFormat, Scenario, SchedulerKind,
    SimConfig,
};

#[derive(Debug, Parser)]
#[command(name = "hetsched", version, about = "Heterogeneous task scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a scenario workload CSV.
    GenWorkload(GenWorkloadArgs),
    /// Run one simulation and write its report.
    Simulate(SimulateArgs),
    /// Run the scenario × scheduler × seed grid.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenWorkloadArgs {
    /// low, medium or high.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Scenario,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Configuration document supplying the task types (default: built-in preset).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Configuration document (default: built-in preset).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workload: PathBuf,
    /// Overrides the configuration's scheduling_method.
    #[arg(long, value_parser = parse_scheduler)]
    scheduler: Option<SchedulerKind>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the per-event dump to this file.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Scenario label recorded in the report.
    #[arg(long, default_value = "custom")]
    scenario: String,
    /// Seed label recorded in the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Configuration document (default: built-in preset).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated scenarios.
    #[arg(long = "scenario", alias = "scenarios", value_delimiter = ',', value_parser = parse_scenario,
          default_values_t = Scenario::ALL)]
    scenarios: Vec<Scenario>,
    /// Comma-separated schedulers.
    #[arg(long = "scheduler", alias = "schedulers", value_delimiter = ',', value_parser = parse_scheduler,
          default_values_t = SchedulerKind::ALL)]
    schedulers: Vec<SchedulerKind>,
    /// Seeds: a list (`1,2,5`), a half-open range (`0..10`) or an inclusive one (`0..=9`).
    #[arg(long = "seeds", alias = "seed", default_value = "0..=9", value_parser = parse_seeds)]
    seeds: SeedList,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse()
        .map_err(|e: hetsched::workload::UnknownScenario| e.to_string())
}

fn parse_scheduler(s: &str) -> Result<SchedulerKind, String> {
    s.parse()
        .map_err(|e: hetsched::schedulers::UnknownScheduler| e.to_string())
}

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let num = |x: &str| x.trim().parse::<u64>().map_err(|_| format!("bad seed {x:?}"));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(format!("seed list {s:?} is empty"));
    }
    Ok(SeedList(seeds))
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Data(anyhow::Error),
    Contract(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Data(_) => 2,
            Failure::Contract(_) => 3,
        }
    }
}

fn data<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Data(e.into())
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, Failure> {
    match path {
        None => Ok(paper_preset()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(data)?;
            parse_config(&text)
                .with_context(|| format!("in {}", p.display()))
                .map_err(data)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(data)?;
    }
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(data)
}

fn gen_workload(args: GenWorkloadArgs) -> Result<(), Failure> {
    let config = load_config(args.config.as_deref())?;
    let tasks = generate_workload(&args.scenario.spec(), config.task_types(), args.seed);
    write_file(&args.out, &write_workload_csv(&tasks, config.task_types()))?;
    for t in config.task_types() {
        let n = tasks.iter().filter(|x| x.task_type == t.id).count();
        println!("{}: {}", t.name, n);
    }
    println!("wrote {} tasks to {}", tasks.len(), args.out.display());
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let config = load_config(args.config.as_deref())?;
    let scheduler = args.scheduler.unwrap_or(config.scheduling_method);
    let text = fs::read_to_string(&args.workload)
        .with_context(|| format!("reading {}", args.workload.display()))
        .map_err(data)?;
    let parsed = read_workload_csv(&text, config.task_types())
        .with_context(|| format!("in {}", args.workload.display()))
        .map_err(data)?;
    for w in &parsed.warnings {
        eprintln!("warning: {}:{}: {}", args.workload.display(), w.line, w.message);
    }

    let mut sim = Simulation::new(&config, &parsed.tasks);
    if args.events.is_some() {
        sim = sim.log_events();
    }
    let out = sim
        .run(scheduler.build().as_mut())
        .map_err(|e| Failure::Contract(e.into()))?;
    EnergyLedger::from_trace(&out.trace, &config)
        .verify(&out.trace, &config)
        .map_err(|e| Failure::Contract(e.into()))?;

    if let Some(path) = &args.events {
        let mut dump = String::from(EVENT_LOG_HEADER);
        dump.push('\n');
        for e in &out.events {
            dump.push_str(&e.to_string());
            dump.push('\n');
        }
        write_file(path, &dump)?;
    }

    let report = compute_report(&out.trace, &config, &args.scenario, scheduler, args.seed);
    let rendered = match args.format {
        Format::Json => write_report(&report, ReportFormat::Json),
        Format::Csv => format!(
            "{}\n{}\n",
            hetsched::metrics::REPORT_CSV_HEADER,
            write_report(&report, ReportFormat::CsvRow)
        ),
    };
    match &args.out {
        Some(path) => write_file(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let config = load_config(args.config.as_deref())?;
    let plan = BenchPlan {
        scenarios: args.scenarios,
        schedulers: args.schedulers,
        seeds: args.seeds.0,
        jobs: args.jobs.max(1),
    };
    let results = run_bench(&plan, &config).map_err(|e| data(anyhow::anyhow!(e)))?;
    write_outputs(&results, &args.out)
        .with_context(|| format!("writing bench outputs to {}", args.out.display()))
        .map_err(data)?;
    print!("{}", summary_table(&summarize(&results.reports)));
    if !results.failures.is_empty() {
        for f in &results.failures {
            eprintln!(
                "cell ({}, {}, seed {}) failed: {}",
                f.scenario, f.scheduler, f.seed, f.message
            );
        }
        return Err(Failure::Contract(anyhow::anyhow!(
            "{} of {} cells failed",
            results.failures.len(),
            results.failures.len() + results.reports.len()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::GenWorkload(a) => gen_workload(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Data(e) | Failure::Contract(e)) = f;
            eprintln!("error: {e:#}");
            log::debug!("exit code {code}");
            ExitCode::from(code)
        }
    }
}
