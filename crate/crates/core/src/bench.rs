//! Scenario × scheduler × seed benchmark grid.
//!
//! Each `(scenario, seed)` pair generates one workload that is replayed
//! under every scheduler of the plan. Cells are independent and may run on a
//! thread pool; results are sorted by `(scenario, scheduler, seed)` before
//! anything is written, so output files do not depend on `jobs`.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::engine::run_simulation;
use crate::metrics::{compute_report, write_report, EnergyLedger, ReportFormat, SimReport, REPORT_CSV_HEADER};
use crate::model::SimConfig;
use crate::schedulers::SchedulerKind;
use crate::workload::{generate_workload, Scenario};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchPlan {
    pub scenarios: Vec<Scenario>,
    pub schedulers: Vec<SchedulerKind>,
    pub seeds: Vec<u64>,
    /// Worker threads; 1 runs everything on the calling thread.
    pub jobs: usize,
}

impl BenchPlan {
    /// Three scenarios, four schedulers, seeds 0 through 9.
    pub fn full_grid() -> Self {
        BenchPlan {
            scenarios: Scenario::ALL.to_vec(),
            schedulers: SchedulerKind::ALL.to_vec(),
            seeds: (0..10).collect(),
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.scenarios.is_empty() {
            return Err("bench plan has no scenarios".into());
        }
        if self.schedulers.is_empty() {
            return Err("bench plan has no schedulers".into());
        }
        if self.seeds.is_empty() {
            return Err("bench plan has no seeds".into());
        }
        Ok(())
    }

    fn normalized(&self) -> (Vec<Scenario>, Vec<SchedulerKind>, Vec<u64>) {
        fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
            let mut v = v.to_vec();
            v.sort();
            v.dedup();
            v
        }
        (sorted(&self.scenarios), sorted(&self.schedulers), sorted(&self.seeds))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFailure {
    pub scenario: Scenario,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchResults {
    /// Sorted by `(scenario, scheduler, seed)`.
    pub reports: Vec<SimReport>,
    pub failures: Vec<CellFailure>,
}

fn run_cell(config: &SimConfig, scenario: Scenario, scheduler: SchedulerKind, seed: u64) -> Result<SimReport, String> {
    let workload = generate_workload(&scenario.spec(), config.task_types(), seed);
    let trace = run_simulation(config, &workload, scheduler.build().as_mut()).map_err(|e| e.to_string())?;
    EnergyLedger::from_trace(&trace, config)
        .verify(&trace, config)
        .map_err(|e| e.to_string())?;
    Ok(compute_report(&trace, config, scenario.name(), scheduler, seed))
}

pub fn run_bench(plan: &BenchPlan, config: &SimConfig) -> Result<BenchResults, String> {
    plan.validate()?;
    let (scenarios, schedulers, seeds) = plan.normalized();
    let mut cells = Vec::with_capacity(scenarios.len() * schedulers.len() * seeds.len());
    for &sc in &scenarios {
        for &k in &schedulers {
            for &s in &seeds {
                cells.push((sc, k, s));
            }
        }
    }

    let outcomes: Vec<_> = if plan.jobs <= 1 {
        cells.iter().map(|&(sc, k, s)| run_cell(config, sc, k, s)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.jobs)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| cells.par_iter().map(|&(sc, k, s)| run_cell(config, sc, k, s)).collect())
    };

    let mut results = BenchResults {
        reports: Vec::new(),
        failures: Vec::new(),
    };
    for (&(scenario, scheduler, seed), outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.reports.push(r),
            Err(message) => results.failures.push(CellFailure {
                scenario,
                scheduler,
                seed,
                message,
            }),
        }
    }
    Ok(results)
}

/// Per-(scenario, scheduler) means over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: Scenario,
    pub scheduler: SchedulerKind,
    pub runs: usize,
    pub completion_pct: f64,
    /// Energies in millijoules.
    pub total_energy: f64,
    pub active_energy: f64,
    pub idle_energy: f64,
    pub wasted_energy: f64,
    /// Mean over the runs that completed at least one task.
    pub energy_per_completion: Option<f64>,
    pub assigned: [f64; 3],
}

fn mj(uj: u64) -> f64 {
    uj as f64 / 1000.0
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(reports: &[SimReport]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Scenario, SchedulerKind), Vec<&SimReport>> = BTreeMap::new();
    for r in reports {
        let scenario: Scenario = r.scenario.parse().expect("bench reports carry scenario names");
        groups.entry((scenario, r.scheduler)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((scenario, scheduler), rs)| {
            let m = |f: fn(&SimReport) -> f64| mean(rs.iter().map(|r| f(r))).unwrap();
            SummaryRow {
                scenario,
                scheduler,
                runs: rs.len(),
                completion_pct: m(|r| r.completion_pct()),
                total_energy: m(|r| mj(r.total_energy)),
                active_energy: m(|r| mj(r.active_energy)),
                idle_energy: m(|r| mj(r.idle_energy)),
                wasted_energy: m(|r| mj(r.wasted_energy)),
                energy_per_completion: mean(
                    rs.iter()
                        .filter_map(|r| r.energy_per_completion())
                        .map(|uj| uj / 1000.0),
                ),
                assigned: [
                    m(|r| r.assigned("CPU") as f64),
                    m(|r| r.assigned("GPU") as f64),
                    m(|r| r.assigned("ASIC") as f64),
                ],
            }
        })
        .collect()
}

pub const SUMMARY_CSV_HEADER: &str = "scenario,scheduler,runs,completion_pct,total_energy_mJ,active_energy_mJ,\
idle_energy_mJ,wasted_energy_mJ,energy_per_completion_mJ,assigned_CPU,assigned_GPU,assigned_ASIC";

/// Plot-data files, one per metric, shaped scenario × scheduler.
pub const PLOT_FILES: [&str; 4] = [
    "completion_pct.csv",
    "total_energy.csv",
    "wasted_energy.csv",
    "energy_per_completion.csv",
];

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.scenario.to_string(),
            r.scheduler.to_string(),
            r.runs.to_string(),
            fmt2(r.completion_pct),
            fmt3(r.total_energy),
            fmt3(r.active_energy),
            fmt3(r.idle_energy),
            fmt3(r.wasted_energy),
            r.energy_per_completion.map(fmt3).unwrap_or_default(),
            fmt2(r.assigned[0]),
            fmt2(r.assigned[1]),
            fmt2(r.assigned[2]),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// One plot-data CSV: a row per scenario, a column per scheduler. The
/// columns are always all four schedulers; cells of schedulers outside the
/// plan stay empty.
pub fn plot_csv(rows: &[SummaryRow], metric: fn(&SummaryRow) -> Option<String>) -> String {
    let schedulers = SchedulerKind::ALL;
    let mut scenarios: Vec<Scenario> = rows.iter().map(|r| r.scenario).collect();
    scenarios.sort();
    scenarios.dedup();

    let mut out = String::from("scenario");
    for k in &schedulers {
        out.push(',');
        out.push_str(k.name());
    }
    out.push('\n');
    for sc in scenarios {
        out.push_str(sc.name());
        for &k in &schedulers {
            out.push(',');
            if let Some(row) = rows.iter().find(|r| r.scenario == sc && r.scheduler == k) {
                out.push_str(&metric(row).unwrap_or_default());
            }
        }
        out.push('\n');
    }
    out
}

/// Renders every output file as `(file name, contents)`.
pub fn render_outputs(results: &BenchResults) -> Vec<(&'static str, String)> {
    let mut reports = String::from(REPORT_CSV_HEADER);
    reports.push('\n');
    for r in &results.reports {
        reports.push_str(&write_report(r, ReportFormat::CsvRow));
        reports.push('\n');
    }
    let rows = summarize(&results.reports);
    vec![
        ("reports.csv", reports),
        ("summary.csv", summary_csv(&rows)),
        (PLOT_FILES[0], plot_csv(&rows, |r| Some(fmt2(r.completion_pct)))),
        (PLOT_FILES[1], plot_csv(&rows, |r| Some(fmt3(r.total_energy)))),
        (PLOT_FILES[2], plot_csv(&rows, |r| Some(fmt3(r.wasted_energy)))),
        (PLOT_FILES[3], plot_csv(&rows, |r| r.energy_per_completion.map(fmt3))),
    ]
}

/// Writes all output files into `dir`, creating it if needed.
pub fn write_outputs(results: &BenchResults, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    render_outputs(results)
        .into_iter()
        .map(|(name, contents)| {
            let path = dir.join(name);
            fs::write(&path, contents)?;
            Ok(path)
        })
        .collect()
}

/// Plain-text table of the summary, for terminals.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<8} {:<8} {:>5} {:>12} {:>14} {:>14} {:>12}\n",
        "scenario", "sched", "runs", "complete %", "total mJ", "wasted mJ", "mJ/compl"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<8} {:<8} {:>5} {:>12} {:>14} {:>14} {:>12}\n",
            r.scenario.name(),
            r.scheduler.name(),
            r.runs,
            fmt2(r.completion_pct),
            fmt3(r.total_energy),
            fmt3(r.wasted_energy),
            r.energy_per_completion.map(fmt3).unwrap_or_else(|| "-".into()),
        ));
    }
    out
}
