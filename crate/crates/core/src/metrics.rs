//! Energy ledger and run reports.
//!
//! Per machine, over the accounting horizon `H`:
//!
//! ```text
//! active = power      × Σ busy interval lengths
//! wasted = power      × Σ lengths of intervals whose task did not complete
//! idle   = idle_power × (H − Σ busy interval lengths)
//! total  = active + idle
//! ```
//!
//! Everything is an integer number of microjoules, so the identities
//! `total = active + idle` and `active = completed work + wasted` hold
//! exactly. Values are rendered in millijoules with three decimals and
//! percentages with two, rounding half up, only when serialized.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::{SimTrace, TaskStatus};
use crate::error::LedgerError;
use crate::model::{MicroJoules, Micros, SimConfig};
use crate::schedulers::SchedulerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MachineEnergy {
    pub busy_time: Micros,
    pub active: MicroJoules,
    pub idle: MicroJoules,
    pub wasted: MicroJoules,
    /// Energy of busy intervals whose task completed.
    pub useful: MicroJoules,
}

impl MachineEnergy {
    pub fn total(&self) -> MicroJoules {
        self.active + self.idle
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub horizon: Micros,
    pub machines: Vec<MachineEnergy>,
}

impl EnergyLedger {
    pub fn from_trace(trace: &SimTrace, config: &SimConfig) -> EnergyLedger {
        let machines = trace
            .machines
            .iter()
            .map(|m| {
                let spec = config.machine_type_of(m.index);
                let mut e = MachineEnergy::default();
                for iv in &m.busy_intervals {
                    let energy = spec.power * iv.duration();
                    e.busy_time += iv.duration();
                    e.active += energy;
                    if iv.completed {
                        e.useful += energy;
                    } else {
                        e.wasted += energy;
                    }
                }
                e.idle = spec.idle_power * trace.horizon.saturating_sub(e.busy_time);
                e
            })
            .collect();
        EnergyLedger {
            horizon: trace.horizon,
            machines,
        }
    }

    pub fn aggregate(&self) -> MachineEnergy {
        self.machines
            .iter()
            .fold(MachineEnergy::default(), |acc, m| MachineEnergy {
                busy_time: acc.busy_time + m.busy_time,
                active: acc.active + m.active,
                idle: acc.idle + m.idle,
                wasted: acc.wasted + m.wasted,
                useful: acc.useful + m.useful,
            })
    }

    /// Checks the ledger identities per machine and in aggregate, and
    /// re-derives active and wasted energy from the task records as a second
    /// route.
    pub fn verify(&self, trace: &SimTrace, config: &SimConfig) -> Result<(), LedgerError> {
        let fail = |scope: String, detail: String| Err(LedgerError::Identity { scope, detail });
        for (i, m) in self.machines.iter().enumerate() {
            let scope = || format!("machine {}", config.machine_label(i));
            if m.active != m.useful + m.wasted {
                return fail(
                    scope(),
                    format!("active {} != useful {} + wasted {}", m.active, m.useful, m.wasted),
                );
            }
            if m.wasted > m.active {
                return fail(scope(), format!("wasted {} exceeds active {}", m.wasted, m.active));
            }
            if m.busy_time > self.horizon {
                return fail(
                    scope(),
                    format!("busy {} us exceeds horizon {} us", m.busy_time, self.horizon),
                );
            }
            let spec = config.machine_type_of(i);
            if m.total() != spec.power * m.busy_time + spec.idle_power * (self.horizon - m.busy_time) {
                return fail(scope(), "total != active + idle".into());
            }
        }

        let mut useful = 0;
        let mut wasted = 0;
        for r in &trace.records {
            let (Some(m), Some(start), Some(end)) = (r.machine, r.start, r.finish_or_cancel) else {
                continue;
            };
            let energy = config.machine_type_of(m).power * (end - start);
            match r.status {
                TaskStatus::Completed => useful += energy,
                TaskStatus::CancelledRunning => wasted += energy,
                _ => {}
            }
        }
        let agg = self.aggregate();
        if agg.useful != useful || agg.wasted != wasted {
            return fail(
                "aggregate".into(),
                format!(
                    "intervals give useful/wasted {}/{}, task records give {}/{}",
                    agg.useful, agg.wasted, useful, wasted
                ),
            );
        }
        if agg.total() != agg.active + agg.idle || agg.active != agg.useful + agg.wasted {
            return fail("aggregate".into(), "total != active + idle".into());
        }
        Ok(())
    }
}

/// Dispatched-task count for one machine type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCount {
    pub machine_type: String,
    pub count: u64,
}

/// Metrics of one simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub scenario: String,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub total_tasks: u64,
    pub completed: u64,
    pub rejected_at_arrival: u64,
    pub dropped_in_queue: u64,
    pub cancelled_running: u64,
    pub total_energy: MicroJoules,
    pub active_energy: MicroJoules,
    pub idle_energy: MicroJoules,
    pub wasted_energy: MicroJoules,
    /// Dispatched tasks (completed or cancelled) per machine type, in
    /// declaration order.
    pub assignments: Vec<TypeCount>,
}

impl SimReport {
    pub fn completion_pct(&self) -> f64 {
        if self.total_tasks == 0 {
            0.0
        } else {
            100.0 * self.completed as f64 / self.total_tasks as f64
        }
    }

    /// Completion percentage with two decimals, rounded half up.
    pub fn completion_pct_str(&self) -> String {
        if self.total_tasks == 0 {
            return "0.00".into();
        }
        // hundredths of a percent
        let bp = div_round_half_up(10_000 * u128::from(self.completed), u128::from(self.total_tasks));
        format!("{}.{:02}", bp / 100, bp % 100)
    }

    /// Total consumed energy per completed task, in microjoules.
    pub fn energy_per_completion(&self) -> Option<f64> {
        (self.completed > 0).then(|| self.total_energy as f64 / self.completed as f64)
    }

    pub fn energy_per_completion_str(&self) -> Option<String> {
        (self.completed > 0).then(|| {
            let uj = div_round_half_up(u128::from(self.total_energy), u128::from(self.completed));
            format_mj(uj as u64)
        })
    }

    pub fn assigned(&self, machine_type: &str) -> u64 {
        self.assignments
            .iter()
            .find(|a| a.machine_type == machine_type)
            .map_or(0, |a| a.count)
    }

    pub fn dispatched(&self) -> u64 {
        self.assignments.iter().map(|a| a.count).sum()
    }
}

fn div_round_half_up(num: u128, den: u128) -> u128 {
    (2 * num + den) / (2 * den)
}

/// Microjoules as millijoules with exactly three decimals.
pub fn format_mj(uj: MicroJoules) -> String {
    format!("{}.{:03}", uj / 1000, uj % 1000)
}

/// Builds the report of one run. The scenario label is free text so that
/// runs over external workload files can be reported too.
pub fn compute_report(
    trace: &SimTrace,
    config: &SimConfig,
    scenario: &str,
    scheduler: SchedulerKind,
    seed: u64,
) -> SimReport {
    let ledger = EnergyLedger::from_trace(trace, config);
    let agg = ledger.aggregate();
    let mut assignments: Vec<TypeCount> = config
        .machine_types()
        .iter()
        .map(|m| TypeCount {
            machine_type: m.name.clone(),
            count: 0,
        })
        .collect();
    for r in &trace.records {
        if matches!(r.status, TaskStatus::Completed | TaskStatus::CancelledRunning) {
            let m = r.machine.expect("dispatched task has a machine");
            assignments[config.machines()[m].type_index].count += 1;
        }
    }
    let count = |s| trace.count(s) as u64;
    SimReport {
        scenario: scenario.to_string(),
        scheduler,
        seed,
        total_tasks: trace.records.len() as u64,
        completed: count(TaskStatus::Completed),
        rejected_at_arrival: count(TaskStatus::RejectedAtArrival),
        dropped_in_queue: count(TaskStatus::DroppedInQueue),
        cancelled_running: count(TaskStatus::CancelledRunning),
        total_energy: agg.total(),
        active_energy: agg.active,
        idle_energy: agg.idle,
        wasted_energy: agg.wasted,
        assignments,
    }
}

/// Column header of the report CSV.
pub const REPORT_CSV_HEADER: &str = "scenario,scheduler,seed,total_tasks,completed,rejected_at_arrival,\
dropped_in_queue,cancelled_running,completion_pct,total_energy_mJ,active_energy_mJ,idle_energy_mJ,\
wasted_energy_mJ,energy_per_completion_mJ,assigned_CPU,assigned_GPU,assigned_ASIC";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Pretty-printed JSON; parse back with [`parse_report_json`].
    Json,
    /// One data row matching [`REPORT_CSV_HEADER`], without newline.
    CsvRow,
}

pub fn write_report(report: &SimReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&ReportDoc::from(report)).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::CsvRow => {
            let mut row = String::new();
            write!(
                row,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                report.scenario,
                report.scheduler,
                report.seed,
                report.total_tasks,
                report.completed,
                report.rejected_at_arrival,
                report.dropped_in_queue,
                report.cancelled_running,
                report.completion_pct_str(),
                format_mj(report.total_energy),
                format_mj(report.active_energy),
                format_mj(report.idle_energy),
                format_mj(report.wasted_energy),
                report.energy_per_completion_str().unwrap_or_default(),
            )
            .unwrap();
            for ty in ["CPU", "GPU", "ASIC"] {
                write!(row, ",{}", report.assigned(ty)).unwrap();
            }
            row
        }
    }
}

/// Serialized shape of a report: energies in millijoules, derived fields
/// included for readers.
#[derive(Debug, Serialize, Deserialize)]
struct ReportDoc {
    scenario: String,
    scheduler: SchedulerKind,
    seed: u64,
    total_tasks: u64,
    completed: u64,
    rejected_at_arrival: u64,
    dropped_in_queue: u64,
    cancelled_running: u64,
    completion_pct: String,
    #[serde(rename = "total_energy_mJ")]
    total_energy_mj: String,
    #[serde(rename = "active_energy_mJ")]
    active_energy_mj: String,
    #[serde(rename = "idle_energy_mJ")]
    idle_energy_mj: String,
    #[serde(rename = "wasted_energy_mJ")]
    wasted_energy_mj: String,
    #[serde(rename = "energy_per_completion_mJ")]
    energy_per_completion_mj: Option<String>,
    assignments_per_machine_type: Vec<TypeCount>,
}

impl From<&SimReport> for ReportDoc {
    fn from(r: &SimReport) -> Self {
        ReportDoc {
            scenario: r.scenario.clone(),
            scheduler: r.scheduler,
            seed: r.seed,
            total_tasks: r.total_tasks,
            completed: r.completed,
            rejected_at_arrival: r.rejected_at_arrival,
            dropped_in_queue: r.dropped_in_queue,
            cancelled_running: r.cancelled_running,
            completion_pct: r.completion_pct_str(),
            total_energy_mj: format_mj(r.total_energy),
            active_energy_mj: format_mj(r.active_energy),
            idle_energy_mj: format_mj(r.idle_energy),
            wasted_energy_mj: format_mj(r.wasted_energy),
            energy_per_completion_mj: r.energy_per_completion_str(),
            assignments_per_machine_type: r.assignments.clone(),
        }
    }
}

fn parse_mj(field: &str, s: &str) -> Result<MicroJoules, String> {
    let bad = || format!("{field}: expected millijoules with three decimals, got {s:?}");
    let (int, frac) = s.split_once('.').ok_or_else(bad)?;
    if frac.len() != 3 {
        return Err(bad());
    }
    let int: u64 = int.parse().map_err(|_| bad())?;
    let frac: u64 = frac.parse().map_err(|_| bad())?;
    Ok(int * 1000 + frac)
}

/// Parses the JSON form written by [`write_report`].
pub fn parse_report_json(text: &str) -> Result<SimReport, String> {
    let doc: ReportDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let report = SimReport {
        scenario: doc.scenario,
        scheduler: doc.scheduler,
        seed: doc.seed,
        total_tasks: doc.total_tasks,
        completed: doc.completed,
        rejected_at_arrival: doc.rejected_at_arrival,
        dropped_in_queue: doc.dropped_in_queue,
        cancelled_running: doc.cancelled_running,
        total_energy: parse_mj("total_energy_mJ", &doc.total_energy_mj)?,
        active_energy: parse_mj("active_energy_mJ", &doc.active_energy_mj)?,
        idle_energy: parse_mj("idle_energy_mJ", &doc.idle_energy_mj)?,
        wasted_energy: parse_mj("wasted_energy_mJ", &doc.wasted_energy_mj)?,
        assignments: doc.assignments_per_machine_type,
    };
    if report.total_energy != report.active_energy + report.idle_energy {
        return Err("total_energy_mJ != active_energy_mJ + idle_energy_mJ".into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_simulation;
    use crate::model::{paper_preset, TaskTypeId};
    use crate::workload::TaskInstance;

    fn one_task1(kind: SchedulerKind) -> (SimTrace, SimConfig) {
        let cfg = paper_preset();
        let w = [TaskInstance {
            seq: 0,
            task_type: TaskTypeId(1),
            data_size_kb: 100.0,
            arrival: 0,
            deadline: 2000,
        }];
        let trace = run_simulation(&cfg, &w, kind.build().as_mut()).unwrap();
        (trace, cfg)
    }

    #[test]
    fn completed_on_asic_ledger() {
        let (trace, cfg) = one_task1(SchedulerKind::Meet);
        let ledger = EnergyLedger::from_trace(&trace, &cfg);
        ledger.verify(&trace, &cfg).unwrap();
        let asic0 = ledger.machines[6];
        assert_eq!(asic0.active, 50_000);
        assert_eq!(asic0.idle, 4_995_000);
        assert_eq!(asic0.wasted, 0);
        // every other machine: idle power over the full second
        let idle_w = [15, 15, 30, 30, 30, 30, 5, 5];
        for (i, m) in ledger.machines.iter().enumerate().filter(|(i, _)| *i != 6) {
            assert_eq!(m.idle, idle_w[i] * 1_000_000);
            assert_eq!(m.active, 0);
        }
        let r = compute_report(&trace, &cfg, "unit", SchedulerKind::Meet, 0);
        assert_eq!(r.wasted_energy, 0);
        assert_eq!(r.total_energy, 50_000 + 4_995_000 + (15 + 15 + 4 * 30 + 5) * 1_000_000);
        assert_eq!(r.completion_pct_str(), "100.00");
        assert_eq!(r.assigned("ASIC"), 1);
    }

    #[test]
    fn cancelled_on_cpu_is_wasted() {
        let (trace, cfg) = one_task1(SchedulerKind::Fcfs);
        let r = compute_report(&trace, &cfg, "unit", SchedulerKind::Fcfs, 0);
        assert_eq!(r.wasted_energy, 300_000);
        assert_eq!(r.active_energy, 300_000);
        assert_eq!(r.completed, 0);
        assert_eq!(r.energy_per_completion(), None);
        assert_eq!(r.energy_per_completion_str(), None);
        assert_eq!(r.assigned("CPU"), 1);
    }

    #[test]
    fn empty_trace_is_idle_only() {
        let cfg = paper_preset();
        let trace = run_simulation(&cfg, &[], SchedulerKind::Fcfs.build().as_mut()).unwrap();
        let r = compute_report(&trace, &cfg, "low", SchedulerKind::Fcfs, 0);
        assert_eq!(r.total_tasks, 0);
        assert_eq!(r.completion_pct_str(), "0.00");
        assert_eq!(r.active_energy, 0);
        assert_eq!(r.total_energy, r.idle_energy);
        assert_eq!(r.idle_energy, (2 * 15 + 4 * 30 + 2 * 5) * 1_000_000);
    }

    #[test]
    fn rounding_is_half_up() {
        let mut r = compute_report(
            &run_simulation(&paper_preset(), &[], SchedulerKind::Fcfs.build().as_mut()).unwrap(),
            &paper_preset(),
            "x",
            SchedulerKind::Fcfs,
            0,
        );
        r.total_tasks = 8;
        r.completed = 1; // 12.5%
        assert_eq!(r.completion_pct_str(), "12.50");
        r.total_tasks = 3;
        r.completed = 2; // 66.666..
        assert_eq!(r.completion_pct_str(), "66.67");
        r.total_tasks = 200_000;
        r.completed = 1; // 0.0005 -> 0.00 (half of a hundredth rounds up only at .005)
        assert_eq!(r.completion_pct_str(), "0.00");
        r.total_tasks = 20_000;
        r.completed = 1; // 0.005 -> 0.01
        assert_eq!(r.completion_pct_str(), "0.01");
        r.total_energy = 1001;
        r.completed = 2; // 500.5 uJ -> 501 uJ
        assert_eq!(r.energy_per_completion_str().unwrap(), "0.501");
    }

    #[test]
    fn csv_row_and_json_round_trip() {
        let (trace, cfg) = one_task1(SchedulerKind::Mect);
        let r = compute_report(&trace, &cfg, "low", SchedulerKind::Mect, 123);
        let row = write_report(&r, ReportFormat::CsvRow);
        assert!(row.starts_with("low,MECT,123,1,1,0,0,0,100.00,"), "{row}");
        assert_eq!(row.split(',').count(), REPORT_CSV_HEADER.split(',').count());
        assert!(row.ends_with(",0,0,1"));
        let json = write_report(&r, ReportFormat::Json);
        assert_eq!(json, write_report(&r, ReportFormat::Json));
        assert!(json.contains("\"total_energy_mJ\": \"160045.000\""), "{json}");
        assert_eq!(parse_report_json(&json).unwrap(), r);
    }
}
