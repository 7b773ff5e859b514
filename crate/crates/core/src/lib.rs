//! Discrete-event simulation of task scheduling on heterogeneous machine
//! parks (CPU, GPU and ASIC replicas), with exact energy accounting.
//!
//! The pieces, bottom up:
//!
//! * [`model`]: machine types, task types and the execution-time table,
//!   parsed from a JSON configuration document.
//! * [`workload`]: the low/medium/high scenario generator and the workload
//!   CSV format.
//! * [`schedulers`]: FCFS, FCFS-NQ, MECT and MEET behind one trait.
//! * [`engine`]: the event loop, deadline cancellation and the task trace.
//! * [`metrics`]: the energy ledger and per-run reports.
//! * [`bench`]: the scenario × scheduler × seed grid and its output files.
//!
//! ```
//! use hetsched::{generate_workload, paper_preset, run_simulation, compute_report, Scenario, SchedulerKind};
//!
//! let config = paper_preset();
//! let workload = generate_workload(&Scenario::Low.spec(), config.task_types(), 123);
//! let trace = run_simulation(&config, &workload, SchedulerKind::Mect.build().as_mut()).unwrap();
//! let report = compute_report(&trace, &config, "low", SchedulerKind::Mect, 123);
//! assert_eq!(report.total_tasks, 2100);
//! assert_eq!(report.total_energy, report.active_energy + report.idle_energy);
//! ```

pub mod bench;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod model;
pub mod schedulers;
pub mod workload;

pub use engine::{run_simulation, SimTrace, Simulation, TaskRecord, TaskStatus};
pub use error::{ConfigError, EngineError, LedgerError, ModelError, WorkloadError};
pub use metrics::{compute_report, write_report, EnergyLedger, ReportFormat, SimReport};
pub use model::{eet_lookup, paper_preset, parse_config, Micros, SimConfig, TaskTypeId};
pub use schedulers::{Decision, Scheduler, SchedulerKind};
pub use workload::{generate_workload, read_workload_csv, write_workload_csv, Scenario, TaskInstance};
