use thiserror::Error;

use crate::model::TaskTypeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed configuration at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown scheduling method {0:?} (expected one of FCFS, FCFS-NQ, MECT, MEET)")]
    UnknownSchedulingMethod(String),
    #[error("missing EET entry for task type {task_type:?} on machine type {machine_type:?}")]
    MissingEet { task_type: String, machine_type: String },
    #[error("invalid value at {path}: {reason}")]
    Invalid { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("machine index {index} out of range (park has {count} machines)")]
    MachineIndex { index: usize, count: usize },
    #[error("unknown task type {0}")]
    UnknownTaskType(TaskTypeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("workload CSV line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("workload CSV header must be `task_type,data_size,arrival_time,deadline`, got `{0}`")]
    Header(String),
    #[error("workload CSV: {0}")]
    Csv(String),
}

/// Violations of the scheduler/engine contract. These indicate a bug in a
/// scheduling policy or a malformed workload, never a property of the input
/// data that the simulation could recover from.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("scheduler {scheduler} assigned task {task} to busy machine {machine} at t={now}us")]
    BusyMachine {
        scheduler: String,
        task: usize,
        machine: usize,
        now: u64,
    },
    #[error("scheduler {scheduler} assigned task {task} to nonexistent machine {machine}")]
    NoSuchMachine {
        scheduler: String,
        task: usize,
        machine: usize,
    },
    #[error("scheduler {scheduler} returned task {task} from the central queue, but it is not queued")]
    NotQueued { scheduler: String, task: usize },
    #[error("workload is not sorted by arrival time with seq = position (first offender: position {position})")]
    UnsortedWorkload { position: usize },
    #[error("task {task} references unknown task type {task_type}")]
    UnknownTaskType { task: usize, task_type: TaskTypeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("energy ledger identity violated on {scope}: {detail}")]
    Identity { scope: String, detail: String },
}
