//! Mapping policies consulted by the engine.
//!
//! A policy sees a read-only [`StateView`] of the park and answers two
//! questions: where an arriving task goes ([`Scheduler::on_arrival`]) and
//! which centrally held task a newly idle machine should take
//! ([`Scheduler::on_machine_idle`]).
//!
//! Two queueing disciplines exist. FCFS keeps waiting tasks in one central
//! FIFO and only ever assigns to idle machines. MECT and MEET map every task
//! on arrival, possibly to a busy machine, in which case the task joins that
//! machine's own FIFO of pending work. The engine owns both kinds of queue.
//!
//! Every tie is broken by the documented key and finally by the lower
//! canonical machine index, so decisions are fully reproducible.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Micros, SimConfig, TaskTypeId};
use crate::workload::TaskInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchedulerKind {
    Fcfs,
    FcfsNq,
    Mect,
    Meet,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] = [Self::Fcfs, Self::FcfsNq, Self::Mect, Self::Meet];

    /// Canonical spelling.
    pub fn name(self) -> &'static str {
        match self {
            Self::Fcfs => "FCFS",
            Self::FcfsNq => "FCFS-NQ",
            Self::Mect => "MECT",
            Self::Meet => "MEET",
        }
    }

    pub fn build(self) -> Box<dyn Scheduler> {
        match self {
            Self::Fcfs => Box::new(Fcfs),
            Self::FcfsNq => Box::new(FcfsNq),
            Self::Mect => Box::new(Mect),
            Self::Meet => Box::new(Meet),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownScheduler(pub String);

impl fmt::Display for UnknownScheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown scheduling method {:?} (expected one of FCFS, FCFS-NQ, MECT, MEET)",
            self.0
        )
    }
}

impl std::error::Error for UnknownScheduler {}

impl FromStr for SchedulerKind {
    type Err = UnknownScheduler;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| UnknownScheduler(s.to_string()))
    }
}

impl Serialize for SchedulerKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for SchedulerKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What the engine should do with an arriving task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Run on this machine: immediately if it is idle, otherwise after the
    /// work already mapped to it (machine-queue policies only).
    Assign(usize),
    /// Wait in the central FIFO until a machine asks for work.
    HoldCentral,
    /// Drop the task on the spot.
    Reject,
}

/// Per-machine snapshot exposed to policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineView {
    pub index: usize,
    pub type_index: usize,
    /// True when nothing is running and nothing is mapped to the machine.
    pub idle: bool,
    /// End of the current or last execution; for an idle machine, the time
    /// it became idle.
    pub busy_until: Micros,
    /// Earliest time the machine could start new work: `max(now, busy_until)`
    /// plus the execution time of every task already waiting in its queue.
    pub ready_time: Micros,
}

/// Read-only state handed to a policy at every decision point.
#[derive(Debug, Clone, Copy)]
pub struct StateView<'a> {
    pub now: Micros,
    pub machines: &'a [MachineView],
    /// Sequence numbers of centrally held tasks, oldest first.
    pub central_queue: &'a VecDeque<usize>,
    pub config: &'a SimConfig,
}

impl StateView<'_> {
    pub fn central_queue_len(&self) -> usize {
        self.central_queue.len()
    }

    pub fn eet(&self, task_type: TaskTypeId, machine: &MachineView) -> Micros {
        self.config.eet_table().get(task_type, machine.type_index)
    }

    /// Lowest-index machine that is idle right now.
    pub fn first_idle(&self) -> Option<usize> {
        self.machines.iter().find(|m| m.idle).map(|m| m.index)
    }
}

pub trait Scheduler: Send {
    fn kind(&self) -> SchedulerKind;

    fn on_arrival(&mut self, view: &StateView<'_>, task: &TaskInstance) -> Decision;

    /// Called when `machine` has nothing left to run. Returns the sequence
    /// number of a centrally held task to start on it, if any.
    fn on_machine_idle(&mut self, _view: &StateView<'_>, _machine: usize) -> Option<usize> {
        None
    }

    /// Whether `Decision::Assign` may target a busy machine.
    fn uses_machine_queues(&self) -> bool {
        false
    }
}

/// First come, first served with one central FIFO.
#[derive(Debug, Default, Clone, Copy)]
pub struct Fcfs;

impl Scheduler for Fcfs {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Fcfs
    }

    fn on_arrival(&mut self, view: &StateView<'_>, _task: &TaskInstance) -> Decision {
        match view.first_idle() {
            Some(m) => Decision::Assign(m),
            None => Decision::HoldCentral,
        }
    }

    fn on_machine_idle(&mut self, view: &StateView<'_>, _machine: usize) -> Option<usize> {
        view.central_queue.front().copied()
    }
}

/// First come, first served without queueing: no idle machine means reject.
#[derive(Debug, Default, Clone, Copy)]
pub struct FcfsNq;

impl Scheduler for FcfsNq {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::FcfsNq
    }

    fn on_arrival(&mut self, view: &StateView<'_>, _task: &TaskInstance) -> Decision {
        match view.first_idle() {
            Some(m) => Decision::Assign(m),
            None => Decision::Reject,
        }
    }
}

/// Minimum expected completion time: argmin of `ready_time + EET`.
#[derive(Debug, Default, Clone, Copy)]
pub struct Mect;

impl Mect {
    /// Predicted completion time of `task_type` on `machine`.
    pub fn predicted_completion(view: &StateView<'_>, task_type: TaskTypeId, machine: &MachineView) -> Micros {
        machine.ready_time + view.eet(task_type, machine)
    }
}

impl Scheduler for Mect {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Mect
    }

    fn on_arrival(&mut self, view: &StateView<'_>, task: &TaskInstance) -> Decision {
        let best = view
            .machines
            .iter()
            .min_by_key(|m| (Self::predicted_completion(view, task.task_type, m), m.index))
            .expect("park has at least one machine");
        Decision::Assign(best.index)
    }

    fn uses_machine_queues(&self) -> bool {
        true
    }
}

/// Minimum expected execution time: always the fastest machine type for the
/// task, regardless of load. Among replicas of that type, the one that frees
/// up first.
#[derive(Debug, Default, Clone, Copy)]
pub struct Meet;

impl Scheduler for Meet {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Meet
    }

    fn on_arrival(&mut self, view: &StateView<'_>, task: &TaskInstance) -> Decision {
        let fastest = view.config.eet_table().min_for(task.task_type);
        let best = view
            .machines
            .iter()
            .filter(|m| view.eet(task.task_type, m) == fastest)
            .min_by_key(|m| (m.ready_time, m.index))
            .expect("some machine type attains the minimum");
        Decision::Assign(best.index)
    }

    fn uses_machine_queues(&self) -> bool {
        true
    }
}
