//! Deterministic discrete-event simulation core.
//!
//! Events are processed in strict `(time, class, insertion order)` order with
//! classes ranked `Completion < DeadlineCheck < Arrival`. At equal timestamps
//! a task finishing exactly at its deadline therefore counts as completed,
//! and machines freed at `t` are visible to tasks arriving at `t`.
//!
//! Every arriving task gets a deadline check. When it fires, a task still
//! waiting (centrally or in a machine queue) is dropped, and a running task
//! is cancelled: its machine is freed at the deadline and the partial work is
//! recorded as a not-completed busy interval.
//!
//! A waiting task that reaches the front of a queue at or after its own
//! deadline is dropped instead of being started.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::model::{Micros, SimConfig};
use crate::schedulers::{Decision, MachineView, Scheduler, StateView};
use crate::workload::TaskInstance;

/// Energy accounting always covers at least the one-second submission window.
pub const MIN_HORIZON: Micros = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventClass {
    Completion = 0,
    DeadlineCheck = 1,
    Arrival = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventPayload {
    Arrival { task: usize },
    DeadlineCheck { task: usize },
    Completion { task: usize, machine: usize },
}

impl EventPayload {
    pub fn class(&self) -> EventClass {
        match self {
            Self::Completion { .. } => EventClass::Completion,
            Self::DeadlineCheck { .. } => EventClass::DeadlineCheck,
            Self::Arrival { .. } => EventClass::Arrival,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: Micros,
    pub seq: u64,
    pub payload: EventPayload,
}

impl Event {
    pub fn class(&self) -> EventClass {
        self.payload.class()
    }

    fn key(&self) -> (Micros, EventClass, u64) {
        (self.time, self.class(), self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Min-queue of events keyed by `(time, class, insertion order)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: Micros, payload: EventPayload) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event { time, seq, payload }));
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BusyInterval {
    pub start: Micros,
    pub end: Micros,
    pub task: usize,
    pub completed: bool,
}

impl BusyInterval {
    pub fn duration(&self) -> Micros {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineState {
    pub index: usize,
    pub type_name: String,
    pub busy_until: Micros,
    pub current_task: Option<usize>,
    pub busy_intervals: Vec<BusyInterval>,
    #[serde(skip)]
    current_start: Micros,
    #[serde(skip)]
    pending: VecDeque<usize>,
    #[serde(skip)]
    pending_work: Micros,
}

impl MachineState {
    fn is_idle(&self) -> bool {
        self.current_task.is_none() && self.pending.is_empty()
    }

    pub fn busy_time(&self) -> Micros {
        self.busy_intervals.iter().map(BusyInterval::duration).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskStatus {
    Completed,
    RejectedAtArrival,
    DroppedInQueue,
    CancelledRunning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: TaskInstance,
    pub status: TaskStatus,
    pub machine: Option<usize>,
    pub start: Option<Micros>,
    pub finish_or_cancel: Option<Micros>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub records: Vec<TaskRecord>,
    pub machines: Vec<MachineState>,
    /// End of energy accounting: the later of [`MIN_HORIZON`] and the last
    /// processed event.
    pub horizon: Micros,
}

impl SimTrace {
    pub fn count(&self, status: TaskStatus) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    /// Serialized form, used for byte-level determinism checks.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

/// One line of the optional event dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLogEntry {
    pub time: Micros,
    pub class: EventClass,
    pub task: Option<usize>,
    pub machine: Option<usize>,
    pub action: String,
}

pub const EVENT_LOG_HEADER: &str = "time_us,class,task_seq,machine_index,action";

impl fmt::Display for EventLogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        write!(
            f,
            "{},{},{},{},{}",
            self.time,
            self.class as u8,
            opt(self.task),
            opt(self.machine),
            self.action
        )
    }
}

/// The park as a policy saw it when mapping an arriving task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionSnapshot {
    pub now: Micros,
    pub task: usize,
    pub machines: Vec<MachineView>,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub trace: SimTrace,
    pub events: Vec<EventLogEntry>,
    pub decisions: Vec<DecisionSnapshot>,
}

/// A configured simulation run.
pub struct Simulation<'a> {
    config: &'a SimConfig,
    workload: &'a [TaskInstance],
    log_events: bool,
    log_decisions: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(config: &'a SimConfig, workload: &'a [TaskInstance]) -> Self {
        Self {
            config,
            workload,
            log_events: false,
            log_decisions: false,
        }
    }

    /// Records one [`EventLogEntry`] per processed event.
    pub fn log_events(mut self) -> Self {
        self.log_events = true;
        self
    }

    /// Records a [`DecisionSnapshot`] for every arrival.
    pub fn log_decisions(mut self) -> Self {
        self.log_decisions = true;
        self
    }

    pub fn run(self, scheduler: &mut dyn Scheduler) -> Result<SimOutput, EngineError> {
        let mut engine = Engine::new(self.config, self.workload)?;
        if self.log_events {
            engine.events = Some(Vec::new());
        }
        if self.log_decisions {
            engine.decisions = Some(Vec::new());
        }
        engine.run(scheduler)?;
        Ok(engine.finish())
    }
}

/// Runs `workload` through `scheduler` and returns the full trace.
///
/// The workload must be sorted by arrival time with `seq` equal to each
/// task's position, which is what the generator and the CSV reader produce.
pub fn run_simulation(
    config: &SimConfig,
    workload: &[TaskInstance],
    scheduler: &mut dyn Scheduler,
) -> Result<SimTrace, EngineError> {
    Simulation::new(config, workload).run(scheduler).map(|o| o.trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TaskState {
    NotArrived,
    Central,
    MachineQueue(usize),
    Running(usize),
    Resolved,
}

/// What a processed event reports to the log: task, machine and action.
type Logged = (usize, Option<usize>, &'static str);

struct Engine<'a> {
    config: &'a SimConfig,
    tasks: &'a [TaskInstance],
    queue: EventQueue,
    machines: Vec<MachineState>,
    central: VecDeque<usize>,
    states: Vec<TaskState>,
    records: Vec<TaskRecord>,
    last_time: Micros,
    events: Option<Vec<EventLogEntry>>,
    decisions: Option<Vec<DecisionSnapshot>>,
    // follow-on actions of the event being processed, for the event log
    notes: Vec<String>,
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig, tasks: &'a [TaskInstance]) -> Result<Self, EngineError> {
        for (position, t) in tasks.iter().enumerate() {
            if t.seq != position || (position > 0 && tasks[position - 1].arrival > t.arrival) {
                return Err(EngineError::UnsortedWorkload { position });
            }
            if config.task_type(t.task_type).is_none() {
                return Err(EngineError::UnknownTaskType {
                    task: t.seq,
                    task_type: t.task_type,
                });
            }
        }
        let machines = config
            .machines()
            .iter()
            .map(|m| MachineState {
                index: m.index,
                type_name: config.machine_types()[m.type_index].name.clone(),
                busy_until: 0,
                current_task: None,
                busy_intervals: Vec::new(),
                current_start: 0,
                pending: VecDeque::new(),
                pending_work: 0,
            })
            .collect();
        let mut queue = EventQueue::new();
        for t in tasks {
            queue.push(t.arrival, EventPayload::Arrival { task: t.seq });
        }
        Ok(Self {
            config,
            tasks,
            queue,
            machines,
            central: VecDeque::new(),
            states: vec![TaskState::NotArrived; tasks.len()],
            records: tasks
                .iter()
                .map(|t| TaskRecord {
                    task: t.clone(),
                    status: TaskStatus::RejectedAtArrival,
                    machine: None,
                    start: None,
                    finish_or_cancel: None,
                })
                .collect(),
            last_time: 0,
            events: None,
            decisions: None,
            notes: Vec::new(),
        })
    }

    fn run(&mut self, scheduler: &mut dyn Scheduler) -> Result<(), EngineError> {
        while let Some(event) = self.queue.pop() {
            let now = event.time;
            let logged = match event.payload {
                EventPayload::Arrival { task } => Some(self.on_arrival(scheduler, task, now)?),
                EventPayload::DeadlineCheck { task } => Some(self.on_deadline(scheduler, task, now)?),
                EventPayload::Completion { task, machine } => self.on_completion(scheduler, task, machine, now)?,
            };
            if let Some((task, machine, action)) = logged {
                self.last_time = now;
                let notes = std::mem::take(&mut self.notes);
                if let Some(events) = self.events.as_mut() {
                    let mut action = action.to_string();
                    for n in notes {
                        action.push('|');
                        action.push_str(&n);
                    }
                    events.push(EventLogEntry {
                        time: now,
                        class: event.class(),
                        task: Some(task),
                        machine,
                        action,
                    });
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> SimOutput {
        debug_assert!(self.states.iter().all(|s| *s == TaskState::Resolved));
        SimOutput {
            trace: SimTrace {
                records: self.records,
                machines: self.machines,
                horizon: self.last_time.max(MIN_HORIZON),
            },
            events: self.events.unwrap_or_default(),
            decisions: self.decisions.unwrap_or_default(),
        }
    }

    fn views(&self, now: Micros) -> Vec<MachineView> {
        self.config
            .machines()
            .iter()
            .zip(&self.machines)
            .map(|(m, st)| MachineView {
                index: m.index,
                type_index: m.type_index,
                idle: st.is_idle(),
                busy_until: st.busy_until,
                ready_time: st.busy_until.max(now) + st.pending_work,
            })
            .collect()
    }

    fn eet(&self, task: usize, machine: usize) -> Micros {
        let m = &self.config.machines()[machine];
        self.config.eet_table().get(self.tasks[task].task_type, m.type_index)
    }

    fn resolve(&mut self, task: usize, status: TaskStatus) {
        self.records[task].status = status;
        self.states[task] = TaskState::Resolved;
    }

    fn on_arrival(&mut self, scheduler: &mut dyn Scheduler, task: usize, now: Micros) -> Result<Logged, EngineError> {
        let deadline = self.tasks[task].deadline;
        if deadline <= now {
            self.resolve(task, TaskStatus::RejectedAtArrival);
            return Ok((task, None, "expired"));
        }
        self.queue.push(deadline, EventPayload::DeadlineCheck { task });

        let views = self.views(now);
        let decision = {
            let view = StateView {
                now,
                machines: &views,
                central_queue: &self.central,
                config: self.config,
            };
            scheduler.on_arrival(&view, &self.tasks[task])
        };
        if let Some(log) = self.decisions.as_mut() {
            log.push(DecisionSnapshot {
                now,
                task,
                machines: views,
                decision,
            });
        }

        match decision {
            Decision::Assign(m) => {
                if m >= self.machines.len() {
                    return Err(EngineError::NoSuchMachine {
                        scheduler: scheduler.kind().to_string(),
                        task,
                        machine: m,
                    });
                }
                if self.machines[m].is_idle() {
                    self.dispatch(task, m, now)?;
                    Ok((task, Some(m), "dispatch"))
                } else if scheduler.uses_machine_queues() {
                    let eet = self.eet(task, m);
                    let st = &mut self.machines[m];
                    st.pending.push_back(task);
                    st.pending_work += eet;
                    self.states[task] = TaskState::MachineQueue(m);
                    self.records[task].machine = Some(m);
                    Ok((task, Some(m), "enqueue"))
                } else {
                    Err(EngineError::BusyMachine {
                        scheduler: scheduler.kind().to_string(),
                        task,
                        machine: m,
                        now,
                    })
                }
            }
            Decision::HoldCentral => {
                self.central.push_back(task);
                self.states[task] = TaskState::Central;
                Ok((task, None, "hold"))
            }
            Decision::Reject => {
                self.resolve(task, TaskStatus::RejectedAtArrival);
                Ok((task, None, "reject"))
            }
        }
    }

    /// Starts `task` on the idle machine `machine` at `now` and schedules its
    /// completion.
    fn dispatch(&mut self, task: usize, machine: usize, now: Micros) -> Result<(), EngineError> {
        let eet = self.eet(task, machine);
        let st = &mut self.machines[machine];
        if let Some(running) = st.current_task {
            return Err(EngineError::BusyMachine {
                scheduler: format!("engine (running task {running})"),
                task,
                machine,
                now,
            });
        }
        st.current_task = Some(task);
        st.current_start = now;
        st.busy_until = now + eet;
        self.queue.push(now + eet, EventPayload::Completion { task, machine });
        self.states[task] = TaskState::Running(machine);
        let rec = &mut self.records[task];
        rec.machine = Some(machine);
        rec.start = Some(now);
        Ok(())
    }

    fn on_completion(
        &mut self,
        scheduler: &mut dyn Scheduler,
        task: usize,
        machine: usize,
        now: Micros,
    ) -> Result<Option<Logged>, EngineError> {
        // Completions of cancelled tasks stay in the heap; they are stale.
        if self.machines[machine].current_task != Some(task) {
            return Ok(None);
        }
        let st = &mut self.machines[machine];
        st.busy_intervals.push(BusyInterval {
            start: st.current_start,
            end: now,
            task,
            completed: true,
        });
        st.current_task = None;
        self.records[task].finish_or_cancel = Some(now);
        self.resolve(task, TaskStatus::Completed);
        self.machine_freed(scheduler, machine, now)?;
        Ok(Some((task, Some(machine), "complete")))
    }

    /// Applies the deadline of `task` at `now`.
    fn on_deadline(&mut self, scheduler: &mut dyn Scheduler, task: usize, now: Micros) -> Result<Logged, EngineError> {
        match self.states[task] {
            TaskState::Resolved => Ok((task, self.records[task].machine, "noop")),
            TaskState::Central => {
                self.central.retain(|&t| t != task);
                self.resolve(task, TaskStatus::DroppedInQueue);
                Ok((task, None, "drop"))
            }
            TaskState::MachineQueue(m) => {
                let eet = self.eet(task, m);
                let st = &mut self.machines[m];
                st.pending.retain(|&t| t != task);
                st.pending_work -= eet;
                self.records[task].machine = None;
                self.resolve(task, TaskStatus::DroppedInQueue);
                Ok((task, Some(m), "drop"))
            }
            TaskState::Running(m) => {
                let st = &mut self.machines[m];
                st.busy_intervals.push(BusyInterval {
                    start: st.current_start,
                    end: now,
                    task,
                    completed: false,
                });
                st.current_task = None;
                st.busy_until = now;
                self.records[task].finish_or_cancel = Some(now);
                self.resolve(task, TaskStatus::CancelledRunning);
                self.machine_freed(scheduler, m, now)?;
                Ok((task, Some(m), "cancel"))
            }
            TaskState::NotArrived => unreachable!("deadline check precedes arrival of task {task}"),
        }
    }

    /// Hands the now idle `machine` its next task: the head of its own queue
    /// first, otherwise whatever the policy pulls from the central queue.
    fn machine_freed(&mut self, scheduler: &mut dyn Scheduler, machine: usize, now: Micros) -> Result<(), EngineError> {
        loop {
            let next = if let Some(t) = self.machines[machine].pending.pop_front() {
                let eet = self.eet(t, machine);
                self.machines[machine].pending_work -= eet;
                t
            } else {
                let views = self.views(now);
                let view = StateView {
                    now,
                    machines: &views,
                    central_queue: &self.central,
                    config: self.config,
                };
                let Some(t) = scheduler.on_machine_idle(&view, machine) else {
                    return Ok(());
                };
                if self.states[t] != TaskState::Central {
                    return Err(EngineError::NotQueued {
                        scheduler: scheduler.kind().to_string(),
                        task: t,
                    });
                }
                self.central.retain(|&q| q != t);
                t
            };
            if self.tasks[next].deadline <= now {
                self.records[next].machine = None;
                self.resolve(next, TaskStatus::DroppedInQueue);
                self.notes.push(format!("expire:{next}"));
                continue;
            }
            self.dispatch(next, machine, now)?;
            self.notes.push(format!("start:{next}"));
            return Ok(());
        }
    }
}
