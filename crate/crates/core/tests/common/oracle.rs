//! Brute-force reference simulator.
//!
//! Shares nothing with the engine but the configuration types: there is no
//! event heap. Time advances in 1 µs steps and at every instant the state is
//! re-derived from first principles in three phases — completions (in the
//! order the tasks were started), deadlines (in arrival order), arrivals (in
//! workload order). Every queue is a plain `Vec` scanned linearly.

use std::collections::HashMap;

use hetsched::model::{Micros, SimConfig};
use hetsched::{SchedulerKind, TaskInstance, TaskStatus};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleTask {
    pub status: TaskStatus,
    pub machine: Option<usize>,
    pub start: Option<Micros>,
    pub end: Option<Micros>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRun {
    pub tasks: Vec<OracleTask>,
    /// Per machine: (start, end, task, completed).
    pub intervals: Vec<Vec<(Micros, Micros, usize, bool)>>,
    pub horizon: Micros,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Where {
    Future,
    Central,
    Waiting(usize),
    Running(usize),
    Done,
}

struct Oracle<'a> {
    cfg: &'a SimConfig,
    policy: SchedulerKind,
    w: &'a [TaskInstance],
    loc: Vec<Where>,
    out: Vec<Option<OracleTask>>,
    /// Per machine: running task with its start time and start ordinal.
    running: Vec<Option<(usize, Micros, u64)>>,
    last_free: Vec<Micros>,
    waiting: Vec<Vec<usize>>,
    central: Vec<usize>,
    intervals: Vec<Vec<(Micros, Micros, usize, bool)>>,
    starts: u64,
}

impl Oracle<'_> {
    fn eet(&self, task: usize, m: usize) -> Micros {
        let ty = self.cfg.machines()[m].type_index;
        self.cfg.eet_table().get(self.w[task].task_type, ty)
    }

    fn settle(
        &mut self,
        task: usize,
        status: TaskStatus,
        machine: Option<usize>,
        start: Option<Micros>,
        end: Option<Micros>,
    ) {
        self.loc[task] = Where::Done;
        self.out[task] = Some(OracleTask {
            status,
            machine,
            start,
            end,
        });
    }

    fn start(&mut self, task: usize, m: usize, t: Micros) {
        self.running[m] = Some((task, t, self.starts));
        self.starts += 1;
        self.loc[task] = Where::Running(m);
    }

    /// Machine `m` just became free at `t`: take the next runnable task.
    fn refill(&mut self, m: usize, t: Micros) {
        loop {
            let next = if !self.waiting[m].is_empty() {
                self.waiting[m].remove(0)
            } else if self.policy == SchedulerKind::Fcfs && !self.central.is_empty() {
                self.central.remove(0)
            } else {
                return;
            };
            if self.w[next].deadline <= t {
                self.settle(next, TaskStatus::DroppedInQueue, None, None, None);
            } else {
                self.start(next, m, t);
                return;
            }
        }
    }

    fn ready_time(&self, m: usize, t: Micros) -> Micros {
        let base = match self.running[m] {
            Some((task, s, _)) => s + self.eet(task, m),
            None => self.last_free[m],
        };
        let queued: Micros = self.waiting[m].iter().map(|&q| self.eet(q, m)).sum();
        base.max(t) + queued
    }

    fn arrive(&mut self, task: usize, t: Micros) {
        let n = self.cfg.machines().len();
        if self.w[task].deadline <= t {
            self.settle(task, TaskStatus::RejectedAtArrival, None, None, None);
            return;
        }
        let idle = (0..n).find(|&m| self.running[m].is_none() && self.waiting[m].is_empty());
        match self.policy {
            SchedulerKind::Fcfs => match idle {
                Some(m) => self.start(task, m, t),
                None => {
                    self.central.push(task);
                    self.loc[task] = Where::Central;
                }
            },
            SchedulerKind::FcfsNq => match idle {
                Some(m) => self.start(task, m, t),
                None => self.settle(task, TaskStatus::RejectedAtArrival, None, None, None),
            },
            SchedulerKind::Mect | SchedulerKind::Meet => {
                let candidates: Vec<usize> = if self.policy == SchedulerKind::Meet {
                    let best = (0..n).map(|m| self.eet(task, m)).min().unwrap();
                    (0..n).filter(|&m| self.eet(task, m) == best).collect()
                } else {
                    (0..n).collect()
                };
                let score = |m: usize| {
                    let r = self.ready_time(m, t);
                    if self.policy == SchedulerKind::Mect {
                        r + self.eet(task, m)
                    } else {
                        r
                    }
                };
                let m = candidates.into_iter().min_by_key(|&m| (score(m), m)).unwrap();
                if self.running[m].is_none() {
                    self.start(task, m, t);
                } else {
                    self.waiting[m].push(task);
                    self.loc[task] = Where::Waiting(m);
                }
            }
        }
    }

    fn deadline(&mut self, task: usize, t: Micros) {
        match self.loc[task] {
            Where::Done => {}
            Where::Future => unreachable!(),
            Where::Central => {
                self.central.retain(|&q| q != task);
                self.settle(task, TaskStatus::DroppedInQueue, None, None, None);
            }
            Where::Waiting(m) => {
                self.waiting[m].retain(|&q| q != task);
                self.settle(task, TaskStatus::DroppedInQueue, None, None, None);
            }
            Where::Running(m) => {
                let (_, s, _) = self.running[m].take().unwrap();
                self.intervals[m].push((s, t, task, false));
                self.last_free[m] = t;
                self.settle(task, TaskStatus::CancelledRunning, Some(m), Some(s), Some(t));
                self.refill(m, t);
            }
        }
    }
}

/// Runs `workload` under `policy` by stepping time one microsecond at a time.
pub fn simulate(cfg: &SimConfig, policy: SchedulerKind, workload: &[TaskInstance]) -> OracleRun {
    let n = cfg.machines().len();
    let mut o = Oracle {
        cfg,
        policy,
        w: workload,
        loc: vec![Where::Future; workload.len()],
        out: vec![None; workload.len()],
        running: vec![None; n],
        last_free: vec![0; n],
        waiting: vec![Vec::new(); n],
        central: Vec::new(),
        intervals: vec![Vec::new(); n],
        starts: 0,
    };
    let mut arrivals: HashMap<Micros, Vec<usize>> = HashMap::new();
    let mut deadlines: HashMap<Micros, Vec<usize>> = HashMap::new();
    for (i, task) in workload.iter().enumerate() {
        arrivals.entry(task.arrival).or_default().push(i);
    }
    let end = workload.iter().map(|t| t.deadline.max(t.arrival)).max().unwrap_or(0);
    let mut last_event = 0;

    for t in 0..=end {
        // Phase 1: completions, in the order the tasks were started.
        let mut finishing: Vec<(u64, usize)> = (0..n)
            .filter_map(|m| o.running[m].and_then(|(task, s, ord)| (s + o.eet(task, m) == t).then_some((ord, m))))
            .collect();
        finishing.sort();
        for (_, m) in finishing {
            let (task, s, _) = o.running[m].take().unwrap();
            o.intervals[m].push((s, t, task, true));
            o.last_free[m] = t;
            o.settle(task, TaskStatus::Completed, Some(m), Some(s), Some(t));
            o.refill(m, t);
            last_event = t;
        }
        // Phase 2: deadlines of tasks that have arrived, in arrival order.
        if let Some(mut due) = deadlines.remove(&t) {
            due.sort();
            for task in due {
                o.deadline(task, t);
                last_event = t;
            }
        }
        // Phase 3: arrivals in workload order.
        if let Some(list) = arrivals.remove(&t) {
            for task in list {
                o.arrive(task, t);
                if workload[task].deadline > t {
                    deadlines.entry(workload[task].deadline).or_default().push(task);
                }
                last_event = t;
            }
        }
    }

    OracleRun {
        tasks: o.out.into_iter().map(|r| r.expect("every task settles")).collect(),
        intervals: o.intervals,
        horizon: last_event.max(1_000_000),
    }
}
