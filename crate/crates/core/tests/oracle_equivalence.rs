//! The event-driven engine against the brute-force reference simulator.

mod common;

use common::{engine_view, oracle};
use hetsched::{paper_preset, run_simulation, SchedulerKind, TaskInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn assert_same(kind: SchedulerKind, workload: &[TaskInstance], case: usize) {
    let config = paper_preset();
    let trace = run_simulation(&config, workload, kind.build().as_mut()).unwrap();
    let expected = oracle::simulate(&config, kind, workload);
    assert_eq!(
        engine_view(&trace),
        expected,
        "{kind} diverges on case {case}: {workload:#?}"
    );
}

#[test]
fn engine_matches_time_stepped_oracle_on_random_workloads() {
    let config = paper_preset();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..200 {
        let workload = common::random_workload(&mut rng, &config, 20);
        for kind in SchedulerKind::ALL {
            assert_same(kind, &workload, case);
        }
    }
}

#[test]
fn oracle_agrees_on_hand_traced_cases() {
    let config = paper_preset();
    let task = |seq, ty, arrival| {
        let slack = config.task_type(hetsched::TaskTypeId(ty)).unwrap().slack;
        TaskInstance {
            seq,
            task_type: hetsched::TaskTypeId(ty),
            data_size_kb: 1.0,
            arrival,
            deadline: arrival + slack,
        }
    };
    // One Task1 under MEET runs on the first ASIC from 0 to 1 ms.
    let run = oracle::simulate(&config, SchedulerKind::Meet, &[task(0, 1, 0)]);
    assert_eq!(run.tasks[0].machine, Some(6));
    assert_eq!((run.tasks[0].start, run.tasks[0].end), (Some(0), Some(1000)));
    // Under FCFS the same task lands on CPU#0 and is cancelled at its deadline.
    let run = oracle::simulate(&config, SchedulerKind::Fcfs, &[task(0, 1, 0)]);
    assert_eq!(run.intervals[0], vec![(0, 2000, 0, false)]);
    assert_same(SchedulerKind::Fcfs, &[task(0, 1, 0)], 0);
}
