//! Test-only helpers: a brute-force reference simulator and random workloads.

#![allow(dead_code)]

pub mod oracle;

use hetsched::model::{Micros, SimConfig, TaskTypeId};
use hetsched::TaskInstance;
use rand::Rng;

/// A small random workload: up to `max_tasks` tasks with arrivals on a grid
/// (to provoke same-timestamp ties) inside a short window.
pub fn random_workload<R: Rng>(rng: &mut R, config: &SimConfig, max_tasks: usize) -> Vec<TaskInstance> {
    let n = rng.random_range(0..=max_tasks);
    let grid: Micros = [1, 100, 250, 500][rng.random_range(0..4)];
    let window: Micros = [1_000, 3_000, 6_000][rng.random_range(0..3)];
    let types = config.task_types();
    let mut raw: Vec<(Micros, TaskTypeId)> = (0..n)
        .map(|_| {
            let t = &types[rng.random_range(0..types.len())];
            (rng.random_range(0..=window / grid) * grid, t.id)
        })
        .collect();
    raw.sort();
    raw.into_iter()
        .enumerate()
        .map(|(seq, (arrival, task_type))| TaskInstance {
            seq,
            task_type,
            data_size_kb: 1.0,
            arrival,
            deadline: arrival + config.task_type(task_type).unwrap().slack,
        })
        .collect()
}

/// One machine type with a single replica and the baseline task types.
pub fn single_machine_config() -> SimConfig {
    hetsched::parse_config(
        r#"{
          "machine_types": [
            { "name": "ONLY", "power": 100, "idle_power": 10, "replicas": 1,
              "eet": { "Task1": 0.9, "Task2": 0.6, "Task3": 0.4 } }
          ],
          "task_types": [
            { "name": "Task1", "mean_data_size_kb": 100.0, "slack_ms": 2.0 },
            { "name": "Task2", "mean_data_size_kb": 75.0,  "slack_ms": 1.5 },
            { "name": "Task3", "mean_data_size_kb": 50.0,  "slack_ms": 1.0 }
          ],
          "scheduling_method": "FCFS"
        }"#,
    )
    .expect("single-machine config is valid")
}

/// The workload module's distribution sanity checks at 10 000 draws, each as
/// `(description, passed)`.
pub fn distribution_checks(seed: u64) -> Vec<(String, bool)> {
    use hetsched::workload::{sample_arrival, sample_data_size, ArrivalDist};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const N: usize = 10_000;
    const END: Micros = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut bins = [0usize; 10];
    for _ in 0..N {
        let x = sample_arrival(ArrivalDist::Uniform, 0, END, &mut rng);
        bins[((x * 10 / (END + 1)) as usize).min(9)] += 1;
    }
    let expected = N as f64 / 10.0;
    let worst = bins
        .iter()
        .map(|&b| (b as f64 - expected).abs() / expected)
        .fold(0.0, f64::max);
    checks.push((
        format!("uniform 10-bin max deviation {:.1}% <= 20%", worst * 100.0),
        worst <= 0.20,
    ));

    let mut exp: Vec<Micros> = (0..N)
        .map(|_| sample_arrival(ArrivalDist::Exponential, 0, END, &mut rng))
        .collect();
    exp.sort_unstable();
    let median = exp[N / 2];
    checks.push((
        format!("exponential median {median} < midpoint {}", END / 2),
        median < END / 2,
    ));

    let mean = (0..N)
        .map(|_| sample_arrival(ArrivalDist::Normal, 0, END, &mut rng) as f64)
        .sum::<f64>()
        / N as f64;
    let rel = (mean - END as f64 / 2.0).abs() / (END as f64 / 2.0);
    checks.push((
        format!("normal mean {mean:.0} within 1% of midpoint ({:.3}%)", rel * 100.0),
        rel <= 0.01,
    ));

    let size_mean = (0..N).map(|_| sample_data_size(50.0, &mut rng)).sum::<f64>() / N as f64;
    checks.push((
        format!("data-size mean {size_mean:.3} in [49, 51] at mean 50"),
        (49.0..=51.0).contains(&size_mean),
    ));
    checks
}

/// Projects an engine trace onto the reference simulator's output shape.
pub fn engine_view(trace: &hetsched::SimTrace) -> oracle::OracleRun {
    oracle::OracleRun {
        tasks: trace
            .records
            .iter()
            .map(|r| oracle::OracleTask {
                status: r.status,
                machine: r.machine,
                start: r.start,
                end: r.finish_or_cancel,
            })
            .collect(),
        intervals: trace
            .machines
            .iter()
            .map(|m| {
                m.busy_intervals
                    .iter()
                    .map(|b| (b.start, b.end, b.task, b.completed))
                    .collect()
            })
            .collect(),
        horizon: trace.horizon,
    }
}
