//! Synthetic workloads and the workload CSV format.
//!
//! Each scenario submits a fixed number of tasks of every type inside a
//! one-second window. Arrival times follow a per-type distribution:
//!
//! | type  | distribution | parameters (window `[s, e]`, length `L`)         |
//! |-------|--------------|--------------------------------------------------|
//! | Task1 | normal       | mean `(s + e) / 2`, sd `L / 6`, clamped          |
//! | Task2 | exponential  | `s + Exp(mean L / 3)`, clamped                   |
//! | Task3 | uniform      | `U(s, e)`                                        |
//!
//! Types beyond the third cycle through the same three distributions.
//!
//! Every task type draws from its own ChaCha8 stream (`set_stream(type id)`
//! on a generator seeded with the workload seed), so the draws of one type do
//! not depend on how many other types exist.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::WorkloadError;
use crate::model::{Micros, TaskTypeId, TaskTypeSpec};

/// Column header of the workload CSV format.
pub const WORKLOAD_CSV_HEADER: &str = "task_type,data_size,arrival_time,deadline";

/// One task submitted to the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    /// Position in the arrival-ordered workload.
    pub seq: usize,
    pub task_type: TaskTypeId,
    pub data_size_kb: f64,
    pub arrival: Micros,
    pub deadline: Micros,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Low,
    Medium,
    High,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Self::Low, Self::Medium, Self::High];

    pub fn name(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }

    pub fn spec(self) -> ScenarioSpec {
        let count_per_type = match self {
            Self::Low => 700,
            Self::Medium => 1000,
            Self::High => 1400,
        };
        ScenarioSpec {
            scenario: self,
            count_per_type,
            window_start: 0,
            window_end: 1_000_000,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownScenario(pub String);

impl fmt::Display for UnknownScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown scenario {:?} (expected one of low, medium, high)", self.0)
    }
}

impl std::error::Error for UnknownScenario {}

impl FromStr for Scenario {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub count_per_type: usize,
    pub window_start: Micros,
    pub window_end: Micros,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalDist {
    Normal,
    Exponential,
    Uniform,
}

impl ArrivalDist {
    pub fn for_task_type(id: TaskTypeId) -> ArrivalDist {
        match (id.0.max(1) - 1) % 3 {
            0 => Self::Normal,
            1 => Self::Exponential,
            _ => Self::Uniform,
        }
    }
}

/// Draws one arrival time from `dist` over `[start, end]`, rounded to whole
/// microseconds and clamped into the window.
pub fn sample_arrival<R: Rng + ?Sized>(dist: ArrivalDist, start: Micros, end: Micros, rng: &mut R) -> Micros {
    assert!(start <= end, "arrival window must be non-empty");
    if start == end {
        return start;
    }
    let (s, e) = (start as f64, end as f64);
    let len = e - s;
    let x = match dist {
        ArrivalDist::Normal => Normal::new((s + e) / 2.0, len / 6.0)
            .expect("finite normal parameters")
            .sample(rng),
        ArrivalDist::Exponential => s + Exp::new(3.0 / len).expect("positive rate").sample(rng),
        ArrivalDist::Uniform => rng.random_range(s..=e),
    };
    x.round().clamp(s, e) as Micros
}

/// Draws a data size around `mean_kb`: normal with sd 15% of the mean,
/// floored at 10% of the mean, kept to three decimals.
pub fn sample_data_size<R: Rng + ?Sized>(mean_kb: f64, rng: &mut R) -> f64 {
    assert!(mean_kb > 0.0, "mean data size must be positive");
    let x = Normal::new(mean_kb, 0.15 * mean_kb)
        .expect("finite normal parameters")
        .sample(rng)
        .max(0.1 * mean_kb);
    round3(x)
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Generates the workload of a scenario. The result is sorted by
/// `(arrival, task type, draw order)` and `seq` numbers follow that order.
pub fn generate_workload(spec: &ScenarioSpec, task_types: &[TaskTypeSpec], seed: u64) -> Vec<TaskInstance> {
    let mut drawn = Vec::with_capacity(spec.count_per_type * task_types.len());
    for tt in task_types {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(tt.id.0));
        let dist = ArrivalDist::for_task_type(tt.id);
        for draw in 0..spec.count_per_type {
            let arrival = sample_arrival(dist, spec.window_start, spec.window_end, &mut rng);
            let data_size_kb = sample_data_size(tt.mean_data_size_kb, &mut rng);
            drawn.push((arrival, tt.id, draw, data_size_kb, tt.slack));
        }
    }
    drawn.sort_by_key(|&(arrival, id, draw, _, _)| (arrival, id, draw));
    drawn
        .into_iter()
        .enumerate()
        .map(|(seq, (arrival, task_type, _, data_size_kb, slack))| TaskInstance {
            seq,
            task_type,
            data_size_kb,
            arrival,
            deadline: arrival + slack,
        })
        .collect()
}

/// Conventional location of the `k`-th workload of a scenario under `root`.
pub fn workload_path(root: &Path, scenario: Scenario, k: usize) -> PathBuf {
    root.join(scenario.name()).join(format!("workload-{k}.csv"))
}

/// Formats microseconds as milliseconds with three decimals.
pub fn format_ms(us: Micros) -> String {
    format!("{}.{:03}", us / 1000, us % 1000)
}

fn parse_ms(field: &str) -> Option<Micros> {
    let ms: f64 = field.trim().parse().ok()?;
    if !ms.is_finite() || ms < 0.0 {
        return None;
    }
    Some((ms * 1000.0).round() as Micros)
}

pub fn write_workload_csv(tasks: &[TaskInstance], task_types: &[TaskTypeSpec]) -> String {
    let mut out = String::with_capacity(32 * (tasks.len() + 1));
    out.push_str(WORKLOAD_CSV_HEADER);
    out.push('\n');
    for t in tasks {
        let name = task_types
            .iter()
            .find(|tt| tt.id == t.task_type)
            .map(|tt| tt.name.as_str())
            .expect("task type present in config");
        out.push_str(&format!(
            "{},{:.3},{},{}\n",
            name,
            t.data_size_kb,
            format_ms(t.arrival),
            format_ms(t.deadline)
        ));
    }
    out
}

/// A row whose deadline is not `arrival + slack`. Such rows are accepted
/// unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadWarning {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedWorkload {
    pub tasks: Vec<TaskInstance>,
    pub warnings: Vec<WorkloadWarning>,
}

/// Parses a workload CSV. Rows may appear in any order; the result is
/// stably sorted by `(arrival, task type)` and renumbered.
pub fn read_workload_csv(text: &str, task_types: &[TaskTypeSpec]) -> Result<ParsedWorkload, WorkloadError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| WorkloadError::Csv(e.to_string()))?;
    let expected: Vec<&str> = WORKLOAD_CSV_HEADER.split(',').collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(WorkloadError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }

    let mut tasks = Vec::new();
    let mut warnings = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| match e.position() {
            Some(pos) => WorkloadError::Row {
                line: pos.line(),
                message: e.to_string(),
            },
            None => WorkloadError::Csv(e.to_string()),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| WorkloadError::Row { line, message };

        let name = &record[0];
        let tt = task_types
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| row_err(format!("unknown task type {name:?}")))?;
        let data_size_kb: f64 = record[1]
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite() && *x >= 0.0)
            .ok_or_else(|| row_err(format!("bad data_size {:?}", &record[1])))?;
        let arrival = parse_ms(&record[2]).ok_or_else(|| row_err(format!("bad arrival_time {:?}", &record[2])))?;
        let deadline = parse_ms(&record[3]).ok_or_else(|| row_err(format!("bad deadline {:?}", &record[3])))?;
        if deadline < arrival {
            return Err(row_err(format!(
                "deadline {} precedes arrival {}",
                &record[3], &record[2]
            )));
        }
        if deadline != arrival + tt.slack {
            let message = format!(
                "deadline {} ms differs from arrival + slack = {} ms; keeping the file's value",
                format_ms(deadline),
                format_ms(arrival + tt.slack)
            );
            log::warn!("workload line {line}: {message}");
            warnings.push(WorkloadWarning { line, message });
        }
        tasks.push(TaskInstance {
            seq: 0,
            task_type: tt.id,
            data_size_kb: round3(data_size_kb),
            arrival,
            deadline,
        });
    }
    tasks.sort_by_key(|t| (t.arrival, t.task_type));
    for (seq, t) in tasks.iter_mut().enumerate() {
        t.seq = seq;
    }
    Ok(ParsedWorkload { tasks, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::paper_preset;

    fn preset_types() -> Vec<TaskTypeSpec> {
        paper_preset().task_types().to_vec()
    }

    #[test]
    fn scenario_counts() {
        assert_eq!(Scenario::Low.spec().count_per_type, 700);
        assert_eq!(Scenario::Medium.spec().count_per_type, 1000);
        assert_eq!(Scenario::High.spec().count_per_type, 1400);
        for s in Scenario::ALL {
            assert_eq!((s.spec().window_start, s.spec().window_end), (0, 1_000_000));
        }
        assert!("huge".parse::<Scenario>().is_err());
        assert_eq!("Medium".parse(), Ok(Scenario::Medium));
    }

    #[test]
    fn low_workload_shape() {
        let types = preset_types();
        let w = generate_workload(&Scenario::Low.spec(), &types, 123);
        assert_eq!(w.len(), 2100);
        for id in 1..=3 {
            assert_eq!(w.iter().filter(|t| t.task_type == TaskTypeId(id)).count(), 700);
        }
        for (i, t) in w.iter().enumerate() {
            assert_eq!(t.seq, i);
            assert!(t.arrival <= 1_000_000);
            assert_eq!(t.deadline - t.arrival, types[t.task_type.0 as usize - 1].slack);
        }
        assert!(w
            .windows(2)
            .all(|p| (p[0].arrival, p[0].task_type) <= (p[1].arrival, p[1].task_type)));
    }

    #[test]
    fn reads_sample_rows() {
        let types = preset_types();
        let text = "task_type,data_size,arrival_time,deadline\n\
                    Task1,110.899,692.529,694.529\n\
                    Task2,70.814,5.612,7.112\n";
        let parsed = read_workload_csv(text, &types).unwrap();
        assert!(parsed.warnings.is_empty());
        assert_eq!(
            parsed.tasks,
            vec![
                TaskInstance {
                    seq: 0,
                    task_type: TaskTypeId(2),
                    data_size_kb: 70.814,
                    arrival: 5612,
                    deadline: 7112
                },
                TaskInstance {
                    seq: 1,
                    task_type: TaskTypeId(1),
                    data_size_kb: 110.899,
                    arrival: 692_529,
                    deadline: 694_529
                },
            ]
        );
    }

    #[test]
    fn unknown_type_names_line() {
        let types = preset_types();
        let text = "task_type,data_size,arrival_time,deadline\n\
                    Task1,110.899,692.529,694.529\n\
                    Task9,1.0,1.0,2.0\n";
        let err = read_workload_csv(text, &types).unwrap_err();
        assert_eq!(
            err,
            WorkloadError::Row {
                line: 3,
                message: "unknown task type \"Task9\"".into()
            }
        );
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn deadline_mismatch_warns_and_keeps_value() {
        let types = preset_types();
        let text = "task_type,data_size,arrival_time,deadline\nTask3,1.0,10.000,12.500\n";
        let parsed = read_workload_csv(text, &types).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert_eq!(parsed.warnings[0].line, 2);
        assert_eq!(parsed.tasks[0].deadline, 12_500);
    }

    #[test]
    fn malformed_rows() {
        let types = preset_types();
        let bad_header = "type,size,arrival,deadline\n";
        assert!(matches!(
            read_workload_csv(bad_header, &types),
            Err(WorkloadError::Header(_))
        ));
        let short = "task_type,data_size,arrival_time,deadline\nTask1,1.0\n";
        assert!(matches!(
            read_workload_csv(short, &types),
            Err(WorkloadError::Row { line: 2, .. })
        ));
        let neg = "task_type,data_size,arrival_time,deadline\nTask1,1.0,-1,1\n";
        assert!(matches!(
            read_workload_csv(neg, &types),
            Err(WorkloadError::Row { line: 2, .. })
        ));
    }

    #[test]
    fn empty_workload_round_trips() {
        let types = preset_types();
        let text = write_workload_csv(&[], &types);
        assert_eq!(text, "task_type,data_size,arrival_time,deadline\n");
        assert!(read_workload_csv(&text, &types).unwrap().tasks.is_empty());
    }

    #[test]
    fn ms_formatting() {
        assert_eq!(format_ms(692_529), "692.529");
        assert_eq!(format_ms(7), "0.007");
        assert_eq!(format_ms(1_000_000), "1000.000");
        assert_eq!(parse_ms("5.612"), Some(5612));
    }

    #[test]
    fn paths_follow_scenario_layout() {
        let p = workload_path(Path::new("workloads"), Scenario::Medium, 0);
        assert_eq!(p, Path::new("workloads/medium/workload-0.csv"));
    }

    #[test]
    fn type_streams_are_independent() {
        let types = preset_types();
        let spec = Scenario::Low.spec();
        let all = generate_workload(&spec, &types, 9);
        let only_uniform = generate_workload(&spec, &types[2..], 9);
        let from_all: Vec<_> = all
            .iter()
            .filter(|t| t.task_type == TaskTypeId(3))
            .map(|t| (t.arrival, t.data_size_kb.to_bits()))
            .collect();
        let alone: Vec<_> = only_uniform
            .iter()
            .map(|t| (t.arrival, t.data_size_kb.to_bits()))
            .collect();
        assert_eq!(from_all, alone);
    }
}
