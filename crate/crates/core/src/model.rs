//! Machine park, task types, and the expected-execution-time (EET) table.
//!
//! All durations are integer microseconds and all powers are integer watts,
//! so every energy quantity derived from them is an exact integer number of
//! microjoules.
//!
//! Replicas are flattened into a single machine list. Machines are ordered by
//! machine-type declaration order, then by replica number; every "lowest
//! index" tie-break in the crate refers to this canonical order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ModelError};
use crate::schedulers::SchedulerKind;

/// Simulation time and durations, in microseconds.
pub type Micros = u64;

/// Energy, in microjoules (watts × microseconds).
pub type MicroJoules = u64;

/// 1-based task type identifier. `TaskTypeId(1)` is the first task type
/// declared in the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskTypeId(pub u16);

impl TaskTypeId {
    pub(crate) fn index(self) -> usize {
        usize::from(self.0) - 1
    }
}

impl fmt::Display for TaskTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTypeSpec {
    pub id: TaskTypeId,
    pub name: String,
    pub mean_data_size_kb: f64,
    pub slack: Micros,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineTypeSpec {
    pub name: String,
    pub power: u64,
    pub idle_power: u64,
    pub replicas: u32,
}

/// One physical machine: a single replica of a machine type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Machine {
    pub index: usize,
    pub type_index: usize,
    pub replica: u32,
}

/// Execution time of every task type on every machine type.
///
/// Lookups never fail once the table is built: totality is checked when the
/// configuration is parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EetTable {
    // [task type index][machine type index]
    entries: Vec<Vec<Micros>>,
}

impl EetTable {
    pub fn get(&self, task_type: TaskTypeId, machine_type: usize) -> Micros {
        self.entries[task_type.index()][machine_type]
    }

    /// Smallest execution time of `task_type` over all machine types.
    pub fn min_for(&self, task_type: TaskTypeId) -> Micros {
        self.entries[task_type.index()]
            .iter()
            .copied()
            .min()
            .expect("at least one machine type")
    }
}

/// A validated simulator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    machine_types: Vec<MachineTypeSpec>,
    task_types: Vec<TaskTypeSpec>,
    eet: EetTable,
    machines: Vec<Machine>,
    pub scheduling_method: SchedulerKind,
    /// Accepted for compatibility with existing configuration files; unused.
    pub battery_capacity: Option<f64>,
}

impl SimConfig {
    pub fn machine_types(&self) -> &[MachineTypeSpec] {
        &self.machine_types
    }

    pub fn task_types(&self) -> &[TaskTypeSpec] {
        &self.task_types
    }

    pub fn eet_table(&self) -> &EetTable {
        &self.eet
    }

    /// The flattened machine list in canonical order.
    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn task_type(&self, id: TaskTypeId) -> Option<&TaskTypeSpec> {
        if id.0 == 0 {
            return None;
        }
        self.task_types.get(id.index())
    }

    pub fn task_type_by_name(&self, name: &str) -> Option<&TaskTypeSpec> {
        self.task_types.iter().find(|t| t.name == name)
    }

    pub fn machine_type_of(&self, machine_index: usize) -> &MachineTypeSpec {
        &self.machine_types[self.machines[machine_index].type_index]
    }

    /// Execution time of `task_type` on the machine at `machine_index`.
    pub fn eet(&self, task_type: TaskTypeId, machine_index: usize) -> Result<Micros, ModelError> {
        eet_lookup(self, task_type, machine_index)
    }

    /// Execution time of `task_type` on a named machine type.
    pub fn eet_by_type_name(&self, task_type: TaskTypeId, machine_type: &str) -> Option<Micros> {
        let mt = self.machine_types.iter().position(|m| m.name == machine_type)?;
        self.task_type(task_type)?;
        Some(self.eet.get(task_type, mt))
    }

    /// Human-readable machine label such as `GPU#2`.
    pub fn machine_label(&self, machine_index: usize) -> String {
        let m = &self.machines[machine_index];
        format!("{}#{}", self.machine_types[m.type_index].name, m.replica)
    }

    /// Serializes back into the configuration document format.
    pub fn to_document(&self) -> String {
        let doc = ConfigDocument {
            machine_types: self
                .machine_types
                .iter()
                .enumerate()
                .map(|(mt, spec)| MachineTypeDoc {
                    name: spec.name.clone(),
                    power: spec.power,
                    idle_power: spec.idle_power,
                    replicas: spec.replicas,
                    eet: self
                        .task_types
                        .iter()
                        .map(|t| (t.name.clone(), micros_to_ms(self.eet.get(t.id, mt))))
                        .collect(),
                })
                .collect(),
            task_types: self
                .task_types
                .iter()
                .map(|t| TaskTypeDoc {
                    name: t.name.clone(),
                    mean_data_size_kb: t.mean_data_size_kb,
                    slack_ms: micros_to_ms(t.slack),
                })
                .collect(),
            scheduling_method: self.scheduling_method.to_string(),
            battery_capacity: self.battery_capacity,
        };
        serde_json::to_string_pretty(&doc).expect("config document serializes")
    }

    /// Returns a copy with a different scheduling method.
    pub fn with_scheduling_method(&self, kind: SchedulerKind) -> SimConfig {
        SimConfig {
            scheduling_method: kind,
            ..self.clone()
        }
    }
}

/// Execution time of `task_type` on the machine at `machine_index`. Replicas
/// of one machine type always share the same value.
pub fn eet_lookup(config: &SimConfig, task_type: TaskTypeId, machine_index: usize) -> Result<Micros, ModelError> {
    let machine = config.machines.get(machine_index).ok_or(ModelError::MachineIndex {
        index: machine_index,
        count: config.machines.len(),
    })?;
    if task_type.0 == 0 || task_type.index() >= config.task_types.len() {
        return Err(ModelError::UnknownTaskType(task_type));
    }
    Ok(config.eet.get(task_type, machine.type_index))
}

#[derive(Debug, Serialize, Deserialize)]
struct ConfigDocument {
    machine_types: Vec<MachineTypeDoc>,
    task_types: Vec<TaskTypeDoc>,
    scheduling_method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    battery_capacity: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MachineTypeDoc {
    name: String,
    power: u64,
    idle_power: u64,
    replicas: u32,
    eet: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskTypeDoc {
    name: String,
    mean_data_size_kb: f64,
    slack_ms: f64,
}

fn micros_to_ms(us: Micros) -> f64 {
    us as f64 / 1000.0
}

fn ms_to_micros(path: String, ms: f64) -> Result<Micros, ConfigError> {
    if !ms.is_finite() || ms <= 0.0 {
        return Err(ConfigError::Invalid {
            path,
            reason: format!("must be a positive duration in ms, got {ms}"),
        });
    }
    let us = (ms * 1000.0).round();
    if us < 1.0 {
        return Err(ConfigError::Invalid {
            path,
            reason: format!("{ms} ms rounds to zero microseconds"),
        });
    }
    Ok(us as Micros)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let doc: ConfigDocument = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build_config(doc)
}

fn build_config(doc: ConfigDocument) -> Result<SimConfig, ConfigError> {
    let scheduling_method: SchedulerKind = doc
        .scheduling_method
        .parse()
        .map_err(|_| ConfigError::UnknownSchedulingMethod(doc.scheduling_method.clone()))?;

    if doc.task_types.is_empty() {
        return Err(ConfigError::Invalid {
            path: "task_types".into(),
            reason: "at least one task type is required".into(),
        });
    }
    if doc.machine_types.is_empty() {
        return Err(ConfigError::Invalid {
            path: "machine_types".into(),
            reason: "at least one machine type is required".into(),
        });
    }
    if doc.task_types.len() > usize::from(u16::MAX) {
        return Err(ConfigError::Invalid {
            path: "task_types".into(),
            reason: "too many task types".into(),
        });
    }

    let mut seen = HashSet::new();
    let mut task_types = Vec::with_capacity(doc.task_types.len());
    for (i, t) in doc.task_types.iter().enumerate() {
        if !seen.insert(t.name.as_str()) {
            return Err(ConfigError::Invalid {
                path: format!("task_types[{i}].name"),
                reason: format!("duplicate task type name {:?}", t.name),
            });
        }
        if !t.mean_data_size_kb.is_finite() || t.mean_data_size_kb <= 0.0 {
            return Err(ConfigError::Invalid {
                path: format!("task_types[{i}].mean_data_size_kb"),
                reason: format!("must be positive, got {}", t.mean_data_size_kb),
            });
        }
        task_types.push(TaskTypeSpec {
            id: TaskTypeId(i as u16 + 1),
            name: t.name.clone(),
            mean_data_size_kb: t.mean_data_size_kb,
            slack: ms_to_micros(format!("task_types[{i}].slack_ms"), t.slack_ms)?,
        });
    }

    let mut seen = HashSet::new();
    let mut machine_types = Vec::with_capacity(doc.machine_types.len());
    let mut entries = vec![vec![0; doc.machine_types.len()]; task_types.len()];
    for (mi, m) in doc.machine_types.iter().enumerate() {
        if !seen.insert(m.name.as_str()) {
            return Err(ConfigError::Invalid {
                path: format!("machine_types[{mi}].name"),
                reason: format!("duplicate machine type name {:?}", m.name),
            });
        }
        if m.idle_power > m.power {
            return Err(ConfigError::Invalid {
                path: format!("machine_types[{mi}].idle_power"),
                reason: format!("idle power {} exceeds power {}", m.idle_power, m.power),
            });
        }
        if m.replicas == 0 {
            return Err(ConfigError::Invalid {
                path: format!("machine_types[{mi}].replicas"),
                reason: "at least one replica is required".into(),
            });
        }
        for name in m.eet.keys() {
            if !task_types.iter().any(|t| &t.name == name) {
                return Err(ConfigError::Invalid {
                    path: format!("machine_types[{mi}].eet.{name}"),
                    reason: format!("unknown task type {name:?}"),
                });
            }
        }
        for t in &task_types {
            let ms = m.eet.get(&t.name).ok_or_else(|| ConfigError::MissingEet {
                task_type: t.name.clone(),
                machine_type: m.name.clone(),
            })?;
            entries[t.id.index()][mi] = ms_to_micros(format!("machine_types[{mi}].eet.{}", t.name), *ms)?;
        }
        machine_types.push(MachineTypeSpec {
            name: m.name.clone(),
            power: m.power,
            idle_power: m.idle_power,
            replicas: m.replicas,
        });
    }

    let machines = machine_types
        .iter()
        .enumerate()
        .flat_map(|(type_index, spec)| (0..spec.replicas).map(move |replica| (type_index, replica)))
        .enumerate()
        .map(|(index, (type_index, replica))| Machine {
            index,
            type_index,
            replica,
        })
        .collect();

    Ok(SimConfig {
        machine_types,
        task_types,
        eet: EetTable { entries },
        machines,
        scheduling_method,
        battery_capacity: doc.battery_capacity,
    })
}

/// Configuration document for the baseline three-platform park.
pub const BASELINE_DOCUMENT: &str = r#"{
  "machine_types": [
    { "name": "CPU",  "power": 150, "idle_power": 15, "replicas": 2,
      "eet": { "Task1": 5.0, "Task2": 4.0, "Task3": 3.0 } },
    { "name": "GPU",  "power": 300, "idle_power": 30, "replicas": 4,
      "eet": { "Task1": 2.0, "Task2": 1.5, "Task3": 1.0 } },
    { "name": "ASIC", "power": 50,  "idle_power": 5,  "replicas": 2,
      "eet": { "Task1": 1.0, "Task2": 0.8, "Task3": 0.5 } }
  ],
  "task_types": [
    { "name": "Task1", "mean_data_size_kb": 100.0, "slack_ms": 2.0 },
    { "name": "Task2", "mean_data_size_kb": 75.0,  "slack_ms": 1.5 },
    { "name": "Task3", "mean_data_size_kb": 50.0,  "slack_ms": 1.0 }
  ],
  "scheduling_method": "FCFS"
}
"#;

/// The baseline park: 2 CPUs, 4 GPUs and 2 ASICs running three task types.
///
/// | type | Task1 | Task2 | Task3 | power (W) | idle (W) | replicas |
/// |------|-------|-------|-------|-----------|----------|----------|
/// | CPU  | 5 ms  | 4 ms  | 3 ms  | 150       | 15       | 2        |
/// | GPU  | 2 ms  | 1.5 ms| 1 ms  | 300       | 30       | 4        |
/// | ASIC | 1 ms  | 0.8 ms| 0.5 ms| 50        | 5        | 2        |
///
/// Task1, Task2 and Task3 have mean data sizes of 100, 75 and 50 KB and
/// slacks of 2, 1.5 and 1 ms.
pub fn paper_preset() -> SimConfig {
    parse_config(BASELINE_DOCUMENT).expect("built-in preset is valid")
}
