//! Problem data for multi-worker assembly line rebalancing.
//!
//! An [`Instance`] couples the task set (processing times, ergonomic
//! scores, work areas), the precedence graph, the line dimensions, and
//! optionally the configuration currently running on the line. Instances
//! round-trip through a JSON document in which every id is dense and
//! 1-based; in memory everything is 0-based vector indexing, and a
//! worker's station is `Option<usize>` (`None` = not placed on the line).

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Side of the line a task is worked from.
///
/// Workers that share a station must stick to one side; a worker alone at
/// a station may cross over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Area {
    External,
    Internal,
}

impl Area {
    /// Document encoding: 0 = external, 1 = internal.
    pub fn code(self) -> u8 {
        match self {
            Area::External => 0,
            Area::Internal => 1,
        }
    }

    pub fn from_code(code: i64) -> Option<Area> {
        match code {
            0 => Some(Area::External),
            1 => Some(Area::Internal),
            _ => None,
        }
    }
}

/// One assembly task. Ids are implicit: task `i` lives at index `i` of
/// [`Instance::tasks`] and prints as `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    /// Processing time in whole minutes, at least 1.
    pub time: u32,
    /// Ergonomic score in 1..=5 (5 = most strenuous).
    pub ergo: u32,
    pub area: Area,
}

/// Immediate-predecessor lists, indexed by task. `preds[j]` holds every
/// task that must be stationed no later than `j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrecedenceGraph {
    preds: Vec<Vec<usize>>,
}

impl PrecedenceGraph {
    /// Builds a graph from per-task predecessor lists. Lists are sorted
    /// and deduplicated; indices are not range-checked here (instance
    /// validation does that against the task count).
    pub fn new(mut preds: Vec<Vec<usize>>) -> Self {
        for list in &mut preds {
            list.sort_unstable();
            list.dedup();
        }
        PrecedenceGraph { preds }
    }

    pub fn num_tasks(&self) -> usize {
        self.preds.len()
    }

    pub fn preds(&self, task: usize) -> &[usize] {
        &self.preds[task]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.preds
            .iter()
            .enumerate()
            .map(|(j, p)| (j, p.as_slice()))
    }
}

/// A cycle found where a DAG was required. Task ids print 1-based, first
/// task repeated at the end to close the loop.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct CycleError {
    pub cycle: Vec<usize>,
}

impl fmt::Display for CycleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cyclic precedence: ")?;
        for id in &self.cycle {
            write!(f, "{} -> ", id + 1)?;
        }
        write!(f, "{}", self.cycle.first().map_or(0, |id| id + 1))
    }
}

/// Orders tasks so every predecessor comes first, breaking ties by
/// ascending id. Fails with one offending cycle if the graph is not a DAG.
pub fn topological_order(graph: &PrecedenceGraph) -> Result<Vec<usize>, CycleError> {
    let n = graph.num_tasks();
    let mut indegree = vec![0usize; n];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, preds) in graph.iter() {
        for &i in preds {
            indegree[j] += 1;
            succs[i].push(j);
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|&j| indegree[j] == 0).collect();
    // `ready` is kept sorted descending so popping yields the smallest id.
    ready.sort_unstable_by(|a, b| b.cmp(a));
    while let Some(next) = ready.pop() {
        order.push(next);
        for &j in &succs[next] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                let pos = ready.binary_search_by(|p| j.cmp(p)).unwrap_or_else(|p| p);
                ready.insert(pos, j);
            }
        }
    }

    if order.len() == n {
        return Ok(order);
    }

    // Some task kept a positive indegree: walk predecessor links among the
    // leftovers until a task repeats, then report that loop.
    let stuck: Vec<usize> = (0..n).filter(|&j| indegree[j] > 0).collect();
    let mut seen = vec![usize::MAX; n];
    let mut walk = Vec::new();
    let mut cur = stuck[0];
    loop {
        if seen[cur] != usize::MAX {
            let cycle = walk[seen[cur]..].to_vec();
            return Err(CycleError { cycle });
        }
        seen[cur] = walk.len();
        walk.push(cur);
        cur = *graph
            .preds(cur)
            .iter()
            .find(|&&p| indegree[p] > 0)
            .expect("stuck task must have a stuck predecessor");
    }
}

/// Staffing bounds per station: (⌊W/S⌋, ⌈W/S⌉).
pub fn worker_bounds(num_workers: u32, num_stations: u32) -> (u32, u32) {
    let lo = num_workers / num_stations;
    let hi = num_workers.div_ceil(num_stations);
    (lo, hi)
}

/// A full assignment: every task to one worker and one station, every
/// worker to at most one station.
///
/// Consistency (each task's worker standing at the task's station) is a
/// validity condition checked by loaders and checkers, not by the type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub task_station: Vec<usize>,
    pub task_worker: Vec<usize>,
    pub worker_station: Vec<Option<usize>>,
}

impl Configuration {
    pub fn num_tasks(&self) -> usize {
        self.task_station.len()
    }

    pub fn num_workers(&self) -> usize {
        self.worker_station.len()
    }

    /// Workers standing at each station.
    pub fn station_counts(&self, num_stations: usize) -> Vec<u32> {
        let mut counts = vec![0u32; num_stations];
        for station in self.worker_station.iter().flatten() {
            if *station < num_stations {
                counts[*station] += 1;
            }
        }
        counts
    }

    /// True when every task's worker is placed at the task's station.
    pub fn is_consistent(&self) -> bool {
        (0..self.num_tasks()).all(|i| {
            self.task_worker
                .get(i)
                .and_then(|&w| self.worker_station.get(w))
                .is_some_and(|ws| *ws == Some(self.task_station[i]))
        })
    }
}

/// Facts derivable from a configuration alone: which stations hold more
/// than one worker, which workers share, and which tasks are station-mates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedFlags {
    pub station_shared: Vec<bool>,
    pub worker_shared: Vec<bool>,
    /// Per task: the other tasks at its station, ascending.
    pub neighbors: Vec<Vec<usize>>,
}

impl DerivedFlags {
    pub fn from_configuration(config: &Configuration, num_stations: usize) -> DerivedFlags {
        let counts = config.station_counts(num_stations);
        let station_shared: Vec<bool> = counts.iter().map(|&c| c >= 2).collect();
        let worker_shared = config
            .worker_station
            .iter()
            .map(|ws| ws.is_some_and(|s| station_shared[s]))
            .collect();

        let mut by_station: Vec<Vec<usize>> = vec![Vec::new(); num_stations];
        for (i, &s) in config.task_station.iter().enumerate() {
            by_station[s].push(i);
        }
        let mut neighbors = vec![Vec::new(); config.num_tasks()];
        for mates in &by_station {
            for &i in mates {
                neighbors[i] = mates.iter().copied().filter(|&j| j != i).collect();
            }
        }

        DerivedFlags {
            station_shared,
            worker_shared,
            neighbors,
        }
    }
}

/// The configuration the line is currently running, together with the
/// cycle time it was balanced for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Baseline {
    pub cycle_time: u32,
    pub config: Configuration,
}

/// One rebalancing problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    /// Target cycle time for the rebalance, in minutes.
    pub cycle_time: u32,
    pub num_stations: u32,
    pub num_workers: u32,
    pub tasks: Vec<Task>,
    pub precedence: PrecedenceGraph,
    pub current: Option<Baseline>,
}

impl Instance {
    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn total_time(&self) -> u64 {
        self.tasks.iter().map(|t| u64::from(t.time)).sum()
    }

    pub fn total_ergo(&self) -> u64 {
        self.tasks.iter().map(|t| u64::from(t.ergo)).sum()
    }

    /// Same instance sized for a different worker pool.
    pub fn with_workers(&self, num_workers: u32) -> Instance {
        Instance {
            num_workers,
            ..self.clone()
        }
    }

    pub fn from_json(text: &str) -> Result<Instance, DomainError> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        doc.into_instance()
    }

    pub fn from_reader(mut reader: impl Read) -> Result<Instance, DomainError> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| DomainError::Io(e.to_string()))?;
        Instance::from_json(&text)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Instance, DomainError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| DomainError::Io(format!("{}: {e}", path.display())))?;
        Instance::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        let doc = InstanceDoc::from_instance(self);
        serde_json::to_string_pretty(&doc).expect("instance document always serializes")
    }

    pub fn write_to_path(&self, path: impl AsRef<Path>) -> Result<(), DomainError> {
        let path = path.as_ref();
        fs::write(path, self.to_json_pretty())
            .map_err(|e| DomainError::Io(format!("{}: {e}", path.display())))
    }

    /// Checks every structural invariant, collecting all failures.
    pub fn validate(&self) -> Result<(), DomainError> {
        let mut issues = Vec::new();
        let n = self.num_tasks();

        if n == 0 {
            issues.push("task list is empty".to_string());
        }
        if self.cycle_time == 0 {
            issues.push("cycle_time must be at least 1".to_string());
        }
        if self.num_stations == 0 {
            issues.push("num_stations must be at least 1".to_string());
        }
        if self.num_workers < self.num_stations {
            issues.push(format!(
                "num_workers ({}) is below num_stations ({})",
                self.num_workers, self.num_stations
            ));
        }

        for (i, task) in self.tasks.iter().enumerate() {
            if task.time == 0 {
                issues.push(format!("task {}: time must be at least 1", i + 1));
            }
            if !(1..=5).contains(&task.ergo) {
                issues.push(format!("task {}: ergo {} outside 1..=5", i + 1, task.ergo));
            }
        }

        if self.precedence.num_tasks() != n {
            issues.push(format!(
                "precedence covers {} tasks, instance has {n}",
                self.precedence.num_tasks()
            ));
        } else {
            for (j, preds) in self.precedence.iter() {
                for &i in preds {
                    if i >= n {
                        issues.push(format!(
                            "task {}: predecessor {} does not exist",
                            j + 1,
                            i + 1
                        ));
                    } else if i == j {
                        issues.push(format!("task {}: listed as its own predecessor", j + 1));
                    }
                }
            }
            if issues.is_empty() {
                if let Err(cycle) = topological_order(&self.precedence) {
                    issues.push(cycle.to_string());
                }
            }
        }

        if let Some(baseline) = &self.current {
            self.validate_baseline(baseline, &mut issues);
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(DomainError::Validation(issues))
        }
    }

    fn validate_baseline(&self, baseline: &Baseline, issues: &mut Vec<String>) {
        let n = self.num_tasks();
        let config = &baseline.config;
        if baseline.cycle_time == 0 {
            issues.push("current: cycle_time must be at least 1".to_string());
        }
        if config.task_station.len() != n || config.task_worker.len() != n {
            issues.push(format!(
                "current: assignment arrays cover {} / {} tasks, instance has {n}",
                config.task_station.len(),
                config.task_worker.len()
            ));
            return;
        }
        if config.num_workers() == 0 {
            issues.push("current: worker_station is empty".to_string());
            return;
        }

        let stations = self.num_stations as usize;
        let workers = config.num_workers();
        let mut bad_index = false;
        for i in 0..n {
            if config.task_station[i] >= stations {
                issues.push(format!(
                    "current: task {} at station {} outside 1..={stations}",
                    i + 1,
                    config.task_station[i] + 1
                ));
                bad_index = true;
            }
            if config.task_worker[i] >= workers {
                issues.push(format!(
                    "current: task {} on worker {} outside 1..={workers}",
                    i + 1,
                    config.task_worker[i] + 1
                ));
                bad_index = true;
            }
        }
        for (w, ws) in config.worker_station.iter().enumerate() {
            if let Some(s) = ws {
                if *s >= stations {
                    issues.push(format!(
                        "current: worker {} at station {} outside 1..={stations}",
                        w + 1,
                        s + 1
                    ));
                    bad_index = true;
                }
            }
        }
        if bad_index {
            return;
        }

        for i in 0..n {
            let w = config.task_worker[i];
            match config.worker_station[w] {
                None => issues.push(format!(
                    "current: task {} on worker {} which has no station",
                    i + 1,
                    w + 1
                )),
                Some(s) if s != config.task_station[i] => issues.push(format!(
                    "current: task {} at station {} but its worker {} stands at station {}",
                    i + 1,
                    config.task_station[i] + 1,
                    w + 1,
                    s + 1
                )),
                _ => {}
            }
        }

        let mut loads = vec![0u64; workers];
        for i in 0..n {
            loads[config.task_worker[i]] += u64::from(self.tasks[i].time);
        }
        for (w, load) in loads.iter().enumerate() {
            if *load > u64::from(baseline.cycle_time) {
                issues.push(format!(
                    "current: worker {} load {} exceeds its cycle time {}",
                    w + 1,
                    load,
                    baseline.cycle_time
                ));
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("could not read instance: {0}")]
    Io(String),
    #[error("could not parse instance document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid instance: {}", .0.join("; "))]
    Validation(Vec<String>),
}

// ---------------------------------------------------------------------------
// JSON document shapes. Everything is i64 on the wire so that range problems
// surface as named validation issues instead of opaque parse errors.

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    cycle_time: i64,
    num_stations: i64,
    num_workers: i64,
    tasks: Vec<TaskDoc>,
    precedence: Vec<PrecedenceDoc>,
    #[serde(default)]
    current: Option<ConfigurationDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskDoc {
    id: i64,
    time: i64,
    ergo: i64,
    area: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PrecedenceDoc {
    task: i64,
    preds: Vec<i64>,
}

/// Wire form of a [`Configuration`] plus the cycle time it answers to.
/// Stations and workers are 1-based; a `worker_station` entry of 0 means
/// the worker is not placed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigurationDoc {
    pub cycle_time: i64,
    pub task_station: Vec<i64>,
    pub task_worker: Vec<i64>,
    pub worker_station: Vec<i64>,
}

impl ConfigurationDoc {
    pub fn from_baseline(baseline: &Baseline) -> ConfigurationDoc {
        ConfigurationDoc {
            cycle_time: i64::from(baseline.cycle_time),
            task_station: baseline
                .config
                .task_station
                .iter()
                .map(|&s| s as i64 + 1)
                .collect(),
            task_worker: baseline
                .config
                .task_worker
                .iter()
                .map(|&w| w as i64 + 1)
                .collect(),
            worker_station: baseline
                .config
                .worker_station
                .iter()
                .map(|ws| ws.map_or(0, |s| s as i64 + 1))
                .collect(),
        }
    }

    /// Decodes the 1-based arrays, reporting range problems as issue
    /// strings prefixed with `context`.
    pub fn into_baseline(self, context: &str, issues: &mut Vec<String>) -> Option<Baseline> {
        let mut ok = true;
        if self.cycle_time < 1 {
            issues.push(format!("{context}: cycle_time must be at least 1"));
            ok = false;
        }
        let decode_positive =
            |values: &[i64], what: &str, issues: &mut Vec<String>, ok: &mut bool| {
                values
                    .iter()
                    .enumerate()
                    .map(|(idx, &v)| {
                        if v < 1 {
                            issues.push(format!(
                                "{context}: {what} entry {} must be a positive id, got {v}",
                                idx + 1
                            ));
                            *ok = false;
                            0
                        } else {
                            (v - 1) as usize
                        }
                    })
                    .collect::<Vec<usize>>()
            };
        let task_station = decode_positive(&self.task_station, "task_station", issues, &mut ok);
        let task_worker = decode_positive(&self.task_worker, "task_worker", issues, &mut ok);
        let mut worker_station = Vec::with_capacity(self.worker_station.len());
        for (idx, &v) in self.worker_station.iter().enumerate() {
            if v < 0 {
                issues.push(format!(
                    "{context}: worker_station entry {} must be 0 or a station id, got {v}",
                    idx + 1
                ));
                ok = false;
                worker_station.push(None);
            } else if v == 0 {
                worker_station.push(None);
            } else {
                worker_station.push(Some((v - 1) as usize));
            }
        }
        if !ok {
            return None;
        }
        Some(Baseline {
            cycle_time: self.cycle_time as u32,
            config: Configuration {
                task_station,
                task_worker,
                worker_station,
            },
        })
    }
}

impl InstanceDoc {
    fn from_instance(instance: &Instance) -> InstanceDoc {
        InstanceDoc {
            cycle_time: i64::from(instance.cycle_time),
            num_stations: i64::from(instance.num_stations),
            num_workers: i64::from(instance.num_workers),
            tasks: instance
                .tasks
                .iter()
                .enumerate()
                .map(|(i, t)| TaskDoc {
                    id: i as i64 + 1,
                    time: i64::from(t.time),
                    ergo: i64::from(t.ergo),
                    area: i64::from(t.area.code()),
                })
                .collect(),
            precedence: instance
                .precedence
                .iter()
                .map(|(j, preds)| PrecedenceDoc {
                    task: j as i64 + 1,
                    preds: preds.iter().map(|&i| i as i64 + 1).collect(),
                })
                .collect(),
            current: instance
                .current
                .as_ref()
                .map(ConfigurationDoc::from_baseline),
        }
    }

    fn into_instance(self) -> Result<Instance, DomainError> {
        let mut issues = Vec::new();
        let n = self.tasks.len();

        // Task ids must be exactly 1..=n in order; any other labeling is
        // rejected rather than reinterpreted.
        for (idx, task) in self.tasks.iter().enumerate() {
            if task.id != idx as i64 + 1 {
                issues.push(format!(
                    "tasks[{idx}]: id {} out of place, ids must run 1..={n} in order",
                    task.id
                ));
            }
        }

        let in_range = |v: i64, lo: i64, hi: i64| -> Option<u32> {
            (lo..=hi).contains(&v).then_some(v as u32)
        };

        let cycle_time = in_range(self.cycle_time, 1, i64::from(u32::MAX)).unwrap_or_else(|| {
            issues.push(format!("cycle_time {} must be at least 1", self.cycle_time));
            1
        });
        let num_stations = in_range(self.num_stations, 1, 10_000).unwrap_or_else(|| {
            issues.push(format!(
                "num_stations {} outside 1..=10000",
                self.num_stations
            ));
            1
        });
        let num_workers = in_range(self.num_workers, 1, 1_000_000).unwrap_or_else(|| {
            issues.push(format!(
                "num_workers {} outside 1..=1000000",
                self.num_workers
            ));
            1
        });

        let tasks: Vec<Task> = self
            .tasks
            .iter()
            .enumerate()
            .map(|(idx, t)| {
                let time = in_range(t.time, 1, i64::from(u32::MAX)).unwrap_or_else(|| {
                    issues.push(format!("task {}: time must be at least 1", idx + 1));
                    1
                });
                let ergo = in_range(t.ergo, 1, 5).unwrap_or_else(|| {
                    issues.push(format!("task {}: ergo {} outside 1..=5", idx + 1, t.ergo));
                    1
                });
                let area = Area::from_code(t.area).unwrap_or_else(|| {
                    issues.push(format!(
                        "task {}: area {} must be 0 (external) or 1 (internal)",
                        idx + 1,
                        t.area
                    ));
                    Area::External
                });
                Task { time, ergo, area }
            })
            .collect();

        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        for entry in &self.precedence {
            let Some(j) = entry
                .task
                .checked_sub(1)
                .filter(|&j| (j as usize) < n)
                .map(|j| j as usize)
            else {
                issues.push(format!("precedence: task id {} does not exist", entry.task));
                continue;
            };
            if seen[j] {
                issues.push(format!("precedence: task {} listed twice", j + 1));
                continue;
            }
            seen[j] = true;
            for &p in &entry.preds {
                let Some(i) = p
                    .checked_sub(1)
                    .filter(|&i| (i as usize) < n)
                    .map(|i| i as usize)
                else {
                    issues.push(format!(
                        "precedence: task {} lists unknown predecessor {p}",
                        j + 1
                    ));
                    continue;
                };
                preds[j].push(i);
            }
        }

        let current = self
            .current
            .and_then(|doc| doc.into_baseline("current", &mut issues));

        if !issues.is_empty() {
            return Err(DomainError::Validation(issues));
        }

        let instance = Instance {
            cycle_time,
            num_stations,
            num_workers,
            tasks,
            precedence: PrecedenceGraph::new(preds),
            current,
        };
        instance.validate()?;
        Ok(instance)
    }
}
