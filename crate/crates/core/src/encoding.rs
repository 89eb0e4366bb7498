//! Feasibility checking under two constraint encodings.
//!
//! The semantic checker evaluates the model's conditions directly: station
//! staffing limits, precedence along the line, per-worker cycle-time
//! capacity, and the rule that workers sharing a station work a single
//! side of the line. The linearized checker instead evaluates the pure
//! inequality form, in which the side rule becomes two families of linear
//! constraints over auxiliary binaries ([`LinearAux`]) and task
//! co-assignment is tied to station variables by a three-inequality
//! envelope. Both admit exactly the same assignments, which
//! [`enumerate_feasible`] lets a test verify set-for-set on small
//! instances.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    topological_order, worker_bounds, Area, Configuration, DerivedFlags, Instance,
};

/// Which constraint family a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintTag {
    /// Index shapes and assignment bookkeeping, including a tasked worker
    /// standing at no station.
    Structural,
    /// A task's worker stands at a different station than the task.
    Consistency,
    /// Station staffing outside ⌊W/S⌋..⌈W/S⌉.
    Staffing,
    /// A predecessor placed downstream of its successor.
    Precedence,
    /// Worker load above the cycle time.
    CycleTime,
    /// Mixed work areas on a worker who shares a station (semantic form).
    WorkArea,
    /// Internal task on a sharing worker whose area flag says external.
    WorkAreaInternal,
    /// External task on a sharing worker whose area flag says internal.
    WorkAreaExternal,
    /// Co-assignment flag set although the first task is elsewhere.
    CoassignFirst,
    /// Co-assignment flag set although the second task is elsewhere.
    CoassignSecond,
    /// Co-assignment flag cleared although both tasks share the station.
    CoassignLower,
    /// Solo flag raised for a worker who is not alone at that station.
    SoloFlag,
}

/// One violated constraint with the entities involved (1-based, as they
/// appear in documents) and a sentence of context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: ConstraintTag,
    pub indices: Vec<usize>,
    pub detail: String,
}

/// All violations found by one check, in a stable order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViolationList(pub Vec<Violation>);

impl ViolationList {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Violation> {
        self.0.iter()
    }

    fn push(&mut self, constraint: ConstraintTag, indices: Vec<usize>, detail: String) {
        self.0.push(Violation {
            constraint,
            indices,
            detail,
        });
    }
}

impl fmt::Display for ViolationList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            writeln!(f, "[{:?}] {}", v.constraint, v.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("configuration is not semantically feasible:\n{0}")]
    Infeasible(ViolationList),
    #[error("instance exceeds the enumeration guard: {0}")]
    GuardExceeded(String),
    #[error("instance is not enumerable: {0}")]
    InvalidInstance(String),
}

/// Constraint encodings a configuration can be checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Semantic,
    Linearized,
}

/// Auxiliary binaries of the linearized encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearAux {
    /// Per worker: the side of the line assigned (true = internal).
    pub area_flag: Vec<bool>,
    /// `solo_flag[s][w]`: worker `w` is the only worker at station `s`,
    /// which exempts it from the single-side rule there.
    pub solo_flag: Vec<Vec<bool>>,
    /// `coassign[(i, j, s)]`: tasks `i` and `j` (a current station mate of
    /// `i`) both sit at station `s`. Keyed over every such pair and station.
    pub coassign: BTreeMap<(usize, usize, usize), bool>,
}

/// Current station mates per task, empty when the instance has no running
/// configuration.
fn neighbor_sets(instance: &Instance) -> Vec<Vec<usize>> {
    match &instance.current {
        Some(baseline) => {
            DerivedFlags::from_configuration(&baseline.config, instance.num_stations as usize)
                .neighbors
        }
        None => vec![Vec::new(); instance.num_tasks()],
    }
}

fn check_shape(proposed: &Configuration, instance: &Instance) -> Result<(), EncodingError> {
    let n = instance.num_tasks();
    if proposed.task_station.len() != n || proposed.task_worker.len() != n {
        return Err(EncodingError::ShapeMismatch(format!(
            "assignment covers {}/{} tasks, instance has {n}",
            proposed.task_station.len(),
            proposed.task_worker.len(),
        )));
    }
    if proposed.num_workers() == 0 {
        return Err(EncodingError::ShapeMismatch(
            "worker_station is empty".to_string(),
        ));
    }
    Ok(())
}

/// Checks the shared constraint families (bookkeeping, consistency,
/// staffing, precedence, cycle time) that both encodings state identically.
fn check_common(
    proposed: &Configuration,
    instance: &Instance,
    cycle_time: u32,
    out: &mut ViolationList,
) {
    let n = instance.num_tasks();
    let stations = instance.num_stations as usize;
    let workers = proposed.num_workers();

    let mut indexable = true;
    for i in 0..n {
        if proposed.task_station[i] >= stations {
            out.push(
                ConstraintTag::Structural,
                vec![i + 1],
                format!(
                    "task {} names station {} but the line has {stations}",
                    i + 1,
                    proposed.task_station[i] + 1
                ),
            );
            indexable = false;
        }
        if proposed.task_worker[i] >= workers {
            out.push(
                ConstraintTag::Structural,
                vec![i + 1],
                format!(
                    "task {} names worker {} but the pool has {workers}",
                    i + 1,
                    proposed.task_worker[i] + 1
                ),
            );
            indexable = false;
        }
    }
    for (w, ws) in proposed.worker_station.iter().enumerate() {
        if let Some(s) = ws {
            if *s >= stations {
                out.push(
                    ConstraintTag::Structural,
                    vec![w + 1],
                    format!(
                        "worker {} stands at station {} but the line has {stations}",
                        w + 1,
                        s + 1
                    ),
                );
                indexable = false;
            }
        }
    }
    if !indexable {
        return;
    }

    for i in 0..n {
        let w = proposed.task_worker[i];
        match proposed.worker_station[w] {
            None => out.push(
                ConstraintTag::Structural,
                vec![i + 1, w + 1],
                format!(
                    "task {} is on worker {} who stands at no station",
                    i + 1,
                    w + 1
                ),
            ),
            Some(s) if s != proposed.task_station[i] => out.push(
                ConstraintTag::Consistency,
                vec![i + 1, w + 1],
                format!(
                    "task {} sits at station {} but its worker {} stands at station {}",
                    i + 1,
                    proposed.task_station[i] + 1,
                    w + 1,
                    s + 1
                ),
            ),
            _ => {}
        }
    }

    let (lo, hi) = worker_bounds(workers as u32, instance.num_stations);
    let counts = proposed.station_counts(stations);
    for (s, &count) in counts.iter().enumerate() {
        if count < lo || count > hi {
            out.push(
                ConstraintTag::Staffing,
                vec![s + 1],
                format!(
                    "station {} holds {count} workers, allowed {lo}..={hi}",
                    s + 1
                ),
            );
        }
    }

    for (j, preds) in instance.precedence.iter() {
        for &i in preds {
            if proposed.task_station[i] > proposed.task_station[j] {
                out.push(
                    ConstraintTag::Precedence,
                    vec![i + 1, j + 1],
                    format!(
                        "task {} must precede task {} but sits downstream (station {} > {})",
                        i + 1,
                        j + 1,
                        proposed.task_station[i] + 1,
                        proposed.task_station[j] + 1
                    ),
                );
            }
        }
    }

    let mut loads = vec![0u64; workers];
    for i in 0..n {
        loads[proposed.task_worker[i]] += u64::from(instance.tasks[i].time);
    }
    for (w, &load) in loads.iter().enumerate() {
        if load > u64::from(cycle_time) {
            out.push(
                ConstraintTag::CycleTime,
                vec![w + 1],
                format!(
                    "worker {} load {load} exceeds cycle time {cycle_time}",
                    w + 1
                ),
            );
        }
    }
}

/// Per-worker work-area profile: does the worker hold internal or external
/// tasks anywhere.
fn area_profile(proposed: &Configuration, instance: &Instance) -> Vec<(bool, bool)> {
    let mut profile = vec![(false, false); proposed.num_workers()];
    for (i, task) in instance.tasks.iter().enumerate() {
        let w = proposed.task_worker[i];
        match task.area {
            Area::Internal => profile[w].0 = true,
            Area::External => profile[w].1 = true,
        }
    }
    profile
}

/// Checks a configuration against the model's conditions stated directly.
///
/// Shared-station and crossing flags are computed exactly from the
/// assignment (for feasibility that is the tight choice), and the
/// single-side rule is evaluated as "a sharing worker holds tasks of one
/// area only". Returns every violation found; an empty list means
/// feasible at `cycle_time`.
pub fn check_semantic(
    proposed: &Configuration,
    instance: &Instance,
    cycle_time: u32,
) -> Result<ViolationList, EncodingError> {
    check_shape(proposed, instance)?;
    let mut out = ViolationList::default();
    check_common(proposed, instance, cycle_time, &mut out);
    if !out.is_empty()
        && out
            .iter()
            .any(|v| v.constraint == ConstraintTag::Structural)
    {
        return Ok(out);
    }

    let flags = DerivedFlags::from_configuration(proposed, instance.num_stations as usize);
    let profile = area_profile(proposed, instance);
    for (w, &(internal, external)) in profile.iter().enumerate() {
        if flags.worker_shared[w] && internal && external {
            out.push(
                ConstraintTag::WorkArea,
                vec![w + 1],
                format!(
                    "worker {} shares a station but holds both internal and external tasks",
                    w + 1
                ),
            );
        }
    }
    Ok(out)
}

/// Checks a configuration plus explicit auxiliaries against the inequality
/// form of the model, constraint for constraint.
pub fn check_linearized(
    proposed: &Configuration,
    aux: &LinearAux,
    instance: &Instance,
    cycle_time: u32,
) -> Result<ViolationList, EncodingError> {
    check_shape(proposed, instance)?;
    let stations = instance.num_stations as usize;
    let workers = proposed.num_workers();
    if aux.area_flag.len() != workers {
        return Err(EncodingError::ShapeMismatch(format!(
            "area_flag covers {} workers, configuration has {workers}",
            aux.area_flag.len()
        )));
    }
    if aux.solo_flag.len() != stations || aux.solo_flag.iter().any(|row| row.len() != workers) {
        return Err(EncodingError::ShapeMismatch(format!(
            "solo_flag must be {stations} stations x {workers} workers"
        )));
    }
    let neighbors = neighbor_sets(instance);
    for (i, nbrs) in neighbors.iter().enumerate() {
        for &j in nbrs {
            for s in 0..stations {
                if !aux.coassign.contains_key(&(i, j, s)) {
                    return Err(EncodingError::ShapeMismatch(format!(
                        "coassign is missing key (task {}, mate {}, station {})",
                        i + 1,
                        j + 1,
                        s + 1
                    )));
                }
            }
        }
    }
    let expected_keys: usize = neighbors.iter().map(|n| n.len() * stations).sum();
    if aux.coassign.len() != expected_keys {
        return Err(EncodingError::ShapeMismatch(format!(
            "coassign holds {} keys, expected {expected_keys}",
            aux.coassign.len()
        )));
    }

    let mut out = ViolationList::default();
    check_common(proposed, instance, cycle_time, &mut out);
    if out
        .iter()
        .any(|v| v.constraint == ConstraintTag::Structural)
    {
        return Ok(out);
    }

    // Co-assignment envelope: q ≤ z_i, q ≤ z_j, q ≥ z_i + z_j − 1.
    for (&(i, j, s), &q) in &aux.coassign {
        let z_i = proposed.task_station[i] == s;
        let z_j = proposed.task_station[j] == s;
        if q && !z_i {
            out.push(
                ConstraintTag::CoassignFirst,
                vec![i + 1, j + 1, s + 1],
                format!(
                    "coassign({}, {}, station {}) is set but task {} sits elsewhere",
                    i + 1,
                    j + 1,
                    s + 1,
                    i + 1
                ),
            );
        }
        if q && !z_j {
            out.push(
                ConstraintTag::CoassignSecond,
                vec![i + 1, j + 1, s + 1],
                format!(
                    "coassign({}, {}, station {}) is set but task {} sits elsewhere",
                    i + 1,
                    j + 1,
                    s + 1,
                    j + 1
                ),
            );
        }
        if !q && z_i && z_j {
            out.push(
                ConstraintTag::CoassignLower,
                vec![i + 1, j + 1, s + 1],
                format!(
                    "tasks {} and {} both sit at station {} but coassign is clear",
                    i + 1,
                    j + 1,
                    s + 1
                ),
            );
        }
    }

    // A raised solo flag asserts "w stands alone at s"; anything else is a
    // violation, because a false flag would void the single-side rule.
    let counts = proposed.station_counts(stations);
    for (s, &count) in counts.iter().enumerate() {
        for w in 0..workers {
            if aux.solo_flag[s][w] && !(proposed.worker_station[w] == Some(s) && count == 1) {
                out.push(
                    ConstraintTag::SoloFlag,
                    vec![s + 1, w + 1],
                    format!(
                        "solo flag raised for worker {} at station {} who is not alone there",
                        w + 1,
                        s + 1
                    ),
                );
            }
        }
    }

    // Work-area families. The inequality x ≤ c + (1−y) + (1−z) + ℓ (internal
    // tasks; mirrored with 1−c for external) only binds when the task, its
    // worker, and the station line up and no solo exemption applies.
    for (i, task) in instance.tasks.iter().enumerate() {
        let w = proposed.task_worker[i];
        let s = proposed.task_station[i];
        if proposed.worker_station[w] != Some(s) || aux.solo_flag[s][w] {
            continue;
        }
        match task.area {
            Area::Internal if !aux.area_flag[w] => out.push(
                ConstraintTag::WorkAreaInternal,
                vec![i + 1, w + 1, s + 1],
                format!(
                    "internal task {} on worker {} at station {} whose area flag says external",
                    i + 1,
                    w + 1,
                    s + 1
                ),
            ),
            Area::External if aux.area_flag[w] => out.push(
                ConstraintTag::WorkAreaExternal,
                vec![i + 1, w + 1, s + 1],
                format!(
                    "external task {} on worker {} at station {} whose area flag says internal",
                    i + 1,
                    w + 1,
                    s + 1
                ),
            ),
            _ => {}
        }
    }

    Ok(out)
}

/// Builds the auxiliaries that witness a semantically feasible
/// configuration in the linearized encoding.
///
/// Solo flags are raised exactly for lone workers, co-assignment follows
/// the station variables, and a sharing worker's area flag matches its
/// tasks (uniform by feasibility); lone and taskless workers get an
/// external flag, the neutral choice.
pub fn derive_aux(
    proposed: &Configuration,
    instance: &Instance,
    cycle_time: u32,
) -> Result<LinearAux, EncodingError> {
    let violations = check_semantic(proposed, instance, cycle_time)?;
    if !violations.is_empty() {
        return Err(EncodingError::Infeasible(violations));
    }
    Ok(permissive_aux(proposed, instance))
}

/// The most permissive auxiliaries for a configuration: solo flags at
/// their invariant maximum, co-assignment tracking the stations, and each
/// worker's area flag matching the majority of its tasks (internal on
/// ties). For feasible configurations this coincides with [`derive_aux`]
/// up to the area flag of sharing workers, where feasibility makes the
/// majority unanimous.
pub fn permissive_aux(proposed: &Configuration, instance: &Instance) -> LinearAux {
    let stations = instance.num_stations as usize;
    let workers = proposed.num_workers();
    let counts = proposed.station_counts(stations);

    let mut solo_flag = vec![vec![false; workers]; stations];
    for (w, ws) in proposed.worker_station.iter().enumerate() {
        if let Some(s) = ws {
            if *s < stations && counts[*s] == 1 {
                solo_flag[*s][w] = true;
            }
        }
    }

    let mut internal_tasks = vec![0u32; workers];
    let mut external_tasks = vec![0u32; workers];
    for (i, task) in instance.tasks.iter().enumerate() {
        let w = proposed.task_worker[i];
        if w < workers {
            match task.area {
                Area::Internal => internal_tasks[w] += 1,
                Area::External => external_tasks[w] += 1,
            }
        }
    }
    let flags = DerivedFlags::from_configuration(proposed, stations);
    let area_flag = (0..workers)
        .map(|w| {
            if flags.worker_shared[w] {
                internal_tasks[w] >= external_tasks[w] && internal_tasks[w] > 0
            } else {
                false
            }
        })
        .collect();

    let mut coassign = BTreeMap::new();
    for (i, nbrs) in neighbor_sets(instance).iter().enumerate() {
        for &j in nbrs {
            for s in 0..stations {
                let both = proposed.task_station.get(i) == Some(&s)
                    && proposed.task_station.get(j) == Some(&s);
                coassign.insert((i, j, s), both);
            }
        }
    }

    LinearAux {
        area_flag,
        solo_flag,
        coassign,
    }
}

/// The projection of a configuration onto raw assignment variables, in a
/// form with total ordering so sets of them compare exactly.
/// `worker_station` uses 0 for "not placed" and 1-based stations otherwise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AssignmentTriple {
    pub task_worker: Vec<u8>,
    pub task_station: Vec<u8>,
    pub worker_station: Vec<u8>,
}

impl AssignmentTriple {
    pub fn from_configuration(config: &Configuration) -> AssignmentTriple {
        AssignmentTriple {
            task_worker: config.task_worker.iter().map(|&w| w as u8).collect(),
            task_station: config.task_station.iter().map(|&s| s as u8).collect(),
            worker_station: config
                .worker_station
                .iter()
                .map(|ws| ws.map_or(0, |s| s as u8 + 1))
                .collect(),
        }
    }
}

pub const ENUMERATION_MAX_TASKS: usize = 6;
pub const ENUMERATION_MAX_STATIONS: u32 = 3;
pub const ENUMERATION_MAX_WORKERS: u32 = 4;

fn enumeration_guard(
    instance: &Instance,
    max_tasks: usize,
    max_stations: u32,
    max_workers: u32,
) -> Result<(), EncodingError> {
    if instance.num_tasks() > max_tasks
        || instance.num_stations > max_stations
        || instance.num_workers > max_workers
    {
        return Err(EncodingError::GuardExceeded(format!(
            "enumeration accepts at most {max_tasks} tasks, {max_stations} stations, \
             {max_workers} workers; instance has {}, {}, {}",
            instance.num_tasks(),
            instance.num_stations,
            instance.num_workers
        )));
    }
    Ok(())
}

/// Walks every consistent configuration of the instance: workers placed
/// within staffing bounds, every task on a placed worker at that worker's
/// station, prefix-pruned by cycle-time capacity and precedence (both of
/// which any feasible configuration must satisfy). Work-area legality is
/// NOT applied; leaves decide that per encoding.
pub(crate) fn for_each_consistent(
    instance: &Instance,
    cycle_time: u32,
    mut leaf: impl FnMut(&Configuration),
) -> Result<(), EncodingError> {
    let n = instance.num_tasks();
    let stations = instance.num_stations as usize;
    let workers = instance.num_workers as usize;
    let order = topological_order(&instance.precedence)
        .map_err(|e| EncodingError::InvalidInstance(e.to_string()))?;
    let (lo, hi) = worker_bounds(instance.num_workers, instance.num_stations);

    let mut worker_station: Vec<Option<usize>> = vec![None; workers];
    let mut counts = vec![0u32; stations];

    // Outer walk: every placement of workers onto stations (or nowhere)
    // within staffing bounds. Inner walk: every task-to-worker map that
    // respects consistency, capacity, and precedence.
    #[allow(clippy::too_many_arguments)]
    fn walk_workers(
        w: usize,
        workers: usize,
        stations: usize,
        lo: u32,
        hi: u32,
        worker_station: &mut Vec<Option<usize>>,
        counts: &mut Vec<u32>,
        place_tasks: &mut impl FnMut(&Vec<Option<usize>>),
    ) {
        if w == workers {
            if counts.iter().all(|&c| c >= lo) {
                place_tasks(worker_station);
            }
            return;
        }
        worker_station[w] = None;
        walk_workers(
            w + 1,
            workers,
            stations,
            lo,
            hi,
            worker_station,
            counts,
            place_tasks,
        );
        for s in 0..stations {
            if counts[s] < hi {
                worker_station[w] = Some(s);
                counts[s] += 1;
                walk_workers(
                    w + 1,
                    workers,
                    stations,
                    lo,
                    hi,
                    worker_station,
                    counts,
                    place_tasks,
                );
                counts[s] -= 1;
            }
        }
        worker_station[w] = None;
    }

    let tasks = &instance.tasks;
    let precedence = &instance.precedence;
    let mut place_tasks = |worker_station: &Vec<Option<usize>>| {
        let mut task_worker = vec![usize::MAX; n];
        let mut task_station = vec![usize::MAX; n];
        let mut loads = vec![0u64; workers];

        #[allow(clippy::too_many_arguments)]
        fn walk_tasks(
            pos: usize,
            order: &[usize],
            tasks: &[crate::domain::Task],
            precedence: &crate::domain::PrecedenceGraph,
            worker_station: &[Option<usize>],
            cycle_time: u32,
            task_worker: &mut Vec<usize>,
            task_station: &mut Vec<usize>,
            loads: &mut Vec<u64>,
            leaf: &mut impl FnMut(&Configuration),
        ) {
            if pos == order.len() {
                leaf(&Configuration {
                    task_station: task_station.clone(),
                    task_worker: task_worker.clone(),
                    worker_station: worker_station.to_vec(),
                });
                return;
            }
            let t = order[pos];
            let min_station = precedence
                .preds(t)
                .iter()
                .map(|&p| task_station[p])
                .max()
                .unwrap_or(0);
            for (w, ws) in worker_station.iter().enumerate() {
                let Some(s) = ws else { continue };
                if *s < min_station {
                    continue;
                }
                if loads[w] + u64::from(tasks[t].time) > u64::from(cycle_time) {
                    continue;
                }
                task_worker[t] = w;
                task_station[t] = *s;
                loads[w] += u64::from(tasks[t].time);
                walk_tasks(
                    pos + 1,
                    order,
                    tasks,
                    precedence,
                    worker_station,
                    cycle_time,
                    task_worker,
                    task_station,
                    loads,
                    leaf,
                );
                loads[w] -= u64::from(tasks[t].time);
                task_worker[t] = usize::MAX;
                task_station[t] = usize::MAX;
            }
        }

        walk_tasks(
            0,
            &order,
            tasks,
            precedence,
            worker_station,
            cycle_time,
            &mut task_worker,
            &mut task_station,
            &mut loads,
            &mut leaf,
        );
    };

    walk_workers(
        0,
        workers,
        stations,
        lo,
        hi,
        &mut worker_station,
        &mut counts,
        &mut place_tasks,
    );
    Ok(())
}

/// Collects the complete feasible set of assignment triples under one
/// encoding by exhaustive enumeration. Guarded to small instances; for the
/// linearized encoding, feasibility of a triple means some choice of
/// auxiliaries satisfies every inequality.
pub fn enumerate_feasible(
    instance: &Instance,
    cycle_time: u32,
    encoding: Encoding,
) -> Result<std::collections::BTreeSet<AssignmentTriple>, EncodingError> {
    enumeration_guard(
        instance,
        ENUMERATION_MAX_TASKS,
        ENUMERATION_MAX_STATIONS,
        ENUMERATION_MAX_WORKERS,
    )?;
    let mut set = std::collections::BTreeSet::new();
    for_each_consistent(instance, cycle_time, |config| {
        let admitted = match encoding {
            Encoding::Semantic => check_semantic(config, instance, cycle_time)
                .map(|v| v.is_empty())
                .unwrap_or(false),
            Encoding::Linearized => linearized_admits(config, instance, cycle_time),
        };
        if admitted {
            set.insert(AssignmentTriple::from_configuration(config));
        }
    })?;
    Ok(set)
}

/// Existential feasibility under the linearized encoding: does any choice
/// of auxiliaries satisfy all inequalities?
///
/// The search space collapses: the co-assignment envelope pins q exactly,
/// the work-area inequalities only relax as solo flags rise so the
/// invariant-maximal solo flags dominate, and the remaining freedom, one
/// area flag per worker, has no cross-worker coupling. Trying both flag
/// values per worker is therefore exhaustive.
pub(crate) fn linearized_admits(
    config: &Configuration,
    instance: &Instance,
    cycle_time: u32,
) -> bool {
    let mut aux = permissive_aux(config, instance);
    let Ok(violations) = check_linearized(config, &aux, instance, cycle_time) else {
        return false;
    };
    let mut blocked_workers = Vec::new();
    for v in violations.iter() {
        match v.constraint {
            ConstraintTag::WorkAreaInternal | ConstraintTag::WorkAreaExternal => {
                // indices are (task, worker, station), 1-based.
                blocked_workers.push(v.indices[1] - 1);
            }
            _ => return false,
        }
    }
    blocked_workers.sort_unstable();
    blocked_workers.dedup();
    for w in blocked_workers {
        aux.area_flag[w] = !aux.area_flag[w];
        let flipped = check_linearized(config, &aux, instance, cycle_time)
            .expect("shape is unchanged by flipping a flag");
        let still_bad = flipped.iter().any(|v| {
            matches!(
                v.constraint,
                ConstraintTag::WorkAreaInternal | ConstraintTag::WorkAreaExternal
            ) && v.indices[1] - 1 == w
        });
        if still_bad {
            return false;
        }
    }
    true
}
