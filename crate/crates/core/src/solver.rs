//! Exact branch-and-bound search over line configurations.
//!
//! Tasks are branched in topological order; each task goes either to a
//! worker already opened or to one fresh worker placed at a feasible
//! station, which fixes worker labels in first-use order and removes the
//! relabeling symmetry without losing any objective value. Leaves are
//! completed by placing just enough idle workers to meet the staffing
//! floor; placing more only widens both spreads and never changes
//! similarity. Subtrees are cut by per-worker capacity, staffing
//! arithmetic, single-side legality at stations certain to end up shared,
//! and a component-wise objective bound against the incumbent.
//!
//! The module also carries the search's supporting cast: single-component
//! runs, normalization bounds assembled from them, minimum workforce
//! sizing, and a brute-force oracle for cross-checking small instances.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{
    topological_order, worker_bounds, Area, Configuration, DerivedFlags, Instance,
};
use crate::encoding::{check_semantic, for_each_consistent};
use crate::metrics::{raw_components, weighted_objective, Component, NormalizationBounds};

/// Objective values within this distance count as ties; the first
/// incumbent found keeps precedence.
const TIE_EPS: f64 = 1e-12;

/// Nodes between clock checks (the first node always checks).
const CHECK_INTERVAL: u64 = 1024;

pub const ORACLE_MAX_TASKS: usize = 8;
pub const ORACLE_MAX_STATIONS: u32 = 3;
pub const ORACLE_MAX_WORKERS: u32 = 4;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("instance cannot be searched: {0}")]
    InvalidInstance(String),
    #[error("no feasible configuration: {0}")]
    Infeasible(String),
    #[error("search was inconclusive: {0}")]
    Inconclusive(String),
    #[error("instance exceeds the oracle guard: {0}")]
    GuardExceeded(String),
}

/// Knobs for one search run.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Component weights (negated similarity, workload range, ergonomic
    /// range); nonnegative and summing to 1.
    pub weights: [f64; 3],
    pub time_limit: Duration,
    /// Stop once (incumbent − bound) / max(|incumbent|, 1e-9) drops to
    /// this value; 0 demands a completed search.
    pub gap_target: f64,
    /// Insist that every worker carries at least one task.
    pub require_nonempty_workers: bool,
    /// 0 explores children in canonical order; any other value shuffles
    /// sibling order deterministically from this seed.
    pub random_seed: u64,
    /// Stop after this many incumbents found by the search itself (a warm
    /// start does not count).
    pub incumbent_limit: Option<u32>,
    /// Stop after roughly this many nodes (checked on the same grid as
    /// the clock); unlike the time limit this cuts deterministically.
    pub node_limit: Option<u64>,
    /// Emit a progress line to stderr at most this often.
    pub progress_interval: Option<Duration>,
}

impl Default for SolveOptions {
    fn default() -> SolveOptions {
        SolveOptions {
            weights: [1.0 / 3.0; 3],
            time_limit: Duration::from_secs(60),
            gap_target: 0.0,
            require_nonempty_workers: false,
            random_seed: 0,
            incumbent_limit: None,
            node_limit: None,
            progress_interval: None,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<(), SolveError> {
        validate_weights(self.weights)?;
        if self.time_limit.is_zero() {
            return Err(SolveError::InvalidOptions(
                "time_limit must be positive".to_string(),
            ));
        }
        if !self.gap_target.is_finite() || self.gap_target < 0.0 {
            return Err(SolveError::InvalidOptions(format!(
                "gap_target must be finite and nonnegative, got {}",
                self.gap_target
            )));
        }
        if self.incumbent_limit == Some(0) {
            return Err(SolveError::InvalidOptions(
                "incumbent_limit must be at least 1".to_string(),
            ));
        }
        if self.node_limit == Some(0) {
            return Err(SolveError::InvalidOptions(
                "node_limit must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

fn validate_weights(weights: [f64; 3]) -> Result<(), SolveError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(SolveError::InvalidOptions(format!(
            "weights must be finite and nonnegative, got {weights:?}"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SolveError::InvalidOptions(format!(
            "weights must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// Search exhausted; the incumbent is optimal.
    Optimal,
    /// Stopped with the requested gap reached.
    FeasibleGapMet,
    /// Stopped by the incumbent limit.
    FeasibleStopped,
    /// Time ran out with an incumbent in hand.
    FeasibleTimeout,
    /// Search exhausted without finding any configuration.
    Infeasible,
    /// Time ran out before any configuration was found.
    NoSolutionTimeout,
}

impl SolveStatus {
    pub fn is_feasible(self) -> bool {
        matches!(
            self,
            SolveStatus::Optimal
                | SolveStatus::FeasibleGapMet
                | SolveStatus::FeasibleStopped
                | SolveStatus::FeasibleTimeout
        )
    }

    /// The same names the wire format uses.
    pub fn slug(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleGapMet => "feasible-gap-met",
            SolveStatus::FeasibleStopped => "feasible-stopped",
            SolveStatus::FeasibleTimeout => "feasible-timeout",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NoSolutionTimeout => "no-solution-timeout",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub incumbent: Option<Configuration>,
    pub objective: Option<f64>,
    /// Proven lower bound on the objective; +inf when the instance is
    /// proven infeasible.
    pub lower_bound: f64,
    /// (objective − lower_bound) / max(|objective|, 1e-9); absent without
    /// an incumbent.
    pub gap: Option<f64>,
    pub nodes_explored: u64,
    pub elapsed: Duration,
}

/// What the leaf and bound evaluations optimize.
#[derive(Clone)]
enum Mode {
    Weighted {
        bounds: NormalizationBounds,
        weights: [f64; 3],
    },
    Single(Component),
}

impl Mode {
    fn evaluate(&self, raw: [f64; 3]) -> f64 {
        match self {
            Mode::Weighted { bounds, weights } => weighted_objective(raw, bounds, *weights),
            Mode::Single(c) => raw[c.index()],
        }
    }

    /// Maps component-wise lower bounds to an objective lower bound;
    /// valid because normalization and clamping are monotone per
    /// component.
    fn bound(&self, raw_lower: [f64; 3]) -> f64 {
        self.evaluate(raw_lower)
    }

    fn trivial_lower_bound(&self) -> f64 {
        match self {
            Mode::Single(Component::NegSimilarity) => -1.0,
            _ => 0.0,
        }
    }
}

enum StopReason {
    Timeout,
    GapMet,
    IncumbentLimit,
}

/// A branching choice for one task: an already-opened worker, or the next
/// unused worker placed at this station.
#[derive(Clone, Copy)]
enum Child {
    Existing(usize),
    Open(usize),
}

struct Search<'a> {
    instance: &'a Instance,
    mode: Mode,
    options: &'a SolveOptions,

    topo: Vec<usize>,
    num_tasks: usize,
    stations: usize,
    workers: usize,
    staff_lo: u32,
    staff_hi: u32,
    cycle_time: u64,
    total_time: u64,
    total_ergo: u64,
    /// Station mates per task in the running configuration; all empty
    /// when the instance carries none.
    mates: Vec<Vec<usize>>,
    inv_mates: Vec<f64>,
    track_similarity: bool,

    task_station: Vec<usize>,
    task_worker: Vec<usize>,
    assigned: Vec<bool>,
    worker_station: Vec<Option<usize>>,
    station_count: Vec<u32>,
    load: Vec<u64>,
    ergo: Vec<u64>,
    internal_count: Vec<u32>,
    external_count: Vec<u32>,
    used: usize,
    /// Per task: mates decided so far to sit at a different station.
    apart: Vec<u32>,

    best: Option<(f64, Configuration)>,
    incumbents_found: u32,
    nodes: u64,
    next_check: u64,
    stack_bounds: Vec<f64>,
    stop: Option<StopReason>,
    lower_bound_at_stop: Option<f64>,
    start: Instant,
    deadline: Instant,
    last_progress: Instant,
    rng: Option<ChaCha8Rng>,
}

impl<'a> Search<'a> {
    fn new(
        instance: &'a Instance,
        mode: Mode,
        options: &'a SolveOptions,
    ) -> Result<Search<'a>, SolveError> {
        let topo = topological_order(&instance.precedence)
            .map_err(|e| SolveError::InvalidInstance(e.to_string()))?;
        let num_tasks = instance.num_tasks();
        if num_tasks == 0 {
            return Err(SolveError::InvalidInstance(
                "instance has no tasks".to_string(),
            ));
        }
        let stations = instance.num_stations as usize;
        let workers = instance.num_workers as usize;
        let (staff_lo, staff_hi) = worker_bounds(instance.num_workers, instance.num_stations);

        let mates: Vec<Vec<usize>> = match &instance.current {
            Some(baseline) => {
                DerivedFlags::from_configuration(&baseline.config, stations).neighbors
            }
            None => vec![Vec::new(); num_tasks],
        };
        let inv_mates = mates
            .iter()
            .map(|m| {
                if m.is_empty() {
                    0.0
                } else {
                    1.0 / m.len() as f64
                }
            })
            .collect();
        let track_similarity = instance.current.is_some();

        let now = Instant::now();
        Ok(Search {
            instance,
            mode,
            options,
            topo,
            num_tasks,
            stations,
            workers,
            staff_lo,
            staff_hi,
            cycle_time: u64::from(instance.cycle_time),
            total_time: instance.total_time(),
            total_ergo: instance.total_ergo(),
            mates,
            inv_mates,
            track_similarity,
            task_station: vec![usize::MAX; num_tasks],
            task_worker: vec![usize::MAX; num_tasks],
            assigned: vec![false; num_tasks],
            worker_station: vec![None; workers],
            station_count: vec![0; stations],
            load: vec![0; workers],
            ergo: vec![0; workers],
            internal_count: vec![0; workers],
            external_count: vec![0; workers],
            used: 0,
            apart: vec![0; num_tasks],
            best: None,
            incumbents_found: 0,
            nodes: 0,
            next_check: 1,
            stack_bounds: Vec::with_capacity(num_tasks + 1),
            stop: None,
            lower_bound_at_stop: None,
            start: now,
            deadline: now + options.time_limit,
            last_progress: now,
            rng: match options.random_seed {
                0 => None,
                seed => Some(ChaCha8Rng::seed_from_u64(seed)),
            },
        })
    }

    /// Seeds the incumbent from the running configuration when it fits
    /// the target pool and passes every constraint at the target cycle
    /// time.
    fn try_warm_start(&mut self) {
        let Some(baseline) = &self.instance.current else {
            return;
        };
        let pool = baseline.config.num_workers();
        if pool > self.workers {
            return;
        }
        let mut embedded = baseline.config.clone();
        embedded.worker_station.resize(self.workers, None);
        let feasible = check_semantic(&embedded, self.instance, self.instance.cycle_time)
            .map(|v| v.is_empty())
            .unwrap_or(false);
        if !feasible {
            return;
        }
        if self.options.require_nonempty_workers {
            let mut carries = vec![false; self.workers];
            for &w in &embedded.task_worker {
                carries[w] = true;
            }
            if carries.iter().any(|c| !c) {
                return;
            }
        }
        let raw = raw_components(self.instance, &embedded)
            .expect("a checked configuration always evaluates");
        let value = self.mode.evaluate(raw);
        self.best = Some((value, embedded));
    }

    /// True when the station is certain to be shared in every completed
    /// descendant: the staffing floor forces two workers everywhere, or
    /// two are already committed (`extra` accounts for a worker about to
    /// be opened there).
    fn surely_shared(&self, station: usize, extra: u32) -> bool {
        self.staff_lo >= 2 || self.station_count[station] + extra >= 2
    }

    /// Would giving this task to this worker keep the single-side rule
    /// satisfiable? `fresh` marks the not-yet-opened worker.
    fn area_compatible(&self, worker: usize, station: usize, task: usize, fresh: bool) -> bool {
        if !self.surely_shared(station, u32::from(fresh)) {
            return true;
        }
        if fresh {
            // The newcomer holds a single task, fine by itself, but
            // committed workers at this station now share it and must
            // already be pure.
            (0..self.used).all(|w| {
                self.worker_station[w] != Some(station)
                    || self.internal_count[w] == 0
                    || self.external_count[w] == 0
            })
        } else {
            match self.instance.tasks[task].area {
                Area::Internal => self.external_count[worker] == 0,
                Area::External => self.internal_count[worker] == 0,
            }
        }
    }

    /// Can unused workers still top every station up to the staffing
    /// floor once one of them opens at `station`?
    fn staffing_feasible_after_open(&self, station: usize) -> bool {
        let mut deficit: u32 = 0;
        for (s, &count) in self.station_count.iter().enumerate() {
            deficit += self
                .staff_lo
                .saturating_sub(count + u32::from(s == station));
        }
        deficit <= (self.workers - self.used - 1) as u32
    }

    fn children_for(&mut self, task: usize, depth: usize) -> Vec<Child> {
        let min_station = self
            .instance
            .precedence
            .preds(task)
            .iter()
            .map(|&p| self.task_station[p])
            .max()
            .unwrap_or(0);
        let time = u64::from(self.instance.tasks[task].time);
        let tasks_after = self.num_tasks - depth - 1;

        let mut children = Vec::new();
        let existing_ok =
            !self.options.require_nonempty_workers || self.workers - self.used <= tasks_after;
        if existing_ok {
            for w in 0..self.used {
                let station = self.worker_station[w].expect("opened workers are placed");
                if station < min_station
                    || self.load[w] + time > self.cycle_time
                    || !self.area_compatible(w, station, task, false)
                {
                    continue;
                }
                children.push(Child::Existing(w));
            }
        }
        let open_ok = self.used < self.workers
            && time <= self.cycle_time
            && (!self.options.require_nonempty_workers
                || self.workers - self.used - 1 <= tasks_after);
        if open_ok {
            for station in min_station..self.stations {
                if self.station_count[station] >= self.staff_hi
                    || !self.staffing_feasible_after_open(station)
                    || !self.area_compatible(self.used, station, task, true)
                {
                    continue;
                }
                children.push(Child::Open(station));
            }
        }
        if let Some(rng) = &mut self.rng {
            children.shuffle(rng);
        }
        children
    }

    fn apply(&mut self, task: usize, child: Child) {
        let (worker, station) = match child {
            Child::Existing(w) => (w, self.worker_station[w].expect("placed")),
            Child::Open(s) => {
                let w = self.used;
                self.worker_station[w] = Some(s);
                self.station_count[s] += 1;
                self.used += 1;
                (w, s)
            }
        };
        self.task_worker[task] = worker;
        self.task_station[task] = station;
        self.load[worker] += u64::from(self.instance.tasks[task].time);
        self.ergo[worker] += u64::from(self.instance.tasks[task].ergo);
        match self.instance.tasks[task].area {
            Area::Internal => self.internal_count[worker] += 1,
            Area::External => self.external_count[worker] += 1,
        }
        if self.track_similarity {
            for m in 0..self.mates[task].len() {
                let mate = self.mates[task][m];
                if self.assigned[mate] && self.task_station[mate] != station {
                    self.apart[task] += 1;
                    self.apart[mate] += 1;
                }
            }
        }
        self.assigned[task] = true;
    }

    fn undo(&mut self, task: usize, child: Child) {
        self.assigned[task] = false;
        if self.track_similarity {
            let station = self.task_station[task];
            for m in 0..self.mates[task].len() {
                let mate = self.mates[task][m];
                if self.assigned[mate] && self.task_station[mate] != station {
                    self.apart[task] -= 1;
                    self.apart[mate] -= 1;
                }
            }
        }
        let worker = self.task_worker[task];
        self.load[worker] -= u64::from(self.instance.tasks[task].time);
        self.ergo[worker] -= u64::from(self.instance.tasks[task].ergo);
        match self.instance.tasks[task].area {
            Area::Internal => self.internal_count[worker] -= 1,
            Area::External => self.external_count[worker] -= 1,
        }
        if let Child::Open(s) = child {
            self.worker_station[worker] = None;
            self.station_count[s] -= 1;
            self.used -= 1;
        }
        self.task_worker[task] = usize::MAX;
        self.task_station[task] = usize::MAX;
    }

    /// Mean similarity the best descendant leaf could still reach:
    /// undecided mate pairs count as kept together.
    fn similarity_upper_bound_sum(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.num_tasks {
            let mates = self.mates[i].len() as u32;
            if mates == 0 {
                sum += 1.0;
            } else {
                sum += f64::from(mates - self.apart[i]) * self.inv_mates[i];
            }
        }
        sum
    }

    /// Fewest workers any leaf below this node can end up counting.
    fn min_placed_workers(&self) -> u64 {
        if self.options.require_nonempty_workers {
            self.workers as u64
        } else {
            (self.stations as u64 * u64::from(self.staff_lo))
                .max(self.used as u64)
                .max(1)
        }
    }

    /// Component-wise lower bounds over every leaf below the current
    /// node, combined by the mode.
    fn node_bound(&self) -> f64 {
        let mut raw = [0.0f64; 3];
        if self.track_similarity {
            raw[0] = -(self.similarity_upper_bound_sum() / self.num_tasks as f64);
        }
        let min_placed = self.min_placed_workers();

        let committed_load_max = self.load[..self.used].iter().copied().max().unwrap_or(0);
        let load_max_floor = committed_load_max.max(self.total_time.div_ceil(self.workers as u64));
        let load_min_cap = self.total_time / min_placed;
        raw[1] = load_max_floor.saturating_sub(load_min_cap) as f64;

        let committed_ergo_max = self.ergo[..self.used].iter().copied().max().unwrap_or(0);
        let ergo_max_floor = committed_ergo_max.max(self.total_ergo.div_ceil(self.workers as u64));
        let ergo_min_cap = self.total_ergo / min_placed;
        raw[2] = ergo_max_floor.saturating_sub(ergo_min_cap) as f64;

        self.mode.bound(raw)
    }

    /// Fills stations up to the staffing floor with idle workers, lowest
    /// ids to lowest stations.
    fn completed_configuration(&self) -> Configuration {
        let mut worker_station = self.worker_station.clone();
        let mut next = self.used;
        for s in 0..self.stations {
            let mut count = self.station_count[s];
            while count < self.staff_lo {
                worker_station[next] = Some(s);
                next += 1;
                count += 1;
            }
        }
        Configuration {
            task_station: self.task_station.clone(),
            task_worker: self.task_worker.clone(),
            worker_station,
        }
    }

    fn leaf(&mut self) {
        let idle_placed: u32 = self
            .station_count
            .iter()
            .map(|&c| self.staff_lo.saturating_sub(c))
            .sum();

        let mut raw = [0.0f64; 3];
        if self.track_similarity {
            // All mate pairs are decided at a leaf, so the bound sum is
            // the exact similarity sum.
            raw[0] = -(self.similarity_upper_bound_sum() / self.num_tasks as f64);
        }
        let load_max = self.load[..self.used].iter().copied().max().unwrap_or(0);
        let load_min = if idle_placed > 0 {
            0
        } else {
            self.load[..self.used].iter().copied().min().unwrap_or(0)
        };
        raw[1] = (load_max - load_min) as f64;
        let ergo_max = self.ergo[..self.used].iter().copied().max().unwrap_or(0);
        let ergo_min = if idle_placed > 0 {
            0
        } else {
            self.ergo[..self.used].iter().copied().min().unwrap_or(0)
        };
        raw[2] = (ergo_max - ergo_min) as f64;

        let value = self.mode.evaluate(raw);
        let improved = match &self.best {
            None => true,
            Some((incumbent, _)) => value < incumbent - TIE_EPS,
        };
        if !improved {
            return;
        }
        let config = self.completed_configuration();
        let violations = check_semantic(&config, self.instance, self.instance.cycle_time)
            .expect("search configurations are well shaped");
        assert!(
            violations.is_empty(),
            "search produced an invalid incumbent:\n{violations}"
        );
        self.best = Some((value, config));
        self.incumbents_found += 1;
        self.emit_progress(false);
        if let Some(limit) = self.options.incumbent_limit {
            if self.incumbents_found >= limit {
                self.set_stop(StopReason::IncumbentLimit);
                return;
            }
        }
        self.maybe_gap_stop();
    }

    fn current_lower_bound(&self) -> f64 {
        let stack_min = self
            .stack_bounds
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let base = if stack_min.is_finite() {
            stack_min
        } else {
            self.mode.trivial_lower_bound()
        };
        match &self.best {
            Some((incumbent, _)) => base.min(*incumbent),
            None => base,
        }
    }

    fn set_stop(&mut self, reason: StopReason) {
        self.lower_bound_at_stop = Some(self.current_lower_bound());
        self.stop = Some(reason);
    }

    fn maybe_gap_stop(&mut self) {
        if self.options.gap_target <= 0.0 || self.stop.is_some() {
            return;
        }
        let Some((incumbent, _)) = &self.best else {
            return;
        };
        let gap = relative_gap(*incumbent, self.current_lower_bound());
        if gap <= self.options.gap_target {
            self.set_stop(StopReason::GapMet);
        }
    }

    fn checkpoint(&mut self) {
        self.next_check = self.nodes + CHECK_INTERVAL;
        if Instant::now() >= self.deadline {
            self.set_stop(StopReason::Timeout);
            return;
        }
        if let Some(limit) = self.options.node_limit {
            if self.nodes >= limit {
                self.set_stop(StopReason::Timeout);
                return;
            }
        }
        self.maybe_gap_stop();
        self.emit_progress(true);
    }

    fn emit_progress(&mut self, timed: bool) {
        let Some(interval) = self.options.progress_interval else {
            return;
        };
        let now = Instant::now();
        if timed && now.duration_since(self.last_progress) < interval {
            return;
        }
        self.last_progress = now;
        let best = match &self.best {
            Some((v, _)) => format!("{v:.6}"),
            None => "-".to_string(),
        };
        eprintln!(
            "[solve] t={:.1}s nodes={} best={} lb={:.6}",
            self.start.elapsed().as_secs_f64(),
            self.nodes,
            best,
            self.current_lower_bound()
        );
    }

    fn branch(&mut self, depth: usize) {
        if self.stop.is_some() {
            return;
        }
        self.nodes += 1;
        if self.nodes >= self.next_check {
            self.checkpoint();
            if self.stop.is_some() {
                return;
            }
        }
        if depth == self.num_tasks {
            self.leaf();
            return;
        }
        let bound = self.node_bound();
        if let Some((incumbent, _)) = &self.best {
            if bound >= incumbent - TIE_EPS {
                return;
            }
        }
        self.stack_bounds.push(bound);
        let task = self.topo[depth];
        let children = self.children_for(task, depth);
        for child in children {
            self.apply(task, child);
            self.branch(depth + 1);
            self.undo(task, child);
            if self.stop.is_some() {
                break;
            }
        }
        self.stack_bounds.pop();
    }

    fn finish(self) -> SolveResult {
        let elapsed = self.start.elapsed();
        let nodes_explored = self.nodes;
        match self.stop {
            None => match self.best {
                Some((value, config)) => SolveResult {
                    status: SolveStatus::Optimal,
                    incumbent: Some(config),
                    objective: Some(value),
                    lower_bound: value,
                    gap: Some(0.0),
                    nodes_explored,
                    elapsed,
                },
                None => SolveResult {
                    status: SolveStatus::Infeasible,
                    incumbent: None,
                    objective: None,
                    lower_bound: f64::INFINITY,
                    gap: None,
                    nodes_explored,
                    elapsed,
                },
            },
            Some(reason) => {
                let lower_bound = self
                    .lower_bound_at_stop
                    .unwrap_or_else(|| self.mode.trivial_lower_bound());
                let status = match (&reason, &self.best) {
                    (StopReason::Timeout, Some(_)) => SolveStatus::FeasibleTimeout,
                    (StopReason::Timeout, None) => SolveStatus::NoSolutionTimeout,
                    (StopReason::GapMet, _) => SolveStatus::FeasibleGapMet,
                    (StopReason::IncumbentLimit, _) => SolveStatus::FeasibleStopped,
                };
                let (incumbent, objective) = match self.best {
                    Some((value, config)) => (Some(config), Some(value)),
                    None => (None, None),
                };
                let gap = objective.map(|v| relative_gap(v, lower_bound));
                SolveResult {
                    status,
                    incumbent,
                    objective,
                    lower_bound,
                    gap,
                    nodes_explored,
                    elapsed,
                }
            }
        }
    }
}

fn relative_gap(objective: f64, lower_bound: f64) -> f64 {
    ((objective - lower_bound) / objective.abs().max(1e-9)).max(0.0)
}

fn run_search(
    instance: &Instance,
    mode: Mode,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    options.validate()?;
    instance
        .validate()
        .map_err(|e| SolveError::InvalidInstance(e.to_string()))?;
    let mut search = Search::new(instance, mode, options)?;
    search.try_warm_start();
    // A pool that cannot hold the total work never reaches a leaf; skip
    // the tree walk.
    if search.total_time > search.cycle_time * search.workers as u64 && search.best.is_none() {
        return Ok(SolveResult {
            status: SolveStatus::Infeasible,
            incumbent: None,
            objective: None,
            lower_bound: f64::INFINITY,
            gap: None,
            nodes_explored: 0,
            elapsed: search.start.elapsed(),
        });
    }
    search.branch(0);
    Ok(search.finish())
}

/// Minimizes the weighted normalized objective under `bounds` and the
/// weights in `options`.
pub fn solve(
    instance: &Instance,
    bounds: &NormalizationBounds,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    run_search(
        instance,
        Mode::Weighted {
            bounds: *bounds,
            weights: options.weights,
        },
        options,
    )
}

/// Minimizes one raw component (weights in `options` are ignored).
pub fn solve_single_objective(
    instance: &Instance,
    component: Component,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    run_search(instance, Mode::Single(component), options)
}

/// Builds normalization bounds from one exact run per component: each
/// utopia entry is that run's objective, each nadir entry the worst value
/// the component takes across all runs' incumbents. The similarity slot
/// stays degenerate (0, 0) when the instance has no running configuration
/// to compare against.
///
/// Bounding runs must finish: the stop-early knobs (gap target, incumbent
/// cap) are ignored here, and a run cut off by the time or node limit is
/// an error rather than a loose bound.
pub fn compute_normalization(
    instance: &Instance,
    options: &SolveOptions,
) -> Result<NormalizationBounds, SolveError> {
    let components: &[Component] = if instance.current.is_some() {
        &Component::ALL
    } else {
        &[Component::LoadRange, Component::ErgoRange]
    };
    let mut bounding = options.clone();
    bounding.gap_target = 0.0;
    bounding.incumbent_limit = None;
    let mut utopia = [0.0f64; 3];
    let mut nadir = [0.0f64; 3];
    let mut observed: Vec<[f64; 3]> = Vec::new();
    for &component in components {
        let result = solve_single_objective(instance, component, &bounding)?;
        let Some(incumbent) = &result.incumbent else {
            return Err(match result.status {
                SolveStatus::Infeasible => SolveError::Infeasible(format!(
                    "no configuration at cycle time {}",
                    instance.cycle_time
                )),
                _ => SolveError::Inconclusive(format!(
                    "time limit reached before any configuration was found \
                     while bounding {component:?}"
                )),
            });
        };
        if result.status != SolveStatus::Optimal {
            return Err(SolveError::Inconclusive(format!(
                "bounding run for {component:?} stopped at {:?} with the \
                 minimum unproven",
                result.status
            )));
        }
        utopia[component.index()] = result.objective.expect("feasible runs report an objective");
        observed.push(raw_components(instance, incumbent).expect("incumbents evaluate cleanly"));
    }
    for &component in components {
        let k = component.index();
        nadir[k] = observed
            .iter()
            .map(|raw| raw[k])
            .fold(f64::NEG_INFINITY, f64::max)
            .max(utopia[k]);
    }
    Ok(NormalizationBounds { utopia, nadir })
}

/// Node budget for each feasibility probe below. Counts whose
/// feasibility cannot be decided within it (the tightest counts pose
/// perfect-packing questions) are passed over for the next one.
const FEASIBILITY_NODE_BUDGET: u64 = 200_000;

/// Smallest workforce found to admit a configuration at the instance's
/// cycle time, scanning upward from max(stations, ⌈total time / cycle
/// time⌉). Each probe stops at its first incumbent, with a node budget so
/// the scan stays deterministic; a count left undecided by the budget is
/// skipped. The scan is capped at max(start, number of tasks).
pub fn find_min_workers(instance: &Instance, options: &SolveOptions) -> Result<u32, SolveError> {
    let ct = u64::from(instance.cycle_time);
    if ct == 0 {
        return Err(SolveError::InvalidInstance(
            "cycle_time must be at least 1".to_string(),
        ));
    }
    let start = (instance.total_time().div_ceil(ct) as u32)
        .max(instance.num_stations)
        .max(1);
    let cap = start.max(instance.num_tasks() as u32);
    let mut probe_options = options.clone();
    probe_options.incumbent_limit = Some(1);
    probe_options.node_limit = Some(
        options
            .node_limit
            .map_or(FEASIBILITY_NODE_BUDGET, |l| l.min(FEASIBILITY_NODE_BUDGET)),
    );
    probe_options.progress_interval = None;
    let mut undecided = Vec::new();
    for workers in start..=cap {
        let candidate = instance.with_workers(workers);
        let result = solve_single_objective(&candidate, Component::LoadRange, &probe_options)?;
        if result.status.is_feasible() {
            return Ok(workers);
        }
        if result.status == SolveStatus::NoSolutionTimeout {
            undecided.push(workers);
        }
    }
    if undecided.is_empty() {
        Err(SolveError::Infeasible(format!(
            "no workforce between {start} and {cap} admits a configuration at cycle time {}",
            instance.cycle_time
        )))
    } else {
        Err(SolveError::Inconclusive(format!(
            "feasibility stayed undecided for workforce sizes {undecided:?} at cycle time {}",
            instance.cycle_time
        )))
    }
}

/// The optimum found by brute force, with every configuration attaining
/// it (within the tie tolerance).
#[derive(Debug, Clone)]
pub struct OracleOptimum {
    pub value: f64,
    pub optima: Vec<Configuration>,
}

/// Exhaustively evaluates every feasible configuration of a small
/// instance and returns the minimum weighted normalized objective. Shares
/// no search logic with [`solve`], so the two can cross-check each other.
pub fn enumerate_optimal(
    instance: &Instance,
    bounds: &NormalizationBounds,
    weights: [f64; 3],
) -> Result<OracleOptimum, SolveError> {
    validate_weights(weights)?;
    if instance.num_tasks() > ORACLE_MAX_TASKS
        || instance.num_stations > ORACLE_MAX_STATIONS
        || instance.num_workers > ORACLE_MAX_WORKERS
    {
        return Err(SolveError::GuardExceeded(format!(
            "the oracle accepts at most {ORACLE_MAX_TASKS} tasks, \
             {ORACLE_MAX_STATIONS} stations, {ORACLE_MAX_WORKERS} workers; \
             instance has {}, {}, {}",
            instance.num_tasks(),
            instance.num_stations,
            instance.num_workers
        )));
    }
    let mut best: Option<f64> = None;
    let mut optima: Vec<Configuration> = Vec::new();
    for_each_consistent(instance, instance.cycle_time, |config| {
        let feasible = check_semantic(config, instance, instance.cycle_time)
            .map(|v| v.is_empty())
            .unwrap_or(false);
        if !feasible {
            return;
        }
        let raw = raw_components(instance, config).expect("feasible configurations evaluate");
        let value = weighted_objective(raw, bounds, weights);
        match best {
            None => {
                best = Some(value);
                optima.push(config.clone());
            }
            Some(b) if value < b - TIE_EPS => {
                best = Some(value);
                optima.clear();
                optima.push(config.clone());
            }
            Some(b) if value <= b + TIE_EPS => {
                optima.push(config.clone());
            }
            Some(_) => {}
        }
    })
    .map_err(|e| SolveError::InvalidInstance(e.to_string()))?;
    match best {
        Some(value) => Ok(OracleOptimum { value, optima }),
        None => Err(SolveError::Infeasible(format!(
            "no configuration at cycle time {}",
            instance.cycle_time
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Baseline, PrecedenceGraph, Task};
    use crate::metrics::mean_similarity;
    use rand::Rng;

    fn task(time: u32, ergo: u32, area: Area) -> Task {
        Task { time, ergo, area }
    }

    fn bare_instance(
        cycle_time: u32,
        num_stations: u32,
        num_workers: u32,
        tasks: Vec<Task>,
        preds: Vec<Vec<usize>>,
    ) -> Instance {
        Instance {
            cycle_time,
            num_stations,
            num_workers,
            tasks,
            precedence: PrecedenceGraph::new(preds),
            current: None,
        }
    }

    #[test]
    fn splits_load_across_two_workers() {
        let inst = bare_instance(
            7,
            1,
            2,
            vec![task(3, 2, Area::External), task(4, 2, Area::External)],
            vec![vec![], vec![]],
        );
        let result =
            solve_single_objective(&inst, Component::LoadRange, &SolveOptions::default()).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_eq!(result.objective, Some(1.0));
        assert_eq!(result.gap, Some(0.0));
    }

    /// Three tasks, one shared station, two workers: the component runs
    /// land on different argmins, so the bounds show a real trade-off.
    fn trade_off_instance() -> Instance {
        bare_instance(
            12,
            1,
            2,
            vec![
                task(3, 5, Area::External),
                task(4, 1, Area::External),
                task(5, 2, Area::External),
            ],
            vec![vec![], vec![], vec![]],
        )
    }

    #[test]
    fn normalization_bounds_come_from_component_runs() {
        let inst = trade_off_instance();
        let bounds = compute_normalization(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(bounds.utopia, [0.0, 2.0, 2.0]);
        assert_eq!(bounds.nadir, [0.0, 6.0, 4.0]);
    }

    #[test]
    fn bounding_runs_ignore_stop_early_knobs_and_must_finish() {
        let mut inst = bare_instance(
            10,
            2,
            2,
            vec![
                task(4, 2, Area::External),
                task(3, 3, Area::Internal),
                task(5, 1, Area::External),
            ],
            vec![vec![], vec![0], vec![]],
        );
        inst.current = Some(Baseline {
            cycle_time: 10,
            config: Configuration {
                task_station: vec![0, 1, 0],
                task_worker: vec![0, 1, 0],
                worker_station: vec![Some(0), Some(1)],
            },
        });
        let early = SolveOptions {
            incumbent_limit: Some(1),
            gap_target: 1.0,
            ..SolveOptions::default()
        };
        let bounds = compute_normalization(&inst, &early).unwrap();
        assert_eq!(bounds.utopia[0], -1.0);

        let starved = SolveOptions {
            node_limit: Some(1),
            ..SolveOptions::default()
        };
        match compute_normalization(&inst, &starved) {
            Err(SolveError::Inconclusive(msg)) => {
                assert!(msg.contains("minimum unproven"), "got: {msg}")
            }
            other => panic!("expected an inconclusive bounding run, got {other:?}"),
        }
    }

    #[test]
    fn weighted_solve_matches_hand_computed_optimum() {
        let inst = trade_off_instance();
        let options = SolveOptions::default();
        let bounds = compute_normalization(&inst, &options).unwrap();
        let result = solve(&inst, &bounds, &options).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        let objective = result.objective.unwrap();
        assert!(
            (objective - 1.0 / 3.0).abs() < 1e-9,
            "objective {objective}"
        );
        let oracle = enumerate_optimal(&inst, &bounds, options.weights).unwrap();
        assert!((oracle.value - objective).abs() < 1e-9);
    }

    #[test]
    fn keeping_the_running_configuration_scores_full_similarity() {
        let mut inst = bare_instance(
            10,
            2,
            2,
            vec![
                task(4, 2, Area::External),
                task(3, 3, Area::Internal),
                task(5, 1, Area::External),
            ],
            vec![vec![], vec![0], vec![]],
        );
        inst.current = Some(Baseline {
            cycle_time: 10,
            config: Configuration {
                task_station: vec![0, 1, 0],
                task_worker: vec![0, 1, 0],
                worker_station: vec![Some(0), Some(1)],
            },
        });
        let result =
            solve_single_objective(&inst, Component::NegSimilarity, &SolveOptions::default())
                .unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_eq!(result.objective, Some(-1.0));
        let incumbent = result.incumbent.unwrap();
        let msf = mean_similarity(&inst.current.as_ref().unwrap().config, &incumbent).unwrap();
        assert_eq!(msf, 1.0);
    }

    fn ten_task_instance() -> Instance {
        bare_instance(
            20,
            2,
            3,
            (0..10)
                .map(|i| task(2 + (i % 3), 1 + (i % 5), Area::External))
                .collect(),
            (0..10)
                .map(|i| if i >= 5 { vec![i - 5] } else { vec![] })
                .collect(),
        )
    }

    #[test]
    fn incumbent_limit_stops_after_first_leaf() {
        let inst = ten_task_instance();
        let options = SolveOptions {
            incumbent_limit: Some(1),
            ..SolveOptions::default()
        };
        let result = solve_single_objective(&inst, Component::LoadRange, &options).unwrap();
        assert_eq!(result.status, SolveStatus::FeasibleStopped);
        assert!(result.incumbent.is_some());
        assert!(result.gap.unwrap() > 0.0);
    }

    #[test]
    fn expired_clock_reports_no_solution() {
        let inst = ten_task_instance();
        let options = SolveOptions {
            time_limit: Duration::from_nanos(1),
            ..SolveOptions::default()
        };
        let result = solve_single_objective(&inst, Component::LoadRange, &options).unwrap();
        assert_eq!(result.status, SolveStatus::NoSolutionTimeout);
        assert_eq!(result.nodes_explored, 1);
        assert!(result.incumbent.is_none());
    }

    #[test]
    fn node_budget_cuts_deterministically() {
        let inst = ten_task_instance();
        let options = SolveOptions {
            node_limit: Some(1),
            ..SolveOptions::default()
        };
        let result = solve_single_objective(&inst, Component::LoadRange, &options).unwrap();
        assert_eq!(result.status, SolveStatus::NoSolutionTimeout);
        assert_eq!(result.nodes_explored, 1);
    }

    #[test]
    fn gap_target_of_one_accepts_the_first_incumbent() {
        let inst = ten_task_instance();
        let options = SolveOptions {
            gap_target: 1.0,
            ..SolveOptions::default()
        };
        let result = solve_single_objective(&inst, Component::LoadRange, &options).unwrap();
        assert_eq!(result.status, SolveStatus::FeasibleGapMet);
        assert!(result.gap.unwrap() <= 1.0);
    }

    #[test]
    fn detects_infeasible_instances() {
        let inst = bare_instance(8, 1, 1, vec![task(9, 3, Area::External)], vec![vec![]]);
        let result =
            solve_single_objective(&inst, Component::LoadRange, &SolveOptions::default()).unwrap();
        assert_eq!(result.status, SolveStatus::Infeasible);
        assert!(result.lower_bound.is_infinite());
        assert!(matches!(
            find_min_workers(&inst, &SolveOptions::default()),
            Err(SolveError::Infeasible(_))
        ));
    }

    #[test]
    fn sizes_the_workforce_from_total_time() {
        let inst = bare_instance(
            10,
            2,
            2,
            (0..4).map(|_| task(5, 2, Area::External)).collect(),
            vec![vec![]; 4],
        );
        assert_eq!(
            find_min_workers(&inst, &SolveOptions::default()).unwrap(),
            2
        );

        let tight = bare_instance(
            7,
            1,
            1,
            (0..3).map(|_| task(7, 2, Area::External)).collect(),
            vec![vec![]; 3],
        );
        assert_eq!(
            find_min_workers(&tight, &SolveOptions::default()).unwrap(),
            3
        );
    }

    #[test]
    fn nonempty_worker_rule_can_make_instances_infeasible() {
        let inst = bare_instance(
            10,
            1,
            3,
            vec![task(3, 2, Area::External), task(4, 2, Area::External)],
            vec![vec![], vec![]],
        );
        let strict = SolveOptions {
            require_nonempty_workers: true,
            ..SolveOptions::default()
        };
        let result = solve_single_objective(&inst, Component::LoadRange, &strict).unwrap();
        assert_eq!(result.status, SolveStatus::Infeasible);
        let relaxed =
            solve_single_objective(&inst, Component::LoadRange, &SolveOptions::default()).unwrap();
        assert_eq!(relaxed.status, SolveStatus::Optimal);
    }

    #[test]
    fn shuffled_exploration_keeps_the_optimal_value() {
        let inst = ten_task_instance();
        let canonical =
            solve_single_objective(&inst, Component::LoadRange, &SolveOptions::default()).unwrap();
        let seeded = SolveOptions {
            random_seed: 7,
            ..SolveOptions::default()
        };
        let first = solve_single_objective(&inst, Component::LoadRange, &seeded).unwrap();
        let second = solve_single_objective(&inst, Component::LoadRange, &seeded).unwrap();
        assert_eq!(canonical.objective, first.objective);
        assert_eq!(first.objective, second.objective);
        assert_eq!(first.nodes_explored, second.nodes_explored);
    }

    /// Random small instances, solved both by search and by brute force.
    #[test]
    fn search_matches_the_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let mut feasible_seen = 0;
        for round in 0..12 {
            let num_tasks = rng.gen_range(3..=6);
            let num_stations = rng.gen_range(1..=2u32);
            let num_workers = rng.gen_range(num_stations..=3u32);
            let preds: Vec<Vec<usize>> = (0..num_tasks)
                .map(|j| {
                    if j > 0 && rng.gen_bool(0.4) {
                        vec![rng.gen_range(0..j)]
                    } else {
                        Vec::new()
                    }
                })
                .collect();
            let tasks: Vec<Task> = (0..num_tasks)
                .map(|_| {
                    task(
                        rng.gen_range(1..=7),
                        rng.gen_range(1..=5),
                        if rng.gen_bool(0.5) {
                            Area::Internal
                        } else {
                            Area::External
                        },
                    )
                })
                .collect();
            let mut inst = bare_instance(
                rng.gen_range(8..=12),
                num_stations,
                num_workers,
                tasks,
                preds,
            );

            // Attach a running configuration when one exists, so the
            // similarity component participates too.
            let probe = SolveOptions {
                incumbent_limit: Some(1),
                ..SolveOptions::default()
            };
            if let Ok(first) = solve_single_objective(&inst, Component::LoadRange, &probe) {
                if let Some(config) = first.incumbent {
                    inst.current = Some(Baseline {
                        cycle_time: inst.cycle_time,
                        config,
                    });
                }
            }

            let options = SolveOptions::default();
            let bounds = match compute_normalization(&inst, &options) {
                Ok(b) => b,
                Err(SolveError::Infeasible(_)) => continue,
                Err(e) => panic!("round {round}: {e}"),
            };
            feasible_seen += 1;
            let result = solve(&inst, &bounds, &options).unwrap();
            assert_eq!(result.status, SolveStatus::Optimal, "round {round}");
            let oracle = enumerate_optimal(&inst, &bounds, options.weights).unwrap();
            let solved = result.objective.unwrap();
            assert!(
                (solved - oracle.value).abs() <= 1e-9,
                "round {round}: search {solved}, oracle {}",
                oracle.value
            );
        }
        assert!(feasible_seen >= 6, "only {feasible_seen} feasible rounds");
    }

    #[test]
    fn oracle_guard_rejects_large_instances() {
        let inst = bare_instance(
            20,
            2,
            3,
            (0..9).map(|_| task(2, 2, Area::External)).collect(),
            vec![vec![]; 9],
        );
        assert!(matches!(
            enumerate_optimal(&inst, &NormalizationBounds::degenerate(), [1.0 / 3.0; 3]),
            Err(SolveError::GuardExceeded(_))
        ));
    }

    #[test]
    fn rejects_bad_options() {
        let inst = trade_off_instance();
        let negative = SolveOptions {
            weights: [-0.5, 1.0, 0.5],
            ..SolveOptions::default()
        };
        assert!(matches!(
            solve_single_objective(&inst, Component::LoadRange, &negative),
            Err(SolveError::InvalidOptions(_))
        ));
        let unnormalized = SolveOptions {
            weights: [0.5, 0.5, 0.5],
            ..SolveOptions::default()
        };
        assert!(matches!(
            solve_single_objective(&inst, Component::LoadRange, &unnormalized),
            Err(SolveError::InvalidOptions(_))
        ));
    }
}
