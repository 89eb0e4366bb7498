//! Scores for candidate line configurations.
//!
//! Three raw objective components are tracked: the negated mean similarity
//! to the running configuration (so that all components minimize), the
//! workload gap between the busiest and idlest placed worker, and the same
//! gap for ergonomic burden. A weighted sum over Nadir–Utopia normalized
//! components folds them into one number; dispersion statistics (range over
//! mean, coefficient of variation) serve reporting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Configuration, Instance};

/// One raw objective component, in the order they appear in weight and
/// bound triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    /// −(mean similarity): minimizing it preserves station mates.
    NegSimilarity,
    /// Busiest minus idlest workload among placed workers.
    LoadRange,
    /// Busiest minus idlest ergonomic burden among placed workers.
    ErgoRange,
}

impl Component {
    pub const ALL: [Component; 3] = [
        Component::NegSimilarity,
        Component::LoadRange,
        Component::ErgoRange,
    ];

    pub fn index(self) -> usize {
        match self {
            Component::NegSimilarity => 0,
            Component::LoadRange => 1,
            Component::ErgoRange => 2,
        }
    }
}

/// Per-component best (utopia) and worst (nadir) values used to map raw
/// components onto comparable [0, 1] scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub utopia: [f64; 3],
    pub nadir: [f64; 3],
}

impl NormalizationBounds {
    /// Bounds under which every component contributes 0; useful when a
    /// component is weighted 0 or no scale is known yet.
    pub fn degenerate() -> NormalizationBounds {
        NormalizationBounds {
            utopia: [0.0; 3],
            nadir: [0.0; 3],
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("configurations disagree on task count: {0} vs {1}")]
    TaskCountMismatch(usize, usize),
    #[error("task {0} does not exist")]
    UnknownTask(usize),
    #[error("configuration covers {got} tasks, instance has {expected}")]
    WrongInstance { expected: usize, got: usize },
    #[error("no worker is placed at any station")]
    NoCountedWorkers,
    #[error("value list is empty")]
    EmptyValues,
    #[error("mean is not positive")]
    NonPositiveMean,
}

fn station_mates(config: &Configuration, task: usize) -> Vec<usize> {
    let home = config.task_station[task];
    config
        .task_station
        .iter()
        .enumerate()
        .filter(|&(j, &s)| j != task && s == home)
        .map(|(j, _)| j)
        .collect()
}

/// Fraction of `task`'s current station mates it keeps in `proposed`.
/// A task that currently works alone scores 1: it has nobody to lose.
pub fn similarity_factor(
    task: usize,
    current: &Configuration,
    proposed: &Configuration,
) -> Result<f64, MetricsError> {
    let n = current.num_tasks();
    if proposed.num_tasks() != n {
        return Err(MetricsError::TaskCountMismatch(n, proposed.num_tasks()));
    }
    if task >= n {
        return Err(MetricsError::UnknownTask(task + 1));
    }
    let before = station_mates(current, task);
    if before.is_empty() {
        return Ok(1.0);
    }
    let after_station = proposed.task_station[task];
    let kept = before
        .iter()
        .filter(|&&j| proposed.task_station[j] == after_station)
        .count();
    Ok(kept as f64 / before.len() as f64)
}

/// Mean similarity factor over all tasks.
pub fn mean_similarity(
    current: &Configuration,
    proposed: &Configuration,
) -> Result<f64, MetricsError> {
    let n = current.num_tasks();
    if n == 0 {
        return Err(MetricsError::EmptyValues);
    }
    let mut sum = 0.0;
    for task in 0..n {
        sum += similarity_factor(task, current, proposed)?;
    }
    Ok(sum / n as f64)
}

/// Per-worker workload and ergonomic burden, plus which workers count
/// toward spread metrics (exactly those placed at a station; a placed
/// worker with no tasks counts with load 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerLoads {
    pub time: Vec<u64>,
    pub ergo: Vec<u64>,
    pub counted: Vec<bool>,
}

impl WorkerLoads {
    pub fn counted_time(&self) -> Vec<f64> {
        self.filtered(&self.time)
    }

    pub fn counted_ergo(&self) -> Vec<f64> {
        self.filtered(&self.ergo)
    }

    fn filtered(&self, values: &[u64]) -> Vec<f64> {
        values
            .iter()
            .zip(&self.counted)
            .filter(|&(_, &c)| c)
            .map(|(&v, _)| v as f64)
            .collect()
    }
}

pub fn worker_loads(
    proposed: &Configuration,
    instance: &Instance,
) -> Result<WorkerLoads, MetricsError> {
    let n = instance.num_tasks();
    if proposed.num_tasks() != n {
        return Err(MetricsError::WrongInstance {
            expected: n,
            got: proposed.num_tasks(),
        });
    }
    let workers = proposed.num_workers();
    let mut time = vec![0u64; workers];
    let mut ergo = vec![0u64; workers];
    for (i, task) in instance.tasks.iter().enumerate() {
        let w = proposed.task_worker[i];
        if w >= workers {
            return Err(MetricsError::UnknownTask(i + 1));
        }
        time[w] += u64::from(task.time);
        ergo[w] += u64::from(task.ergo);
    }
    let counted = proposed
        .worker_station
        .iter()
        .map(Option::is_some)
        .collect();
    Ok(WorkerLoads {
        time,
        ergo,
        counted,
    })
}

/// Max-minus-min workload and ergonomic burden over counted workers.
pub fn load_ranges(loads: &WorkerLoads) -> Result<(u64, u64), MetricsError> {
    let range = |values: &[u64]| -> Option<u64> {
        let picked: Vec<u64> = values
            .iter()
            .zip(&loads.counted)
            .filter(|&(_, &c)| c)
            .map(|(&v, _)| v)
            .collect();
        let max = picked.iter().max()?;
        let min = picked.iter().min()?;
        Some(max - min)
    };
    match (range(&loads.time), range(&loads.ergo)) {
        (Some(dl), Some(dh)) => Ok((dl, dh)),
        _ => Err(MetricsError::NoCountedWorkers),
    }
}

/// (max − min) / mean. Scale-free: doubling every value leaves it fixed.
pub fn normalized_range(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyValues);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean <= 0.0 {
        return Err(MetricsError::NonPositiveMean);
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max - min) / mean)
}

/// Population standard deviation over mean.
pub fn coefficient_of_variation(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyValues);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(MetricsError::NonPositiveMean);
    }
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(variance.sqrt() / mean)
}

/// Weighted sum of normalized components.
///
/// Each component maps to (f − utopia) / (nadir − utopia), clamped into
/// [0, 1] so values outside the observed bounds cannot dominate; a
/// component with nadir = utopia (no spread to normalize against)
/// contributes 0. Weights are assumed nonnegative with sum 1.
pub fn weighted_objective(
    components: [f64; 3],
    bounds: &NormalizationBounds,
    weights: [f64; 3],
) -> f64 {
    let mut total = 0.0;
    for k in 0..3 {
        let span = bounds.nadir[k] - bounds.utopia[k];
        if span <= 0.0 {
            continue;
        }
        let normalized = ((components[k] - bounds.utopia[k]) / span).clamp(0.0, 1.0);
        total += weights[k] * normalized;
    }
    total
}

/// Raw component triple for a configuration:
/// [−mean similarity, workload range, ergonomic range].
///
/// With no running configuration to compare against, the similarity slot
/// is 0; callers must weight it 0 in that case.
pub fn raw_components(
    instance: &Instance,
    proposed: &Configuration,
) -> Result<[f64; 3], MetricsError> {
    let neg_msf = match &instance.current {
        Some(baseline) => -mean_similarity(&baseline.config, proposed)?,
        None => 0.0,
    };
    let loads = worker_loads(proposed, instance)?;
    let (delta_l, delta_h) = load_ranges(&loads)?;
    Ok([neg_msf, delta_l as f64, delta_h as f64])
}

/// Everything a solution document reports about one configuration.
///
/// `loads` and `ergo_loads` list every worker in id order; the extrema and
/// ranges are taken over counted (placed) workers only. `msf` is absent
/// when the instance carries no running configuration to compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub msf: Option<f64>,
    pub loads: Vec<u64>,
    pub ergo_loads: Vec<u64>,
    pub l_max: u64,
    pub l_min: u64,
    pub h_max: u64,
    pub h_min: u64,
    pub delta_l: u64,
    pub delta_h: u64,
    pub weighted_normalized: f64,
}

pub fn objective_report(
    instance: &Instance,
    proposed: &Configuration,
    bounds: &NormalizationBounds,
    weights: [f64; 3],
) -> Result<ObjectiveReport, MetricsError> {
    let msf = match &instance.current {
        Some(baseline) => Some(mean_similarity(&baseline.config, proposed)?),
        None => None,
    };
    let loads = worker_loads(proposed, instance)?;
    let counted_time = loads.counted_time();
    let counted_ergo = loads.counted_ergo();
    if counted_time.is_empty() {
        return Err(MetricsError::NoCountedWorkers);
    }
    let (delta_l, delta_h) = load_ranges(&loads)?;
    let components = [msf.map_or(0.0, |m| -m), delta_l as f64, delta_h as f64];
    Ok(ObjectiveReport {
        msf,
        l_max: counted_time.iter().cloned().fold(0.0, f64::max) as u64,
        l_min: counted_time.iter().cloned().fold(f64::INFINITY, f64::min) as u64,
        h_max: counted_ergo.iter().cloned().fold(0.0, f64::max) as u64,
        h_min: counted_ergo.iter().cloned().fold(f64::INFINITY, f64::min) as u64,
        delta_l,
        delta_h,
        weighted_normalized: weighted_objective(components, bounds, weights),
        loads: loads.time,
        ergo_loads: loads.ergo,
    })
}
