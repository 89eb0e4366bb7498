//! Seeded synthesis of instances and of the running configurations they
//! are rebalanced from.
//!
//! Task times, ergonomic scores, work areas, and precedence arcs are all
//! drawn from a counter-based stream cipher, so a (parameters, seed) pair
//! pins the instance bit for bit across platforms. Running configurations
//! come from pre-solving the same line at a perturbed cycle time, either
//! to optimality or stopped at the first configuration the search finds,
//! which yields a deliberately unbalanced starting point.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{Area, Baseline, Instance, PrecedenceGraph, Task};
use crate::metrics::NormalizationBounds;
use crate::solver::{
    compute_normalization, find_min_workers, solve, SolveError, SolveOptions, SolveStatus,
};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("no baseline cycle time in {tried:?} admits a configuration")]
    NoBaseline { tried: Vec<u32> },
}

/// Everything that shapes a synthetic instance.
#[derive(Debug, Clone)]
pub struct GeneratorParams {
    pub num_tasks: usize,
    /// Inclusive bounds on task times.
    pub time_range: (u32, u32),
    /// Inclusive bounds on ergonomic scores.
    pub ergo_range: (u32, u32),
    /// Probability that a task works the inside of the line.
    pub internal_probability: f64,
    /// Cap on predecessors drawn per task (also capped by how many tasks
    /// precede it).
    pub max_predecessors: usize,
    pub target_cycle_time: u32,
    /// Candidate cycle times for pre-solved running configurations.
    pub baseline_cycle_times: Vec<u32>,
    /// Station count; derived from total work when absent.
    pub num_stations: Option<u32>,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> GeneratorParams {
        GeneratorParams {
            num_tasks: 10,
            time_range: (1, 7),
            ergo_range: (1, 5),
            internal_probability: 0.5,
            max_predecessors: 3,
            target_cycle_time: 20,
            baseline_cycle_times: vec![17, 18, 19, 21, 22, 23],
            num_stations: None,
            seed: 0,
        }
    }
}

impl GeneratorParams {
    pub fn new(num_tasks: usize, seed: u64) -> GeneratorParams {
        GeneratorParams {
            num_tasks,
            seed,
            ..GeneratorParams::default()
        }
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        let mut issues = Vec::new();
        if self.num_tasks == 0 {
            issues.push("num_tasks must be at least 1".to_string());
        }
        if self.time_range.0 == 0 || self.time_range.0 > self.time_range.1 {
            issues.push(format!(
                "time_range {:?} must satisfy 1 <= lo <= hi",
                self.time_range
            ));
        }
        if self.ergo_range.0 == 0 || self.ergo_range.0 > self.ergo_range.1 {
            issues.push(format!(
                "ergo_range {:?} must satisfy 1 <= lo <= hi",
                self.ergo_range
            ));
        }
        if !(0.0..=1.0).contains(&self.internal_probability) {
            issues.push(format!(
                "internal_probability {} outside [0, 1]",
                self.internal_probability
            ));
        }
        if self.target_cycle_time == 0 {
            issues.push("target_cycle_time must be at least 1".to_string());
        }
        if self.num_stations == Some(0) {
            issues.push("num_stations must be at least 1 when given".to_string());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(GeneratorError::InvalidParams(issues.join("; ")))
        }
    }
}

/// Draws an instance from the parameters and sizes its workforce to the
/// smallest count that admits any configuration at the target cycle time.
pub fn generate_instance(
    params: &GeneratorParams,
    options: &SolveOptions,
) -> Result<Instance, GeneratorError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let tasks: Vec<Task> = (0..params.num_tasks)
        .map(|_| Task {
            time: rng.gen_range(params.time_range.0..=params.time_range.1),
            ergo: rng.gen_range(params.ergo_range.0..=params.ergo_range.1),
            area: if rng.gen_bool(params.internal_probability) {
                Area::Internal
            } else {
                Area::External
            },
        })
        .collect();

    let mut preds: Vec<Vec<usize>> = Vec::with_capacity(params.num_tasks);
    for j in 0..params.num_tasks {
        let cap = params.max_predecessors.min(j);
        let count = rng.gen_range(0..=cap);
        let chosen = rand::seq::index::sample(&mut rng, j, count).into_vec();
        preds.push(chosen);
    }

    let total_time: u64 = tasks.iter().map(|t| u64::from(t.time)).sum();
    let num_stations = params.num_stations.unwrap_or_else(|| {
        let spread = total_time as f64 / (2.0 * f64::from(params.target_cycle_time));
        (spread.round() as u32).max(2)
    });

    let provisional = Instance {
        cycle_time: params.target_cycle_time,
        num_stations,
        num_workers: num_stations,
        tasks,
        precedence: PrecedenceGraph::new(preds),
        current: None,
    };
    let workforce = find_min_workers(&provisional, options)?;
    Ok(provisional.with_workers(workforce))
}

/// How thoroughly the pre-solve behind a running configuration ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineQuality {
    /// Exhaustive pre-solve: the running configuration is a true optimum
    /// for its cycle time.
    Optimal,
    /// Pre-solve stopped at its first configuration: feasible but
    /// typically lopsided.
    Suboptimal,
}

/// The line as it ran before rebalancing: the instance re-timed to the
/// baseline cycle time with its own minimal workforce.
fn baseline_setting(
    instance: &Instance,
    cycle_time: u32,
    options: &SolveOptions,
) -> Result<(Instance, NormalizationBounds), SolveError> {
    let mut setting = instance.clone();
    setting.cycle_time = cycle_time;
    setting.current = None;
    let workforce = find_min_workers(&setting, options)?;
    let setting = setting.with_workers(workforce);
    let bounds = compute_normalization(&setting, options)?;
    Ok((setting, bounds))
}

/// Balance-only weights: similarity has no referent before a running
/// configuration exists.
const BASELINE_WEIGHTS: [f64; 3] = [0.0, 0.5, 0.5];

fn presolve(
    setting: &Instance,
    bounds: &NormalizationBounds,
    quality: BaselineQuality,
    options: &SolveOptions,
) -> Result<Option<Baseline>, GeneratorError> {
    let mut solve_options = options.clone();
    solve_options.weights = BASELINE_WEIGHTS;
    if quality == BaselineQuality::Suboptimal {
        // Take the first configuration the search reaches; the dive packs
        // workers in id order, so it lands far from balance. The loose
        // gap target states the acceptable quality explicitly, though the
        // incumbent cap is what stops the run.
        solve_options.incumbent_limit = Some(1);
        solve_options.gap_target = 0.8;
    }
    let result = solve(setting, bounds, &solve_options)?;
    match (quality, result.status) {
        (BaselineQuality::Optimal, SolveStatus::Optimal) | (BaselineQuality::Suboptimal, _)
            if result.incumbent.is_some() =>
        {
            Ok(Some(Baseline {
                cycle_time: setting.cycle_time,
                config: result.incumbent.expect("checked above"),
            }))
        }
        (_, SolveStatus::Infeasible) => Ok(None),
        (BaselineQuality::Optimal, other) if other.is_feasible() => {
            Err(GeneratorError::Solve(SolveError::Inconclusive(format!(
                "pre-solve at cycle time {} stopped at {other:?} before proving optimality",
                setting.cycle_time
            ))))
        }
        (_, other) => Err(GeneratorError::Solve(SolveError::Inconclusive(format!(
            "pre-solve at cycle time {} ended {other:?} without a configuration",
            setting.cycle_time
        )))),
    }
}

/// Builds a running configuration by pre-solving the line at a perturbed
/// cycle time, trying candidates in seed-shuffled order until one admits
/// a configuration.
pub fn generate_baseline(
    instance: &Instance,
    quality: BaselineQuality,
    cycle_times: &[u32],
    seed: u64,
    options: &SolveOptions,
) -> Result<Baseline, GeneratorError> {
    for cycle_time in candidate_order(cycle_times, seed)? {
        let (setting, bounds) = match baseline_setting(instance, cycle_time, options) {
            Ok(pair) => pair,
            Err(SolveError::Infeasible(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        if let Some(baseline) = presolve(&setting, &bounds, quality, options)? {
            return Ok(baseline);
        }
    }
    Err(GeneratorError::NoBaseline {
        tried: cycle_times.to_vec(),
    })
}

/// Builds an optimal and a stopped-early running configuration at the
/// same perturbed cycle time with the same workforce, so the two differ
/// only in pre-solve quality.
pub fn generate_baseline_pair(
    instance: &Instance,
    cycle_times: &[u32],
    seed: u64,
    options: &SolveOptions,
) -> Result<(Baseline, Baseline), GeneratorError> {
    for cycle_time in candidate_order(cycle_times, seed)? {
        let (setting, bounds) = match baseline_setting(instance, cycle_time, options) {
            Ok(pair) => pair,
            Err(SolveError::Infeasible(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        let optimal = presolve(&setting, &bounds, BaselineQuality::Optimal, options)?;
        let suboptimal = presolve(&setting, &bounds, BaselineQuality::Suboptimal, options)?;
        if let (Some(optimal), Some(suboptimal)) = (optimal, suboptimal) {
            return Ok((optimal, suboptimal));
        }
    }
    Err(GeneratorError::NoBaseline {
        tried: cycle_times.to_vec(),
    })
}

fn candidate_order(cycle_times: &[u32], seed: u64) -> Result<Vec<u32>, GeneratorError> {
    if cycle_times.is_empty() {
        return Err(GeneratorError::InvalidParams(
            "baseline cycle time list is empty".to_string(),
        ));
    }
    if cycle_times.contains(&0) {
        return Err(GeneratorError::InvalidParams(
            "baseline cycle times must be at least 1".to_string(),
        ));
    }
    let mut order = cycle_times.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(order)
}
