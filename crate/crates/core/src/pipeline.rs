//! End-to-end rebalancing and the harness around it: size the workforce
//! for the target cycle time, derive normalization bounds, search, and
//! recheck the incumbent under both constraint formulations; or sweep a
//! whole manifest of instances into solution documents and CSV
//! summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Baseline, Configuration, ConfigurationDoc, DomainError, Instance};
use crate::encoding::{
    check_linearized, check_semantic, derive_aux, linearized_admits, permissive_aux, Encoding,
    EncodingError, ViolationList,
};
use crate::generator::{generate_baseline_pair, GeneratorParams};
use crate::metrics::{
    coefficient_of_variation, normalized_range, objective_report, worker_loads, MetricsError,
    NormalizationBounds, ObjectiveReport,
};
use crate::solver::{
    compute_normalization, find_min_workers, solve, SolveError, SolveOptions, SolveResult,
    SolveStatus,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("no feasible rebalance: {diagnosis}")]
    Infeasible { diagnosis: String },
    #[error("search stopped after {nodes} nodes with no configuration in hand")]
    NoIncumbent {
        workers: u32,
        nodes: u64,
        elapsed: Duration,
    },
    #[error("{encoding:?} recheck rejected the configuration:\n{violations}")]
    CrossCheck {
        encoding: Encoding,
        violations: ViolationList,
    },
    #[error("{0}")]
    MalformedSolution(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("suite: {0}")]
    Suite(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path, err: impl fmt::Display) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

/// Which running configuration a suite entry rebalances from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// The line ran an exhaustively pre-solved configuration.
    OptimalStart,
    /// The line ran the first configuration its pre-solve reached.
    SuboptimalStart,
}

impl Scenario {
    pub const BOTH: [Scenario; 2] = [Scenario::OptimalStart, Scenario::SuboptimalStart];

    pub fn slug(self) -> &'static str {
        match self {
            Scenario::OptimalStart => "optimal-start",
            Scenario::SuboptimalStart => "suboptimal-start",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Which constraint formulations a configuration was checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingChecked {
    Semantic,
    Linearized,
    Both,
}

impl EncodingChecked {
    pub fn slug(self) -> &'static str {
        match self {
            EncodingChecked::Semantic => "semantic",
            EncodingChecked::Linearized => "linearized",
            EncodingChecked::Both => "both",
        }
    }
}

impl fmt::Display for EncodingChecked {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Violations of the requested formulation(s), empty when the assignment
/// is admitted. The linearized check is existential over the
/// auxiliaries; when no choice of them works, the report lists the
/// violations under the most permissive choice.
pub fn check_assignment(
    proposed: &Configuration,
    instance: &Instance,
    cycle_time: u32,
    which: EncodingChecked,
) -> Result<ViolationList, PipelineError> {
    let mut out = ViolationList::default();
    if matches!(which, EncodingChecked::Semantic | EncodingChecked::Both) {
        out.0
            .extend(check_semantic(proposed, instance, cycle_time)?.0);
    }
    if matches!(which, EncodingChecked::Linearized | EncodingChecked::Both)
        && !linearized_admits(proposed, instance, cycle_time)
    {
        let aux = permissive_aux(proposed, instance);
        out.0
            .extend(check_linearized(proposed, &aux, instance, cycle_time)?.0);
    }
    Ok(out)
}

/// Rechecks a search-produced configuration under both formulations. Any
/// finding here means the search and the checkers disagree, so the
/// violations come back as an error rather than a report.
pub fn cross_validate(
    proposed: &Configuration,
    instance: &Instance,
    cycle_time: u32,
) -> Result<(), PipelineError> {
    let semantic = check_semantic(proposed, instance, cycle_time)?;
    if !semantic.is_empty() {
        return Err(PipelineError::CrossCheck {
            encoding: Encoding::Semantic,
            violations: semantic,
        });
    }
    let aux = derive_aux(proposed, instance, cycle_time)?;
    let linear = check_linearized(proposed, &aux, instance, cycle_time)?;
    if !linear.is_empty() {
        return Err(PipelineError::CrossCheck {
            encoding: Encoding::Linearized,
            violations: linear,
        });
    }
    Ok(())
}

/// Everything one rebalancing run produces.
#[derive(Debug, Clone)]
pub struct RebalanceRun {
    /// Workforce the line was sized to before searching.
    pub workers: u32,
    pub weights: [f64; 3],
    pub bounds: NormalizationBounds,
    pub result: SolveResult,
    pub report: ObjectiveReport,
}

/// Rebalances an instance against its own cycle time: sizes the
/// workforce, derives normalization bounds, searches, rechecks the
/// incumbent under both constraint formulations, and scores it.
///
/// Without a running configuration attached the similarity component has
/// no referent; its normalization span stays empty and the report's
/// `msf` is absent.
pub fn run_rebalance(
    instance: &Instance,
    options: &SolveOptions,
) -> Result<RebalanceRun, PipelineError> {
    instance.validate()?;
    let workers = match find_min_workers(instance, options) {
        Ok(w) => w,
        Err(SolveError::Infeasible(detail)) => {
            return Err(PipelineError::Infeasible {
                diagnosis: diagnose(instance, &detail),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let sized = instance.with_workers(workers);
    let bounds = compute_normalization(&sized, options)?;
    let result = solve(&sized, &bounds, options)?;
    let Some(incumbent) = result.incumbent.clone() else {
        return Err(match result.status {
            SolveStatus::Infeasible => PipelineError::Infeasible {
                diagnosis: format!(
                    "the search refuted every configuration for {workers} workers at cycle time {}",
                    sized.cycle_time
                ),
            },
            _ => PipelineError::NoIncumbent {
                workers,
                nodes: result.nodes_explored,
                elapsed: result.elapsed,
            },
        });
    };
    cross_validate(&incumbent, &sized, sized.cycle_time)?;
    let report = objective_report(&sized, &incumbent, &bounds, options.weights)?;
    Ok(RebalanceRun {
        workers,
        weights: options.weights,
        bounds,
        result,
        report,
    })
}

/// Names the constraint family behind a failed staffing sweep. A task
/// that fits the cycle time can always be carried by some workforce in
/// the swept range, so the usual culprit is a single oversized task.
fn diagnose(instance: &Instance, sweep_detail: &str) -> String {
    if let Some((i, task)) = instance
        .tasks
        .iter()
        .enumerate()
        .find(|(_, t)| t.time > instance.cycle_time)
    {
        format!(
            "task {} needs {} time units but the cycle time is {}; no workforce can absorb it",
            i + 1,
            task.time,
            instance.cycle_time
        )
    } else {
        format!("staffing sweep failed: {sweep_detail}")
    }
}

/// One solved rebalance as written to disk: the assignment in the same
/// wire shape as an instance's `current` block, alongside everything
/// needed to recheck and rescore it without rerunning the search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    pub status: SolveStatus,
    pub num_workers: u32,
    pub objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub elapsed_ms: u64,
    pub weights: [f64; 3],
    pub normalization: NormalizationBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<ConfigurationDoc>,
    pub assignment: ConfigurationDoc,
    pub report: ObjectiveReport,
}

impl RebalanceRun {
    /// Serializable document for this run; `instance` must be the one the
    /// run came from (its `current` block is copied in).
    pub fn to_document(
        &self,
        instance: &Instance,
        instance_id: impl Into<String>,
        scenario: Option<Scenario>,
    ) -> SolutionDoc {
        let incumbent = self
            .result
            .incumbent
            .clone()
            .expect("a rebalance run always carries an incumbent");
        SolutionDoc {
            instance_id: instance_id.into(),
            scenario,
            status: self.result.status,
            num_workers: self.workers,
            objective: self
                .result
                .objective
                .expect("an incumbent implies an objective"),
            lower_bound: self.result.lower_bound,
            gap: self.result.gap.expect("an incumbent implies a gap"),
            nodes: self.result.nodes_explored,
            elapsed_ms: self.result.elapsed.as_millis() as u64,
            weights: self.weights,
            normalization: self.bounds,
            baseline: instance
                .current
                .as_ref()
                .map(ConfigurationDoc::from_baseline),
            assignment: ConfigurationDoc::from_baseline(&Baseline {
                cycle_time: instance.cycle_time,
                config: incumbent,
            }),
            report: self.report.clone(),
        }
    }
}

impl SolutionDoc {
    pub fn from_path(path: impl AsRef<Path>) -> Result<SolutionDoc, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::MalformedSolution(format!("{}: {e}", path.display())))
    }

    pub fn write_to_path(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("solution documents always serialize");
        fs::write(path, text).map_err(|e| io_err(path, e))
    }

    /// Rebuilds the sized instance (running configuration attached) and
    /// the assignment this document describes, checking shapes but not
    /// feasibility.
    pub fn reconstruct(
        &self,
        instance: &Instance,
    ) -> Result<(Instance, Configuration), PipelineError> {
        let mut issues = Vec::new();
        let assignment = self
            .assignment
            .clone()
            .into_baseline("assignment", &mut issues);
        let baseline = self
            .baseline
            .clone()
            .map(|doc| doc.into_baseline("baseline", &mut issues));
        if !issues.is_empty() {
            return Err(PipelineError::MalformedSolution(issues.join("; ")));
        }
        let assignment = assignment.expect("no issues means the decode succeeded");
        let baseline = baseline.map(|b| b.expect("no issues means the decode succeeded"));
        if assignment.cycle_time != instance.cycle_time {
            return Err(PipelineError::MalformedSolution(format!(
                "assignment answers to cycle time {} but the instance targets {}",
                assignment.cycle_time, instance.cycle_time
            )));
        }
        if assignment.config.num_tasks() != instance.num_tasks() {
            return Err(PipelineError::MalformedSolution(format!(
                "assignment covers {} tasks, instance has {}",
                assignment.config.num_tasks(),
                instance.num_tasks()
            )));
        }
        if assignment.config.num_workers() != self.num_workers as usize {
            return Err(PipelineError::MalformedSolution(format!(
                "num_workers says {} but the assignment places a pool of {}",
                self.num_workers,
                assignment.config.num_workers()
            )));
        }
        let mut sized = instance.with_workers(self.num_workers);
        sized.current = baseline;
        sized.validate()?;
        Ok((sized, assignment.config))
    }
}

/// The instance list a suite runs over. Paths are resolved relative to
/// the manifest file's directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    /// Candidate running-configuration cycle times, tried per entry in
    /// seed-shuffled order; the generator's spread when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_cycle_times: Option<Vec<u32>>,
    #[serde(default)]
    pub instances: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Names the entry's artifacts. Must start with a letter or digit;
    /// the rest may add `-`, `_`, and `.`.
    pub id: String,
    pub path: String,
    /// Seeds the running-configuration construction for this entry.
    #[serde(default)]
    pub baseline_seed: u64,
}

impl Manifest {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Manifest, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn write_to_path(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        self.validate()?;
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("manifests always serialize");
        fs::write(path, text).map_err(|e| io_err(path, e))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let mut seen = BTreeSet::new();
        for entry in &self.instances {
            let mut chars = entry.id.chars();
            let head_ok = chars.next().is_some_and(|c| c.is_ascii_alphanumeric());
            let tail_ok = chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
            if !head_ok || !tail_ok {
                return Err(PipelineError::Manifest(format!(
                    "id {:?} must start with a letter or digit and use only \
                     letters, digits, '-', '_', '.'",
                    entry.id
                )));
            }
            if !seen.insert(&entry.id) {
                return Err(PipelineError::Manifest(format!(
                    "duplicate id {:?}",
                    entry.id
                )));
            }
            if entry.path.is_empty() {
                return Err(PipelineError::Manifest(format!(
                    "entry {:?} has an empty path",
                    entry.id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub solve: SolveOptions,
    /// Concurrent instances; 0 lets the thread pool decide.
    pub parallelism: usize,
    /// Receives `solutions/` and the CSV summaries.
    pub output_dir: PathBuf,
}

impl Default for SuiteOptions {
    fn default() -> SuiteOptions {
        SuiteOptions {
            solve: SolveOptions::default(),
            parallelism: 0,
            output_dir: PathBuf::from("bench-out"),
        }
    }
}

/// One suite outcome: how one (instance, scenario) rebalance went, with
/// the dispersion metrics before and after. The after metrics are
/// present exactly when the run produced a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub instance_id: String,
    pub scenario: Scenario,
    pub num_tasks: usize,
    /// Formulations the configuration was validated under (vacuous when
    /// the run produced none).
    pub encoding_checked: EncodingChecked,
    pub solve_time: Duration,
    pub status: SolveStatus,
    pub workers_used: u32,
    pub nodes: u64,
    pub msf: Option<f64>,
    pub wl_nr: Option<f64>,
    pub wl_cv: Option<f64>,
    pub el_nr: Option<f64>,
    pub el_cv: Option<f64>,
    pub baseline_wl_nr: f64,
    pub baseline_wl_cv: f64,
    pub baseline_el_nr: f64,
    pub baseline_el_cv: f64,
}

/// One entry the suite could not turn into records.
#[derive(Debug, Clone)]
pub struct SuiteFailure {
    pub instance_id: String,
    pub scenario: Option<Scenario>,
    pub message: String,
}

/// Everything a suite run produced.
#[derive(Debug)]
pub struct SuiteReport {
    pub records: Vec<BenchmarkRecord>,
    pub failures: Vec<SuiteFailure>,
    /// cactus.csv, fairness.csv, robustness.csv as written.
    pub csv_paths: [PathBuf; 3],
}

/// Runs every manifest entry under both scenarios: one seeded optimal
/// and stopped-early running configuration per entry (built at a shared
/// setting), one rebalance and one solution document per scenario, then
/// the CSV summaries. Entries whose existing documents still check out
/// are not solved again; their records come straight from the documents.
/// Per-entry failures are collected, not fatal.
pub fn run_suite(
    manifest_path: impl AsRef<Path>,
    options: &SuiteOptions,
) -> Result<SuiteReport, PipelineError> {
    let manifest_path = manifest_path.as_ref();
    let manifest = Manifest::from_path(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let solutions_dir = options.output_dir.join("solutions");
    fs::create_dir_all(&solutions_dir).map_err(|e| io_err(&solutions_dir, e))?;
    let cycle_times = manifest
        .baseline_cycle_times
        .clone()
        .unwrap_or_else(|| GeneratorParams::default().baseline_cycle_times);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism)
        .build()
        .map_err(|e| PipelineError::Suite(format!("thread pool: {e}")))?;
    let outcomes: Vec<(Vec<BenchmarkRecord>, Vec<SuiteFailure>)> = pool.install(|| {
        manifest
            .instances
            .par_iter()
            .map(|entry| process_entry(entry, base, &cycle_times, options, &solutions_dir))
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in outcomes {
        records.extend(r);
        failures.extend(f);
    }
    let csv_paths = write_summaries(&options.output_dir, &records)?;
    Ok(SuiteReport {
        records,
        failures,
        csv_paths,
    })
}

fn solution_path(dir: &Path, id: &str, scenario: Scenario) -> PathBuf {
    dir.join(format!("{id}.{}.json", scenario.slug()))
}

fn process_entry(
    entry: &ManifestEntry,
    base: &Path,
    cycle_times: &[u32],
    options: &SuiteOptions,
    solutions_dir: &Path,
) -> (Vec<BenchmarkRecord>, Vec<SuiteFailure>) {
    let fail = |scenario, message: String| SuiteFailure {
        instance_id: entry.id.clone(),
        scenario,
        message,
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut bare = match Instance::from_path(base.join(&entry.path)) {
        Ok(i) => i,
        Err(e) => return (records, vec![fail(None, e.to_string())]),
    };
    bare.current = None;

    let mut missing = Vec::new();
    for scenario in Scenario::BOTH {
        let path = solution_path(solutions_dir, &entry.id, scenario);
        match try_resume(&path, entry, scenario, &bare) {
            Some(record) => records.push(record),
            None => missing.push(scenario),
        }
    }
    if missing.is_empty() {
        return (records, failures);
    }
    let (optimal, suboptimal) =
        match generate_baseline_pair(&bare, cycle_times, entry.baseline_seed, &options.solve) {
            Ok(pair) => pair,
            Err(e) => {
                let message = e.to_string();
                failures.extend(missing.into_iter().map(|s| fail(Some(s), message.clone())));
                return (records, failures);
            }
        };
    for scenario in missing {
        let baseline = match scenario {
            Scenario::OptimalStart => optimal.clone(),
            Scenario::SuboptimalStart => suboptimal.clone(),
        };
        match solve_scenario(entry, scenario, &bare, baseline, options, solutions_dir) {
            Ok(record) => records.push(record),
            Err(e) => failures.push(fail(Some(scenario), e.to_string())),
        }
    }
    (records, failures)
}

/// A record rebuilt from an existing, still-valid solution document.
/// `None` means the document is missing or no longer checks out, and the
/// scenario must be solved again.
fn try_resume(
    path: &Path,
    entry: &ManifestEntry,
    scenario: Scenario,
    instance: &Instance,
) -> Option<BenchmarkRecord> {
    if !path.exists() {
        return None;
    }
    let doc = SolutionDoc::from_path(path).ok()?;
    record_from_doc(&doc, instance, &entry.id, scenario).ok()
}

fn solve_scenario(
    entry: &ManifestEntry,
    scenario: Scenario,
    bare: &Instance,
    baseline: Baseline,
    options: &SuiteOptions,
    solutions_dir: &Path,
) -> Result<BenchmarkRecord, PipelineError> {
    let mut prepared = bare.clone();
    prepared.current = Some(baseline);
    match run_rebalance(&prepared, &options.solve) {
        Ok(run) => {
            let doc = run.to_document(&prepared, &entry.id, Some(scenario));
            let path = solution_path(solutions_dir, &entry.id, scenario);
            doc.write_to_path(&path)?;
            record_from_doc(&doc, bare, &entry.id, scenario)
        }
        Err(PipelineError::NoIncumbent {
            workers,
            nodes,
            elapsed,
        }) => {
            let baseline = prepared.current.as_ref().expect("attached above");
            let [b_wl_nr, b_wl_cv, b_el_nr, b_el_cv] = load_dispersion(&baseline.config, bare)?;
            Ok(BenchmarkRecord {
                instance_id: entry.id.clone(),
                scenario,
                num_tasks: bare.num_tasks(),
                encoding_checked: EncodingChecked::Both,
                solve_time: elapsed,
                status: SolveStatus::NoSolutionTimeout,
                workers_used: workers,
                nodes,
                msf: None,
                wl_nr: None,
                wl_cv: None,
                el_nr: None,
                el_cv: None,
                baseline_wl_nr: b_wl_nr,
                baseline_wl_cv: b_wl_cv,
                baseline_el_nr: b_el_nr,
                baseline_el_cv: b_el_cv,
            })
        }
        Err(e) => Err(e),
    }
}

/// Rebuilds a suite record from a solution document, recomputing every
/// metric from the stored assignment; the stored score must agree with
/// the recomputation.
fn record_from_doc(
    doc: &SolutionDoc,
    instance: &Instance,
    entry_id: &str,
    scenario: Scenario,
) -> Result<BenchmarkRecord, PipelineError> {
    if doc.instance_id != entry_id {
        return Err(PipelineError::MalformedSolution(format!(
            "document names instance {:?}, expected {entry_id:?}",
            doc.instance_id
        )));
    }
    if doc.scenario != Some(scenario) {
        return Err(PipelineError::MalformedSolution(format!(
            "document names scenario {:?}, expected {scenario}",
            doc.scenario.map(Scenario::slug)
        )));
    }
    let (sized, assignment) = doc.reconstruct(instance)?;
    let baseline = sized.current.clone().ok_or_else(|| {
        PipelineError::MalformedSolution(
            "suite documents carry a running configuration".to_string(),
        )
    })?;
    let mut setting = sized.with_workers(baseline.config.num_workers() as u32);
    setting.cycle_time = baseline.cycle_time;
    setting.current = None;
    let baseline_violations = check_semantic(&baseline.config, &setting, baseline.cycle_time)?;
    if !baseline_violations.is_empty() {
        return Err(PipelineError::MalformedSolution(format!(
            "the stored running configuration is infeasible at its cycle time {}:\n{baseline_violations}",
            baseline.cycle_time
        )));
    }
    cross_validate(&assignment, &sized, sized.cycle_time)?;
    let report = objective_report(&sized, &assignment, &doc.normalization, doc.weights)?;
    if (report.weighted_normalized - doc.report.weighted_normalized).abs() > 1e-9 {
        return Err(PipelineError::MalformedSolution(format!(
            "stored score {} disagrees with recomputation {}",
            doc.report.weighted_normalized, report.weighted_normalized
        )));
    }
    let [wl_nr, wl_cv, el_nr, el_cv] = load_dispersion(&assignment, &sized)?;
    let [b_wl_nr, b_wl_cv, b_el_nr, b_el_cv] = load_dispersion(&baseline.config, &sized)?;
    Ok(BenchmarkRecord {
        instance_id: entry_id.to_string(),
        scenario,
        num_tasks: instance.num_tasks(),
        encoding_checked: EncodingChecked::Both,
        solve_time: Duration::from_millis(doc.elapsed_ms),
        status: doc.status,
        workers_used: doc.num_workers,
        nodes: doc.nodes,
        msf: report.msf,
        wl_nr: Some(wl_nr),
        wl_cv: Some(wl_cv),
        el_nr: Some(el_nr),
        el_cv: Some(el_cv),
        baseline_wl_nr: b_wl_nr,
        baseline_wl_cv: b_wl_cv,
        baseline_el_nr: b_el_nr,
        baseline_el_cv: b_el_cv,
    })
}

/// Workload and ergonomic dispersion of a configuration over counted
/// workers: [WL-NR, WL-CV, EL-NR, EL-CV].
fn load_dispersion(config: &Configuration, instance: &Instance) -> Result<[f64; 4], MetricsError> {
    let loads = worker_loads(config, instance)?;
    let time = loads.counted_time();
    let ergo = loads.counted_ergo();
    Ok([
        normalized_range(&time)?,
        coefficient_of_variation(&time)?,
        normalized_range(&ergo)?,
        coefficient_of_variation(&ergo)?,
    ])
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn fmt_cell(value: f64) -> String {
    format!("{value:.6}")
}

fn write_summaries(dir: &Path, records: &[BenchmarkRecord]) -> Result<[PathBuf; 3], PipelineError> {
    Ok([
        write_cactus(dir, records)?,
        write_fairness(dir, records)?,
        write_robustness(dir, records)?,
    ])
}

/// `cactus.csv`: every record's solve time in nondecreasing order.
fn write_cactus(dir: &Path, records: &[BenchmarkRecord]) -> Result<PathBuf, PipelineError> {
    let path = dir.join("cactus.csv");
    let mut writer = csv::Writer::from_path(&path)?;
    writer.write_record(["rank", "solve_time", "encoding"])?;
    let mut rows: Vec<(f64, EncodingChecked)> = records
        .iter()
        .map(|r| (r.solve_time.as_secs_f64(), r.encoding_checked))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (rank, (time, encoding)) in rows.iter().enumerate() {
        writer.write_record([
            (rank + 1).to_string().as_str(),
            fmt_cell(*time).as_str(),
            encoding.slug(),
        ])?;
    }
    writer.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// `fairness.csv`: per-size means over solved optimal-start records.
fn write_fairness(dir: &Path, records: &[BenchmarkRecord]) -> Result<PathBuf, PipelineError> {
    let path = dir.join("fairness.csv");
    let mut writer = csv::Writer::from_path(&path)?;
    writer.write_record([
        "size",
        "instances",
        "msf",
        "wl_nr",
        "wl_cv",
        "el_nr",
        "el_cv",
    ])?;
    let mut groups: BTreeMap<usize, Vec<&BenchmarkRecord>> = BTreeMap::new();
    for record in records {
        if record.scenario == Scenario::OptimalStart && record.wl_nr.is_some() {
            groups.entry(record.num_tasks).or_default().push(record);
        }
    }
    for (size, group) in groups {
        let avg = |pick: fn(&BenchmarkRecord) -> Option<f64>| -> String {
            let values: Vec<f64> = group.iter().filter_map(|r| pick(r)).collect();
            mean(&values).map(fmt_cell).unwrap_or_default()
        };
        writer.write_record([
            size.to_string(),
            group.len().to_string(),
            avg(|r| r.msf),
            avg(|r| r.wl_nr),
            avg(|r| r.wl_cv),
            avg(|r| r.el_nr),
            avg(|r| r.el_cv),
        ])?;
    }
    writer.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// `robustness.csv`: the four-condition comparison of starting lines and
/// their rebalances.
fn write_robustness(dir: &Path, records: &[BenchmarkRecord]) -> Result<PathBuf, PipelineError> {
    let path = dir.join("robustness.csv");
    let mut writer = csv::Writer::from_path(&path)?;
    writer.write_record(["condition", "msf", "wl_nr", "wl_cv", "el_nr", "el_cv"])?;
    for scenario in Scenario::BOTH {
        let of_scenario: Vec<&BenchmarkRecord> =
            records.iter().filter(|r| r.scenario == scenario).collect();
        if of_scenario.is_empty() {
            continue;
        }
        let avg = |values: Vec<f64>| mean(&values).map(fmt_cell).unwrap_or_default();
        writer.write_record([
            scenario.slug().to_string(),
            String::new(),
            avg(of_scenario.iter().map(|r| r.baseline_wl_nr).collect()),
            avg(of_scenario.iter().map(|r| r.baseline_wl_cv).collect()),
            avg(of_scenario.iter().map(|r| r.baseline_el_nr).collect()),
            avg(of_scenario.iter().map(|r| r.baseline_el_cv).collect()),
        ])?;
        let solved: Vec<&&BenchmarkRecord> =
            of_scenario.iter().filter(|r| r.wl_nr.is_some()).collect();
        if solved.is_empty() {
            continue;
        }
        let label = match scenario {
            Scenario::OptimalStart => "rebalanced-from-optimal",
            Scenario::SuboptimalStart => "rebalanced-from-suboptimal",
        };
        writer.write_record([
            label.to_string(),
            avg(solved.iter().filter_map(|r| r.msf).collect()),
            avg(solved.iter().filter_map(|r| r.wl_nr).collect()),
            avg(solved.iter().filter_map(|r| r.wl_cv).collect()),
            avg(solved.iter().filter_map(|r| r.el_nr).collect()),
            avg(solved.iter().filter_map(|r| r.el_cv).collect()),
        ])?;
    }
    writer.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}
