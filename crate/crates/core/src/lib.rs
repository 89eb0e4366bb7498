//! Exact optimization toolkit for rebalancing multi-worker assembly lines.
//!
//! The crate models a line whose stations may hold several workers, scores
//! candidate assignments on similarity to the running configuration and on
//! workload/ergonomic spread, and searches the assignment space exactly.
//! Alongside the solver live the pieces an experiment needs end to end:
//! document I/O, feasibility checkers for two constraint encodings,
//! a seeded instance generator, and a benchmark pipeline that turns
//! instance sets into CSV summaries.

pub mod domain;
pub mod encoding;
pub mod generator;
pub mod metrics;
pub mod pipeline;
pub mod solver;

pub use domain::{
    topological_order, worker_bounds, Area, Baseline, Configuration, ConfigurationDoc,
    DerivedFlags, DomainError, Instance, PrecedenceGraph, Task,
};
pub use encoding::{
    check_linearized, check_semantic, derive_aux, enumerate_feasible, AssignmentTriple, Encoding,
    EncodingError, LinearAux, Violation, ViolationList,
};
pub use generator::{
    generate_baseline, generate_baseline_pair, generate_instance, BaselineQuality, GeneratorError,
    GeneratorParams,
};
pub use metrics::{
    coefficient_of_variation, load_ranges, mean_similarity, normalized_range, objective_report,
    raw_components, similarity_factor, weighted_objective, worker_loads, Component, MetricsError,
    NormalizationBounds, ObjectiveReport, WorkerLoads,
};
pub use pipeline::{
    check_assignment, cross_validate, run_rebalance, run_suite, BenchmarkRecord, EncodingChecked,
    Manifest, ManifestEntry, PipelineError, RebalanceRun, Scenario, SolutionDoc, SuiteFailure,
    SuiteOptions, SuiteReport,
};
pub use solver::{
    compute_normalization, enumerate_optimal, find_min_workers, solve, solve_single_objective,
    OracleOptimum, SolveError, SolveOptions, SolveResult, SolveStatus,
};
