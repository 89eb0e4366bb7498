//! Command line front end: draw seeded instance sets, rebalance single
//! instances into solution documents, recheck and rescore those
//! documents, and sweep benchmark manifests into CSV summaries.
//!
//! Exit codes: 0 on success, 1 when the instance (or a checked
//! assignment) is infeasible, 2 on invalid input, 3 when a budget ran
//! out before any configuration was found.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use linebal_core::{
    check_assignment, generate_instance, objective_report, run_rebalance, run_suite, DomainError,
    EncodingChecked, GeneratorError, GeneratorParams, Instance, Manifest, ManifestEntry,
    MetricsError, PipelineError, SolutionDoc, SolveError, SolveOptions, SuiteOptions,
};

#[derive(Parser)]
#[command(
    name = "linebal",
    version,
    about = "Exact rebalancing for assembly lines with multi-worker stations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw seeded synthetic instances into a directory with a manifest
    Generate(GenerateArgs),
    /// Rebalance one instance and write a solution document
    Solve(SolveArgs),
    /// Recheck a solution against the constraints (exits 1 on violations)
    Check(CheckArgs),
    /// Rescore a solution document and print its objective report
    Metrics(MetricsArgs),
    /// Rebalance every manifest entry under both starting scenarios and
    /// write CSV summaries
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Directory receiving the instance files and manifest.json
    #[arg(long, default_value = "instances")]
    out: PathBuf,
    /// Task counts to draw, comma separated
    #[arg(long, value_delimiter = ',', default_value = "8,10,12,14")]
    sizes: Vec<usize>,
    /// Instances per task count
    #[arg(long, default_value_t = 10)]
    per_size: usize,
    /// Master seed; instance k of every size draws from seed master + k
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Target cycle time of every instance
    #[arg(long, default_value_t = 20)]
    cycle_time: u32,
    /// Fixed station count (derived from total work when omitted)
    #[arg(long)]
    stations: Option<u32>,
    /// Probability that a task works the inside of the line
    #[arg(long, default_value_t = 0.5)]
    internal_prob: f64,
    /// Candidate running-line cycle times recorded in the manifest
    #[arg(long, value_delimiter = ',')]
    baseline_cycle_times: Option<Vec<u32>>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance document to rebalance
    instance: PathBuf,
    /// Where the solution document goes (default: next to the instance)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Name recorded in the solution document (default: the file stem)
    #[arg(long)]
    id: Option<String>,
    /// Override the instance's target cycle time
    #[arg(long)]
    cycle_time: Option<u32>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct CheckArgs {
    /// Instance document the solution answers to
    instance: PathBuf,
    /// Solution document to recheck
    solution: PathBuf,
    /// Constraint formulation(s) to check against
    #[arg(long, value_enum, default_value_t = EncodingArg::Both)]
    encoding: EncodingArg,
    /// Print the violation list as JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MetricsArgs {
    /// Instance document the solution answers to
    instance: PathBuf,
    /// Solution document to rescore
    solution: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Manifest listing the instances to sweep
    manifest: PathBuf,
    /// Directory receiving solution documents and CSV summaries
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Concurrent instances (0 lets the thread pool decide)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct TuningArgs {
    /// Component weights as `similarity,load,ergo` (default: equal split)
    #[arg(long, value_parser = parse_weights)]
    weights: Option<Weights>,
    /// Wall clock budget per solve, in seconds
    #[arg(long)]
    time_limit: Option<f64>,
    /// Stop a solve once its relative gap reaches this value
    #[arg(long)]
    gap: Option<f64>,
    /// Seed for randomized child ordering (0 keeps the canonical order)
    #[arg(long)]
    seed: Option<u64>,
    /// Stop a solve after exploring this many nodes
    #[arg(long)]
    node_limit: Option<u64>,
    /// Emit a progress line to stderr at most every this many seconds
    #[arg(long)]
    progress: Option<f64>,
}

#[derive(Clone, Copy)]
struct Weights([f64; 3]);

fn parse_weights(text: &str) -> Result<Weights, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three comma separated weights, got {}",
            parts.len()
        ));
    }
    let mut weights = [0.0; 3];
    for (slot, part) in weights.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|e| format!("{part:?}: {e}"))?;
    }
    Ok(Weights(weights))
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Semantic,
    Linearized,
    Both,
}

impl From<EncodingArg> for EncodingChecked {
    fn from(arg: EncodingArg) -> EncodingChecked {
        match arg {
            EncodingArg::Semantic => EncodingChecked::Semantic,
            EncodingArg::Linearized => EncodingChecked::Linearized,
            EncodingArg::Both => EncodingChecked::Both,
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    BadArgs(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) => pipeline_code(e),
            CliError::Generator(GeneratorError::Solve(e)) => solve_code(e),
            CliError::Generator(_) => 2,
            CliError::Domain(_)
            | CliError::Metrics(_)
            | CliError::Io { .. }
            | CliError::BadArgs(_) => 2,
        }
    }
}

fn pipeline_code(err: &PipelineError) -> u8 {
    match err {
        PipelineError::Infeasible { .. } => 1,
        PipelineError::NoIncumbent { .. } => 3,
        PipelineError::Solve(e) => solve_code(e),
        _ => 2,
    }
}

fn solve_code(err: &SolveError) -> u8 {
    match err {
        SolveError::Infeasible(_) => 1,
        SolveError::Inconclusive(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Check(args) => cmd_check(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn solve_options(tuning: &TuningArgs) -> Result<SolveOptions, CliError> {
    let mut options = SolveOptions::default();
    if let Some(Weights(w)) = tuning.weights {
        options.weights = w;
    }
    if let Some(t) = tuning.time_limit {
        options.time_limit = seconds("--time-limit", t)?;
    }
    if let Some(g) = tuning.gap {
        options.gap_target = g;
    }
    if let Some(s) = tuning.seed {
        options.random_seed = s;
    }
    options.node_limit = tuning.node_limit;
    if let Some(p) = tuning.progress {
        options.progress_interval = Some(seconds("--progress", p)?);
    }
    Ok(options)
}

fn seconds(flag: &str, value: f64) -> Result<Duration, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(Duration::from_secs_f64(value))
    } else {
        Err(CliError::BadArgs(format!(
            "{flag} must be a positive number of seconds, got {value}"
        )))
    }
}

#[derive(Serialize)]
struct GeneratedManifest {
    params: GenerationParams,
    baseline_cycle_times: Vec<u32>,
    instances: Vec<ManifestEntry>,
    discarded: Vec<Discard>,
}

#[derive(Serialize)]
struct GenerationParams {
    sizes: Vec<usize>,
    per_size: usize,
    master_seed: u64,
    target_cycle_time: u32,
    num_stations: Option<u32>,
    internal_probability: f64,
    time_range: (u32, u32),
    ergo_range: (u32, u32),
    max_predecessors: usize,
}

/// A seed that produced no usable instance, kept in the manifest so the
/// set's provenance stays auditable.
#[derive(Serialize)]
struct Discard {
    size: usize,
    seed: u64,
    reason: String,
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, CliError> {
    if args.per_size == 0 {
        return Err(CliError::BadArgs("--per-size must be at least 1".into()));
    }
    let defaults = GeneratorParams::default();
    let cycle_times = args
        .baseline_cycle_times
        .clone()
        .unwrap_or(defaults.baseline_cycle_times);
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;

    let mut entries = Vec::new();
    let mut discarded = Vec::new();
    for &size in &args.sizes {
        for k in 0..args.per_size {
            let seed = args.seed.wrapping_add(k as u64);
            let params = GeneratorParams {
                num_tasks: size,
                seed,
                target_cycle_time: args.cycle_time,
                num_stations: args.stations,
                internal_probability: args.internal_prob,
                baseline_cycle_times: cycle_times.clone(),
                ..GeneratorParams::default()
            };
            let instance = match generate_instance(&params, &SolveOptions::default()) {
                Ok(instance) => instance,
                Err(GeneratorError::InvalidParams(msg)) => return Err(CliError::BadArgs(msg)),
                Err(err) => {
                    discarded.push(Discard {
                        size,
                        seed,
                        reason: err.to_string(),
                    });
                    continue;
                }
            };
            let id = format!("size{size}_seed{seed}");
            let file = format!("{id}.json");
            instance.write_to_path(args.out.join(&file))?;
            entries.push(ManifestEntry {
                id,
                path: file,
                baseline_seed: seed,
            });
        }
    }

    Manifest {
        baseline_cycle_times: Some(cycle_times.clone()),
        instances: entries.clone(),
    }
    .validate()?;
    let manifest = GeneratedManifest {
        params: GenerationParams {
            sizes: args.sizes.clone(),
            per_size: args.per_size,
            master_seed: args.seed,
            target_cycle_time: args.cycle_time,
            num_stations: args.stations,
            internal_probability: args.internal_prob,
            time_range: defaults.time_range,
            ergo_range: defaults.ergo_range,
            max_predecessors: defaults.max_predecessors,
        },
        baseline_cycle_times: cycle_times,
        instances: entries,
        discarded,
    };
    let manifest_path = args.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifests always serialize");
    fs::write(&manifest_path, text).map_err(|e| io_failure(&manifest_path, e))?;
    println!(
        "generated {} instances into {} ({} discarded)",
        manifest.instances.len(),
        args.out.display(),
        manifest.discarded.len()
    );
    println!("wrote {}", manifest_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, CliError> {
    let mut instance = Instance::from_path(&args.instance)?;
    if let Some(ct) = args.cycle_time {
        instance.cycle_time = ct;
        instance.validate()?;
    }
    let options = solve_options(&args.tuning)?;
    let run = run_rebalance(&instance, &options)?;
    let id = args.id.unwrap_or_else(|| file_stem(&args.instance));
    let out = args
        .out
        .unwrap_or_else(|| sibling(&args.instance, "solution.json"));
    let doc = run.to_document(&instance, id, None);
    doc.write_to_path(&out)?;

    let result = &run.result;
    let mut line = format!(
        "{}: objective {:.6} (gap {:.6}) with {} workers",
        result.status, doc.objective, doc.gap, run.workers
    );
    if let Some(msf) = run.report.msf {
        write!(line, ", msf {msf:.6}").expect("writing to a string");
    }
    println!("{line}");
    println!(
        "explored {} nodes in {:.3}s",
        result.nodes_explored,
        result.elapsed.as_secs_f64()
    );
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode, CliError> {
    let instance = Instance::from_path(&args.instance)?;
    let doc = SolutionDoc::from_path(&args.solution)?;
    let (sized, assignment) = doc.reconstruct(&instance)?;
    let which: EncodingChecked = args.encoding.into();
    let violations = check_assignment(&assignment, &sized, sized.cycle_time, which)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&violations).expect("violations always serialize")
        );
    } else if violations.is_empty() {
        println!("ok: the assignment is admitted under {which}");
    } else {
        print!("{violations}");
    }
    if violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_metrics(args: MetricsArgs) -> Result<ExitCode, CliError> {
    let instance = Instance::from_path(&args.instance)?;
    let doc = SolutionDoc::from_path(&args.solution)?;
    let (sized, assignment) = doc.reconstruct(&instance)?;
    let report = objective_report(&sized, &assignment, &doc.normalization, doc.weights)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("reports always serialize")
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, CliError> {
    let options = SuiteOptions {
        solve: solve_options(&args.tuning)?,
        parallelism: args.jobs,
        output_dir: args.out.clone(),
    };
    let report = run_suite(&args.manifest, &options)?;
    for record in &report.records {
        println!(
            "{} {} {}: {:.3}s, {} workers, {} nodes",
            record.instance_id,
            record.scenario,
            record.status,
            record.solve_time.as_secs_f64(),
            record.workers_used,
            record.nodes
        );
    }
    for failure in &report.failures {
        match failure.scenario {
            Some(scenario) => eprintln!(
                "failed: {} {}: {}",
                failure.instance_id, scenario, failure.message
            ),
            None => eprintln!("failed: {}: {}", failure.instance_id, failure.message),
        }
    }
    println!(
        "{} records, {} failures",
        report.records.len(),
        report.failures.len()
    );
    for path in &report.csv_paths {
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|stem| stem.to_string_lossy().into_owned())
        .unwrap_or_else(|| "solution".to_string())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_file_name(format!("{}.{suffix}", file_stem(path)))
}

fn io_failure(path: &Path, err: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}
