//! Fixtures for the criterion benchmarks: seeded instances with
//! pre-solved running configurations, sized so exact solves stay in
//! benchmark territory.

use linebal_core::{
    generate_baseline, generate_instance, BaselineQuality, GeneratorParams, Instance, SolveOptions,
};

/// A seeded instance with an exhaustively pre-solved running
/// configuration attached.
pub fn seeded_instance(num_tasks: usize, seed: u64) -> Instance {
    let options = SolveOptions::default();
    let params = GeneratorParams::new(num_tasks, seed);
    let mut instance = generate_instance(&params, &options).expect("benchmark parameters generate");
    let baseline = generate_baseline(
        &instance,
        BaselineQuality::Optimal,
        &params.baseline_cycle_times,
        seed,
        &options,
    )
    .expect("benchmark instances admit a running configuration");
    instance.current = Some(baseline);
    instance
}
