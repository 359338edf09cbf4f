//! Many independent runs at once.
//!
//! Each run is sequential and deterministic on its own, so the results do not
//! depend on the execution mode. With the `parallel` feature disabled every
//! mode runs sequentially.

use crate::error::Result;

use super::runner::{run_scenario, RunOutput};
use super::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    /// Rayon's global pool.
    #[default]
    Parallel,
    /// A dedicated pool with this many threads.
    ParallelWith(usize),
}

/// Runs every scenario; results come back in input order.
pub fn run_batch(scenarios: &[Scenario], mode: ExecMode) -> Vec<Result<RunOutput>> {
    match mode {
        ExecMode::Sequential => scenarios.iter().map(run_scenario).collect(),
        ExecMode::Parallel => parallel(scenarios),
        ExecMode::ParallelWith(n) => parallel_with(scenarios, n),
    }
}

#[cfg(feature = "parallel")]
fn parallel(scenarios: &[Scenario]) -> Vec<Result<RunOutput>> {
    use rayon::prelude::*;
    scenarios.par_iter().map(run_scenario).collect()
}

#[cfg(feature = "parallel")]
fn parallel_with(scenarios: &[Scenario], threads: usize) -> Vec<Result<RunOutput>> {
    match rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| parallel(scenarios)),
        Err(_) => parallel(scenarios),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel(scenarios: &[Scenario]) -> Vec<Result<RunOutput>> {
    scenarios.iter().map(run_scenario).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_with(scenarios: &[Scenario], _threads: usize) -> Vec<Result<RunOutput>> {
    parallel(scenarios)
}
