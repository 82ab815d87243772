//! Instance generation, verified protocol runs and query benchmarks.

mod bench;
mod generate;
mod run;

pub use bench::{bench, reference_bound, BenchConfig, BenchRecord, BenchReport, BenchSummary, Sweep};
pub use generate::{generate, generate_instance, GenParams, DEFAULT_DENOMINATOR};
pub use run::{from_labels, run, to_labels, Protocol, RoundsSummary, RunOptions, RunOutput, RunResult, RunTrace};
