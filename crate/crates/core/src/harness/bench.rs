use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::generate::{generate, GenParams, DEFAULT_DENOMINATOR};
use super::run::{run, Protocol, RunOptions};
use crate::domination::query_bound;
use crate::graph::GraphKind;
use crate::verifier::alg2_round_limit;

fn default_segments() -> usize {
    3
}

fn default_denominator() -> u32 {
    DEFAULT_DENOMINATOR
}

/// One family of runs: every `n` in `n_min..=n_max` times `seeds` seeds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sweep {
    pub protocol: Protocol,
    pub graph: GraphKind,
    pub n_min: usize,
    pub n_max: usize,
    pub seeds: u64,
    #[serde(default)]
    pub seed_start: u64,
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default = "default_denominator")]
    pub denominator: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sweeps: Vec<Sweep>,
    /// Fill the `ms` column; off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_time: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub protocol: Protocol,
    pub graph: GraphKind,
    pub n: usize,
    pub seed: u64,
    pub cut: u64,
    pub eval: u64,
    pub raw_eval: u64,
    pub rounds: usize,
    pub bound: f64,
    pub envy_free: bool,
    pub ms: u64,
}

/// Charged-query totals for one `(protocol, graph, n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchSummary {
    pub protocol: Protocol,
    pub graph: GraphKind,
    pub n: usize,
    pub runs: usize,
    pub failures: usize,
    pub min: u64,
    pub median: u64,
    pub max: u64,
    pub bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub summaries: Vec<BenchSummary>,
    /// `(protocol, n, seed, message)` for runs that did not verify.
    pub errors: Vec<(Protocol, usize, u64, String)>,
}

/// Reference query total the measurements are compared with.
pub fn reference_bound(protocol: Protocol, kind: GraphKind, n: usize) -> f64 {
    let nf = n as f64;
    match protocol {
        Protocol::Domination => query_bound(n),
        Protocol::Alg1 => 24.0,
        Protocol::Alg5 => 47.0,
        Protocol::Star => (nf - 1.0) + nf * (nf + 1.0) / 2.0 - 1.0,
        Protocol::Alg2 => alg2_round_limit(kind, n) as f64 * (nf * nf + 3.0 * nf + 1.0) + nf * nf,
    }
}

impl BenchReport {
    /// One line per run under the fixed header.
    pub fn records_csv(&self) -> String {
        to_csv(&self.records)
    }

    pub fn summaries_csv(&self) -> String {
        to_csv(&self.summaries)
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("plain records serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory buffer")).expect("csv is utf-8")
}

pub fn bench(config: &BenchConfig) -> BenchReport {
    let mut report = BenchReport::default();
    for sweep in &config.sweeps {
        for n in sweep.n_min..=sweep.n_max {
            let first = report.records.len();
            for seed in sweep.seed_start..sweep.seed_start + sweep.seeds {
                let params = GenParams {
                    seed,
                    n,
                    kind: sweep.graph,
                    segments: sweep.segments,
                    denominator: sweep.denominator,
                };
                let mut record = BenchRecord {
                    protocol: sweep.protocol,
                    graph: sweep.graph,
                    n,
                    seed,
                    cut: 0,
                    eval: 0,
                    raw_eval: 0,
                    rounds: 0,
                    bound: reference_bound(sweep.protocol, sweep.graph, n),
                    envy_free: false,
                    ms: 0,
                };
                let start = Instant::now();
                let outcome = generate(&params).and_then(|inst| run(&inst, sweep.protocol, RunOptions::default()));
                if config.record_time {
                    record.ms = start.elapsed().as_millis() as u64;
                }
                match outcome {
                    Ok(out) => {
                        record.cut = out.ledger.cut();
                        record.eval = out.ledger.eval();
                        record.raw_eval = out.ledger.raw_eval();
                        record.rounds = out.rounds.total;
                        record.envy_free = true;
                    }
                    Err(e) => report.errors.push((sweep.protocol, n, seed, e.to_string())),
                }
                report.records.push(record);
            }
            report.summaries.push(summarize(&report.records[first..], sweep, n));
        }
    }
    report
}

fn summarize(records: &[BenchRecord], sweep: &Sweep, n: usize) -> BenchSummary {
    let mut totals: Vec<u64> = records.iter().filter(|r| r.envy_free).map(|r| r.cut + r.eval).collect();
    totals.sort_unstable();
    let pick = |i: usize| totals.get(i).copied().unwrap_or(0);
    BenchSummary {
        protocol: sweep.protocol,
        graph: sweep.graph,
        n,
        runs: records.len(),
        failures: records.len() - totals.len(),
        min: pick(0),
        median: pick(totals.len() / 2),
        max: totals.last().copied().unwrap_or(0),
        bound: reference_bound(sweep.protocol, sweep.graph, n),
    }
}
