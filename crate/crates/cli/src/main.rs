use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use envytree_core::harness::{self, BenchConfig, GenParams, Protocol, RunOptions, DEFAULT_DENOMINATOR};
use envytree_core::verifier::{is_k_fair_line, is_k_fair_tree, is_locally_envy_free, VerificationReport};
use envytree_core::{Allocation, CakeError, GraphKind, Instance};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "envytree", version, about = "Locally envy-free cake cutting on trees, in exact arithmetic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen {
        #[arg(long, value_parser = parse_kind)]
        graph: GraphKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        segments: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Breakpoints are drawn from multiples of 1/denominator.
        #[arg(long, default_value_t = DEFAULT_DENOMINATOR)]
        denominator: u32,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a protocol and verify its allocation.
    Run {
        /// Defaults to the cheapest protocol for the instance's graph.
        #[arg(long, value_parser = parse_protocol)]
        protocol: Option<Protocol>,
        #[arg(long)]
        instance: PathBuf,
        /// Write per-round records here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also check every Domination level for k-Fairness.
        #[arg(long)]
        check_levels: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check an allocation for local envy-freeness and optionally k-Fairness.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        /// A result file or a bare allocation array.
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long, requires = "fairness")]
        k: Option<usize>,
        #[arg(long, value_enum, requires = "k")]
        fairness: Option<Fairness>,
    },
    /// Sweep protocols over seeded instances and write a CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Per-n aggregates; printed to stderr when omitted.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fairness {
    Line,
    Tree,
}

fn parse_kind(s: &str) -> Result<GraphKind, String> {
    s.parse::<GraphKind>().map_err(|e| e.to_string())
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse()
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing instance {}", path.display()))
}

fn read_allocation(path: &Path) -> Result<Allocation> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let inner = value.get("allocation").cloned().unwrap_or(value);
    serde_json::from_value(inner).with_context(|| format!("parsing allocation {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn verify(instance: &Instance, labelled: &Allocation, k: Option<(usize, Fairness)>) -> Result<VerificationReport> {
    let alloc = harness::from_labels(instance, labelled)?;
    let (envy_free, violations) = match is_locally_envy_free(instance, &alloc) {
        Ok(v) => (v.is_empty(), v),
        Err(CakeError::IncompleteAllocation(_)) if k.is_some() => (false, Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut report = VerificationReport {
        envy_free,
        violations,
        k: None,
        k_fair: None,
        fairness_violation: None,
    };
    if let Some((k, fairness)) = k {
        let found = match fairness {
            Fairness::Line => is_k_fair_line(instance, &alloc, k)?,
            Fairness::Tree => is_k_fair_tree(instance, &alloc, k)?,
        };
        report.k = Some(k);
        report.k_fair = Some(found.is_none());
        report.fairness_violation = found;
    }
    Ok(report)
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Gen {
            graph,
            n,
            segments,
            seed,
            denominator,
            output,
        } => {
            let inst = harness::generate(&GenParams {
                seed,
                n,
                kind: graph,
                segments,
                denominator,
            })?;
            write_json(&output, &inst)?;
        }
        Command::Run {
            protocol,
            instance,
            trace,
            check_levels,
            output,
        } => {
            let inst = read_instance(&instance)?;
            let protocol = protocol.unwrap_or_else(|| Protocol::default_for(inst.graph().kind(), inst.n()));
            let opts = RunOptions {
                trace: trace.is_some(),
                check_levels,
            };
            let out = harness::run(&inst, protocol, opts)?;
            if let Some(first) = out.level_failures.first() {
                bail!("{} levels failed the k-Fair check, first: {first}", out.level_failures.len());
            }
            write_json(&output, &out.result(&inst))?;
            if let Some(path) = trace {
                write_json(&path, &out.trace)?;
            }
            eprintln!(
                "{protocol}: locally envy-free, {} cut + {} eval queries",
                out.ledger.cut(),
                out.ledger.eval()
            );
        }
        Command::Verify {
            instance,
            allocation,
            k,
            fairness,
        } => {
            let inst = read_instance(&instance)?;
            let alloc = read_allocation(&allocation)?;
            let report = verify(&inst, &alloc, k.zip(fairness))?;
            writeln!(io::stdout().lock(), "{}", serde_json::to_string_pretty(&report)?)?;
            let ok = report.k_fair.unwrap_or(report.envy_free);
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::Bench {
            config,
            output,
            summary,
        } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg: BenchConfig = serde_json::from_str(&text).context("parsing bench config")?;
            let report = harness::bench(&cfg);
            fs::write(&output, report.records_csv()).with_context(|| format!("writing {}", output.display()))?;
            match summary {
                Some(path) => fs::write(&path, report.summaries_csv())?,
                None => eprint!("{}", report.summaries_csv()),
            }
            for (protocol, n, seed, msg) in &report.errors {
                eprintln!("{protocol} n={n} seed={seed}: {msg}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
