use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cake::{Allocation, Piece};
use crate::depth2::alg2;
use crate::direct::{alg1_four_line, alg_five_line, star_cut_and_choose};
use crate::domination::{domination_line, domination_tree};
use crate::error::{CakeError, CakeResult};
use crate::graph::GraphKind;
use crate::oracle::{Instance, Oracle, QueryLedger};
use crate::trace::{Alg2Round, RoundStats, RoundTrace, TraceRecorder, TraceSink};
use crate::verifier::{check_partition, is_k_fair_line, is_k_fair_tree, is_locally_envy_free};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Domination,
    Alg1,
    Alg5,
    Alg2,
    Star,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Domination,
        Protocol::Alg1,
        Protocol::Alg5,
        Protocol::Alg2,
        Protocol::Star,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Domination => "domination",
            Protocol::Alg1 => "alg1",
            Protocol::Alg5 => "alg5",
            Protocol::Alg2 => "alg2",
            Protocol::Star => "star",
        }
    }

    /// A sensible protocol for the graph: the closed forms where they
    /// apply, otherwise the general one.
    pub fn default_for(kind: GraphKind, n: usize) -> Protocol {
        match (kind, n) {
            (GraphKind::Star, _) => Protocol::Star,
            (GraphKind::Depth2Tree | GraphKind::TwoStar, _) => Protocol::Alg2,
            (GraphKind::Line, 4) => Protocol::Alg1,
            (GraphKind::Line, 5) => Protocol::Alg5,
            _ => Protocol::Domination,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown protocol `{s}`"))
    }
}

/// Round counts of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RoundsSummary {
    pub total: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_level_max: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub invocations: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_round_cuts: Option<u64>,
}

impl From<RoundStats> for RoundsSummary {
    fn from(s: RoundStats) -> Self {
        RoundsSummary {
            total: s.total,
            per_level_max: s.per_level_max,
            invocations: s.invocations,
            max_round_cuts: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunTrace {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub domination: Vec<RoundTrace>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub alg2: Vec<Alg2Round>,
}

/// Everything a verified run produced. The allocation is in internal agent
/// order; see [`to_labels`] for the file order.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub protocol: Protocol,
    pub allocation: Allocation,
    pub ledger: QueryLedger,
    pub scissor_cuts: u64,
    pub rounds: RoundsSummary,
    pub trace: RunTrace,
    /// Levels whose output failed the k-Fair check, as messages.
    pub level_failures: Vec<String>,
    pub levels_checked: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep per-round records.
    pub trace: bool,
    /// Check every Domination level's output for k-Fairness.
    pub check_levels: bool,
}

/// Records rounds and audits each finished level.
struct AuditSink<'a> {
    instance: &'a Instance,
    recorder: TraceRecorder,
    check_levels: bool,
    failures: Vec<String>,
    checked: usize,
}

impl TraceSink for AuditSink<'_> {
    fn wants_rounds(&self) -> bool {
        self.recorder.wants_rounds()
    }

    fn round(&mut self, round: RoundTrace) {
        self.recorder.round(round);
    }

    fn level_finished(&mut self, level: usize, rounds: usize, region: &Piece, output: &Allocation) {
        self.recorder.level_finished(level, rounds, region, output);
        if !self.check_levels {
            return;
        }
        self.checked += 1;
        let verdict = check_partition(self.instance, output, region).and_then(|()| {
            if self.instance.graph().kind() == GraphKind::Line {
                is_k_fair_line(self.instance, output, level)
            } else {
                is_k_fair_tree(self.instance, output, level)
            }
        });
        match verdict {
            Ok(None) => {}
            Ok(Some(v)) => self.failures.push(format!("level {level}: {v}")),
            Err(e) => self.failures.push(format!("level {level}: {e}")),
        }
    }
}

/// Runs `protocol` and re-verifies local envy-freeness before returning.
pub fn run(instance: &Instance, protocol: Protocol, options: RunOptions) -> CakeResult<RunOutput> {
    let mut oracle = Oracle::new(instance);
    let mut trace = RunTrace::default();
    let mut level_failures = Vec::new();
    let mut levels_checked = 0;
    let (allocation, rounds) = match protocol {
        Protocol::Domination => {
            let mut sink = AuditSink {
                instance,
                recorder: if options.trace {
                    TraceRecorder::full()
                } else {
                    TraceRecorder::counting()
                },
                check_levels: options.check_levels,
                failures: Vec::new(),
                checked: 0,
            };
            let whole = Piece::whole();
            let a = if instance.graph().kind() == GraphKind::Line {
                domination_line(&mut oracle, &whole, 1, &mut sink)?
            } else {
                domination_tree(&mut oracle, &whole, 1, &mut sink)?
            };
            trace.domination = sink.recorder.rounds;
            level_failures = sink.failures;
            levels_checked = sink.checked;
            (a, sink.recorder.stats.into())
        }
        Protocol::Alg1 => (alg1_four_line(&mut oracle)?, RoundsSummary { total: 2, ..Default::default() }),
        Protocol::Alg5 => (alg_five_line(&mut oracle)?, RoundsSummary { total: 3, ..Default::default() }),
        Protocol::Star => (star_cut_and_choose(&mut oracle)?, RoundsSummary { total: 1, ..Default::default() }),
        Protocol::Alg2 => {
            let out = alg2(&mut oracle, options.trace.then_some(&mut trace.alg2))?;
            let rounds = RoundsSummary {
                total: out.rounds,
                max_round_cuts: Some(out.max_round_cuts),
                ..Default::default()
            };
            (out.allocation, rounds)
        }
    };
    let violations = is_locally_envy_free(instance, &allocation)?;
    if let Some(v) = violations.first() {
        return Err(CakeError::VerificationFailed(format!(
            "agent {} envies agent {} by {} ({} violations)",
            v.envier + 1,
            v.envied + 1,
            v.gap,
            violations.len()
        )));
    }
    Ok(RunOutput {
        protocol,
        scissor_cuts: oracle.scissor_cuts(),
        ledger: oracle.into_ledger(),
        allocation,
        rounds,
        trace,
        level_failures,
        levels_checked,
    })
}

/// Reorders bundles from internal order to the instance file's labels.
pub fn to_labels(instance: &Instance, alloc: &Allocation) -> Allocation {
    let mut out = vec![Piece::empty(); alloc.len()];
    for (i, &l) in instance.graph().labels().iter().enumerate() {
        out[l] = alloc.bundle(i).clone();
    }
    Allocation::new(out)
}

/// Inverse of [`to_labels`].
pub fn from_labels(instance: &Instance, alloc: &Allocation) -> CakeResult<Allocation> {
    if alloc.len() != instance.n() {
        return Err(CakeError::IncompleteAllocation(format!(
            "{} bundles for {} agents",
            alloc.len(),
            instance.n()
        )));
    }
    let labels = instance.graph().labels();
    Ok(Allocation::new(labels.iter().map(|&l| alloc.bundle(l).clone()).collect()))
}

/// The result file: allocation in file order, ledger and round counts.
#[derive(Clone, Debug, Serialize)]
pub struct RunResult<'a> {
    pub protocol: Protocol,
    pub allocation: Allocation,
    pub ledger: &'a QueryLedger,
    pub rounds: &'a RoundsSummary,
}

impl RunOutput {
    pub fn result<'a>(&'a self, instance: &Instance) -> RunResult<'a> {
        RunResult {
            protocol: self.protocol,
            allocation: to_labels(instance, &self.allocation),
            ledger: &self.ledger,
            rounds: &self.rounds,
        }
    }
}
