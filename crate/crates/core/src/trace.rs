//! Per-round protocol telemetry and the sinks that receive it.

use serde::Serialize;

use crate::cake::{Allocation, Piece};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Trim,
    Equal,
}

/// One while-loop round of a Domination level. Values are not stored: a
/// checker recomputes them from the pieces and the instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundTrace {
    /// 1-based level `k`.
    pub level: usize,
    /// 1-based round `t` within this invocation of the level.
    pub round: usize,
    /// Internal index of the selecting agent `a_k`.
    pub agent: usize,
    /// Internal index of the agent whose domination is tracked.
    pub observer: usize,
    /// `D_k`, ascending.
    pub group: Vec<usize>,
    pub phase: Phase,
    /// Counter `c` at the start of the round.
    pub counter: usize,
    /// `R^t`.
    pub residue: Piece,
    /// `R^{t+1}`, empty after an Equal round.
    pub next_residue: Piece,
    /// Piece the observer received this round (`X_{k+1}^t`).
    pub observer_piece: Piece,
    /// The agent's pieces after Trim or Equal, aligned with `group`.
    pub worked: Vec<Piece>,
    /// `A^t` after the round.
    pub bundles: Vec<Piece>,
}

/// Receives telemetry from a protocol run. Default methods ignore it.
pub trait TraceSink {
    /// Whether round records should be built at all.
    fn wants_rounds(&self) -> bool {
        false
    }

    fn round(&mut self, _round: RoundTrace) {}

    /// Called once per invocation of a level, with the region it divided.
    fn level_finished(&mut self, _level: usize, _rounds: usize, _region: &Piece, _output: &Allocation) {
    }
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NoTrace;

impl TraceSink for NoTrace {}

/// Round counts gathered per level.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RoundStats {
    /// Sum of while-rounds over every invocation of every level.
    pub total: usize,
    /// Largest round count seen for a single invocation, indexed by `k - 1`.
    pub per_level_max: Vec<usize>,
    /// Invocations per level, indexed by `k - 1`.
    pub invocations: Vec<usize>,
}

impl RoundStats {
    pub fn record(&mut self, level: usize, rounds: usize) {
        if self.per_level_max.len() < level {
            self.per_level_max.resize(level, 0);
            self.invocations.resize(level, 0);
        }
        self.total += rounds;
        let slot = &mut self.per_level_max[level - 1];
        *slot = (*slot).max(rounds);
        self.invocations[level - 1] += 1;
    }
}

/// Keeps round counts, and optionally every round record.
#[derive(Debug, Default)]
pub struct TraceRecorder {
    keep_rounds: bool,
    pub stats: RoundStats,
    pub rounds: Vec<RoundTrace>,
}

impl TraceRecorder {
    pub fn counting() -> Self {
        TraceRecorder::default()
    }

    pub fn full() -> Self {
        TraceRecorder {
            keep_rounds: true,
            ..TraceRecorder::default()
        }
    }
}

impl TraceSink for TraceRecorder {
    fn wants_rounds(&self) -> bool {
        self.keep_rounds
    }

    fn round(&mut self, round: RoundTrace) {
        self.rounds.push(round);
    }

    fn level_finished(&mut self, level: usize, rounds: usize, _region: &Piece, _output: &Allocation) {
        self.stats.record(level, rounds);
    }
}

/// One while-loop round of the depth-two protocol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Alg2Round {
    /// 1-based round number.
    pub round: usize,
    /// Active trimmers at the start of the round, ascending.
    pub trimmers: Vec<usize>,
    /// Trimmers dropped by the domination test at the end of the round.
    pub removed: Vec<usize>,
    /// `R^t`.
    pub residue: Piece,
    /// `R^{t+1}`.
    pub next_residue: Piece,
    /// Boundaries actually added to the cake this round.
    pub scissor_cuts: u64,
    /// The root's bundle after the round.
    pub root_bundle: Piece,
    /// For each child of the root, ascending, its bundles `A^(i)_0..`.
    pub child_bundles: Vec<(usize, Vec<Piece>)>,
}
