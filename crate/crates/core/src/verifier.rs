//! Exact fairness and trace checks. Everything here recomputes values from
//! pieces and valuations; nothing calls into the protocols.

use std::fmt;

use serde::Serialize;

use crate::cake::{Allocation, ExactScalar, Piece};
use crate::error::{CakeError, CakeResult};
use crate::oracle::Instance;
use crate::graph::GraphKind;
use crate::trace::{Alg2Round, Phase, RoundTrace};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnvyViolation {
    pub envier: usize,
    pub envied: usize,
    /// `v_envier(B_envied) - v_envier(B_envier)`, positive.
    pub gap: ExactScalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    C1,
    C2,
    C3,
}

/// First failing k-Fair condition. `lhs` is the agent's own value, `rhs`
/// the value of the bundle it was compared with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FairnessViolation {
    pub condition: Condition,
    pub agent: usize,
    pub bundle: usize,
    pub lhs: ExactScalar,
    pub rhs: ExactScalar,
}

impl fmt::Display for FairnessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}: agent {} values own bundle {} against bundle {} at {}",
            self.condition,
            self.agent + 1,
            self.lhs,
            self.bundle + 1,
            self.rhs
        )
    }
}

fn check_shape(instance: &Instance, alloc: &Allocation) -> CakeResult<()> {
    if alloc.len() != instance.n() {
        return Err(CakeError::IncompleteAllocation(format!(
            "{} bundles for {} agents",
            alloc.len(),
            instance.n()
        )));
    }
    if let Some((i, j)) = alloc.first_overlap() {
        return Err(CakeError::IncompleteAllocation(format!(
            "bundles {} and {} overlap",
            i + 1,
            j + 1
        )));
    }
    Ok(())
}

/// Errors unless the bundles are disjoint and cover exactly `region`.
pub fn check_partition(instance: &Instance, alloc: &Allocation, region: &Piece) -> CakeResult<()> {
    check_shape(instance, alloc)?;
    if alloc.union() != *region {
        return Err(CakeError::IncompleteAllocation(
            "bundles do not cover the region exactly".into(),
        ));
    }
    Ok(())
}

/// All envious graph edges, in both directions. Empty means locally
/// envy-free.
pub fn is_locally_envy_free(instance: &Instance, alloc: &Allocation) -> CakeResult<Vec<EnvyViolation>> {
    check_partition(instance, alloc, &Piece::whole())?;
    Ok(envy_on_edges(instance, alloc))
}

fn envy_on_edges(instance: &Instance, alloc: &Allocation) -> Vec<EnvyViolation> {
    let mut out = Vec::new();
    for (child, parent) in instance.graph().edges() {
        for (i, j) in [(child, parent), (parent, child)] {
            let own = instance.value(i, alloc.bundle(i));
            let other = instance.value(i, alloc.bundle(j));
            if other > own {
                out.push(EnvyViolation {
                    envier: i,
                    envied: j,
                    gap: other - own,
                });
            }
        }
    }
    out.sort_by_key(|v| (v.envier, v.envied));
    out
}

struct Values<'a> {
    instance: &'a Instance,
    alloc: &'a Allocation,
}

impl Values<'_> {
    fn v(&self, agent: usize, bundle: usize) -> ExactScalar {
        self.instance.value(agent, self.alloc.bundle(bundle))
    }

    fn weakly_prefers(&self, cond: Condition, agent: usize, bundle: usize) -> Option<FairnessViolation> {
        let lhs = self.v(agent, agent);
        let rhs = self.v(agent, bundle);
        (lhs < rhs).then_some(FairnessViolation {
            condition: cond,
            agent,
            bundle,
            lhs,
            rhs,
        })
    }

    fn indifferent(&self, agent: usize, bundle: usize) -> Option<FairnessViolation> {
        let lhs = self.v(agent, agent);
        let rhs = self.v(agent, bundle);
        (lhs != rhs).then_some(FairnessViolation {
            condition: Condition::C2,
            agent,
            bundle,
            lhs,
            rhs,
        })
    }
}

fn check_k(instance: &Instance, k: usize) -> CakeResult<()> {
    if k == 0 || k > instance.n() {
        return Err(CakeError::WrongShape(format!("k = {k} outside 1..={}", instance.n())));
    }
    Ok(())
}

/// k-Fair on a line, `k` 1-based. Only disjointness is required of the
/// allocation; its union is taken as the region.
pub fn is_k_fair_line(
    instance: &Instance,
    alloc: &Allocation,
    k: usize,
) -> CakeResult<Option<FairnessViolation>> {
    check_shape(instance, alloc)?;
    check_k(instance, k)?;
    let n = instance.n();
    let vals = Values { instance, alloc };
    let k0 = k - 1;
    for i in k0..n {
        for j in [i.wrapping_sub(1), i + 1] {
            if j < n {
                if let Some(v) = vals.weakly_prefers(Condition::C1, i, j) {
                    return Ok(Some(v));
                }
            }
        }
    }
    for l in 0..=k0 {
        if let Some(v) = vals.indifferent(k0, l) {
            return Ok(Some(v));
        }
    }
    if k0 + 1 < n {
        for l in 0..=k0 {
            if let Some(v) = vals.weakly_prefers(Condition::C3, k0 + 1, l) {
                return Ok(Some(v));
            }
        }
    }
    Ok(None)
}

/// k-Fair on a rooted tree, `k` 1-based.
pub fn is_k_fair_tree(
    instance: &Instance,
    alloc: &Allocation,
    k: usize,
) -> CakeResult<Option<FairnessViolation>> {
    check_shape(instance, alloc)?;
    check_k(instance, k)?;
    let g = instance.graph();
    let n = g.n();
    let vals = Values { instance, alloc };
    let storage = g.storage(k - 1);
    for j in k - 1..n {
        for i in g.neighbors(j) {
            if let Some(v) = vals.weakly_prefers(Condition::C1, j, i) {
                return Ok(Some(v));
            }
        }
    }
    for j in k - 1..n {
        for &b in storage.storage(j) {
            if let Some(v) = vals.indifferent(j, b) {
                return Ok(Some(v));
            }
        }
    }
    for j in k - 1..n {
        for &l in g.children(j).iter().filter(|&&l| storage.is_active(l)) {
            for &b in storage.storage(l) {
                if let Some(v) = vals.weakly_prefers(Condition::C3, j, b) {
                    return Ok(Some(v));
                }
            }
        }
    }
    Ok(None)
}

/// Outcome of one named trace claim.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimResult {
    pub claim: String,
    pub checked: usize,
    pub violation: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClaimReport {
    pub claims: Vec<ClaimResult>,
}

impl ClaimReport {
    pub fn passed(&self) -> bool {
        self.claims.iter().all(|c| c.violation.is_none())
    }

    pub fn get(&self, claim: &str) -> Option<&ClaimResult> {
        self.claims.iter().find(|c| c.claim == claim)
    }

    pub fn merge(&mut self, other: ClaimReport) {
        for c in other.claims {
            match self.claims.iter_mut().find(|m| m.claim == c.claim) {
                Some(m) => {
                    m.checked += c.checked;
                    if m.violation.is_none() {
                        m.violation = c.violation;
                    }
                }
                None => self.claims.push(c),
            }
        }
    }
}

pub(crate) struct Tally {
    name: &'static str,
    checked: usize,
    violation: Option<String>,
}

impl Tally {
    pub(crate) fn new(name: &'static str) -> Self {
        Tally {
            name,
            checked: 0,
            violation: None,
        }
    }

    pub(crate) fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.violation.is_none() {
            self.violation = Some(describe());
        }
    }

    pub(crate) fn finish(self) -> ClaimResult {
        ClaimResult {
            claim: self.name.to_string(),
            checked: self.checked,
            violation: self.violation,
        }
    }
}

pub const RESIDUE_DECAY: &str = "residue_decay";
pub const MONOTONE_GAP: &str = "monotone_gap";
pub const DELAYED_DECAY: &str = "delayed_decay";
pub const ROUND_BOUND: &str = "round_bound";
pub const EQUAL_LAST: &str = "equal_last";

/// `ceil(d (1 + ln d)) + 1`, restated here so the checker stays standalone.
fn allowed_rounds(d: usize) -> usize {
    let d = d as f64;
    (d * (1.0 + d.ln())).ceil() as usize + 1
}

/// Splits a round stream into per-invocation runs of one level each.
fn invocations(trace: &[RoundTrace]) -> Vec<Vec<&RoundTrace>> {
    let mut open: std::collections::BTreeMap<usize, Vec<&RoundTrace>> = Default::default();
    let mut done = Vec::new();
    for r in trace {
        if r.round == 1 {
            if let Some(prev) = open.remove(&r.level) {
                done.push(prev);
            }
        }
        open.entry(r.level).or_default().push(r);
    }
    done.extend(open.into_values());
    done
}

/// Checks the per-round claims of the Domination analysis over a full
/// round stream.
pub fn check_trace_claims(trace: &[RoundTrace], instance: &Instance) -> ClaimReport {
    let mut decay = Tally::new(RESIDUE_DECAY);
    let mut gap = Tally::new(MONOTONE_GAP);
    let mut delayed = Tally::new(DELAYED_DECAY);
    let mut bound = Tally::new(ROUND_BOUND);
    let mut equal_last = Tally::new(EQUAL_LAST);
    for run in invocations(trace) {
        let first = run[0];
        let obs = first.observer;
        let d = first.group.len();
        let v = |p: &Piece| instance.value(obs, p);
        let where_ = |r: &RoundTrace| format!("level {} round {}", r.level, r.round);

        bound.check(run.len() <= allowed_rounds(d), || {
            format!("level {}: {} rounds, bound {}", first.level, run.len(), allowed_rounds(d))
        });
        let equals: Vec<usize> = (0..run.len()).filter(|&i| run[i].phase == Phase::Equal).collect();
        equal_last.check(
            equals.is_empty() || equals == [run.len() - 1],
            || format!("level {}: Equal rounds at {:?}", first.level, equals),
        );

        let factor = ExactScalar::one() - ExactScalar::ratio(1, d as i64);
        let mut prev_gaps = vec![ExactScalar::zero(); d];
        let lag = (d as f64 * (d as f64).ln()).ceil() as usize;
        for (t, r) in run.iter().enumerate() {
            let before = v(&r.residue);
            let after = v(&r.next_residue);
            decay.check(after <= &factor * &before, || {
                format!("{}: {} > (1-1/{d})·{}", where_(r), after, before)
            });

            let own = v(&r.bundles[obs]);
            let gaps: Vec<ExactScalar> = r.group.iter().map(|&i| &own - v(&r.bundles[i])).collect();
            if r.phase == Phase::Trim {
                for (i, (now, was)) in gaps.iter().zip(&prev_gaps).enumerate() {
                    gap.check(now >= was, || {
                        format!("{}: gap to bundle {} fell from {} to {}", where_(r), r.group[i] + 1, was, now)
                    });
                }
                let reference = v(&r.observer_piece);
                let c_t = r
                    .worked
                    .iter()
                    .map(|x| &reference - v(x))
                    .max()
                    .unwrap_or_else(ExactScalar::zero);
                if let Some(later) = run.get(t + 1 + lag) {
                    let rv = v(&later.residue);
                    delayed.check(rv <= c_t, || {
                        format!("{}: residue {} at round {} exceeds c_t = {}", where_(r), rv, later.round, c_t)
                    });
                }
            }
            prev_gaps = gaps;
        }
    }
    ClaimReport {
        claims: vec![
            decay.finish(),
            gap.finish(),
            delayed.finish(),
            bound.finish(),
            equal_last.finish(),
        ],
    }
}

pub const ALG2_DECAY: &str = "alg2_residue_decay";
pub const ALG2_MONOTONE: &str = "alg2_residue_monotone";
pub const ALG2_CUTS: &str = "alg2_cuts_per_round";
pub const ALG2_ROUNDS: &str = "alg2_round_total";
pub const ALG2_REMOVAL: &str = "alg2_two_round_removal";

/// Round limit for the depth-two protocol: `2n` on a 2-star, otherwise
/// `10 n^2 ceil(ln n + 1)`.
pub fn alg2_round_limit(kind: GraphKind, n: usize) -> usize {
    match kind {
        GraphKind::TwoStar => 2 * n,
        _ => 10 * n * n * ((n as f64).ln() + 1.0).ceil() as usize,
    }
}

/// Checks a depth-two protocol trace: root residue decay, per-round cut
/// counts, the round limit, and on 2-stars a removal every two rounds.
pub fn check_alg2_claims(trace: &[Alg2Round], instance: &Instance) -> ClaimReport {
    let g = instance.graph();
    let n = g.n();
    let root = g.root();
    let d = g.children(root).len();
    let factor = ExactScalar::one() - ExactScalar::ratio(d as i64 + 1, n as i64);
    let v = |p: &Piece| instance.value(root, p);

    let mut decay = Tally::new(ALG2_DECAY);
    let mut monotone = Tally::new(ALG2_MONOTONE);
    let mut cuts = Tally::new(ALG2_CUTS);
    let mut total = Tally::new(ALG2_ROUNDS);
    let mut removal = Tally::new(ALG2_REMOVAL);
    for r in trace {
        let before = v(&r.residue);
        let after = v(&r.next_residue);
        decay.check(after <= &factor * &before, || {
            format!("round {}: {} > {}·{}", r.round, after, factor, before)
        });
        monotone.check(after <= before, || format!("round {}: residue grew", r.round));
        cuts.check(r.scissor_cuts <= 3 * n as u64, || {
            format!("round {}: {} cuts, limit {}", r.round, r.scissor_cuts, 3 * n)
        });
    }
    let limit = alg2_round_limit(g.kind(), n);
    total.check(trace.len() <= limit, || format!("{} rounds, limit {limit}", trace.len()));
    if g.kind() == GraphKind::TwoStar {
        for w in trace.windows(2) {
            if w[0].trimmers.is_empty() {
                continue;
            }
            let after = w[1].trimmers.len() - w[1].removed.len();
            removal.check(after < w[0].trimmers.len(), || {
                format!("rounds {}-{}: no trimmer removed", w[0].round, w[1].round)
            });
        }
    }
    ClaimReport {
        claims: vec![
            decay.finish(),
            monotone.finish(),
            cuts.finish(),
            total.finish(),
            removal.finish(),
        ],
    }
}

/// Serializable summary for the command line.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub envy_free: bool,
    pub violations: Vec<EnvyViolation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_fair: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fairness_violation: Option<FairnessViolation>,
}
