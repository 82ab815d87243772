//! The trim-and-equal protocol for trees of depth at most two, with the
//! root as cutter and its children as trimmers.

use crate::cake::{Allocation, ExactScalar, Piece};
use crate::error::{CakeError, CakeResult};
use crate::graph::GraphKind;
use crate::oracle::{Instance, Oracle};
use crate::procedures::{eq_div, equal, select, trim};
use crate::trace::Alg2Round;
use crate::verifier::{self, ClaimReport};

/// The root dominates a bundle when its advantage covers the share of the
/// residue the bundle could still collect.
pub fn dominates(gap: &ExactScalar, residue: &ExactScalar, l_i: usize, d: usize) -> bool {
    let share = ExactScalar::ratio(l_i as i64 + 1, d as i64 + 1).min(ExactScalar::one());
    *gap >= share * residue
}

/// The run's allocation and round statistics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alg2Outcome {
    pub allocation: Allocation,
    pub rounds: usize,
    /// Largest number of new boundaries made in a single round.
    pub max_round_cuts: u64,
}

struct Child {
    agent: usize,
    leaves: Vec<usize>,
    bundles: Vec<Piece>,
    trimming: bool,
}

/// Position of the piece `agent` values least, ties to the first.
fn argmin_for(oracle: &mut Oracle<'_>, agent: usize, pieces: &[Piece]) -> usize {
    let values: Vec<ExactScalar> = pieces.iter().map(|p| oracle.cached_value(agent, p)).collect();
    (0..pieces.len())
        .min_by(|&a, &b| values[a].cmp(&values[b]).then(a.cmp(&b)))
        .expect("non-empty")
}

/// Runs the protocol; with `trace` set, every round is recorded.
pub fn alg2(oracle: &mut Oracle<'_>, mut trace: Option<&mut Vec<Alg2Round>>) -> CakeResult<Alg2Outcome> {
    let g = oracle.instance().graph();
    if !matches!(g.kind(), GraphKind::Depth2Tree | GraphKind::TwoStar | GraphKind::Star) || !g.check().is_empty() {
        return Err(CakeError::WrongShape(format!("depth-two tree expected, got {}", g.kind())));
    }
    let n = g.n();
    let root = g.root();
    let d = g.children(root).len();
    let mut children: Vec<Child> = g
        .children(root)
        .iter()
        .map(|&i| Child {
            agent: i,
            leaves: g.children(i).to_vec(),
            bundles: vec![Piece::empty(); g.children(i).len() + 1],
            trimming: true,
        })
        .collect();
    let mut root_bundle = Piece::empty();
    let mut residue = Piece::whole();
    let mut rounds = 0;
    let mut max_round_cuts = 0;

    while children.iter().any(|c| c.trimming) || !residue.is_empty() {
        rounds += 1;
        let cuts_before = oracle.scissor_cuts();
        let trimmers: Vec<usize> = children.iter().filter(|c| c.trimming).map(|c| c.agent).collect();

        let mut xs = eq_div(oracle, root, &residue, n)?;
        let mut picked = Vec::with_capacity(children.len());
        for c in &children {
            let sel = select(oracle, c.agent, &xs, c.bundles.len())?;
            let mut chosen = sel.chosen.clone();
            chosen.sort_unstable();
            let mine: Vec<Piece> = chosen.iter().map(|&j| xs[j].clone()).collect();
            xs = sel.rest.iter().map(|&j| xs[j].clone()).collect();
            picked.push(mine);
        }
        root_bundle = root_bundle.union(&Piece::union_all(&xs));

        let mut trimmings = Vec::new();
        for (c, mine) in children.iter_mut().zip(picked) {
            if c.trimming {
                let t = trim(oracle, c.agent, &mine)?;
                trimmings.push(t.residue);
                c.bundles[0] = c.bundles[0].union(&t.pieces[t.min_index]);
                let mut rest: Vec<Piece> = t
                    .pieces
                    .into_iter()
                    .enumerate()
                    .filter(|&(j, _)| j != t.min_index)
                    .map(|(_, p)| p)
                    .collect();
                if rest.is_empty() {
                    continue;
                }
                let w = 1 + argmax_bundle(oracle, root, &c.bundles[1..]);
                let x_t = rest.remove(argmin_for(oracle, root, &rest));
                c.bundles[w] = c.bundles[w].union(&x_t);
                let others = (1..c.bundles.len()).filter(|&k| k != w);
                for (k, p) in others.zip(rest) {
                    c.bundles[k] = c.bundles[k].union(&p);
                }
            } else {
                let e = equal(oracle, c.agent, &mine)?;
                let mut targets = 1..c.bundles.len();
                for (j, p) in e.pieces.into_iter().enumerate() {
                    let k = if j == e.x_star { 0 } else { targets.next().expect("one bundle per piece") };
                    c.bundles[k] = c.bundles[k].union(&p);
                }
            }
        }
        let next_residue = Piece::union_all(&trimmings);

        let own = oracle.cached_value(root, &root_bundle);
        let left = oracle.cached_value(root, &next_residue);
        let mut removed = Vec::new();
        for c in children.iter_mut().filter(|c| c.trimming) {
            let l_i = c.leaves.len();
            let all = c.bundles[1..].iter().all(|b| {
                let gap = &own - oracle.cached_value(root, b);
                dominates(&gap, &left, l_i, d)
            });
            if all {
                c.trimming = false;
                removed.push(c.agent);
            }
        }

        let round_cuts = oracle.scissor_cuts() - cuts_before;
        max_round_cuts = max_round_cuts.max(round_cuts);
        if let Some(t) = trace.as_deref_mut() {
            t.push(Alg2Round {
                round: rounds,
                trimmers,
                removed,
                residue: residue.clone(),
                next_residue: next_residue.clone(),
                scissor_cuts: round_cuts,
                root_bundle: root_bundle.clone(),
                child_bundles: children.iter().map(|c| (c.agent, c.bundles.clone())).collect(),
            });
        }
        residue = next_residue;
    }

    let mut out = vec![Piece::empty(); n];
    out[root] = root_bundle;
    for c in children {
        let mut avail: Vec<Piece> = c.bundles;
        for &leaf in &c.leaves {
            let sel = select(oracle, leaf, &avail, 1)?;
            out[leaf] = avail.remove(sel.chosen[0]);
        }
        out[c.agent] = avail.pop().expect("one bundle left for the child");
    }
    Ok(Alg2Outcome {
        allocation: Allocation::new(out),
        rounds,
        max_round_cuts,
    })
}

fn argmax_bundle(oracle: &mut Oracle<'_>, agent: usize, bundles: &[Piece]) -> usize {
    let values: Vec<ExactScalar> = bundles.iter().map(|p| oracle.cached_value(agent, p)).collect();
    (0..bundles.len())
        .max_by(|&a, &b| values[a].cmp(&values[b]).then(b.cmp(&a)))
        .expect("non-empty")
}

/// Checks a recorded run against the residue decay and round limits.
pub fn alg2_round_bounds(trace: &[Alg2Round], instance: &Instance) -> ClaimReport {
    verifier::check_alg2_claims(trace, instance)
}
