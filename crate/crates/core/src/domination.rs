//! The recursive Domination protocol on lines and trees.
//!
//! Levels are 1-based at the API, matching `k`; agent `a_k` is internal
//! index `k - 1`. Each level invocation returns a k-Fair allocation of the
//! region it was handed.

use crate::cake::{Allocation, ExactScalar, Piece};
use crate::error::{CakeError, CakeResult};
use crate::graph::{GraphKind, SocialGraph};
use crate::oracle::Oracle;
use crate::procedures::{eq_div, equal, select, trim};
use crate::trace::{Phase, RoundTrace, TraceSink};

/// `ceil(k (1 + ln k)) + 1`.
pub fn round_bound(k: usize) -> usize {
    let k = k as f64;
    (k * (1.0 + k.ln())).ceil() as usize + 1
}

/// `ceil(2n · 3^n · n! · (ln n)^n)`, as a float since it overflows integers
/// quickly.
pub fn query_bound(n: usize) -> f64 {
    let nf = n as f64;
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    (2.0 * nf * 3f64.powi(n as i32) * factorial * nf.ln().powi(n as i32)).ceil()
}

fn check_level(n: usize, k: usize) -> CakeResult<()> {
    if k == 0 || k > n {
        return Err(CakeError::WrongShape(format!("level {k} outside 1..={n}")));
    }
    Ok(())
}

/// k-Fair allocation of `region` for an instance on a line.
pub fn domination_line(
    oracle: &mut Oracle<'_>,
    region: &Piece,
    k: usize,
    sink: &mut dyn TraceSink,
) -> CakeResult<Allocation> {
    let g = oracle.instance().graph();
    if g.kind() != GraphKind::Line || !g.check().is_empty() {
        return Err(CakeError::NotALine);
    }
    check_level(g.n(), k)?;
    line_level(oracle, region, k - 1, sink)
}

fn base_case(
    oracle: &mut Oracle<'_>,
    region: &Piece,
    sink: &mut dyn TraceSink,
) -> CakeResult<Allocation> {
    let n = oracle.instance().n();
    let out = Allocation::new(eq_div(oracle, n - 1, region, n)?);
    sink.level_finished(n, 0, region, &out);
    Ok(out)
}

/// The domination test: does some group bundle trail the observer's own by
/// no more than the residue is worth to her?
fn needs_trim(
    oracle: &mut Oracle<'_>,
    observer: usize,
    residue: &Piece,
    bundles: &Allocation,
    group: &[usize],
) -> bool {
    let rv = oracle.cached_value(observer, residue);
    let own = oracle.cached_value(observer, bundles.bundle(observer));
    let mut trim_needed = false;
    for &i in group {
        let gap = &own - oracle.cached_value(observer, bundles.bundle(i));
        if gap <= rv {
            trim_needed = true;
        }
    }
    // a worthless residue can never be dominated strictly; hand it out now
    trim_needed && rv.is_positive()
}

/// Position of the observer's least valued piece, ties to the lowest.
fn observer_argmin(oracle: &mut Oracle<'_>, observer: usize, pieces: &[Piece]) -> usize {
    let mut best: Option<(usize, ExactScalar)> = None;
    for (i, p) in pieces.iter().enumerate() {
        let v = oracle.cached_value(observer, p);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((i, v));
        }
    }
    best.expect("non-empty").0
}

/// Hands Trim output to the group: the observer's least valued piece goes to
/// `group[w]`, the rest in order to the other members.
fn distribute_trimmed(
    bundles: &mut Allocation,
    group: &[usize],
    pieces: &[Piece],
    least: usize,
    w: usize,
) {
    let target = group[w];
    *bundles.bundle_mut(target) = bundles.bundle(target).union(&pieces[least]);
    let rest = pieces
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != least)
        .map(|(_, p)| p);
    let others = group.iter().filter(|&&g| g != target);
    for (p, &g) in rest.zip(others) {
        *bundles.bundle_mut(g) = bundles.bundle(g).union(p);
    }
}

struct RoundRecord<'a> {
    level: usize,
    round: usize,
    agent: usize,
    observer: usize,
    group: &'a [usize],
    phase: Phase,
    counter: usize,
    residue: &'a Piece,
    next_residue: &'a Piece,
    observer_piece: &'a Piece,
    worked: Vec<Piece>,
    bundles: &'a Allocation,
}

fn emit(sink: &mut dyn TraceSink, r: RoundRecord<'_>) {
    sink.round(RoundTrace {
        level: r.level,
        round: r.round,
        agent: r.agent,
        observer: r.observer,
        group: r.group.to_vec(),
        phase: r.phase,
        counter: r.counter,
        residue: r.residue.clone(),
        next_residue: r.next_residue.clone(),
        observer_piece: r.observer_piece.clone(),
        worked: r.worked,
        bundles: r.bundles.bundles().to_vec(),
    });
}

fn line_level(
    oracle: &mut Oracle<'_>,
    region: &Piece,
    k0: usize,
    sink: &mut dyn TraceSink,
) -> CakeResult<Allocation> {
    let n = oracle.instance().n();
    if k0 == n - 1 {
        return base_case(oracle, region, sink);
    }
    let next = k0 + 1;
    let group: Vec<usize> = (0..=k0).collect();
    let mut a = Allocation::empty(n);
    let mut residue = region.clone();
    let mut c = 0usize;
    let mut rounds = 0usize;
    while !residue.is_empty() {
        rounds += 1;
        let b = line_level(oracle, &residue, next, sink)?.into_bundles();
        for j in k0 + 2..n {
            *a.bundle_mut(j) = a.bundle(j).union(&b[j]);
        }
        let sel = select(oracle, k0, &b[..=next], k0 + 1)?;
        let left = &b[sel.rest[0]];
        *a.bundle_mut(next) = a.bundle(next).union(left);
        let chosen: Vec<Piece> = sel.chosen.iter().map(|&i| b[i].clone()).collect();

        let counter = c;
        let (phase, worked, new_residue) = if needs_trim(oracle, next, &residue, &a, &group) {
            let t = trim(oracle, k0, &chosen)?;
            let least = observer_argmin(oracle, next, &t.pieces);
            distribute_trimmed(&mut a, &group, &t.pieces, least, c % (k0 + 1));
            c += 1;
            (Phase::Trim, t.pieces, t.residue)
        } else {
            let e = equal(oracle, k0, &chosen)?;
            for (i, p) in e.pieces.iter().enumerate() {
                *a.bundle_mut(i) = a.bundle(i).union(p);
            }
            (Phase::Equal, e.pieces, Piece::empty())
        };
        if sink.wants_rounds() {
            emit(
                sink,
                RoundRecord {
                    level: k0 + 1,
                    round: rounds,
                    agent: k0,
                    observer: next,
                    group: &group,
                    phase,
                    counter,
                    residue: &residue,
                    next_residue: &new_residue,
                    observer_piece: left,
                    worked,
                    bundles: &a,
                },
            );
        }
        residue = new_residue;
    }
    sink.level_finished(k0 + 1, rounds, region, &a);
    Ok(a)
}

/// k-Fair allocation of `region` for an instance on any rooted tree.
pub fn domination_tree(
    oracle: &mut Oracle<'_>,
    region: &Piece,
    k: usize,
    sink: &mut dyn TraceSink,
) -> CakeResult<Allocation> {
    let g = oracle.instance().graph();
    if let Some(v) = g.check().first() {
        return Err(CakeError::InvalidGraph(v.to_string()));
    }
    check_level(g.n(), k)?;
    let g = g.clone();
    tree_level(oracle, &g, region, k - 1, sink)
}

/// Re-indexes `b` so that the chosen storage bundles (in selection order)
/// sit at the group's indices in ascending order; bundles pushed out of the
/// group move, ascending, to the vacated indices outside it.
fn reindex(b: &mut [Piece], storage: &[usize], chosen: &[usize], group: &[usize]) {
    let chosen_slots: Vec<usize> = chosen.iter().map(|&c| storage[c]).collect();
    let original = b.to_vec();
    let in_group = |i: &usize| group.binary_search(i).is_ok();
    let mut vacated: Vec<usize> = chosen_slots.iter().copied().filter(|i| !in_group(i)).collect();
    vacated.sort_unstable();
    let mut displaced: Vec<usize> = group
        .iter()
        .copied()
        .filter(|g| !chosen_slots.contains(g))
        .collect();
    displaced.sort_unstable();
    for (slot, &from) in group.iter().zip(&chosen_slots) {
        b[*slot] = original[from].clone();
    }
    for (slot, from) in vacated.into_iter().zip(displaced) {
        b[slot] = original[from].clone();
    }
}

fn tree_level(
    oracle: &mut Oracle<'_>,
    g: &SocialGraph,
    region: &Piece,
    k0: usize,
    sink: &mut dyn TraceSink,
) -> CakeResult<Allocation> {
    let n = g.n();
    if k0 == n - 1 {
        return base_case(oracle, region, sink);
    }
    let observer = g.parent(k0).expect("non-root agent has a parent");
    let group: Vec<usize> = g.descendants(k0).to_vec();
    let d = group.len();
    let storage: Vec<usize> = g.storage(k0 + 1).storage(observer).to_vec();
    let mut a = Allocation::empty(n);
    let mut residue = region.clone();
    let mut c = 0usize;
    let mut rounds = 0usize;
    while !residue.is_empty() {
        rounds += 1;
        let mut b = tree_level(oracle, g, &residue, k0 + 1, sink)?.into_bundles();
        let xs: Vec<Piece> = storage.iter().map(|&s| b[s].clone()).collect();
        let sel = select(oracle, k0, &xs, d)?;
        reindex(&mut b, &storage, &sel.chosen, &group);
        for j in (0..n).filter(|j| group.binary_search(j).is_err()) {
            *a.bundle_mut(j) = a.bundle(j).union(&b[j]);
        }
        let chosen: Vec<Piece> = group.iter().map(|&i| b[i].clone()).collect();

        let counter = c;
        let (phase, worked, new_residue) = if needs_trim(oracle, observer, &residue, &a, &group) {
            let t = trim(oracle, k0, &chosen)?;
            let least = observer_argmin(oracle, observer, &t.pieces);
            distribute_trimmed(&mut a, &group, &t.pieces, least, c % d);
            c += 1;
            (Phase::Trim, t.pieces, t.residue)
        } else {
            let e = equal(oracle, k0, &chosen)?;
            for (&i, p) in group.iter().zip(&e.pieces) {
                *a.bundle_mut(i) = a.bundle(i).union(p);
            }
            (Phase::Equal, e.pieces, Piece::empty())
        };
        if sink.wants_rounds() {
            emit(
                sink,
                RoundRecord {
                    level: k0 + 1,
                    round: rounds,
                    agent: k0,
                    observer,
                    group: &group,
                    phase,
                    counter,
                    residue: &residue,
                    next_residue: &new_residue,
                    observer_piece: &b[observer],
                    worked,
                    bundles: &a,
                },
            );
        }
        residue = new_residue;
    }
    sink.level_finished(k0 + 1, rounds, region, &a);
    Ok(a)
}
