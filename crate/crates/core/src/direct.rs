//! Closed-form protocols: four and five agents on a line, and cut-and-choose
//! on a star. Each step charges its query cost explicitly, so the counts are
//! the same on every instance.

use crate::cake::{Allocation, ExactScalar, Piece};
use crate::error::{CakeError, CakeResult};
use crate::graph::GraphKind;
use crate::oracle::Oracle;
use crate::procedures::{eq_div_uncharged, equal_uncharged, select_uncharged, trim_uncharged};

fn require(oracle: &Oracle<'_>, kind: GraphKind, n: Option<usize>) -> CakeResult<()> {
    let g = oracle.instance().graph();
    if g.kind() != kind || !g.check().is_empty() {
        return Err(CakeError::WrongShape(format!("expected a {kind} graph, got {}", g.kind())));
    }
    if let Some(n) = n {
        if g.n() != n {
            return Err(CakeError::WrongShape(format!("expected {n} agents, got {}", g.n())));
        }
    }
    Ok(())
}

/// Position of the agent's favourite piece, ties to the first.
fn favourite(oracle: &Oracle<'_>, agent: usize, pieces: &[&Piece]) -> usize {
    let inst = oracle.instance();
    let mut best = 0;
    let mut best_value = inst.value(agent, pieces[0]);
    for (i, p) in pieces.iter().enumerate().skip(1) {
        let v = inst.value(agent, p);
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Takes the agent's favourite of `xs[avail]` out of `avail`.
fn pick(oracle: &Oracle<'_>, agent: usize, xs: &[Piece], avail: &mut Vec<usize>) -> usize {
    let refs: Vec<&Piece> = avail.iter().map(|&i| &xs[i]).collect();
    avail.remove(favourite(oracle, agent, &refs))
}

/// The two pieces `agent` selects from `xs[avail]`, in ascending index
/// order; `avail` keeps the rest.
fn pick_two(oracle: &Oracle<'_>, agent: usize, xs: &[Piece], avail: &mut Vec<usize>) -> [Piece; 2] {
    let offered: Vec<Piece> = avail.iter().map(|&i| xs[i].clone()).collect();
    let sel = select_uncharged(oracle, agent, &offered, 2).expect("at least two pieces");
    let mut chosen = [avail[sel.chosen[0]], avail[sel.chosen[1]]];
    chosen.sort_unstable();
    avail.retain(|i| !chosen.contains(i));
    [xs[chosen[0]].clone(), xs[chosen[1]].clone()]
}

/// An untrimmed and a trimmed pair of bundles on one side of the cutter.
#[derive(Default)]
struct Side {
    untrimmed: Piece,
    trimmed: Piece,
}

impl Side {
    /// Trim the pair; the least piece stays whole. Returns the trimming.
    fn trim(&mut self, oracle: &mut Oracle<'_>, agent: usize, pair: [Piece; 2]) -> CakeResult<Piece> {
        oracle.charge_cuts(agent, 1);
        let t = trim_uncharged(oracle, agent, &pair)?;
        let other = 1 - t.min_index;
        self.untrimmed = self.untrimmed.union(&t.pieces[t.min_index]);
        self.trimmed = self.trimmed.union(&t.pieces[other]);
        Ok(t.residue)
    }

    /// Equal the pair; the part inside the larger input joins the untrimmed
    /// bundle, the appended one the trimmed bundle.
    fn equal(&mut self, oracle: &mut Oracle<'_>, agent: usize, pair: [Piece; 2]) -> CakeResult<()> {
        oracle.charge_cuts(agent, 1);
        let e = equal_uncharged(oracle, agent, &pair)?;
        let other = 1 - e.x_star;
        self.untrimmed = self.untrimmed.union(&e.pieces[e.x_star]);
        self.trimmed = self.trimmed.union(&e.pieces[other]);
        Ok(())
    }
}

/// Four agents on a line: `a_3` cuts, `a_2` trims, then both phases are
/// merged into four bundles. Charges 8 cuts and 16 evals.
pub fn alg1_four_line(oracle: &mut Oracle<'_>) -> CakeResult<Allocation> {
    require(oracle, GraphKind::Line, Some(4))?;
    let (a1, a2, a3, a4) = (0, 1, 2, 3);

    oracle.charge_cuts(a3, 3);
    let p = eq_div_uncharged(oracle, a3, &Piece::whole(), 4)?;
    let mut avail: Vec<usize> = (0..4).collect();
    // the fourth value is implied by the other three
    oracle.charge_evals(a4, 3);
    let p4 = pick(oracle, a4, &p, &mut avail);
    oracle.charge_evals(a2, 3);
    let pair = pick_two(oracle, a2, &p, &mut avail);
    let p3 = p[avail[0]].clone();
    let mut left = Side::default();
    let t = left.trim(oracle, a2, pair)?;

    oracle.charge_cuts(a3, 3);
    oracle.charge_evals(a3, 1);
    let tp = eq_div_uncharged(oracle, a3, &t, 4)?;
    let mut avail: Vec<usize> = (0..4).collect();
    oracle.charge_evals(a4, 4);
    let t4 = pick(oracle, a4, &tp, &mut avail);
    oracle.charge_evals(a2, 3);
    let pair = pick_two(oracle, a2, &tp, &mut avail);
    let t3 = tp[avail[0]].clone();
    left.equal(oracle, a2, pair)?;

    let b1 = left.trimmed;
    let b2 = left.untrimmed;
    let b3 = p3.union(&t3);
    let b4 = p[p4].union(&tp[t4]);
    oracle.charge_evals(a1, 2);
    let (b1, b2) = if favourite(oracle, a1, &[&b1, &b2]) == 0 {
        (b1, b2)
    } else {
        (b2, b1)
    };
    Ok(Allocation::new(vec![b1, b2, b3, b4]))
}

/// What happened in the five-agent protocol besides the allocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiveLineRun {
    pub allocation: Allocation,
    /// `v_3(A_3) - v_3(W_L) >= (2/5) v_3(T)` after the first round, with
    /// `W_L` the left trimmed bundle.
    pub left_dominated: bool,
    /// The same test on the right.
    pub right_dominated: bool,
    /// The trimmer that switched to Equal in round two.
    pub first_equalizer: usize,
}

/// Five agents on a line with `a_3` cutting and both neighbours trimming.
/// Charges 18 cuts and 29 evals.
pub fn alg_five_line(oracle: &mut Oracle<'_>) -> CakeResult<Allocation> {
    alg_five_line_run(oracle).map(|r| r.allocation)
}

pub fn alg_five_line_run(oracle: &mut Oracle<'_>) -> CakeResult<FiveLineRun> {
    require(oracle, GraphKind::Line, Some(5))?;
    let (a1, a2, a3, a4, a5) = (0, 1, 2, 3, 4);
    let mut left = Side::default();
    let mut right = Side::default();
    let mut cutter = Piece::empty();
    let mut residue = Piece::whole();
    let mut first = None;
    let mut domination = (false, false);

    for round in 1..=3 {
        oracle.charge_cuts(a3, 4);
        if round > 1 {
            oracle.charge_evals(a3, 1);
        }
        let xs = eq_div_uncharged(oracle, a3, &residue, 5)?;
        let mut avail: Vec<usize> = (0..5).collect();
        oracle.charge_evals(a2, if round == 1 { 4 } else { 5 });
        let lp = pick_two(oracle, a2, &xs, &mut avail);
        oracle.charge_evals(a4, 3);
        let rp = pick_two(oracle, a4, &xs, &mut avail);
        cutter = cutter.union(&xs[avail[0]]);

        let (left_trims, right_trims) = match (round, first) {
            (1, _) => (true, true),
            (2, Some(eq)) => (eq != a2, eq != a4),
            _ => (false, false),
        };
        let mut next = Vec::new();
        if left_trims {
            next.push(left.trim(oracle, a2, lp)?);
        } else {
            left.equal(oracle, a2, lp)?;
        }
        if right_trims {
            next.push(right.trim(oracle, a4, rp)?);
        } else {
            right.equal(oracle, a4, rp)?;
        }
        residue = Piece::union_all(&next);

        if round == 1 {
            let own = oracle.cached_value(a3, &cutter);
            let need = ExactScalar::ratio(2, 5) * oracle.cached_value(a3, &residue);
            let l = &own - oracle.cached_value(a3, &left.trimmed) >= need;
            let r = &own - oracle.cached_value(a3, &right.trimmed) >= need;
            domination = (l, r);
            first = Some(if l { a2 } else { a4 });
        }
    }

    oracle.charge_evals(a1, 2);
    let (b1, b2) = if favourite(oracle, a1, &[&left.trimmed, &left.untrimmed]) == 0 {
        (left.trimmed, left.untrimmed)
    } else {
        (left.untrimmed, left.trimmed)
    };
    oracle.charge_evals(a5, 2);
    let (b5, b4) = if favourite(oracle, a5, &[&right.untrimmed, &right.trimmed]) == 0 {
        (right.untrimmed, right.trimmed)
    } else {
        (right.trimmed, right.untrimmed)
    };
    Ok(FiveLineRun {
        allocation: Allocation::new(vec![b1, b2, cutter, b4, b5]),
        left_dominated: domination.0,
        right_dominated: domination.1,
        first_equalizer: first.expect("set in round one"),
    })
}

/// The centre splits the cake into `n` equal pieces; leaves choose in
/// ascending order, each charged one eval per piece still on offer.
pub fn star_cut_and_choose(oracle: &mut Oracle<'_>) -> CakeResult<Allocation> {
    require(oracle, GraphKind::Star, None)?;
    let g = oracle.instance().graph();
    let n = g.n();
    let root = g.root();
    oracle.charge_cuts(root, (n - 1) as u64);
    let xs = eq_div_uncharged(oracle, root, &Piece::whole(), n)?;
    let mut avail: Vec<usize> = (0..n).collect();
    let mut bundles = vec![Piece::empty(); n];
    for (leaf, bundle) in bundles.iter_mut().enumerate().take(n - 1) {
        oracle.charge_evals(leaf, avail.len() as u64);
        *bundle = xs[pick(oracle, leaf, &xs, &mut avail)].clone();
    }
    bundles[root] = xs[avail[0]].clone();
    Ok(Allocation::new(bundles))
}
