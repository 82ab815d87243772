//! Select, Trim, Equal and Eq-Div, charged through an [`Oracle`].

use std::collections::VecDeque;

use crate::cake::{ExactScalar, Piece};
use crate::error::{CakeError, CakeResult};
use crate::oracle::Oracle;

/// Indices into the input list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    /// Highest value first, ties to the lower index.
    pub chosen: Vec<usize>,
    /// Unchosen indices in input order.
    pub rest: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trimmed {
    /// Same order as the input; every piece has the minimum value.
    pub pieces: Vec<Piece>,
    pub residue: Piece,
    /// Input index of the untouched minimum piece.
    pub min_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equalized {
    pub pieces: Vec<Piece>,
    /// Input index whose piece was at least average and whose output is a
    /// subset of it.
    pub x_star: usize,
}

/// Non-empty on both sides, i.e. a new boundary on the cake.
fn splits(prefix: &Piece, suffix: &Piece) -> u64 {
    u64::from(!prefix.is_empty() && !suffix.is_empty())
}

fn counted(k: usize) -> u64 {
    k as u64
}

/// The agent's `m` favourite pieces. Charges `|X|` evals.
pub fn select(oracle: &mut Oracle<'_>, agent: usize, xs: &[Piece], m: usize) -> CakeResult<Selection> {
    let out = select_uncharged(oracle, agent, xs, m)?;
    oracle.charge_evals(agent, counted(xs.len()));
    Ok(out)
}

pub(crate) fn select_uncharged(oracle: &Oracle<'_>, agent: usize, xs: &[Piece], m: usize) -> CakeResult<Selection> {
    if m > xs.len() {
        return Err(CakeError::MTooLarge {
            m,
            available: xs.len(),
        });
    }
    let values: Vec<ExactScalar> = xs.iter().map(|x| oracle.instance().value(agent, x)).collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));
    let chosen: Vec<usize> = order[..m].to_vec();
    let mut rest: Vec<usize> = order[m..].to_vec();
    rest.sort_unstable();
    Ok(Selection { chosen, rest })
}

/// Cuts every piece down to the value of the least one, keeping left
/// prefixes. Charges `|X| - 1` cuts and `|X|` evals.
pub fn trim(oracle: &mut Oracle<'_>, agent: usize, xs: &[Piece]) -> CakeResult<Trimmed> {
    let out = trim_uncharged(oracle, agent, xs)?;
    oracle.charge_evals(agent, counted(xs.len()));
    oracle.charge_cuts(agent, counted(xs.len() - 1));
    Ok(out)
}

pub(crate) fn trim_uncharged(oracle: &mut Oracle<'_>, agent: usize, xs: &[Piece]) -> CakeResult<Trimmed> {
    if xs.is_empty() {
        return Err(CakeError::EmptyInput);
    }
    let values: Vec<ExactScalar> = xs.iter().map(|x| oracle.instance().value(agent, x)).collect();
    let min_index = (0..xs.len())
        .min_by(|&a, &b| values[a].cmp(&values[b]).then(a.cmp(&b)))
        .expect("non-empty");
    let tau = values[min_index].clone();
    let mut pieces = Vec::with_capacity(xs.len());
    let mut trimmings = Vec::new();
    let mut cuts = 0;
    for (j, x) in xs.iter().enumerate() {
        if j == min_index {
            pieces.push(x.clone());
            continue;
        }
        let (keep, cut_off) = oracle.cut_piece_uncharged(agent, x, &tau)?;
        cuts += splits(&keep, &cut_off);
        pieces.push(keep);
        trimmings.push(cut_off);
    }
    oracle.add_scissor_cuts(cuts);
    Ok(Trimmed {
        pieces,
        residue: Piece::union_all(&trimmings),
        min_index,
    })
}

/// Redistributes the pieces so each is worth the average. Charges
/// `|X| - 1` cuts and `|X|` evals; the physical cuts are tallied apart.
pub fn equal(oracle: &mut Oracle<'_>, agent: usize, xs: &[Piece]) -> CakeResult<Equalized> {
    let out = equal_uncharged(oracle, agent, xs)?;
    oracle.charge_evals(agent, counted(xs.len()));
    oracle.charge_cuts(agent, counted(xs.len() - 1));
    Ok(out)
}

pub(crate) fn equal_uncharged(oracle: &mut Oracle<'_>, agent: usize, xs: &[Piece]) -> CakeResult<Equalized> {
    if xs.is_empty() {
        return Err(CakeError::EmptyInput);
    }
    let inst = oracle.instance();
    let value = |p: &Piece| inst.value(agent, p);
    let values: Vec<ExactScalar> = xs.iter().map(value).collect();
    let total: ExactScalar = values.iter().sum();
    let tau = total / ExactScalar::from_usize(xs.len());
    let x_star = (0..xs.len())
        .find(|&j| values[j] >= tau)
        .expect("some piece reaches the average");

    let mut pieces: Vec<Piece> = xs.to_vec();
    // surplus fragments with the index of the piece they came from
    let mut pool: VecDeque<(usize, Piece)> = VecDeque::new();
    let mut cuts = 0;
    for j in 0..xs.len() {
        if values[j] >= tau {
            let (keep, surplus) = oracle.cut_piece_uncharged(agent, &xs[j], &tau)?;
            cuts += splits(&keep, &surplus);
            pieces[j] = keep;
            if !surplus.is_empty() {
                pool.push_back((j, surplus));
            }
        }
    }
    for j in 0..xs.len() {
        if values[j] >= tau {
            continue;
        }
        let mut have = values[j].clone();
        while have < tau {
            let (origin, frag) = pool
                .pop_front()
                .expect("surplus covers every shortfall exactly");
            let worth = value(&frag);
            let need = &tau - &have;
            if worth <= need {
                have += &worth;
                pieces[j] = pieces[j].union(&frag);
            } else {
                let (part, back) = oracle.cut_piece_uncharged(agent, &frag, &need)?;
                cuts += splits(&part, &back);
                have += &need;
                pieces[j] = pieces[j].union(&part);
                pool.push_front((origin, back));
            }
        }
    }
    // anything left is worthless to the agent; send it home
    for (origin, frag) in pool {
        pieces[origin] = pieces[origin].union(&frag);
    }
    oracle.add_scissor_cuts(cuts);
    Ok(Equalized { pieces, x_star })
}

/// Splits `r` into `n` left-to-right pieces of equal value. Charges `n - 1`
/// cuts, plus one eval unless `r` is the whole cake.
pub fn eq_div(oracle: &mut Oracle<'_>, agent: usize, r: &Piece, n: usize) -> CakeResult<Vec<Piece>> {
    if n == 0 {
        return Err(CakeError::EmptyInput);
    }
    if r.is_empty() {
        return Ok(vec![Piece::empty(); n]);
    }
    oracle.charge_cuts(agent, counted(n - 1));
    if *r != Piece::whole() {
        oracle.charge_evals(agent, 1);
    }
    eq_div_uncharged(oracle, agent, r, n)
}

pub(crate) fn eq_div_uncharged(oracle: &mut Oracle<'_>, agent: usize, r: &Piece, n: usize) -> CakeResult<Vec<Piece>> {
    if n == 0 {
        return Err(CakeError::EmptyInput);
    }
    let tau = oracle.instance().value(agent, r) / ExactScalar::from_usize(n);
    let mut out = Vec::with_capacity(n);
    let mut rest = r.clone();
    let mut cuts = 0;
    for _ in 1..n {
        let (head, tail) = oracle.cut_piece_uncharged(agent, &rest, &tau)?;
        cuts += splits(&head, &tail);
        out.push(head);
        rest = tail;
    }
    out.push(rest);
    oracle.add_scissor_cuts(cuts);
    Ok(out)
}
