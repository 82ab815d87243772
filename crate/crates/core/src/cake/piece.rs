use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ExactScalar;

/// A closed interval `[lo, hi]` with `lo < hi`.
///
/// Endpoints carry no mass under a non-atomic valuation, so pieces are
/// treated as measure classes: `[0,1/4] ∪ [1/4,1/2]` is the single interval
/// `[0,1/2]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: ExactScalar,
    hi: ExactScalar,
}

impl Interval {
    /// Returns `None` for zero-width or inverted bounds.
    pub fn new(lo: ExactScalar, hi: ExactScalar) -> Option<Self> {
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn lo(&self) -> &ExactScalar {
        &self.lo
    }

    pub fn hi(&self) -> &ExactScalar {
        &self.hi
    }

    pub fn width(&self) -> ExactScalar {
        &self.hi - &self.lo
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A finite union of disjoint intervals of the cake, kept in canonical form:
/// sorted by `lo`, pairwise disjoint and non-adjacent.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Piece {
    intervals: Vec<Interval>,
}

impl Piece {
    pub fn empty() -> Self {
        Piece::default()
    }

    /// The whole cake `[0,1]`.
    pub fn whole() -> Self {
        Piece::interval(ExactScalar::zero(), ExactScalar::one())
    }

    pub fn interval(lo: ExactScalar, hi: ExactScalar) -> Self {
        Piece {
            intervals: Interval::new(lo, hi).into_iter().collect(),
        }
    }

    /// Builds a canonical piece from arbitrary `(lo, hi)` pairs. Degenerate
    /// pairs are dropped, overlapping or touching ones merged.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (ExactScalar, ExactScalar)>,
    {
        Self::canonicalize(
            pairs
                .into_iter()
                .filter_map(|(lo, hi)| Interval::new(lo, hi))
                .collect(),
        )
    }

    fn canonicalize(mut raw: Vec<Interval>) -> Self {
        raw.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(raw.len());
        for iv in raw {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        Piece { intervals: out }
    }

    /// Wraps intervals that are already sorted, disjoint and non-adjacent.
    pub(crate) fn from_sorted_unchecked(intervals: Vec<Interval>) -> Self {
        debug_assert!(intervals.windows(2).all(|w| w[0].hi < w[1].lo));
        Piece { intervals }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Total length (Lebesgue measure).
    pub fn length(&self) -> ExactScalar {
        self.intervals.iter().map(Interval::width).sum()
    }

    pub fn is_within_unit(&self) -> bool {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(first), Some(last)) => {
                !first.lo.is_negative() && last.hi <= ExactScalar::one()
            }
            _ => true,
        }
    }

    pub fn union(&self, other: &Piece) -> Piece {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.clone();
        }
        let mut merged = Vec::with_capacity(self.intervals.len() + other.intervals.len());
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() || j < other.intervals.len() {
            let take_left = match (self.intervals.get(i), other.intervals.get(j)) {
                (Some(a), Some(b)) => a.lo <= b.lo,
                (Some(_), None) => true,
                _ => false,
            };
            let next = if take_left {
                i += 1;
                &self.intervals[i - 1]
            } else {
                j += 1;
                &other.intervals[j - 1]
            };
            match merged.last_mut() {
                Some(Interval { hi, .. }) if next.lo <= *hi => {
                    if next.hi > *hi {
                        *hi = next.hi.clone();
                    }
                }
                _ => merged.push(next.clone()),
            }
        }
        Piece { intervals: merged }
    }

    pub fn union_all<'a, I: IntoIterator<Item = &'a Piece>>(pieces: I) -> Piece {
        let mut all = Vec::new();
        for p in pieces {
            all.extend(p.intervals.iter().cloned());
        }
        Self::canonicalize(all)
    }

    pub fn subtract(&self, other: &Piece) -> Piece {
        if self.is_empty() || other.is_empty() {
            return self.clone();
        }
        let mut out = Vec::new();
        let mut j = 0;
        for a in &self.intervals {
            let mut cur_lo = a.lo.clone();
            while j < other.intervals.len() && other.intervals[j].hi <= cur_lo {
                j += 1;
            }
            let mut k = j;
            while k < other.intervals.len() && other.intervals[k].lo < a.hi {
                let b = &other.intervals[k];
                if b.lo > cur_lo {
                    out.push(Interval {
                        lo: cur_lo.clone(),
                        hi: b.lo.clone(),
                    });
                }
                if b.hi > cur_lo {
                    cur_lo = b.hi.clone();
                }
                if cur_lo >= a.hi {
                    break;
                }
                k += 1;
            }
            if cur_lo < a.hi {
                out.push(Interval {
                    lo: cur_lo,
                    hi: a.hi.clone(),
                });
            }
        }
        Piece { intervals: out }
    }

    pub fn intersect(&self, other: &Piece) -> Piece {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            let lo = if a.lo > b.lo { &a.lo } else { &b.lo };
            let hi = if a.hi < b.hi { &a.hi } else { &b.hi };
            if lo < hi {
                out.push(Interval {
                    lo: lo.clone(),
                    hi: hi.clone(),
                });
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Piece { intervals: out }
    }

    /// Set inclusion up to measure zero.
    pub fn is_subset_of(&self, other: &Piece) -> bool {
        self.subtract(other).is_empty()
    }

    /// Disjoint up to measure zero (shared endpoints are allowed).
    pub fn is_disjoint_from(&self, other: &Piece) -> bool {
        self.intersect(other).is_empty()
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{iv:?}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for Piece {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.intervals.len()))?;
        for iv in &self.intervals {
            seq.serialize_element(&[&iv.lo, &iv.hi])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Piece {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs: Vec<[ExactScalar; 2]> = Vec::deserialize(deserializer)?;
        let piece = Piece::from_pairs(pairs.into_iter().map(|[lo, hi]| (lo, hi)));
        if !piece.is_within_unit() {
            return Err(serde::de::Error::custom("piece extends outside [0,1]"));
        }
        Ok(piece)
    }
}
