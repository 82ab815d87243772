use serde::{Deserialize, Serialize};

use super::piece::Interval;
use super::{ExactScalar, Piece};
use crate::error::{CakeError, CakeResult};

/// A normalized piecewise-constant density on `[0,1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawValuation", into = "RawValuation")]
pub struct Valuation {
    breakpoints: Vec<ExactScalar>,
    densities: Vec<ExactScalar>,
    /// `cum[s]` is the mass of `[0, breakpoints[s]]`.
    cum: Vec<ExactScalar>,
}

#[derive(Serialize, Deserialize)]
struct RawValuation {
    breakpoints: Vec<ExactScalar>,
    densities: Vec<ExactScalar>,
}

impl TryFrom<RawValuation> for Valuation {
    type Error = CakeError;

    fn try_from(raw: RawValuation) -> CakeResult<Self> {
        Valuation::new(raw.breakpoints, raw.densities)
    }
}

impl From<Valuation> for RawValuation {
    fn from(v: Valuation) -> Self {
        RawValuation {
            breakpoints: v.breakpoints,
            densities: v.densities,
        }
    }
}

impl Valuation {
    pub fn new(breakpoints: Vec<ExactScalar>, densities: Vec<ExactScalar>) -> CakeResult<Self> {
        let bad = |why: &str| Err(CakeError::InvalidValuation(why.to_string()));
        if breakpoints.len() < 2 || densities.len() + 1 != breakpoints.len() {
            return bad("need one density per segment");
        }
        if !breakpoints[0].is_zero() || breakpoints[breakpoints.len() - 1] != ExactScalar::one() {
            return bad("breakpoints must run from 0 to 1");
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("breakpoints must be strictly increasing");
        }
        if densities.iter().any(ExactScalar::is_negative) {
            return bad("densities must be non-negative");
        }
        let mut cum = Vec::with_capacity(breakpoints.len());
        cum.push(ExactScalar::zero());
        for (s, d) in densities.iter().enumerate() {
            let next = &cum[s] + d * (&breakpoints[s + 1] - &breakpoints[s]);
            cum.push(next);
        }
        if cum[cum.len() - 1] != ExactScalar::one() {
            return bad("total mass must be exactly 1");
        }
        Ok(Valuation {
            breakpoints,
            densities,
            cum,
        })
    }

    pub fn uniform() -> Self {
        Valuation::new(
            vec![ExactScalar::zero(), ExactScalar::one()],
            vec![ExactScalar::one()],
        )
        .expect("uniform density is valid")
    }

    /// Builds a normalized valuation from positive or zero integer weights on
    /// the given breakpoints; the weights are rescaled so the total is 1.
    pub fn from_weights(breakpoints: Vec<ExactScalar>, weights: &[i64]) -> CakeResult<Self> {
        if weights.len() + 1 != breakpoints.len() {
            return Err(CakeError::InvalidValuation(
                "need one weight per segment".into(),
            ));
        }
        let raw: Vec<ExactScalar> = weights.iter().map(|&w| ExactScalar::integer(w)).collect();
        let mass: ExactScalar = raw
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(w, b)| w * (&b[1] - &b[0]))
            .sum();
        if !mass.is_positive() {
            return Err(CakeError::InvalidValuation("weights carry no mass".into()));
        }
        let densities = raw.into_iter().map(|w| w / &mass).collect();
        Valuation::new(breakpoints, densities)
    }

    pub fn breakpoints(&self) -> &[ExactScalar] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[ExactScalar] {
        &self.densities
    }

    /// Index of the segment containing `x`; right-closed at the last one.
    fn segment_of(&self, x: &ExactScalar) -> usize {
        let last = self.densities.len() - 1;
        match self.breakpoints.binary_search(x) {
            Ok(i) => i.min(last),
            Err(i) => (i - 1).min(last),
        }
    }

    /// Mass of `[0, x]`.
    pub fn cdf(&self, x: &ExactScalar) -> ExactScalar {
        let s = self.segment_of(x);
        &self.cum[s] + &self.densities[s] * (x - &self.breakpoints[s])
    }

    pub fn value_of_interval(&self, lo: &ExactScalar, hi: &ExactScalar) -> ExactScalar {
        self.cdf(hi) - self.cdf(lo)
    }

    pub fn value_of(&self, p: &Piece) -> ExactScalar {
        p.intervals()
            .iter()
            .map(|iv| self.value_of_interval(iv.lo(), iv.hi()))
            .sum()
    }

    /// Leftmost `y` with `cdf(y) = target`; requires `0 ≤ target ≤ 1`.
    pub fn inverse_cdf(&self, target: &ExactScalar) -> ExactScalar {
        let last = self.densities.len() - 1;
        let s = self.cum[1..].partition_point(|c| c < target).min(last);
        if self.cum[s] >= *target {
            return self.breakpoints[s].clone();
        }
        &self.breakpoints[s] + (target - &self.cum[s]) / &self.densities[s]
    }

    /// Splits `p` into the smallest left prefix worth `tau` and the rest.
    pub fn inverse_cut(&self, p: &Piece, tau: &ExactScalar) -> CakeResult<(Piece, Piece)> {
        let total = self.value_of(p);
        if tau.is_negative() || *tau > total {
            return Err(CakeError::TauOutOfRange {
                tau: tau.clone(),
                available: total,
            });
        }
        let mut prefix = Vec::new();
        let mut suffix = Vec::new();
        let mut need = tau.clone();
        let mut done = false;
        for iv in p.intervals() {
            if done {
                suffix.push(iv.clone());
                continue;
            }
            if need.is_zero() {
                done = true;
                suffix.push(iv.clone());
                continue;
            }
            let here = self.value_of_interval(iv.lo(), iv.hi());
            if here < need {
                need -= &here;
                prefix.push(iv.clone());
                continue;
            }
            let y = self.inverse_cdf(&(self.cdf(iv.lo()) + &need));
            if let Some(left) = Interval::new(iv.lo().clone(), y.clone()) {
                prefix.push(left);
            }
            if let Some(right) = Interval::new(y, iv.hi().clone()) {
                suffix.push(right);
            }
            need = ExactScalar::zero();
            done = true;
        }
        Ok((
            Piece::from_sorted_unchecked(prefix),
            Piece::from_sorted_unchecked(suffix),
        ))
    }
}
