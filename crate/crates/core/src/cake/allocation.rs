use serde::{Deserialize, Serialize};

use super::Piece;

/// One bundle per agent, indexed by internal agent index.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    bundles: Vec<Piece>,
}

impl Allocation {
    pub fn new(bundles: Vec<Piece>) -> Self {
        Allocation { bundles }
    }

    pub fn empty(n: usize) -> Self {
        Allocation {
            bundles: vec![Piece::empty(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn bundles(&self) -> &[Piece] {
        &self.bundles
    }

    pub fn bundle(&self, i: usize) -> &Piece {
        &self.bundles[i]
    }

    pub fn bundle_mut(&mut self, i: usize) -> &mut Piece {
        &mut self.bundles[i]
    }

    pub fn into_bundles(self) -> Vec<Piece> {
        self.bundles
    }

    pub fn union(&self) -> Piece {
        Piece::union_all(&self.bundles)
    }

    /// First pair of bundles that overlap in positive measure.
    pub fn first_overlap(&self) -> Option<(usize, usize)> {
        for i in 0..self.bundles.len() {
            for j in i + 1..self.bundles.len() {
                if !self.bundles[i].is_disjoint_from(&self.bundles[j]) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_disjoint(&self) -> bool {
        self.first_overlap().is_none()
    }

    /// Pairwise disjoint with union exactly `region`.
    pub fn is_complete_over(&self, region: &Piece) -> bool {
        self.is_disjoint() && self.union() == *region
    }
}

impl From<Vec<Piece>> for Allocation {
    fn from(bundles: Vec<Piece>) -> Self {
        Allocation::new(bundles)
    }
}
