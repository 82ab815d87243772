//! Seeded instances shared by the protocol benchmarks.

use envytree_core::harness::generate_instance;
use envytree_core::{GraphKind, Instance};

/// Seed used by every fixture, so runs compare like with like.
pub const SEED: u64 = 7;

pub fn line(n: usize) -> Instance {
    fixture(GraphKind::Line, n)
}

pub fn tree(n: usize) -> Instance {
    fixture(GraphKind::Tree, n)
}

pub fn star(n: usize) -> Instance {
    fixture(GraphKind::Star, n)
}

pub fn two_star(n: usize) -> Instance {
    fixture(GraphKind::TwoStar, n)
}

pub fn depth2(n: usize) -> Instance {
    fixture(GraphKind::Depth2Tree, n)
}

fn fixture(kind: GraphKind, n: usize) -> Instance {
    generate_instance(SEED, n, kind, 3).expect("valid fixture shape")
}
