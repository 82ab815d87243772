//! Exact simulation of locally envy-free cake cutting on trees.

pub mod cake;
pub mod depth2;
pub mod direct;
pub mod domination;
pub mod error;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod procedures;
pub mod trace;
pub mod verifier;

pub use cake::{Allocation, ExactScalar, Interval, Piece, Valuation};
pub use error::{CakeError, CakeResult};
pub use graph::{GraphKind, SocialGraph, StorageView};
pub use oracle::{Instance, Oracle, QueryLedger};
