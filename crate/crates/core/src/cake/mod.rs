//! Exact model of the cake: rationals, pieces, densities and allocations.

mod allocation;
mod piece;
mod scalar;
mod valuation;

pub use allocation::Allocation;
pub use piece::{Interval, Piece};
pub use scalar::{ExactScalar, ParseScalarError};
pub use valuation::Valuation;
