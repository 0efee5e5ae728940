//! One-dimensional realizations, exact covering numbers and the empirical
//! Assouad dimension.

mod cover;
mod estimate;
mod intervals;
mod realize;

pub use cover::{covering_count, covering_number, covers, CoverQuery, CoverResult};
pub use estimate::{
    empirical_assouad, estimate_on_set, overlap_bound, CenterSampling, EmpiricalEstimate, EmpiricalOptions,
    EmpiricalRow, OverlapReport,
};
pub use intervals::{IntervalSet, RealizationMeta};
pub use realize::{random_point, realize_level, word_interval, Placement, Realizer, SignRule};

use crate::symbolic::SymbolicError;

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid interval set: {0}")]
    BadIntervals(String),
    #[error("invalid placement: {0}")]
    BadPlacement(String),
    #[error("children at level {level} need {total} of the parent's length")]
    Infeasible { level: u64, total: f64 },
    #[error("realization budget of {budget} intervals exceeded at depth {depth}")]
    Budget { budget: usize, depth: u64 },
    #[error("geometric realization needs d = 1, got d = {0}")]
    NotOneDimensional(u32),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
