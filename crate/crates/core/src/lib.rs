//! Hausdorff, packing and Assouad dimensions of Moran sets and Cantor-like
//! sets, computed from their ratio sequences and cross-checked against
//! one-dimensional geometric realizations.
//!
//! The crate is organised bottom-up:
//!
//! * [`spec_model`] holds finitely presented ratio schedules and the set
//!   specifications built on them, plus validation and the JSON file format.
//! * [`dimension`] solves the Moran equation over windows of levels and reports
//!   the lower, upper and Assouad dimension estimates.
//! * [`symbolic`] enumerates cutsets and dyadic classes of finite words.
//! * [`geometry`] realizes sets as interval covers in `[0, 1]` and estimates the
//!   Assouad dimension from exact covering numbers.
//! * [`scale`] works with piecewise-constant scale functions of homogeneous sets.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dimension;
pub mod geometry;
pub mod scale;
pub mod spec_model;
pub mod symbolic;

pub(crate) mod numeric;
