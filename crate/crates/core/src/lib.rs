//! Critical first-passage percolation on the square lattice.
//!
//! The crate has two halves that share a handful of utilities:
//!
//! - a lattice laboratory ([`lattice`], [`weights`], [`passage`],
//!   [`circuits`], [`percolation`], [`conditional`]) for sampling edge-weight
//!   configurations, computing passage times, locating zero-weight circuits
//!   around the origin and estimating conditional probabilities by rejection;
//! - an exact engine ([`condsum`], [`partitions`]) for independent nonnegative
//!   sums conditioned to stay below a fixed level, with big-integer partition
//!   counts for the two-point examples.
//!
//! Monte Carlo work is split into independent replicas whose random streams
//! depend only on `(seed, replica index)`; see [`exec`]. With the default
//! `parallel` feature replicas are evaluated on a rayon pool, otherwise
//! sequentially, and aggregates are bit-identical either way.

pub mod circuits;
pub mod conditional;
pub mod condsum;
pub mod error;
pub mod exec;
pub mod lattice;
pub mod partitions;
pub mod passage;
pub mod percolation;
pub mod rational;
pub mod stats;
pub mod weights;

pub use error::{FppError, Result};
pub use exec::{Exec, MonteCarlo};
pub use stats::EstimateReport;
