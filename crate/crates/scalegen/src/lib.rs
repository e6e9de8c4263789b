//! Generation and analysis of musical scale populations.
//!
//! The crate generates populations of octave-partitioning scales under five
//! stochastic models (unconstrained random, minimum-interval, harmonicity,
//! imperfect fifths, transmittability), scores empirical scale databases
//! against them, and provides the statistical machinery (kernel density
//! estimates, Jensen-Shannon divergence, Cramér-von Mises, bootstrap) used to
//! compare the two.
//!
//! Data-parallel inner loops run on rayon when the default `parallel` feature
//! is enabled and fall back to sequential execution otherwise; either way the
//! output of a seeded run is bit-identical.

// `!(x > 0.0)` in validations is deliberate: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod costs;
pub mod dataio;
pub mod error;
pub mod exec;
pub mod generator;
pub mod params;
pub mod scale;
pub mod sidemodels;
pub mod stats;

pub use error::{Error, Result};
