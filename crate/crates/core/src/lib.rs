//! Extractors for independent weak sources at desk scale.
//!
//! The stack runs from packed bit strings and seeded extractors, through
//! alternating extraction and somewhere-random (SR) source generation, to
//! the lightest-bin row reduction and the two end-to-end pipelines: a
//! three-source extractor ([`pipeline::iext`]) and a block-source extractor
//! ([`pipeline::bext`]). The [`eval`] module computes exact output
//! distributions by enumeration, so every quality claim at toy parameters
//! can be checked rather than assumed.
//!
//! Distribution code is generic over the [`scalar::Probability`] type; the
//! aliases below fix the two common choices.

pub mod alternating;
pub mod bits;
pub mod error;
pub mod eval;
pub mod extractors;
pub mod lightestbin;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod sources;
pub mod srgen;

pub use bits::BitString;
pub use error::{Error, Result};
pub use scalar::{Probability, Rational128, Rational64};

/// Floating-point distribution table.
pub type Table = eval::JointTable<f64>;
/// Exact distribution table.
pub type ExactTable = eval::JointTable<Rational128>;
/// Floating-point source.
pub type Source = sources::DiscreteSource<f64>;
/// Exact source.
pub type ExactSource = sources::DiscreteSource<Rational128>;

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
