//! Exact experiments on circle-group subgroups defined through an arithmetic
//! sequence `(a_n)` and its derived sequence `(d_n)`.
//!
//! Nothing in the library uses floating point for a decision; enclosures are
//! exact rationals and verdicts are always stated at a finite horizon.

pub mod circle;
pub mod classify;
pub mod density;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod membership;
pub mod parse;
pub mod sequences;
pub mod verify;
pub mod witness;

pub use circle::{BoundInterval, CirclePoint, DigitRule};
pub use density::{DensityEstimate, NatSet};
pub use experiment::{run, Command, ExperimentConfig, Format, RunOutput};
pub use error::{Error, ErrorClass, Result};
pub use sequences::{ArithSeq, DerivedSeq, RatioSpec};
