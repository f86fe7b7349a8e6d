//! Følner-averaged complexity of measure-preserving actions of amenable groups.
//!
//! The crate computes mean semimetrics along Følner sequences, covering
//! numbers of the resulting pseudometric spaces, almost-periodicity tests for
//! observables and equicontinuity diagnostics, for torus rotations, shifts and
//! finite permutation systems.

pub mod complexity;
pub mod cover;
pub mod equicont;
pub mod error;
pub mod features;
pub mod folner;
pub mod group;
pub mod metrics;
pub mod par;
pub mod qsqrt2;
pub mod rng;
pub mod spectrum;
pub mod systems;

pub use error::{Error, Result};
pub use folner::{FolnerRule, FolnerSequence, FolnerSet, SideFn};
pub use group::{GroupElement, GroupSpec};
pub use systems::{DynamicalSystem, FiniteMetric, FiniteSystem, Point, SubshiftSystem, TorusMetric, TorusSystem};
