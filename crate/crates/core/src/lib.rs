//! Covariant Lyapunov vectors of linear cocycles.
//!
//! The crate is organized bottom-up: [`subspace`] holds projector geometry,
//! [`index`] estimates exponential rates, [`cocycle`] defines the propagator
//! abstraction with analytic builtins, [`admissibility`] measures how well a
//! tuple is placed relative to a reference basis, and [`ginelli`] implements
//! the two-phase algorithm on top of all of them.

pub mod admissibility;
pub mod cocycle;
pub mod error;
pub mod ginelli;
pub mod index;
pub mod linalg;
pub mod pattern;
pub mod subspace;
pub mod time;

pub use error::{Error, Result};
pub use linalg::{Mat, Vector};
pub use pattern::DegeneracyPattern;
pub use subspace::{Filtration, Subspace, VectorTuple};
pub use time::TimeDomain;
