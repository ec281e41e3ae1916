//! Time-discounted reach-avoid analysis on low-dimensional systems.
//!
//! The crate computes the discounted reach-avoid value function by grid
//! value iteration, extracts max-min policies from it, and certifies balls
//! of initial states with two deterministic tube-based lower bounds: a
//! Lipschitz bound and a ball-constrained quadratic (cone) bound.
//!
//! Modules, bottom-up: [`systems`], [`value`], [`policy`], [`tube`],
//! [`certify`], [`harness`].

pub mod certify;
pub mod error;
pub mod harness;
mod linalg;
pub mod policy;
pub mod systems;
pub mod tube;
pub mod value;

pub use error::{Error, Result};
pub use linalg::{dist, norm};
