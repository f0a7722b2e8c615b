//! Tilings generated by families of graph-directed iterated function systems
//! that share one set of prototiles.
//!
//! A rule sequence `x = (x_1, x_2, …)` selects one substitution per level;
//! this crate builds the resulting supertile hierarchies, the cocycle of
//! transposed transition matrices on collared tiles, its Lyapunov spectrum,
//! and ergodic integrals of tile-weight observables over growing regions.

pub mod bratteli;
pub mod cocycle;
mod error;
pub mod ergodic;
mod expr;
pub mod fixtures;
pub mod geometry;
pub mod matrix;
pub mod sequence;
pub mod substitution;

pub use error::{Error, Result};
