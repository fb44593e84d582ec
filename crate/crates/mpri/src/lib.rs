//! Relevant-information feature extraction for 3D image cubes.
//!
//! The crate is organized around three layers:
//!
//! * kernel estimators and the PRI fixed-point solver ([`itl`], [`solver`]),
//! * the cube data model and the multiscale multilayer pipeline built on the
//!   solver ([`cube`], [`pipeline`], [`lda`]),
//! * classification and evaluation of the extracted features ([`knn`],
//!   [`eval`]), plus the batch commands the `mpri` binary dispatches to
//!   ([`commands`]).
//!
//! Start with the `examples/` directory; each example exercises one
//! capability end to end on synthetic data.

pub mod commands;
pub mod config;
pub mod cube;
pub mod error;
pub mod eval;
pub mod itl;
pub mod knn;
pub mod lda;
pub mod manifest;
pub mod pipeline;
pub mod render;
pub mod solver;

pub use error::{Error, Result};
