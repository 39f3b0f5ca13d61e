//! Subspace support vector data description (S-SVDD).
//!
//! One-class classification that jointly learns a low-dimensional linear
//! projection and a minimal enclosing hypersphere for the target class.
//! Non-linearity is available through an explicit kernel-space embedding
//! (RBF kernel matrix, centering, eigendecomposition) fed to the same
//! linear machinery.
//!
//! The crate also carries the experimental harness used to evaluate the
//! classifier on hyperspectral scenes: scene vectorization, stratified
//! splitting, target-class standardization, cross-validated grid search
//! and geometric-mean scoring.

pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod npt;
pub mod subspace;
pub mod svdd;
pub mod synthetic;

pub use error::{Error, Result};
