//! Finite-element eigenvalue comparisons for Schrödinger and second-order
//! elliptic operators on truncated exterior domains in the plane.
//!
//! The pipeline is: [`geometry`] builds a tagged mesh, [`fields`] describes
//! potentials and coefficient matrices, [`assembly`] turns forms into sparse
//! matrices with Dirichlet constraints eliminated, [`spectral`] counts and
//! computes eigenvalues of the resulting pencils, and [`comparison`] turns
//! pairs of spectra into ordering and strict-gap certificates.
//! [`radial`] is an independent separation-of-variables solver used as a
//! cross-check, and [`experiment`] drives configured runs.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod comparison;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod geometry;
pub mod ldlt;
pub mod radial;
pub mod richardson;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
