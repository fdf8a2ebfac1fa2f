//! Core numerics for hp finite element / boundary element coupling of the
//! diffusion interface problem, with interface continuity imposed weakly by
//! Nitsche's method.
//!
//! The crate is `no_std` and only needs `alloc`. It contains everything that
//! is pure computation:
//!
//! - [`geometry`]: affine triangle/parallelogram meshes of the FE subdomain,
//!   panel meshes of the BE boundary, geometric corner grading and the
//!   overlay of the two non-matching interface trace meshes.
//! - [`space`]: hierarchic shape functions, degree vectors and DOF maps.
//! - [`quadrature`]: Gauss rules, graded composite rules and singular
//!   panel-pair rules.
//! - [`fem`], [`bem`], [`nitsche`]: the three blocks of the coupled system.
//! - [`system`]: global block assembly and the dense symmetric solve.
//! - [`analysis`]: mesh-dependent norms, error measurement and rate fits.
//! - [`problem`]: the model problems with known exact solutions and the
//!   end-to-end assemble/solve pipeline.
//!
//! IO, file formats and the command line live in the `hpcouple` crate.
#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod bem;
mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod nitsche;
pub mod poly;
pub mod problem;
pub mod quadrature;
pub mod space;
pub mod system;

pub use error::{Error, Result};
pub use geometry::Point2;
