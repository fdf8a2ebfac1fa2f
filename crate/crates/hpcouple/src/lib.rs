//! Command-line front end and file formats for `hpcouple-core`.

pub use hpcouple_core as core;

pub mod config;
pub mod parallel;
pub mod study;
pub mod meshio;
pub mod summary;
pub mod verify;
