//! Simulate, retrieve, fit and report stages for spectral-shearing
//! characterisation runs. Every run lives in one directory indexed by a
//! hashed `manifest.json`.

pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod retrieve;
pub mod selftest;
pub mod simulate;
pub mod svg;

pub use config::RunConfig;
pub use error::{ErrorKind, PipelineError, Result};
pub use manifest::Manifest;
