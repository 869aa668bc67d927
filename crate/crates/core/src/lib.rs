//! Simulation and phase retrieval for spectrally and spatially resolved
//! biphoton wave packets measured by spectral-shearing interferometry.

pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod interferometer;
pub mod io;
pub mod random;
pub mod retrieval;
pub mod shift;
pub mod spdc;
pub mod units;

pub use error::{Error, Result};
pub use field::{ComplexField2D, FieldAxis};
pub use grid::{Axis, AxisKind, FrequencyGrid, SpatialGrid};
