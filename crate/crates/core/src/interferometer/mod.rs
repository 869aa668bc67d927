//! Spectral-shearing interferometer, spectrometer response and spatial fringe scans.

pub mod detector;
pub mod fringes;
pub mod ssi;

pub use detector::{apply_detector, measure, DetectorConfig};
pub use fringes::{spatial_fringe_pattern, FringeConfig, FringeScan, ReferenceMode};
pub use ssi::{interferometer_arms, ssi_pattern, Arm, Interferogram, NoiseRecord, ShearConfig};
