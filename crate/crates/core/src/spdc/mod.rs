//! Biphoton source model: pump, phase matching, joint spectral and joint spatial amplitudes.

pub mod crystal;
pub mod jsa;
pub mod pump;
pub mod spatial;

pub use crystal::{phase_matching, CrystalSpec, PmfShape};
pub use jsa::{apply_local_dispersion, build_jsa, Coordinates, JointSpectralField, JsaModel, PostSelection, Window};
pub use pump::{pump_envelope, PumpSpec};
pub use spatial::{joint_spatial_amplitude, JointSpatialAmplitude, JointSpatialSpec, Wavefront};
