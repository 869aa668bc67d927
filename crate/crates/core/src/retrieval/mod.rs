//! Phase retrieval from measured interferograms and fringe scans.

pub mod centroid;
pub mod compose;
pub mod fit;
pub mod gradient;
pub mod sideband;
pub mod temporal;
pub mod tracking;
pub mod zonal;

pub use fit::{fit_dispersion, DispersionFit, MIN_FIT_CELLS};
pub use gradient::{gradient_from_sideband, link_targets, GradientConfig, GradientField, Link};
pub use sideband::{denoise, lobe_separation, sideband_extract, DenoiseConfig, Sideband, SidebandConfig};
pub use zonal::{integrate_axis, solve_links, zonal_solve, PhaseSurface, ZonalConfig};
pub use temporal::{reconstruct_field, to_temporal, JointTemporalIntensity, JtiStatistics};
pub use tracking::{fringe_envelope, fringe_peaks, track_fringes};
pub use centroid::{centroid_analysis, CentroidRow, CentroidTable};
pub use compose::{compose_relative_phase, dense_surface, JointCoordinate, LegOrder, PhaseAtlas, SpatialPhase};
