//! Unit system and boundary conversions.
//!
//! Internally: time in fs, angular frequency in rad/fs, transverse position in
//! mm, transverse momentum in rad/mm, GDD in fs², TOD in fs³. Wavelengths only
//! appear at the I/O boundary through the helpers below.

use std::f64::consts::PI;

/// Speed of light in nm/fs.
pub const SPEED_OF_LIGHT_NM_PER_FS: f64 = 299.792_458;

/// Absolute angular frequency (rad/fs) of a vacuum wavelength given in nm.
pub fn angular_frequency_from_nm(wavelength_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_NM_PER_FS / wavelength_nm
}

/// Vacuum wavelength (nm) of an absolute angular frequency (rad/fs).
pub fn nm_from_angular_frequency(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_NM_PER_FS / omega
}

/// Converts a small wavelength interval (nm) around `center_nm` to an angular
/// frequency interval (rad/fs), `|dω| = 2πc·dλ/λ²`.
pub fn bandwidth_nm_to_angular(width_nm: f64, center_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_NM_PER_FS * width_nm / (center_nm * center_nm)
}

/// Inverse of [`bandwidth_nm_to_angular`].
pub fn bandwidth_angular_to_nm(width: f64, center_nm: f64) -> f64 {
    width * center_nm * center_nm / (2.0 * PI * SPEED_OF_LIGHT_NM_PER_FS)
}

/// Relative angular frequency `ν = ω − Ω` of a wavelength with respect to a carrier.
pub fn relative_frequency_from_nm(wavelength_nm: f64, carrier: f64) -> f64 {
    angular_frequency_from_nm(wavelength_nm) - carrier
}

/// Vacuum wavenumber in rad/mm.
pub fn wavenumber_per_mm(wavelength_nm: f64) -> f64 {
    2.0 * PI / (wavelength_nm * 1e-6)
}

/// Frequency (GHz) to angular frequency (rad/fs).
pub fn ghz_to_angular(ghz: f64) -> f64 {
    2.0 * PI * ghz * 1e-6
}

/// Ratio between a Gaussian's intensity FWHM and the standard deviation of that intensity.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4;
