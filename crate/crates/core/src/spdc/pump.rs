use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::units;

/// Pump pulse: Gaussian spectrum with polynomial spectral phase
/// `φ(ν_p) = c0 + c1·ν_p + c2·ν_p² + c3·ν_p³`, and an LG00 spatial mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSpec {
    pub center_wavelength_nm: f64,
    /// Intensity FWHM of the spectrum, nm.
    pub bandwidth_fwhm_nm: f64,
    /// rad
    pub c0: f64,
    /// fs
    pub c1: f64,
    /// fs²
    pub c2: f64,
    /// fs³
    pub c3: f64,
    /// Beam waist at the crystal, mm.
    pub waist_mm: f64,
}

impl Default for PumpSpec {
    fn default() -> Self {
        PumpSpec {
            center_wavelength_nm: 773.0,
            bandwidth_fwhm_nm: 5.1,
            c0: 0.0,
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            waist_mm: 0.25,
        }
    }
}

impl PumpSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("pump.{name}"), format!("must be > 0, got {v}")))
            }
        };
        positive("center_wavelength_nm", self.center_wavelength_nm)?;
        positive("bandwidth_fwhm_nm", self.bandwidth_fwhm_nm)?;
        positive("waist_mm", self.waist_mm)?;
        for (name, v) in [("c0", self.c0), ("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !v.is_finite() {
                return Err(Error::config(format!("pump.{name}"), "must be finite"));
            }
        }
        Ok(())
    }

    /// Intensity FWHM in rad/fs.
    pub fn bandwidth_fwhm(&self) -> f64 {
        units::bandwidth_nm_to_angular(self.bandwidth_fwhm_nm, self.center_wavelength_nm)
    }

    /// σ of the amplitude envelope `exp(−ν²/2σ²)`.
    pub fn amplitude_sigma(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.bandwidth_fwhm() / units::FWHM_PER_SIGMA
    }

    pub fn phase(&self, nu: f64) -> f64 {
        self.c0 + nu * (self.c1 + nu * (self.c2 + nu * self.c3))
    }

    /// Group-delay dispersion `∂²φ/∂ν² = 2·c2` at the carrier.
    pub fn gdd(&self) -> f64 {
        2.0 * self.c2
    }

    /// Third-order dispersion `∂³φ/∂ν³ = 6·c3`.
    pub fn tod(&self) -> f64 {
        6.0 * self.c3
    }

    /// Peak-normalised spectral amplitude at relative pump frequency `nu`.
    pub fn amplitude(&self, nu: f64) -> Complex64 {
        let s = self.amplitude_sigma();
        Complex64::from_polar((-nu * nu / (2.0 * s * s)).exp(), self.phase(nu))
    }

    /// Peak-normalised angular spectrum of the LG00 mode at transverse momentum `q` (rad/mm).
    pub fn spatial_amplitude(&self, q: [f64; 2]) -> f64 {
        let w = self.waist_mm;
        (-(q[0] * q[0] + q[1] * q[1]) * w * w / 4.0).exp()
    }
}

/// Pump spectral envelope sampled on `grid`, unit L2 norm (`Σ|E|²·δν = 1`).
pub fn pump_envelope(spec: &PumpSpec, grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
    spec.validate()?;
    grid.validate()?;
    let span = grid.n_points as f64 * grid.spacing;
    let needed = 4.0 * spec.bandwidth_fwhm();
    if span < needed {
        return Err(Error::Truncation {
            what: "pump envelope".into(),
            detail: format!("grid span {span:.4e} rad/fs is below 4x the pump FWHM ({needed:.4e})"),
        });
    }
    let mut e: Vec<Complex64> = grid.values().iter().map(|&nu| spec.amplitude(nu)).collect();
    let norm = (e.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.spacing).sqrt();
    e.iter_mut().for_each(|v| *v /= norm);
    Ok(e)
}
