use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spdc::pump::PumpSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmfShape {
    Gaussian,
    Sinc,
}

/// Phase-matching function, separable in frequency mismatch and momentum mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrystalSpec {
    pub pmf_shape: PmfShape,
    /// σ of `exp(−Δν²/2σ²)`, rad/fs, with Δν = ν_s − ν_i.
    pub pmf_spectral_width: f64,
    /// σ of `exp(−|Δq|²/2σ²)` for the Gaussian shape, rad/mm.
    pub pmf_spatial_width: f64,
    /// Pump wavenumber inside the crystal, rad/mm (sinc shape).
    pub pump_wavenumber: f64,
    pub length_mm: f64,
    /// Bilinear ν·q phase hook, fs·mm/rad: adds `κ·(ν_s·(q_sx+q_sy) + ν_i·(q_ix+q_iy))`.
    pub spatiotemporal_coupling: f64,
}

impl Default for CrystalSpec {
    fn default() -> Self {
        CrystalSpec {
            pmf_shape: PmfShape::Gaussian,
            // Equal to the default pump amplitude width: uncorrelated JSI.
            pmf_spectral_width: PumpSpec::default().amplitude_sigma(),
            pmf_spatial_width: 60.0,
            // 2π·n/λ with n ≈ 1.84 at 773 nm.
            pump_wavenumber: 2.0 * std::f64::consts::PI * 1.84 / 773e-6,
            length_mm: 5.0,
            spatiotemporal_coupling: 0.0,
        }
    }
}

impl CrystalSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pmf_spectral_width", self.pmf_spectral_width),
            ("pmf_spatial_width", self.pmf_spatial_width),
            ("pump_wavenumber", self.pump_wavenumber),
            ("length_mm", self.length_mm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("crystal.{name}"), format!("must be > 0, got {v}")));
            }
        }
        if !self.spatiotemporal_coupling.is_finite() {
            return Err(Error::config("crystal.spatiotemporal_coupling", "must be finite"));
        }
        Ok(())
    }

    /// Small-angle longitudinal mismatch `Δk_z ≈ −|Δq|²/(2k_p)`.
    pub fn longitudinal_mismatch(&self, dq: [f64; 2]) -> f64 {
        -(dq[0] * dq[0] + dq[1] * dq[1]) / (2.0 * self.pump_wavenumber)
    }

    pub fn spectral_factor(&self, dnu: f64) -> f64 {
        let s = self.pmf_spectral_width;
        (-dnu * dnu / (2.0 * s * s)).exp()
    }

    pub fn spatial_factor(&self, dq: [f64; 2]) -> f64 {
        match self.pmf_shape {
            PmfShape::Gaussian => {
                let s = self.pmf_spatial_width;
                (-(dq[0] * dq[0] + dq[1] * dq[1]) / (2.0 * s * s)).exp()
            }
            PmfShape::Sinc => sinc(self.longitudinal_mismatch(dq) * self.length_mm / 2.0),
        }
    }
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `Φ(Δq, Δν) = Φ_ν(Δν)·Φ_q(Δq)`, peak value 1 at zero mismatch.
pub fn phase_matching(spec: &CrystalSpec, dq: [f64; 2], dnu: f64) -> Complex64 {
    Complex64::new(spec.spectral_factor(dnu) * spec.spatial_factor(dq), 0.0)
}
