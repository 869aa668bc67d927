use ndarray::Array3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Axis, AxisKind, SpatialGrid};
use crate::spdc::{JointSpatialAmplitude, PumpSpec};

/// Flat-wavefront Gaussian reference: the signal light transmitted through a
/// single-mode filter, `R(x) = r·max|A|·exp(−|x|²/w²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceMode {
    pub waist_mm: f64,
    /// `r`, relative to the peak conditional signal amplitude.
    pub relative_amplitude: f64,
}

impl Default for ReferenceMode {
    fn default() -> Self {
        ReferenceMode {
            waist_mm: 2.0,
            relative_amplitude: 1.0,
        }
    }
}

/// Spectral fringe scan of the signal against the reference mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FringeConfig {
    pub n_points: usize,
    /// rad/fs
    pub spacing: f64,
    /// Standard deviation of the signal spectral intensity, rad/fs.
    pub spectral_sigma: f64,
    /// Reference-arm delay, fs.
    pub delay: f64,
    pub reference: ReferenceMode,
}

impl Default for FringeConfig {
    fn default() -> Self {
        FringeConfig {
            n_points: 1024,
            spacing: 5e-5,
            // Signal marginal of the default uncorrelated JSA.
            spectral_sigma: 0.5 * PumpSpec::default().amplitude_sigma(),
            delay: 2500.0,
            reference: ReferenceMode::default(),
        }
    }
}

/// Fraction of the envelope peak that counts as in-band.
pub const IN_BAND_LEVEL: f64 = 0.1;

impl FringeConfig {
    pub fn axis(&self) -> Axis {
        Axis::new(self.n_points, self.spacing, AxisKind::Frequency)
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.delay
    }

    /// Width of the band where the spectral envelope exceeds [`IN_BAND_LEVEL`].
    pub fn band_width(&self) -> f64 {
        2.0 * self.spectral_sigma * (2.0 * (1.0 / IN_BAND_LEVEL).ln()).sqrt()
    }

    pub fn envelope(&self, nu: f64) -> f64 {
        (-nu * nu / (2.0 * self.spectral_sigma.powi(2))).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 8 || !self.n_points.is_power_of_two() {
            return Err(Error::config("fringes.n_points", "must be a power of two >= 8"));
        }
        for (name, v) in [
            ("spacing", self.spacing),
            ("spectral_sigma", self.spectral_sigma),
            ("delay", self.delay),
            ("reference.waist_mm", self.reference.waist_mm),
            ("reference.relative_amplitude", self.reference.relative_amplitude),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("fringes.{name}"), format!("must be > 0, got {v}")));
            }
        }
        let periods = self.band_width() / self.period();
        if periods < 3.0 {
            return Err(Error::config(
                "fringes.delay",
                format!("only {periods:.2} fringe periods fit in band; need at least 3"),
            ));
        }
        if self.band_width() > 0.9 * self.axis().span() {
            return Err(Error::config("fringes.spacing", "spectral band does not fit on the grid"));
        }
        Ok(())
    }
}

/// Spectra indexed `[i_x, i_y, k]` over the signal scan grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FringeScan {
    pub grid: SpatialGrid,
    pub axis: Axis,
    pub config: FringeConfig,
    pub spectra: Array3<f64>,
}

impl FringeScan {
    pub fn spectrum(&self, p: [usize; 2]) -> Vec<f64> {
        self.spectra.slice(ndarray::s![p[0], p[1], ..]).to_vec()
    }
}

/// `S(ν; x) = env(ν)·|A(x) + R(x)·e^{iντ}|²` with the idler fixed at `idler`.
///
/// Fringe maxima sit at `ν = (2πm + arg A(x))/τ`, so a wavefront step `δ`
/// moves them by `δ/(2π)` periods.
pub fn spatial_fringe_pattern(amp: &JointSpatialAmplitude, idler: [usize; 2], cfg: &FringeConfig) -> Result<FringeScan> {
    cfg.validate()?;
    let grid = amp.signal_grid;
    if idler[0] >= amp.idler_grid.n_x || idler[1] >= amp.idler_grid.n_y {
        return Err(Error::contract(format!("idler index {idler:?} is off the grid")));
    }
    let cond = amp.conditional(idler);
    let peak = cond.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let ax = cfg.axis();
    let env: Vec<f64> = ax.values().iter().map(|&nu| cfg.envelope(nu)).collect();
    let w2 = cfg.reference.waist_mm.powi(2);
    let spectra = Array3::from_shape_fn((grid.n_x, grid.n_y, ax.len), |(i, j, k)| {
        let (x, y) = (grid.x(i), grid.y(j));
        let r = cfg.reference.relative_amplitude * peak * (-(x * x + y * y) / w2).exp();
        let nu = ax.value(k);
        let total = cond[[i, j]] + num_complex::Complex64::from_polar(r, nu * cfg.delay);
        env[k] * total.norm_sqr()
    });
    Ok(FringeScan {
        grid,
        axis: ax,
        config: *cfg,
        spectra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spdc::{joint_spatial_amplitude, JointSpatialSpec, Wavefront};

    fn scan(spec: &JointSpatialSpec) -> FringeScan {
        let g = SpatialGrid::default();
        let amp = joint_spatial_amplitude(spec, &g, &g).unwrap();
        spatial_fringe_pattern(&amp, g.origin(), &FringeConfig::default()).unwrap()
    }

    /// `arg Σ S(ν)·e^{iντ}` equals `arg A − arg R`. The unpaired first sample
    /// is skipped so the sum runs over a symmetric set of frequencies.
    fn sideband_phase(s: &[f64], ax: &Axis, tau: f64) -> f64 {
        s.iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| num_complex::Complex64::from_polar(*v, ax.value(k) * tau))
            .sum::<num_complex::Complex64>()
            .arg()
    }

    #[test]
    fn flat_wavefront_gives_identical_fringe_phase() {
        let sc = scan(&JointSpatialSpec::default());
        let tau = sc.config.delay;
        for p in sc.grid.points() {
            let ph = sideband_phase(&sc.spectrum(p), &sc.axis, tau);
            assert!(ph.abs() < 1e-9, "{p:?} {ph}");
        }
    }

    #[test]
    fn quadratic_wavefront_appears_in_fringe_phase() {
        let c = 0.3;
        let sc = scan(&JointSpatialSpec {
            wavefront: Wavefront::Quadratic { coefficient: c },
            ..Default::default()
        });
        let g = sc.grid;
        let mut sq = 0.0;
        for p in g.points() {
            let truth = c * (g.x(p[0]).powi(2) + g.y(p[1]).powi(2));
            let got = sideband_phase(&sc.spectrum(p), &sc.axis, sc.config.delay);
            let d = (got - truth + PI).rem_euclid(2.0 * PI) - PI;
            sq += d * d;
        }
        assert!((sq / g.len() as f64).sqrt() < 1e-3);
    }

    #[test]
    fn too_few_periods_is_config_error() {
        let cfg = FringeConfig {
            delay: 300.0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { .. })));
    }
}
