use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft2_centered, Direction};
use crate::field::ComplexField2D;
use crate::grid::Axis;
use crate::retrieval::fit::DispersionFit;
use crate::retrieval::zonal::PhaseSurface;

/// First and second moments of a joint temporal intensity, fs and fs².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JtiStatistics {
    pub mean_signal: f64,
    pub mean_idler: f64,
    pub var_signal: f64,
    pub var_idler: f64,
    pub covariance: f64,
    /// Pearson correlation of `t_s` and `t_i`.
    pub correlation: f64,
}

/// Joint temporal intensity on (t_s along A, t_i along B).
#[derive(Clone, Debug, PartialEq)]
pub struct JointTemporalIntensity {
    pub values: Array2<f64>,
    pub axis_a: Axis,
    pub axis_b: Axis,
    pub stats: JtiStatistics,
}

impl JointTemporalIntensity {
    /// Marginal along t_s (summed over t_i), times the t_i spacing.
    pub fn signal_marginal(&self) -> Vec<f64> {
        self.values.rows().into_iter().map(|r| r.sum() * self.axis_b.spacing).collect()
    }

    pub fn idler_marginal(&self) -> Vec<f64> {
        self.values.columns().into_iter().map(|c| c.sum() * self.axis_a.spacing).collect()
    }
}

/// `|F⁻¹ψ|²` on the conjugate time grid, with its moments.
pub fn to_temporal(psi: &ComplexField2D) -> Result<JointTemporalIntensity> {
    let t = fft2_centered(psi, Direction::Inverse)?;
    let values = t.intensity();
    let stats = moments(&values, &t.axis_a, &t.axis_b)?;
    Ok(JointTemporalIntensity {
        values,
        axis_a: t.axis_a,
        axis_b: t.axis_b,
        stats,
    })
}

fn moments(values: &Array2<f64>, a: &Axis, b: &Axis) -> Result<JtiStatistics> {
    let total = values.sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotal("joint temporal intensity".into()));
    }
    let (mut ma, mut mb) = (0.0, 0.0);
    for ((i, j), v) in values.indexed_iter() {
        ma += v * a.value(i);
        mb += v * b.value(j);
    }
    ma /= total;
    mb /= total;
    let (mut va, mut vb, mut cab) = (0.0, 0.0, 0.0);
    for ((i, j), v) in values.indexed_iter() {
        let (x, y) = (a.value(i) - ma, b.value(j) - mb);
        va += v * x * x;
        vb += v * y * y;
        cab += v * x * y;
    }
    va /= total;
    vb /= total;
    cab /= total;
    Ok(JtiStatistics {
        mean_signal: ma,
        mean_idler: mb,
        var_signal: va,
        var_idler: vb,
        covariance: cab,
        correlation: cab / (va * vb).sqrt(),
    })
}

/// `√JSI · e^{iφ}`: the surface phase on its primary component, the fitted
/// polynomial (if given) elsewhere, zero phase otherwise.
pub fn reconstruct_field(jsi: &Array2<f64>, surface: &PhaseSurface, fit: Option<&DispersionFit>) -> Result<ComplexField2D> {
    if jsi.dim() != surface.values.dim() {
        return Err(Error::contract("JSI and phase surface differ in shape"));
    }
    let primary = surface.primary_mask();
    let (a, b) = (surface.axis_a, surface.axis_b);
    let values = Array2::from_shape_fn(jsi.dim(), |(i, j)| {
        let phase = if primary[[i, j]] {
            surface.values[[i, j]]
        } else {
            fit.map_or(0.0, |f| f.evaluate(a.value(i), b.value(j)))
        };
        Complex64::from_polar(jsi[[i, j]].max(0.0).sqrt(), phase)
    });
    ComplexField2D::new(a, b, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use crate::spdc::{build_jsa, CrystalSpec, JointSpectralField, PostSelection, PumpSpec};

    fn jsa(pump: &PumpSpec) -> JointSpectralField {
        let s = FrequencyGrid::around_wavelength(1548.0, 256, 3e-4).unwrap();
        let i = FrequencyGrid::around_wavelength(1544.0, 256, 3e-4).unwrap();
        build_jsa(pump, &CrystalSpec::default(), &s, &i, &PostSelection::default()).unwrap()
    }

    #[test]
    fn parseval() {
        let psi = jsa(&PumpSpec {
            c2: -1.33e5,
            ..Default::default()
        });
        let jti = to_temporal(&psi.field).unwrap();
        let time = jti.values.sum() * jti.axis_a.spacing * jti.axis_b.spacing;
        let freq = psi.field.energy();
        assert!((time - freq).abs() < 1e-10 * freq);
    }

    #[test]
    fn flat_phase_is_uncorrelated() {
        let jti = to_temporal(&jsa(&PumpSpec::default()).field).unwrap();
        assert!(jti.stats.correlation.abs() < 1e-6, "{}", jti.stats.correlation);
    }

    /// ψ = exp(−(u² + v²)/(2σ²) + i·c2·u²), u = ν_s + ν_i, v = ν_s − ν_i:
    /// T± = (t_s ± t_i)/2 are independent with var(T+) = 1/(2σ²) + 2c2²σ²
    /// and var(T−) = 1/(2σ²), so var(t_s) = 1/σ² + 2c2²σ² and
    /// cov(t_s, t_i) = 2c2²σ².
    #[test]
    fn chirped_gaussian_moments() {
        let pump = PumpSpec {
            c2: -1.33e5,
            ..Default::default()
        };
        let sigma = pump.amplitude_sigma();
        let jti = to_temporal(&jsa(&pump).field).unwrap();
        let chirp = 2.0 * pump.c2.powi(2) * sigma.powi(2);
        let var = 1.0 / sigma.powi(2) + chirp;
        let s = jti.stats;
        assert!((s.var_signal.sqrt() / var.sqrt() - 1.0).abs() < 0.02, "{} {}", s.var_signal.sqrt(), var.sqrt());
        assert!((s.var_idler.sqrt() / var.sqrt() - 1.0).abs() < 0.02);
        assert!((s.covariance / chirp - 1.0).abs() < 0.02);
        assert!(s.correlation > 0.5);
    }

    #[test]
    fn marginals_are_consistent() {
        let jti = to_temporal(&jsa(&PumpSpec::default()).field).unwrap();
        let m = jti.signal_marginal();
        let total: f64 = m.iter().sum::<f64>() * jti.axis_a.spacing;
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reconstruction_uses_surface_then_fit() {
        let psi = jsa(&PumpSpec::default());
        let (a, b) = (psi.field.axis_a, psi.field.axis_b);
        let mut mask = Array2::from_elem(psi.field.dim(), false);
        mask[[128, 128]] = true;
        mask[[129, 128]] = true;
        let surface = PhaseSurface {
            values: Array2::from_elem(psi.field.dim(), 0.25),
            labels: mask.mapv(|m| if m { 0 } else { -1 }),
            mask,
            axis_a: a,
            axis_b: b,
            pins: vec![(128, 128)],
            residual_rms: 0.0,
            components: 1,
            weights: None,
            warnings: Vec::new(),
        };
        let jsi = psi.field.intensity();
        let f = reconstruct_field(&jsi, &surface, None).unwrap();
        assert!((f.values[[128, 128]].arg() - 0.25).abs() < 1e-15);
        assert_eq!(f.values[[100, 100]].arg(), 0.0);
        assert!((f.values[[100, 100]].norm() - psi.field.values[[100, 100]].norm()).abs() < 1e-15);
    }
}
