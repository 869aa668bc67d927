use ndarray::{Array2, Array4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::units;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Wavefront {
    Flat,
    /// `coefficient·|X|²` rad with `X = f·(q_s + q_i)/k_s` in mm, i.e. a
    /// quadratic in signal position when the idler sits at the origin.
    Quadratic { coefficient: f64 },
}

/// Double-Gaussian two-photon amplitude in the far field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JointSpatialSpec {
    /// Width on `q_s + q_i`, rad/mm.
    pub sigma_sum: f64,
    /// Width on `q_s − q_i`, rad/mm.
    pub sigma_diff: f64,
    pub wavefront: Wavefront,
    pub focal_length_mm: f64,
    pub signal_wavelength_nm: f64,
    pub idler_wavelength_nm: f64,
}

impl Default for JointSpatialSpec {
    fn default() -> Self {
        JointSpatialSpec {
            sigma_sum: 20.0,
            sigma_diff: 60.0,
            wavefront: Wavefront::Flat,
            focal_length_mm: 200.0,
            signal_wavelength_nm: 1548.0,
            idler_wavelength_nm: 1544.0,
        }
    }
}

impl JointSpatialSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_sum", self.sigma_sum),
            ("sigma_diff", self.sigma_diff),
            ("focal_length_mm", self.focal_length_mm),
            ("signal_wavelength_nm", self.signal_wavelength_nm),
            ("idler_wavelength_nm", self.idler_wavelength_nm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("spatial.{name}"), format!("must be > 0, got {v}")));
            }
        }
        if self.sigma_sum >= self.sigma_diff {
            return Err(Error::config(
                "spatial.sigma_sum",
                format!("must be below sigma_diff ({} >= {})", self.sigma_sum, self.sigma_diff),
            ));
        }
        if let Wavefront::Quadratic { coefficient } = self.wavefront {
            if !coefficient.is_finite() {
                return Err(Error::config("spatial.wavefront", "coefficient must be finite"));
            }
        }
        Ok(())
    }

    pub fn signal_wavenumber(&self) -> f64 {
        units::wavenumber_per_mm(self.signal_wavelength_nm)
    }

    pub fn idler_wavenumber(&self) -> f64 {
        units::wavenumber_per_mm(self.idler_wavelength_nm)
    }

    /// `(σ₊² − σ₋²)/(σ₊² + σ₋²)`: conditional mean of `q_s` is this times `q_i`.
    pub fn momentum_correlation(&self) -> f64 {
        let (p, m) = (self.sigma_sum.powi(2), self.sigma_diff.powi(2));
        (p - m) / (p + m)
    }

    /// Closed-form conditional signal centroid (mm) for an idler at `idler` (mm),
    /// on an unbounded plane.
    pub fn conditional_mean(&self, idler: [f64; 2]) -> [f64; 2] {
        let g = self.momentum_correlation() * self.idler_wavenumber() / self.signal_wavenumber();
        [g * idler[0], g * idler[1]]
    }

    /// Standard deviation of the conditional signal intensity per axis, mm.
    pub fn conditional_std(&self) -> f64 {
        let (p, m) = (self.sigma_sum.powi(2), self.sigma_diff.powi(2));
        let var_q = p * m / (2.0 * (p + m));
        var_q.sqrt() * self.focal_length_mm / self.signal_wavenumber()
    }

    pub fn wavefront_phase(&self, signal: [f64; 2], idler: [f64; 2]) -> f64 {
        match self.wavefront {
            Wavefront::Flat => 0.0,
            Wavefront::Quadratic { coefficient } => {
                let r = self.idler_wavenumber() / self.signal_wavenumber();
                let x = signal[0] + r * idler[0];
                let y = signal[1] + r * idler[1];
                coefficient * (x * x + y * y)
            }
        }
    }

    /// `A(x_s | x_i)`, peak value 1 at the origin.
    pub fn amplitude(&self, signal: [f64; 2], idler: [f64; 2]) -> Complex64 {
        let ks = self.signal_wavenumber() / self.focal_length_mm;
        let ki = self.idler_wavenumber() / self.focal_length_mm;
        let mut e = 0.0;
        for c in 0..2 {
            let (qs, qi) = (ks * signal[c], ki * idler[c]);
            e += (qs + qi).powi(2) / (2.0 * self.sigma_sum.powi(2)) + (qs - qi).powi(2) / (2.0 * self.sigma_diff.powi(2));
        }
        Complex64::from_polar((-e).exp(), self.wavefront_phase(signal, idler))
    }
}

/// Sampled `A(x_s, y_s | x_i, y_i)`, indexed `[i_s, j_s, i_i, j_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpatialAmplitude {
    pub signal_grid: SpatialGrid,
    pub idler_grid: SpatialGrid,
    pub values: Array4<Complex64>,
}

impl JointSpatialAmplitude {
    /// Signal amplitude on the signal grid given the idler sample `idler`.
    pub fn conditional(&self, idler: [usize; 2]) -> Array2<Complex64> {
        self.values
            .slice(ndarray::s![.., .., idler[0], idler[1]])
            .to_owned()
    }

    /// Intensity-weighted signal centroid (mm) given the idler sample.
    pub fn conditional_centroid(&self, idler: [usize; 2]) -> [f64; 2] {
        let a = self.conditional(idler);
        let g = &self.signal_grid;
        let (mut w, mut x, mut y) = (0.0, 0.0, 0.0);
        for ((i, j), v) in a.indexed_iter() {
            let p = v.norm_sqr();
            w += p;
            x += p * g.x(i);
            y += p * g.y(j);
        }
        [x / w, y / w]
    }

    pub fn phase(&self, signal: [usize; 2], idler: [usize; 2]) -> f64 {
        self.values[[signal[0], signal[1], idler[0], idler[1]]].arg()
    }
}

pub fn joint_spatial_amplitude(
    spec: &JointSpatialSpec,
    signal_grid: &SpatialGrid,
    idler_grid: &SpatialGrid,
) -> Result<JointSpatialAmplitude> {
    spec.validate()?;
    signal_grid.validate()?;
    idler_grid.validate()?;
    let values = Array4::from_shape_fn(
        (signal_grid.n_x, signal_grid.n_y, idler_grid.n_x, idler_grid.n_y),
        |(a, b, c, d)| {
            spec.amplitude(
                [signal_grid.x(a), signal_grid.y(b)],
                [idler_grid.x(c), idler_grid.y(d)],
            )
        },
    );
    Ok(JointSpatialAmplitude {
        signal_grid: *signal_grid,
        idler_grid: *idler_grid,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn build(spec: &JointSpatialSpec) -> JointSpatialAmplitude {
        let g = SpatialGrid::default();
        joint_spatial_amplitude(spec, &g, &g).unwrap()
    }

    /// Conditional Gaussian in x_s, written from its mean and std, sampled on the grid.
    fn discrete_oracle(spec: &JointSpatialSpec, grid: &SpatialGrid, idler: [f64; 2]) -> [f64; 2] {
        let m = spec.conditional_mean(idler);
        let s = spec.conditional_std();
        let mut out = [0.0; 2];
        for c in 0..2 {
            let xs: Vec<f64> = if c == 0 {
                (0..grid.n_x).map(|i| grid.x(i)).collect()
            } else {
                (0..grid.n_y).map(|j| grid.y(j)).collect()
            };
            let w: Vec<f64> = xs.iter().map(|x| (-(x - m[c]).powi(2) / (2.0 * s * s)).exp()).collect();
            out[c] = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / w.iter().sum::<f64>();
        }
        out
    }

    #[test]
    fn centred_idler_gives_centred_signal() {
        let a = build(&JointSpatialSpec::default());
        let c = a.conditional_centroid([3, 3]);
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
    }

    #[test]
    fn signal_moves_opposite_to_idler() {
        let a = build(&JointSpatialSpec::default());
        let c = a.conditional_centroid([4, 4]);
        assert!(c[0] < 0.0 && c[1] < 0.0, "{c:?}");
    }

    #[test]
    fn centroid_matches_conditional_gaussian_on_grid() {
        let spec = JointSpatialSpec::default();
        let g = SpatialGrid::default();
        let a = build(&spec);
        for idx in g.points() {
            let c = a.conditional_centroid(idx);
            let o = discrete_oracle(&spec, &g, [g.x(idx[0]), g.y(idx[1])]);
            assert!((c[0] - o[0]).abs() < 1e-6 && (c[1] - o[1]).abs() < 1e-6, "{c:?} {o:?}");
        }
    }

    #[test]
    fn fine_grid_centroid_matches_continuous_mean() {
        let spec = JointSpatialSpec::default();
        let fine = SpatialGrid::new(101, 101, 0.1).unwrap();
        let idler = SpatialGrid::default();
        let a = joint_spatial_amplitude(&spec, &fine, &idler).unwrap();
        let c = a.conditional_centroid([4, 2]);
        let m = spec.conditional_mean([0.5, -0.5]);
        assert!((c[0] - m[0]).abs() < 1e-6 && (c[1] - m[1]).abs() < 1e-6, "{c:?} {m:?}");
    }

    #[test]
    fn flat_wavefront_has_constant_phase() {
        let a = build(&JointSpatialSpec::default());
        assert!(a.values.iter().all(|v| v.im == 0.0 && v.re > 0.0));
    }

    #[test]
    fn quadratic_wavefront_is_signal_quadratic_at_idler_origin() {
        let spec = JointSpatialSpec {
            wavefront: Wavefront::Quadratic { coefficient: 0.4 },
            ..Default::default()
        };
        let a = build(&spec);
        let g = SpatialGrid::default();
        for p in g.points() {
            let expected = 0.4 * (g.x(p[0]).powi(2) + g.y(p[1]).powi(2));
            let d = (a.values[[p[0], p[1], 3, 3]] * Complex64::from_polar(1.0, -expected)).arg();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn inverted_widths_are_rejected() {
        let spec = JointSpatialSpec {
            sigma_sum: 70.0,
            ..Default::default()
        };
        assert!(matches!(spec.validate(), Err(Error::Config { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn anticorrelation_sign(sp in 5.0f64..40.0, ratio in 1.2f64..5.0, ix in 0usize..7, iy in 0usize..7) {
            let spec = JointSpatialSpec { sigma_sum: sp, sigma_diff: sp * ratio, ..Default::default() };
            let g = SpatialGrid::default();
            let a = joint_spatial_amplitude(&spec, &g, &g).unwrap();
            let c = a.conditional_centroid([ix, iy]);
            for (k, off) in [g.x(ix), g.y(iy)].into_iter().enumerate() {
                if off == 0.0 {
                    prop_assert!(c[k].abs() < 1e-12);
                } else {
                    prop_assert_eq!(c[k].signum(), -off.signum());
                }
            }
        }
    }
}
