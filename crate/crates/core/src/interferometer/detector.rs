use ndarray::{Array2, Axis as NdAxis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{CenteredFft, Direction};
use crate::field::FieldAxis;
use crate::grid::Axis;
use crate::interferometer::ssi::{Interferogram, NoiseRecord};
use crate::random::{poisson_sample, RandomStream};
use crate::units;

/// Spectrometer resolution and count budget.
///
/// The photon sent through the interferometer is resolved with `ssi_fwhm_nm`,
/// its partner with `direct_fwhm_nm`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub direct_fwhm_nm: f64,
    pub ssi_fwhm_nm: f64,
    /// Expected coincidences per interferogram.
    pub total_counts: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            direct_fwhm_nm: 0.169,
            ssi_fwhm_nm: 0.084,
            total_counts: 1.8e6,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("direct_fwhm_nm", self.direct_fwhm_nm),
            ("ssi_fwhm_nm", self.ssi_fwhm_nm),
            ("total_counts", self.total_counts),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("detector.{name}"), format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Resolution FWHM in rad/fs along `axis` of an interferogram taken with
    /// the sheared photon on `sheared`.
    fn fwhm_on(&self, ax: &Axis, is_sheared: bool) -> f64 {
        let nm = if is_sheared { self.ssi_fwhm_nm } else { self.direct_fwhm_nm };
        if nm == 0.0 || ax.carrier <= 0.0 {
            return 0.0;
        }
        units::bandwidth_nm_to_angular(nm, units::nm_from_angular_frequency(ax.carrier))
    }
}

/// Circular Gaussian convolution of every lane of `values` along `axis`, with
/// kernel FWHM `fwhm` in the axis units. Preserves lane sums.
pub fn gaussian_blur(values: &Array2<f64>, ax: &Axis, axis: FieldAxis, fwhm: f64) -> Result<Array2<f64>> {
    if fwhm == 0.0 {
        return Ok(values.clone());
    }
    if !(fwhm > 0.0 && fwhm.is_finite()) {
        return Err(Error::config("resolution", format!("FWHM must be >= 0, got {fwhm}")));
    }
    if fwhm > 0.25 * ax.span() {
        return Err(Error::config(
            "resolution",
            format!("kernel FWHM {fwhm:e} exceeds a quarter of the axis span {:e}", ax.span()),
        ));
    }
    let sigma = fwhm / units::FWHM_PER_SIGMA;
    let conj = ax.conjugate();
    let transfer: Vec<f64> = (0..ax.len)
        .map(|k| (-0.5 * (sigma * conj.value(k)).powi(2)).exp())
        .collect();
    let mut to_time = CenteredFft::new(ax.len, Direction::Inverse)?;
    let mut to_freq = CenteredFft::new(ax.len, Direction::Forward)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); ax.len];
    let mut out = values.clone();
    for mut lane in out.lanes_mut(NdAxis(axis.index())) {
        for (b, v) in buf.iter_mut().zip(lane.iter()) {
            *b = Complex64::new(*v, 0.0);
        }
        to_time.process(&mut buf, ax.spacing);
        for (b, h) in buf.iter_mut().zip(&transfer) {
            *b *= h;
        }
        to_freq.process(&mut buf, conj.spacing);
        for (v, b) in lane.iter_mut().zip(&buf) {
            *v = b.re;
        }
    }
    Ok(out)
}

/// Convolves both axes with the configured spectral resolution; negatives from
/// round-off are clamped to zero.
pub fn apply_detector(ig: &Interferogram, det: &DetectorConfig) -> Result<Interferogram> {
    det.validate()?;
    let sheared = ig.shear.arm.field_axis();
    let mut values = ig.values.clone();
    for axis in [FieldAxis::A, FieldAxis::B] {
        let ax = *ig.axis(axis);
        values = gaussian_blur(&values, &ax, axis, det.fwhm_on(&ax, axis == sheared))?;
    }
    values.mapv_inplace(|v| v.max(0.0));
    Ok(Interferogram {
        values,
        detector: Some(*det),
        ..ig.clone()
    })
}

/// Scales `ig` to `det.total_counts` expected coincidences and draws Poisson
/// counts. `None` returns the scaled means unchanged.
pub fn measure(ig: &Interferogram, det: &DetectorConfig, stream: Option<RandomStream>) -> Result<Interferogram> {
    det.validate()?;
    let total = ig.total();
    let Some(stream) = stream else {
        return Ok(ig.clone());
    };
    let mean = if det.total_counts == 0.0 {
        Array2::zeros(ig.values.dim())
    } else {
        if !(total > 0.0) {
            return Err(Error::ZeroTotal("interferogram has no intensity to scale".into()));
        }
        ig.values.mapv(|v| v * det.total_counts / total)
    };
    let counts = poisson_sample(&mean, stream)?;
    Ok(Interferogram {
        values: counts.mapv(|c| c as f64),
        noise: NoiseRecord::Poisson {
            seed: stream.seed,
            algorithm: stream.algorithm().to_string(),
            total_counts: det.total_counts,
        },
        ..ig.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisKind;
    use crate::interferometer::ssi::ShearConfig;
    use crate::spdc::PostSelection;
    use std::f64::consts::PI;

    fn ig(values: Array2<f64>, a: Axis, b: Axis) -> Interferogram {
        Interferogram {
            values,
            axis_a: a,
            axis_b: b,
            shear: ShearConfig::default(),
            detector: None,
            noise: NoiseRecord::Noiseless,
            post: PostSelection::default(),
        }
    }

    fn freq_axis(n: usize, d: f64, nm: f64) -> Axis {
        Axis {
            carrier: units::angular_frequency_from_nm(nm),
            ..Axis::new(n, d, AxisKind::Frequency)
        }
    }

    #[test]
    fn zero_resolution_is_identity() {
        let a = freq_axis(32, 1e-4, 1548.0);
        let v = Array2::from_shape_fn((32, 32), |(i, j)| (i * j) as f64);
        let det = DetectorConfig {
            direct_fwhm_nm: 0.0,
            ssi_fwhm_nm: 0.0,
            ..Default::default()
        };
        assert_eq!(apply_detector(&ig(v.clone(), a, a), &det).unwrap().values, v);
    }

    #[test]
    fn delta_becomes_gaussian_of_configured_fwhm() {
        let n = 256;
        let fwhm = 10.0;
        let a = Axis::new(n, 1.0, AxisKind::Frequency);
        let mut v = Array2::zeros((n, 1));
        v[[128, 0]] = 1.0;
        let out = gaussian_blur(&v, &a, FieldAxis::A, fwhm).unwrap();
        let s = fwhm / units::FWHM_PER_SIGMA;
        let norm = 1.0 / (s * (2.0 * PI).sqrt());
        let peak = norm;
        for k in 0..n {
            let x = a.value(k);
            let oracle = norm * (-x * x / (2.0 * s * s)).exp();
            assert!((out[[k, 0]] - oracle).abs() < 0.01 * peak, "{k}");
        }
        assert!((out.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fine_fringes_wash_out() {
        let n = 512;
        let a = Axis::new(n, 1.0, AxisKind::Frequency);
        let period = 16.0;
        let fwhm = 24.0;
        let v = Array2::from_shape_fn((n, 1), |(k, _)| 1.0 + (2.0 * PI * a.value(k) / period).cos());
        let out = gaussian_blur(&v, &a, FieldAxis::A, fwhm).unwrap();
        let (mx, mn) = out.iter().fold((f64::MIN, f64::MAX), |(x, y), &v| (x.max(v), y.min(v)));
        let vis = (mx - mn) / (mx + mn);
        let oracle = (-(PI * fwhm / period).powi(2) / (4.0 * 2f64.ln())).exp();
        assert!((vis - oracle).abs() < 1e-9, "{vis} {oracle}");
        assert!(vis < 0.05);
    }

    #[test]
    fn total_preserved_and_scaling_commutes() {
        let a = freq_axis(128, 3e-4, 1548.0);
        let b = freq_axis(128, 3e-4, 1544.0);
        let v = Array2::from_shape_fn((128, 128), |(i, j)| {
            let (x, y) = (a.value(i), b.value(j));
            (-(x * x + y * y) / 1e-4).exp() * (1.0 + (2500.0 * x).cos())
        });
        let det = DetectorConfig::default();
        let one = apply_detector(&ig(v.clone(), a, b), &det).unwrap();
        assert!((one.total() - v.sum()).abs() < 1e-10 * v.sum());
        let scaled = apply_detector(&ig(v.mapv(|x| 3.5 * x), a, b), &det).unwrap();
        for (p, q) in one.values.iter().zip(scaled.values.iter()) {
            assert!((3.5 * p - q).abs() < 1e-12 * 3.5 * one.values.iter().cloned().fold(0.0, f64::max));
        }
    }

    #[test]
    fn wide_kernel_is_rejected() {
        let a = Axis::new(32, 1.0, AxisKind::Frequency);
        assert!(gaussian_blur(&Array2::zeros((32, 1)), &a, FieldAxis::A, 9.0).is_err());
    }

    #[test]
    fn measure_paths() {
        let a = Axis::new(16, 1.0, AxisKind::Frequency);
        let v = Array2::from_shape_fn((16, 16), |(i, j)| 1.0 + ((i + 2 * j) % 5) as f64);
        let input = ig(v.clone(), a, a);
        let zero = DetectorConfig {
            total_counts: 0.0,
            ..Default::default()
        };
        let z = measure(&input, &zero, Some(RandomStream::new(3))).unwrap();
        assert!(z.values.iter().all(|&c| c == 0.0));
        let pass = measure(&input, &DetectorConfig::default(), None).unwrap();
        assert_eq!(pass, input);
        let counted = measure(&input, &DetectorConfig::default(), Some(RandomStream::new(9))).unwrap();
        assert!(matches!(counted.noise, NoiseRecord::Poisson { seed: 9, .. }));
    }

    #[test]
    fn monte_carlo_mean_within_poisson_band() {
        let a = Axis::new(16, 1.0, AxisKind::Frequency);
        let v = Array2::from_shape_fn((16, 16), |(i, j)| 1.0 + ((i * 3 + j) % 7) as f64);
        let input = ig(v.clone(), a, a);
        let det = DetectorConfig {
            total_counts: 1e4,
            ..Default::default()
        };
        let scaled = v.mapv(|x| x * 1e4 / v.sum());
        let mut acc = Array2::<f64>::zeros((16, 16));
        for s in 0..100 {
            acc += &measure(&input, &det, Some(RandomStream::new(s))).unwrap().values;
        }
        let inside = acc
            .iter()
            .zip(scaled.iter())
            .filter(|(sum, m)| ((*sum / 100.0) - *m).abs() <= 4.0 * (*m / 100.0).sqrt())
            .count();
        assert!(inside as f64 >= 0.99 * 256.0, "{inside}");
    }
}
