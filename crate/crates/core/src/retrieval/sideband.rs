use ndarray::{Array2, Axis as NdAxis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft2_centered, CenteredFft, Direction};
use crate::field::{ComplexField2D, FieldAxis};
use crate::interferometer::{Interferogram, ShearConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseConfig {
    /// Fraction of the Nyquist time kept around the origin; 1 disables filtering.
    pub cutoff: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig { cutoff: 0.15 }
    }
}

/// Fourier low-pass that keeps the DC lobe inside the ellipse
/// `(t_a/T_a)² + (t_b/T_b)² ≤ cutoff²` (`T` the Nyquist times) and, along the
/// sheared axis, the strips `|t ∓ τ| ≤ τ/2` with the same cross-axis extent.
pub fn denoise(ig: &Interferogram, cfg: &DenoiseConfig) -> Result<Interferogram> {
    let c = cfg.cutoff;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::config("denoise.cutoff", format!("must be in (0, 1], got {c}")));
    }
    if c == 1.0 {
        return Ok(ig.with_values(ig.values.mapv(|v| v.max(0.0))));
    }
    let sheared = ig.shear.arm.field_axis();
    let field = ComplexField2D::new(ig.axis_a, ig.axis_b, ig.values.mapv(|v| Complex64::new(v, 0.0)))?;
    let mut t = fft2_centered(&field, Direction::Inverse)?;
    let (ta, tb) = (t.axis_a, t.axis_b);
    let (nyq_a, nyq_b) = (ta.span() / 2.0, tb.span() / 2.0);
    let (tau, h) = (ig.shear.delay, ig.shear.delay / 2.0);
    let (nyq_s, nyq_o) = if sheared == FieldAxis::A { (nyq_a, nyq_b) } else { (nyq_b, nyq_a) };
    if c * nyq_o < h {
        return Err(Error::config(
            "denoise.cutoff",
            format!("cross-axis extent {:.1} fs would cut into the sideband (needs >= {h:.1} fs)", c * nyq_o),
        ));
    }
    if tau + h > nyq_s {
        return Err(Error::config(
            "shear.delay",
            format!("sideband window reaches {:.1} fs, beyond the Nyquist time {nyq_s:.1} fs", tau + h),
        ));
    }
    for ((i, j), v) in t.values.indexed_iter_mut() {
        let (a, b) = (ta.value(i), tb.value(j));
        let r2 = (a / nyq_a).powi(2) + (b / nyq_b).powi(2);
        let (s, o) = if sheared == FieldAxis::A { (a, b) } else { (b, a) };
        let in_strip = ((s - tau).abs() <= h || (s + tau).abs() <= h) && o.abs() <= c * nyq_o;
        if r2 > c * c && !in_strip {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    let back = fft2_centered(&t, Direction::Forward)?;
    Ok(ig.with_values(back.values.mapv(|v| v.re.max(0.0))))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SidebandConfig {
    /// Even super-Gaussian order.
    pub window_order: u32,
    /// Window half-width as a fraction of τ.
    pub half_width_fraction: f64,
    /// Required ratio of τ to the rms width of the DC lobe.
    pub min_separation: f64,
}

impl Default for SidebandConfig {
    fn default() -> Self {
        SidebandConfig {
            window_order: 6,
            half_width_fraction: 0.5,
            min_separation: 3.0,
        }
    }
}

impl SidebandConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_order < 2 || !self.window_order.is_multiple_of(2) {
            return Err(Error::config("sideband.window_order", "must be an even integer >= 2"));
        }
        if !(self.half_width_fraction > 0.0 && self.half_width_fraction < 1.0) {
            return Err(Error::config("sideband.half_width_fraction", "must be in (0, 1)"));
        }
        if !(self.min_separation > 0.0) {
            return Err(Error::config("sideband.min_separation", "must be > 0"));
        }
        Ok(())
    }

    /// `exp(−((t − τ)/h)^order)`.
    pub fn window(&self, t: f64, tau: f64) -> f64 {
        let h = self.half_width_fraction * tau;
        (-((t - tau) / h).powi(self.window_order as i32)).exp()
    }
}

/// The isolated `+τ` term `|ψ(ν)ψ*(ν+Ω)|·e^{i(ντ + Δφ)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sideband {
    pub field: ComplexField2D,
    pub shear: ShearConfig,
}

/// Ratio `τ / w`, with `w` the Gaussian-equivalent rms width of the DC lobe
/// along the sheared axis, from the curvature of the log power at `t = 0`.
pub fn lobe_separation(ig: &Interferogram) -> Result<f64> {
    let axis = ig.shear.arm.field_axis();
    let field = ComplexField2D::new(ig.axis_a, ig.axis_b, ig.values.mapv(|v| Complex64::new(v, 0.0)))?;
    let t = crate::fft::fft1_along_axis(&field, axis, Direction::Inverse)?;
    let ax = *t.axis(axis);
    let power: Vec<f64> = t
        .values
        .lanes(NdAxis(axis.index()))
        .into_iter()
        .fold(vec![0.0; ax.len], |mut acc, lane| {
            for (a, v) in acc.iter_mut().zip(lane.iter()) {
                *a += v.norm_sqr();
            }
            acc
        });
    let k0 = ax.origin_index();
    let (l, c, r) = (power[k0 - 1], power[k0], power[k0 + 1]);
    if !(l > 0.0 && c > 0.0 && r > 0.0) {
        return Err(Error::ZeroTotal("interferogram has no DC content".into()));
    }
    let curvature = (l.ln() - 2.0 * c.ln() + r.ln()) / ax.spacing.powi(2);
    if curvature >= 0.0 {
        // Not a peaked lobe at all.
        return Ok(0.0);
    }
    // Power ∝ exp(−t²/(2w²)) has curvature −1/w².
    Ok(ig.shear.delay * (-curvature).sqrt())
}

/// Isolates the `+τ` interference term with a super-Gaussian window applied
/// in the conjugate domain of the sheared axis.
pub fn sideband_extract(ig: &Interferogram, cfg: &SidebandConfig) -> Result<Sideband> {
    cfg.validate()?;
    let ratio = lobe_separation(ig)?;
    if ratio < cfg.min_separation {
        return Err(Error::LobeOverlap {
            ratio,
            required: cfg.min_separation,
        });
    }
    let axis = ig.shear.arm.field_axis();
    let ax = *ig.axis(axis);
    let conj = ax.conjugate();
    let tau = ig.shear.delay;
    if tau * (1.0 + cfg.half_width_fraction) > conj.span() / 2.0 {
        return Err(Error::config(
            "shear.delay",
            format!("sideband window exceeds the Nyquist time {:.1} fs", conj.span() / 2.0),
        ));
    }
    let window: Vec<f64> = (0..ax.len).map(|k| cfg.window(conj.value(k), tau)).collect();
    let mut values: Array2<Complex64> = ig.values.mapv(|v| Complex64::new(v, 0.0));
    let mut to_time = CenteredFft::new(ax.len, Direction::Inverse)?;
    let mut to_freq = CenteredFft::new(ax.len, Direction::Forward)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); ax.len];
    for mut lane in values.lanes_mut(NdAxis(axis.index())) {
        for (b, v) in buf.iter_mut().zip(lane.iter()) {
            *b = *v;
        }
        to_time.process(&mut buf, ax.spacing);
        for (b, w) in buf.iter_mut().zip(&window) {
            *b *= w;
        }
        to_freq.process(&mut buf, conj.spacing);
        for (v, b) in lane.iter_mut().zip(&buf) {
            *v = *b;
        }
    }
    Ok(Sideband {
        field: ComplexField2D::new(ig.axis_a, ig.axis_b, values)?,
        shear: ig.shear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use crate::interferometer::{interferometer_arms, ssi_pattern, Arm, NoiseRecord};
    use crate::random::RandomStream;
    use crate::spdc::{build_jsa, CrystalSpec, JointSpectralField, PostSelection, PumpSpec};

    fn jsa(pump: PumpSpec) -> JointSpectralField {
        let s = FrequencyGrid::around_wavelength(1548.0, 256, 3e-4).unwrap();
        let i = FrequencyGrid::around_wavelength(1544.0, 256, 3e-4).unwrap();
        build_jsa(&pump, &CrystalSpec::default(), &s, &i, &PostSelection::default()).unwrap()
    }

    /// With c3 = 5e6 fs³ on the default pump the sideband spreads over about ±1.2 ps,
    /// so 2.5 ps leaves the lobes touching at the 1e-6 level; 5 ps separates them.
    const SEPARATED_DELAY: f64 = 5000.0;

    fn chirped_pump() -> PumpSpec {
        PumpSpec {
            c2: -1.33e5,
            c3: 5e6,
            ..Default::default()
        }
    }

    #[test]
    fn unit_cutoff_is_identity() {
        let ig = ssi_pattern(&jsa(chirped_pump()), &ShearConfig::default()).unwrap();
        let out = denoise(&ig, &DenoiseConfig { cutoff: 1.0 }).unwrap();
        assert_eq!(out.values, ig.values);
    }

    #[test]
    fn white_noise_is_suppressed() {
        let psi = jsa(PumpSpec::default());
        let cfg = ShearConfig {
            delay: 500.0,
            ..Default::default()
        };
        let template = ssi_pattern(&psi, &cfg).unwrap();
        let mut ratios = Vec::new();
        for seed in 0..5 {
            let noise = RandomStream::new(seed).gaussian(256 * 256, 1.0);
            let values = Array2::from_shape_vec((256, 256), noise).unwrap().mapv(|v| v + 100.0);
            let ig = template.with_values(values.clone());
            let out = denoise(&ig, &DenoiseConfig { cutoff: 0.1 }).unwrap();
            let var = |a: &Array2<f64>| {
                let m = a.mean().unwrap();
                a.mapv(|v| (v - m).powi(2)).mean().unwrap()
            };
            ratios.push(var(&out.values) / var(&values));
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(mean < 0.03, "{mean}");
    }

    #[test]
    fn cutoff_that_erases_sideband_is_config_error() {
        let ig = ssi_pattern(&jsa(chirped_pump()), &ShearConfig::default()).unwrap();
        assert!(matches!(
            denoise(&ig, &DenoiseConfig { cutoff: 0.05 }),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn zero_shear_flat_phase_gives_linear_ramp() {
        let psi = jsa(PumpSpec::default());
        let cfg = ShearConfig {
            shear: 0.0,
            delay: SEPARATED_DELAY,
            ..Default::default()
        };
        let sb = sideband_extract(&ssi_pattern(&psi, &cfg).unwrap(), &SidebandConfig::default()).unwrap();
        let peak = sb.field.peak_magnitude();
        for ((i, _), v) in sb.field.values.indexed_iter() {
            if v.norm() > 0.05 * peak {
                let nu = sb.field.axis_a.value(i);
                let d = (v * Complex64::from_polar(1.0, -nu * cfg.delay)).arg();
                assert!(d.abs() < 1e-6, "{d}");
            }
        }
    }

    /// Product term `ψ(ν)ψ*(ν+Ω)e^{iντ}` computed directly.
    fn product_term(psi: &JointSpectralField, cfg: &ShearConfig) -> ComplexField2D {
        let (a, b) = interferometer_arms(psi, cfg).unwrap();
        let mut out = a.clone();
        out.values.zip_mut_with(&b.values, |x, y| *x *= y.conj());
        out
    }

    #[test]
    fn extraction_matches_product_term() {
        let psi = jsa(chirped_pump());
        let cfg = SidebandConfig {
            window_order: 20,
            ..Default::default()
        };
        for arm in [Arm::Signal, Arm::Idler] {
            let shear = ShearConfig {
                delay: SEPARATED_DELAY,
                ..Default::default()
            }
            .for_arm(arm);
            let sb = sideband_extract(&ssi_pattern(&psi, &shear).unwrap(), &cfg).unwrap();
            let oracle = product_term(&psi, &shear);
            let peak = oracle.peak_magnitude();
            let mut worst = 0.0f64;
            for (x, y) in sb.field.values.iter().zip(oracle.values.iter()) {
                if y.norm() > 0.05 * peak {
                    worst = worst.max((x - y).norm() / y.norm());
                }
            }
            assert!(worst < 1e-6, "{worst}");
        }
    }

    #[test]
    fn extraction_respects_cauchy_schwarz() {
        let psi = jsa(chirped_pump());
        let shear = ShearConfig {
            delay: SEPARATED_DELAY,
            ..Default::default()
        };
        let ig = ssi_pattern(&psi, &shear).unwrap();
        let cfg = SidebandConfig {
            window_order: 20,
            ..Default::default()
        };
        let sb = sideband_extract(&ig, &cfg).unwrap();
        let (_, b) = interferometer_arms(&psi, &shear).unwrap();
        let peak = sb.field.peak_magnitude();
        for ((i, j), v) in sb.field.values.indexed_iter() {
            let bound = (psi.field.values[[i, j]].norm_sqr() * b.values[[i, j]].norm_sqr()).sqrt();
            assert!(v.norm() <= bound + 1e-6 * peak);
        }
    }

    #[test]
    fn short_delay_is_lobe_overlap() {
        let psi = jsa(chirped_pump());
        let cfg = ShearConfig {
            delay: 200.0,
            ..Default::default()
        };
        let ig = ssi_pattern(&psi, &cfg).unwrap();
        assert!(matches!(
            sideband_extract(&ig, &SidebandConfig::default()),
            Err(Error::LobeOverlap { .. })
        ));
        assert_eq!(ig.noise, NoiseRecord::Noiseless);
    }
}
