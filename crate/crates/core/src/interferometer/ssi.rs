use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, FieldAxis};
use crate::grid::Axis;
use crate::interferometer::detector::DetectorConfig;
use crate::spdc::{JointSpectralField, PostSelection};
use crate::units;

/// Which photon passes through the shearing interferometer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Signal,
    Idler,
}

impl Arm {
    /// Field axis the shear acts on: signal is axis A, idler axis B.
    pub fn field_axis(self) -> FieldAxis {
        match self {
            Arm::Signal => FieldAxis::A,
            Arm::Idler => FieldAxis::B,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Signal => "signal",
            Arm::Idler => "idler",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShearConfig {
    /// Spectral shear Ω, rad/fs.
    pub shear: f64,
    /// Delay τ on the unsheared arm, fs.
    pub delay: f64,
    pub arm: Arm,
    /// Sheared arm blocked: the pattern reduces to the JSI.
    pub blocked: bool,
    /// Constant interferometer phase offset (drift hook), rad.
    pub phase_offset: f64,
}

impl Default for ShearConfig {
    fn default() -> Self {
        ShearConfig {
            shear: units::ghz_to_angular(-150.0),
            delay: 2500.0,
            arm: Arm::Signal,
            blocked: false,
            phase_offset: 0.0,
        }
    }
}

impl ShearConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delay > 0.0 && self.delay.is_finite()) {
            return Err(Error::config("shear.delay", format!("must be > 0, got {}", self.delay)));
        }
        if !self.shear.is_finite() || !self.phase_offset.is_finite() {
            return Err(Error::config("shear", "shear and phase offset must be finite"));
        }
        Ok(())
    }

    pub fn for_arm(self, arm: Arm) -> Self {
        ShearConfig { arm, ..self }
    }
}

/// How the values of an [`Interferogram`] were produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseRecord {
    Noiseless,
    Poisson {
        seed: u64,
        algorithm: String,
        total_counts: f64,
    },
}

/// Nonnegative spectral interferogram on (ν_s along A, ν_i along B).
#[derive(Clone, Debug, PartialEq)]
pub struct Interferogram {
    pub values: Array2<f64>,
    pub axis_a: Axis,
    pub axis_b: Axis,
    pub shear: ShearConfig,
    /// Resolution applied, if any.
    pub detector: Option<DetectorConfig>,
    pub noise: NoiseRecord,
    pub post: PostSelection,
}

impl Interferogram {
    pub fn axis(&self, which: FieldAxis) -> &Axis {
        match which {
            FieldAxis::A => &self.axis_a,
            FieldAxis::B => &self.axis_b,
        }
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    pub fn with_values(&self, values: Array2<f64>) -> Interferogram {
        Interferogram {
            values,
            ..self.clone()
        }
    }
}

/// `e^{i(ν·τ + offset)}` applied along the sheared axis.
fn delay_phase(ax: &Axis, k: usize, cfg: &ShearConfig) -> Complex64 {
    Complex64::from_polar(1.0, ax.value(k) * cfg.delay + cfg.phase_offset)
}

/// The two interfering amplitudes: delayed `ψ·e^{iντ}` and sheared `ψ(ν + Ω)`.
pub fn interferometer_arms(psi: &JointSpectralField, cfg: &ShearConfig) -> Result<(ComplexField2D, ComplexField2D)> {
    cfg.validate()?;
    let axis = cfg.arm.field_axis();
    let sheared = psi.shifted(axis, cfg.shear)?;
    let psi = &psi.field;
    let ax = *psi.axis(axis);
    let mut delayed = psi.clone();
    for ((i, j), v) in delayed.values.indexed_iter_mut() {
        let k = if axis == FieldAxis::A { i } else { j };
        *v *= delay_phase(&ax, k, cfg);
    }
    Ok((delayed, sheared))
}

/// Noiseless interferogram `S = |ψ e^{iντ} + ψ(ν+Ω)|²`, evaluated as
/// `|ψ|² + |ψ(ν+Ω)|² + 2Re[ψ·ψ*(ν+Ω)·e^{iντ}]`.
pub fn ssi_pattern(psi: &JointSpectralField, cfg: &ShearConfig) -> Result<Interferogram> {
    cfg.validate()?;
    let field = &psi.field;
    let values = if cfg.blocked {
        field.intensity()
    } else {
        let axis = cfg.arm.field_axis();
        let sheared = psi.shifted(axis, cfg.shear)?;
        let ax = *field.axis(axis);
        Array2::from_shape_fn(field.dim(), |(i, j)| {
            let a = field.values[[i, j]];
            let b = sheared.values[[i, j]];
            let k = if axis == FieldAxis::A { i } else { j };
            let cross = a * b.conj() * delay_phase(&ax, k, cfg);
            (a.norm_sqr() + b.norm_sqr() + 2.0 * cross.re).max(0.0)
        })
    };
    Ok(Interferogram {
        values,
        axis_a: field.axis_a,
        axis_b: field.axis_b,
        shear: *cfg,
        detector: None,
        noise: NoiseRecord::Noiseless,
        post: psi.post,
    })
}
