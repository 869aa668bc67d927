use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units;

/// What physical coordinate an [`Axis`] carries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    /// Relative angular frequency ν = ω − Ω (rad/fs).
    Frequency,
    /// Time (fs), conjugate of `Frequency`.
    Time,
    /// Transverse position (mm).
    Position,
    /// Transverse momentum (rad/mm), conjugate of `Position`.
    Momentum,
}

impl AxisKind {
    pub fn conjugate(self) -> AxisKind {
        match self {
            AxisKind::Frequency => AxisKind::Time,
            AxisKind::Time => AxisKind::Frequency,
            AxisKind::Position => AxisKind::Momentum,
            AxisKind::Momentum => AxisKind::Position,
        }
    }
}

/// A uniform, origin-centred sampling axis. Sample `k` sits at `(k − ⌊n/2⌋)·spacing`.
///
/// `carrier` is the absolute angular frequency the axis is relative to (only
/// meaningful for frequency axes; preserved through Fourier transforms).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub len: usize,
    pub spacing: f64,
    pub kind: AxisKind,
    pub carrier: f64,
}

impl Axis {
    pub fn new(len: usize, spacing: f64, kind: AxisKind) -> Axis {
        Axis {
            len,
            spacing,
            kind,
            carrier: 0.0,
        }
    }

    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        (k as f64 - (self.len / 2) as f64) * self.spacing
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.value(k)).collect()
    }

    /// Index of the sample at coordinate zero.
    pub fn origin_index(&self) -> usize {
        self.len / 2
    }

    /// Total extent `len · spacing`.
    pub fn span(&self) -> f64 {
        self.len as f64 * self.spacing
    }

    /// Axis of the centred DFT of this axis: spacing `2π/(n·δ)`.
    pub fn conjugate(&self) -> Axis {
        Axis {
            len: self.len,
            spacing: 2.0 * PI / (self.len as f64 * self.spacing),
            kind: self.kind.conjugate(),
            carrier: self.carrier,
        }
    }

    /// Nearest sample index to coordinate `x`, if it lies within half a spacing of the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = (x / self.spacing).round() + (self.len / 2) as f64;
        if k < 0.0 || k >= self.len as f64 {
            return None;
        }
        let k = k as usize;
        if (self.value(k) - x).abs() <= 1e-9 * self.spacing.max(x.abs()) + 1e-12 {
            Some(k)
        } else {
            None
        }
    }

    pub fn is_power_of_two(&self) -> bool {
        self.len.is_power_of_two()
    }
}

/// Relative-frequency grid around a carrier `Ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    /// Carrier Ω in rad/fs.
    pub center_angular_frequency: f64,
    pub n_points: usize,
    /// δν in rad/fs.
    pub spacing: f64,
}

impl FrequencyGrid {
    pub fn new(center_angular_frequency: f64, n_points: usize, spacing: f64) -> Result<Self> {
        let g = FrequencyGrid {
            center_angular_frequency,
            n_points,
            spacing,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid around the carrier of a vacuum wavelength in nm.
    pub fn around_wavelength(center_nm: f64, n_points: usize, spacing: f64) -> Result<Self> {
        Self::new(units::angular_frequency_from_nm(center_nm), n_points, spacing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 8 || !self.n_points.is_power_of_two() {
            return Err(Error::config(
                "n_points",
                format!("must be a power of two >= 8, got {}", self.n_points),
            ));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::config("spacing", format!("must be > 0, got {}", self.spacing)));
        }
        if !(self.center_angular_frequency > 0.0 && self.center_angular_frequency.is_finite()) {
            return Err(Error::config(
                "center_angular_frequency",
                format!("must be > 0, got {}", self.center_angular_frequency),
            ));
        }
        Ok(())
    }

    pub fn axis(&self) -> Axis {
        Axis {
            len: self.n_points,
            spacing: self.spacing,
            kind: AxisKind::Frequency,
            carrier: self.center_angular_frequency,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.axis().values()
    }

    pub fn center_wavelength_nm(&self) -> f64 {
        units::nm_from_angular_frequency(self.center_angular_frequency)
    }

    /// Vacuum wavenumber of the carrier, rad/mm.
    pub fn carrier_wavenumber(&self) -> f64 {
        self.center_angular_frequency / (units::SPEED_OF_LIGHT_NM_PER_FS * 1e-6)
    }
}

/// Transverse scan grid, origin-centred.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialGrid {
    pub n_x: usize,
    pub n_y: usize,
    /// Pitch in mm.
    pub pitch: f64,
}

impl Default for SpatialGrid {
    fn default() -> Self {
        SpatialGrid {
            n_x: 7,
            n_y: 7,
            pitch: 0.5,
        }
    }
}

impl SpatialGrid {
    pub fn new(n_x: usize, n_y: usize, pitch: f64) -> Result<Self> {
        let g = SpatialGrid { n_x, n_y, pitch };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 || self.n_y == 0 {
            return Err(Error::config("spatial_grid", "dimensions must be nonzero"));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(Error::config("pitch", format!("must be > 0, got {}", self.pitch)));
        }
        Ok(())
    }

    pub fn x_axis(&self) -> Axis {
        Axis::new(self.n_x, self.pitch, AxisKind::Position)
    }

    pub fn y_axis(&self) -> Axis {
        Axis::new(self.n_y, self.pitch, AxisKind::Position)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_axis().value(i)
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_axis().value(j)
    }

    pub fn origin(&self) -> [usize; 2] {
        [self.n_x / 2, self.n_y / 2]
    }

    /// Grid index of a point, if it lies on the grid.
    pub fn index_of(&self, point: [f64; 2]) -> Option<[usize; 2]> {
        Some([self.x_axis().index_of(point[0])?, self.y_axis().index_of(point[1])?])
    }

    pub fn points(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        (0..self.n_x).flat_map(move |i| (0..self.n_y).map(move |j| [i, j]))
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
